#include "netwls/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <utility>

#include "netwls/errors.hpp"

namespace netwls {

namespace {

// Shortest decimal that round-trips; used for summaries, CSV and plot data.
std::string fmt_short(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Fixed 17 significant digits; used for scenario/truth payloads so files are
// both byte-stable and lossless.
std::string fmt17(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void write_matrix(std::ostream& out, const char* key, const Eigen::MatrixXd& m) {
    out << key << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out << ' ';
            out << fmt17(m(r, c));
        }
        out << '\n';
    }
}

void write_values(std::ostream& out, const Eigen::VectorXd& v) {
    if (v.size() == 0) return;  // no payload line for empty vectors
    for (Eigen::Index r = 0; r < v.size(); ++r) {
        if (r) out << ' ';
        out << fmt17(v(r));
    }
    out << '\n';
}

// Line-oriented tokenizer that skips blanks and '#' comments and reports
// failures with file and line context.
class LineReader {
public:
    LineReader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

    bool next(std::vector<std::string>& tokens) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            std::istringstream ss(line);
            tokens.clear();
            std::string tok;
            while (ss >> tok) tokens.push_back(tok);
            if (tokens.empty() || tokens[0][0] == '#') continue;
            return true;
        }
        return false;
    }

    std::vector<std::string> expect(const std::string& key, std::size_t fields) {
        std::vector<std::string> tokens;
        if (!next(tokens)) fail("unexpected end of file, expected '" + key + "'");
        if (tokens[0] != key) fail("expected '" + key + "', found '" + tokens[0] + "'");
        if (tokens.size() != fields + 1)
            fail("'" + key + "' takes " + std::to_string(fields) + " field(s)");
        return tokens;
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(path_, line_, msg); }

    double to_double(const std::string& s) const {
        double v{};
        auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v))
            fail("not a finite number: '" + s + "'");
        return v;
    }

    int to_count(const std::string& s, int lo, int hi) const {
        int v{};
        auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || v < lo || v > hi)
            fail("expected an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) +
                 "]: '" + s + "'");
        return v;
    }

private:
    std::istream& in_;
    std::string path_;
    int line_ = 0;
};

constexpr int kMaxDim = 10000;

Eigen::MatrixXd read_matrix(LineReader& lr, const std::string& key) {
    auto head = lr.expect(key, 2);
    const int rows = lr.to_count(head[1], 0, kMaxDim);
    const int cols = lr.to_count(head[2], 0, kMaxDim);
    Eigen::MatrixXd m(rows, cols);
    std::vector<std::string> tokens;
    for (int r = 0; r < rows; ++r) {
        if (!lr.next(tokens)) lr.fail("unexpected end of file inside '" + key + "'");
        if (static_cast<int>(tokens.size()) != cols)
            lr.fail("row " + std::to_string(r + 1) + " of '" + key + "' needs " +
                    std::to_string(cols) + " value(s)");
        for (int c = 0; c < cols; ++c) m(r, c) = lr.to_double(tokens[c]);
    }
    return m;
}

Eigen::VectorXd read_values(LineReader& lr, int len, const std::string& what) {
    Eigen::VectorXd v(len);
    if (len == 0) return v;
    std::vector<std::string> tokens;
    if (!lr.next(tokens)) lr.fail("unexpected end of file inside " + what);
    if (static_cast<int>(tokens.size()) != len)
        lr.fail(what + " needs " + std::to_string(len) + " value(s)");
    for (int k = 0; k < len; ++k) v(k) = lr.to_double(tokens[k]);
    return v;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    return in;
}

// Splittable 64-bit mix used to derive the independent generator streams
// (topology, structure, values, truth) from one scenario seed.
struct SplitMix64 {
    std::uint64_t state;
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

}  // namespace

std::string topology_name(Topology t) {
    switch (t) {
        case Topology::chain: return "chain";
        case Topology::star: return "star";
        case Topology::ring: return "ring";
        case Topology::tree: return "tree";
        case Topology::random_connected: return "random_connected";
        case Topology::loopy13: return "loopy13";
        case Topology::explicit_graph: return "explicit";
    }
    return "unknown";
}

Topology topology_from_name(const std::string& name) {
    for (Topology t : {Topology::chain, Topology::star, Topology::ring, Topology::tree,
                       Topology::random_connected, Topology::loopy13, Topology::explicit_graph})
        if (topology_name(t) == name) return t;
    throw InputError("unknown topology '" + name + "'");
}

Scenario generate(const ScenarioSpec& spec) {
    if (spec.topology == Topology::explicit_graph)
        throw InputError("explicit scenarios are loaded from files, not generated");
    const int n = spec.n;
    if (spec.topology == Topology::loopy13 && n != 13)
        throw InputError("the loopy13 benchmark topology has exactly 13 nodes");
    if (n < 1) throw InputError("node count must be at least 1");
    if (spec.topology == Topology::star && n < 2)
        throw InputError("a star needs at least 2 nodes");
    if (spec.topology == Topology::ring && n < 3)
        throw InputError("a ring needs at least 3 nodes");
    if (spec.dim_min < 1 || spec.dim_max < spec.dim_min)
        throw InputError("node dimensions must satisfy 1 <= dim_min <= dim_max");
    if (!(spec.self_density > 0.0 && spec.self_density <= 1.0))
        throw InputError("self_density must lie in (0, 1]");
    if (!(spec.noise_scale_self > 0.0) || !(spec.noise_scale_edge > 0.0))
        throw InputError("noise scales must be positive");
    if (spec.extra_edges < -1) throw InputError("extra_edges must be -1 (default) or >= 0");

    SplitMix64 root{spec.seed};
    std::mt19937_64 topo_rng(root.next());
    std::mt19937_64 struct_rng(root.next());
    std::mt19937_64 value_rng(root.next());
    std::mt19937_64 truth_rng(root.next());

    // Node dimensions.
    std::vector<NodeSpec> nodes(n);
    {
        std::uniform_int_distribution<int> dim_dist(spec.dim_min, spec.dim_max);
        for (int k = 0; k < n; ++k) nodes[k] = {k + 1, dim_dist(struct_rng)};
    }

    // Edge list.
    std::vector<std::pair<int, int>> pairs;
    auto present = [&pairs](int a, int b) {
        for (const auto& [x, y] : pairs)
            if ((x == a && y == b) || (x == b && y == a)) return true;
        return false;
    };
    switch (spec.topology) {
        case Topology::chain:
            for (int i = 1; i < n; ++i) pairs.emplace_back(i, i + 1);
            break;
        case Topology::star:
            for (int i = 2; i <= n; ++i) pairs.emplace_back(1, i);
            break;
        case Topology::ring:
            for (int i = 1; i < n; ++i) pairs.emplace_back(i, i + 1);
            pairs.emplace_back(n, 1);
            break;
        case Topology::tree:
        case Topology::random_connected: {
            for (int v = 2; v <= n; ++v) {
                std::uniform_int_distribution<int> parent(1, v - 1);
                pairs.emplace_back(parent(topo_rng), v);
            }
            if (spec.topology == Topology::random_connected) {
                const int want = spec.extra_edges < 0 ? std::max(1, n / 4) : spec.extra_edges;
                const long capacity = static_cast<long>(n) * (n - 1) / 2 - (n - 1);
                if (want > capacity)
                    throw InputError("requested " + std::to_string(want) +
                                     " extra edges but only " + std::to_string(capacity) +
                                     " non-tree pairs exist");
                std::uniform_int_distribution<int> any(1, n);
                int added = 0;
                long attempts = 0;
                const long cap = 1000L * want + 10000;
                while (added < want && attempts < cap) {
                    ++attempts;
                    const int a = any(topo_rng), b = any(topo_rng);
                    if (a == b || present(a, b)) continue;
                    pairs.emplace_back(a, b);
                    ++added;
                }
                // Dense corner case: rejection sampling stalls near the
                // complete graph; fill the remainder deterministically.
                for (int a = 1; a <= n && added < want; ++a)
                    for (int b = a + 1; b <= n && added < want; ++b)
                        if (!present(a, b)) {
                            pairs.emplace_back(a, b);
                            ++added;
                        }
            }
            break;
        }
        case Topology::loopy13: {
            for (int i = 1; i < 12; ++i) pairs.emplace_back(i, i + 1);
            pairs.emplace_back(12, 1);
            for (int hub : {1, 4, 7, 10}) pairs.emplace_back(hub, 13);
            break;
        }
        case Topology::explicit_graph:
            break;  // rejected above
    }

    // Which nodes carry a self measurement.
    std::vector<int> self_ids;
    if (spec.topology == Topology::loopy13) {
        // Fixed benchmark pattern: every node except 2 and 5 observes itself.
        for (int id = 1; id <= 13; ++id)
            if (id != 2 && id != 5) self_ids.push_back(id);
    } else {
        const int count = static_cast<int>(std::llround(spec.self_density * n));
        if (count < 1)
            throw InputError(
                "self_density rounds to zero self measurements; the network "
                "needs at least one node that observes itself");
        std::vector<int> ids(n);
        for (int k = 0; k < n; ++k) ids[k] = k + 1;
        std::shuffle(ids.begin(), ids.end(), struct_rng);
        ids.resize(std::min(count, n));
        std::sort(ids.begin(), ids.end());
        self_ids = std::move(ids);
    }

    // Measurement matrices.
    std::uniform_real_distribution<double> entry(-1.0, 1.0);
    std::uniform_real_distribution<double> cov_entry(0.5, 1.5);
    auto random_block = [&](int rows, int cols) {
        Eigen::MatrixXd m(rows, cols);
        do {
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) m(r, c) = entry(value_rng);
        } while (m.isZero(0.0));
        return m;
    };
    auto random_cov = [&](int m, double scale) {
        Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m, m);
        for (int k = 0; k < m; ++k) r(k, k) = cov_entry(value_rng) * scale;
        return r;
    };

    std::vector<SelfMeasurement> selfs;
    for (int id : self_ids) {
        const int d = nodes[id - 1].dim;
        SelfMeasurement s;
        s.node = id;
        s.A = random_block(d, d);
        s.R = random_cov(d, spec.noise_scale_self);
        s.z = Eigen::VectorXd::Zero(d);
        selfs.push_back(std::move(s));
    }

    std::vector<EdgeMeasurement> edges;
    for (const auto& [i, j] : pairs) {
        const int di = nodes[i - 1].dim, dj = nodes[j - 1].dim;
        const int m = std::max(di, dj);  // enough rows to see both endpoints fully
        EdgeMeasurement e;
        e.i = i;
        e.j = j;
        e.Bi = random_block(m, di);
        e.Bj = random_block(m, dj);
        e.R = random_cov(m, spec.noise_scale_edge);
        e.z = Eigen::VectorXd::Zero(m);
        edges.push_back(std::move(e));
    }

    // True states, noise draws, and the measurement values they imply.
    GroundTruth truth;
    truth.x_true.resize(n);
    truth.self_noise.assign(n, Eigen::VectorXd());
    std::normal_distribution<double> unit_normal(0.0, 1.0);
    for (int k = 0; k < n; ++k) {
        truth.x_true[k] = Eigen::VectorXd(nodes[k].dim);
        for (int d = 0; d < nodes[k].dim; ++d) truth.x_true[k](d) = unit_normal(truth_rng);
    }
    for (auto& s : selfs) {
        Eigen::VectorXd v(s.z.size());
        for (Eigen::Index r = 0; r < v.size(); ++r)
            v(r) = std::sqrt(s.R(r, r)) * unit_normal(truth_rng);
        s.z = s.A * truth.x_true[s.node - 1] + v;
        truth.self_noise[s.node - 1] = std::move(v);
    }
    for (auto& e : edges) {
        Eigen::VectorXd w(e.z.size());
        for (Eigen::Index r = 0; r < w.size(); ++r)
            w(r) = std::sqrt(e.R(r, r)) * unit_normal(truth_rng);
        e.z = e.Bi * truth.x_true[e.i - 1] + e.Bj * truth.x_true[e.j - 1] + w;
        truth.edge_noise.push_back(std::move(w));
    }

    std::string provenance = "topology=" + topology_name(spec.topology) +
                             " n=" + std::to_string(n) + " dims=" + std::to_string(spec.dim_min) +
                             ".." + std::to_string(spec.dim_max) +
                             " seed=" + std::to_string(spec.seed) +
                             " self_density=" + fmt_short(spec.self_density) +
                             " noise_self=" + fmt_short(spec.noise_scale_self) +
                             " noise_edge=" + fmt_short(spec.noise_scale_edge) +
                             " extra_edges=" + std::to_string(spec.extra_edges);
    if (spec.topology == Topology::loopy13)
        provenance +=
            " | loopy13: fixed 13-node benchmark (ring 1..12 plus center 13 "
            "linked to 1,4,7,10; nodes 2 and 5 carry no self measurement)";

    return Scenario{MeasurementGraph(std::move(nodes), std::move(selfs), std::move(edges)),
                    std::move(truth), std::move(provenance)};
}

void save_scenario(const MeasurementGraph& g, const std::string& provenance,
                   const std::string& path) {
    std::ofstream out = open_out(path);
    out << "netwls-scenario v1\n";
    if (!provenance.empty()) out << "# " << provenance << '\n';
    out << "nodes " << g.node_count() << '\n';
    for (const auto& nd : g.nodes()) out << "node " << nd.id << ' ' << nd.dim << '\n';

    int selfs = 0;
    for (int id = 1; id <= g.node_count(); ++id)
        if (g.has_self(id)) ++selfs;
    out << "selfs " << selfs << '\n';
    for (int id = 1; id <= g.node_count(); ++id) {
        if (!g.has_self(id)) continue;
        const auto& s = g.self(id);
        out << "self " << id << ' ' << s.z.size() << '\n';
        write_matrix(out, "A", s.A);
        write_matrix(out, "R", s.R);
        out << "z " << s.z.size() << '\n';
        write_values(out, s.z);
    }

    out << "edges " << g.edge_count() << '\n';
    for (const auto& e : g.edges()) {
        out << "edge " << e.i << ' ' << e.j << ' ' << e.z.size() << '\n';
        write_matrix(out, "Bi", e.Bi);
        write_matrix(out, "Bj", e.Bj);
        write_matrix(out, "R", e.R);
        out << "z " << e.z.size() << '\n';
        write_values(out, e.z);
    }
    out << "end\n";
    if (!out) throw InputError("write failure on '" + path + "'");
}

MeasurementGraph load_scenario(const std::string& path) {
    std::ifstream in = open_in(path);
    LineReader lr(in, path);

    auto head = lr.expect("netwls-scenario", 1);
    if (head[1] != "v1") lr.fail("unsupported scenario format version '" + head[1] + "'");

    const int n = lr.to_count(lr.expect("nodes", 1)[1], 1, 1000000);
    std::vector<NodeSpec> nodes;
    for (int k = 0; k < n; ++k) {
        auto t = lr.expect("node", 2);
        nodes.push_back({lr.to_count(t[1], 1, 1000000), lr.to_count(t[2], 1, kMaxDim)});
    }

    const int selfs = lr.to_count(lr.expect("selfs", 1)[1], 0, n);
    std::vector<SelfMeasurement> self_list;
    for (int k = 0; k < selfs; ++k) {
        auto t = lr.expect("self", 2);
        SelfMeasurement s;
        s.node = lr.to_count(t[1], 1, 1000000);
        const int m = lr.to_count(t[2], 1, kMaxDim);
        s.A = read_matrix(lr, "A");
        s.R = read_matrix(lr, "R");
        const int zlen = lr.to_count(lr.expect("z", 1)[1], 0, kMaxDim);
        s.z = read_values(lr, zlen, "self measurement values");
        if (zlen != m) lr.fail("self measurement of node " + std::to_string(s.node) +
                               " declares " + std::to_string(m) + " rows but has " +
                               std::to_string(zlen) + " values");
        self_list.push_back(std::move(s));
    }

    const int edges = lr.to_count(lr.expect("edges", 1)[1], 0, 1000000);
    std::vector<EdgeMeasurement> edge_list;
    for (int k = 0; k < edges; ++k) {
        auto t = lr.expect("edge", 3);
        EdgeMeasurement e;
        e.i = lr.to_count(t[1], 1, 1000000);
        e.j = lr.to_count(t[2], 1, 1000000);
        const int m = lr.to_count(t[3], 1, kMaxDim);
        e.Bi = read_matrix(lr, "Bi");
        e.Bj = read_matrix(lr, "Bj");
        e.R = read_matrix(lr, "R");
        const int zlen = lr.to_count(lr.expect("z", 1)[1], 0, kMaxDim);
        e.z = read_values(lr, zlen, "edge measurement values");
        if (zlen != m) lr.fail("edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                               ") declares " + std::to_string(m) + " rows but has " +
                               std::to_string(zlen) + " values");
        edge_list.push_back(std::move(e));
    }
    lr.expect("end", 0);

    // Structural problems past this point are validation errors, not parse
    // errors; the graph constructor reports them with entity context.
    return MeasurementGraph(std::move(nodes), std::move(self_list), std::move(edge_list));
}

void save_truth(const GroundTruth& truth, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "netwls-truth v1\n";
    const int n = static_cast<int>(truth.x_true.size());
    out << "nodes " << n << '\n';
    for (int k = 0; k < n; ++k) {
        out << "x " << (k + 1) << ' ' << truth.x_true[k].size() << '\n';
        write_values(out, truth.x_true[k]);
    }
    int with_noise = 0;
    for (const auto& v : truth.self_noise)
        if (v.size() > 0) ++with_noise;
    out << "self_noise " << with_noise << '\n';
    for (int k = 0; k < n; ++k) {
        if (truth.self_noise[k].size() == 0) continue;
        out << "v " << (k + 1) << ' ' << truth.self_noise[k].size() << '\n';
        write_values(out, truth.self_noise[k]);
    }
    out << "edge_noise " << truth.edge_noise.size() << '\n';
    for (std::size_t k = 0; k < truth.edge_noise.size(); ++k) {
        out << "w " << (k + 1) << ' ' << truth.edge_noise[k].size() << '\n';
        write_values(out, truth.edge_noise[k]);
    }
    out << "end\n";
    if (!out) throw InputError("write failure on '" + path + "'");
}

GroundTruth load_truth(const std::string& path) {
    std::ifstream in = open_in(path);
    LineReader lr(in, path);

    auto head = lr.expect("netwls-truth", 1);
    if (head[1] != "v1") lr.fail("unsupported truth format version '" + head[1] + "'");

    GroundTruth truth;
    const int n = lr.to_count(lr.expect("nodes", 1)[1], 1, 1000000);
    truth.x_true.resize(n);
    truth.self_noise.assign(n, Eigen::VectorXd());
    for (int k = 0; k < n; ++k) {
        auto t = lr.expect("x", 2);
        const int id = lr.to_count(t[1], 1, n);
        if (id != k + 1) lr.fail("true states must appear in node order");
        truth.x_true[k] = read_values(lr, lr.to_count(t[2], 1, kMaxDim), "true state");
    }
    const int selfs = lr.to_count(lr.expect("self_noise", 1)[1], 0, n);
    for (int k = 0; k < selfs; ++k) {
        auto t = lr.expect("v", 2);
        const int id = lr.to_count(t[1], 1, n);
        if (truth.self_noise[id - 1].size() > 0)
            lr.fail("duplicate self noise for node " + std::to_string(id));
        truth.self_noise[id - 1] =
            read_values(lr, lr.to_count(t[2], 1, kMaxDim), "self noise");
    }
    const int edges = lr.to_count(lr.expect("edge_noise", 1)[1], 0, 1000000);
    for (int k = 0; k < edges; ++k) {
        auto t = lr.expect("w", 2);
        if (lr.to_count(t[1], 1, edges) != k + 1) lr.fail("edge noise must appear in edge order");
        truth.edge_noise.push_back(
            read_values(lr, lr.to_count(t[2], 1, kMaxDim), "edge noise"));
    }
    lr.expect("end", 0);
    return truth;
}

void export_trace_csv(const RunTrace& trace, const ErrorTrace& err,
                      const EnvelopeReport* envelope, const std::string& path) {
    if (err.round_index != trace.round_index)
        throw InputError("trace and error summary come from different runs");

    int max_dim = 0;
    for (const auto& round : trace.estimates)
        for (const auto& est : round) max_dim = std::max<int>(max_dim, static_cast<int>(est.size()));

    std::ofstream out = open_out(path);
    out << "round,node_id";
    for (int d = 0; d < max_dim; ++d) out << ",est_" << d;
    out << ",abs_error,y1,bound_envelope\n";

    const bool bounded = envelope && envelope->applicable;
    for (int s = 0; s < trace.snapshots(); ++s) {
        const int round = trace.round_index[s];
        const int n = static_cast<int>(trace.estimates[s].size());
        for (int k = 0; k < n; ++k) {
            const Eigen::VectorXd& est = trace.estimates[s][k];
            out << round << ',' << (k + 1);
            for (int d = 0; d < max_dim; ++d) {
                out << ',';
                if (d < est.size()) out << fmt_short(est(d));
            }
            out << ',' << fmt_short(err.node_abs_error[s][k]);
            out << ',' << fmt_short(err.y1[s]);
            out << ',';
            if (bounded)
                out << fmt_short(envelope->envelope_constant *
                                 std::pow(envelope->rho, round));
            out << '\n';
        }
    }
    if (!out) throw InputError("write failure on '" + path + "'");
}

void export_fig_data(const ErrorTrace& err, const EnvelopeReport* envelope,
                     const std::string& y1_path, const std::string& bound_path) {
    {
        std::ofstream out = open_out(y1_path);
        out << "# round  y1 (log10 mean squared estimation error)\n";
        for (std::size_t s = 0; s < err.y1.size(); ++s)
            out << err.round_index[s] << ' ' << fmt_short(err.y1[s]) << '\n';
        if (!out) throw InputError("write failure on '" + y1_path + "'");
    }
    {
        std::ofstream out = open_out(bound_path);
        out << "# round  log10 envelope on the mean squared error\n";
        if (envelope && envelope->applicable && envelope->envelope_constant > 0.0 &&
            envelope->rho > 0.0) {
            for (std::size_t s = 0; s < err.y1.size(); ++s) {
                const double bound =
                    envelope->envelope_constant * std::pow(envelope->rho, err.round_index[s]);
                out << err.round_index[s] << ' ' << fmt_short(2.0 * std::log10(bound)) << '\n';
            }
        }
        if (!out) throw InputError("write failure on '" + bound_path + "'");
    }
}

}  // namespace netwls

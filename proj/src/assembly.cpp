#include "netwls/assembly.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cstring>
#include <string>

#include "netwls/errors.hpp"

namespace netwls {

namespace {

// FNV-1a over the raw bytes of the assembled blocks; identifies an instance
// so traces from different systems cannot be audited against each other.
class Fnv1a {
public:
    void add(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t k = 0; k < len; ++k) {
            hash_ ^= p[k];
            hash_ *= 0x100000001b3ull;
        }
    }
    void add_int(int v) { add(&v, sizeof v); }
    void add_matrix(const Eigen::MatrixXd& m) {
        add_int(static_cast<int>(m.rows()));
        add_int(static_cast<int>(m.cols()));
        if (m.size() > 0) add(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
    }
    std::uint64_t value() const { return hash_; }

private:
    std::uint64_t hash_ = 0xcbf29ce484222325ull;
};

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& R, const std::string& what) {
    if (R.rows() == 0) return Eigen::MatrixXd::Zero(0, 0);
    Eigen::LLT<Eigen::MatrixXd> llt(R);
    if (llt.info() != Eigen::Success)
        throw InputError(what + ": covariance is not positive definite");
    return llt.solve(Eigen::MatrixXd::Identity(R.rows(), R.cols()));
}

}  // namespace

void InformationSystem::finalize() {
    offsets.assign(n + 1, 0);
    for (int k = 0; k < n; ++k) offsets[k + 1] = offsets[k] + dims[k];
    adjacency.assign(n, {});
    for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
        adjacency[edges[e].i - 1].emplace_back(edges[e].j, e);
        adjacency[edges[e].j - 1].emplace_back(edges[e].i, e);
    }
    for (auto& a : adjacency) std::sort(a.begin(), a.end());

    Fnv1a h;
    h.add_int(n);
    for (int d : dims) h.add_int(d);
    for (int k = 0; k < n; ++k) {
        h.add_matrix(info[k]);
        h.add_matrix(prec_diag[k]);
    }
    for (const auto& e : edges) {
        h.add_int(e.i);
        h.add_int(e.j);
        h.add_matrix(e.coupling_ij);
        h.add_matrix(e.edge_prec_i);
        h.add_matrix(e.edge_prec_j);
    }
    fingerprint = h.value();
}

bool InformationSystem::all_scalar() const {
    return std::all_of(dims.begin(), dims.end(), [](int d) { return d == 1; });
}

bool InformationSystem::has_edge(int i, int j) const {
    for (const auto& [nbr, e] : adjacency[i - 1])
        if (nbr == j) return true;
    return false;
}

const Eigen::MatrixXd& InformationSystem::coupling(int i, int j) const {
    for (const auto& [nbr, e] : adjacency[i - 1]) {
        if (nbr != j) continue;
        return edges[e].i == i ? edges[e].coupling_ij : edges[e].coupling_ji;
    }
    throw InputError("no edge between nodes " + std::to_string(i) + " and " + std::to_string(j));
}

const Eigen::MatrixXd& InformationSystem::edge_prec(int i, int j) const {
    for (const auto& [nbr, e] : adjacency[i - 1]) {
        if (nbr != j) continue;
        return edges[e].i == i ? edges[e].edge_prec_i : edges[e].edge_prec_j;
    }
    throw InputError("no edge between nodes " + std::to_string(i) + " and " + std::to_string(j));
}

Eigen::MatrixXd InformationSystem::dense_prec() const {
    Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(total_dim(), total_dim());
    for (int k = 0; k < n; ++k)
        psi.block(offsets[k], offsets[k], dims[k], dims[k]) = prec_diag[k];
    for (const auto& e : edges) {
        psi.block(offsets[e.i - 1], offsets[e.j - 1], dims[e.i - 1], dims[e.j - 1]) = e.coupling_ij;
        psi.block(offsets[e.j - 1], offsets[e.i - 1], dims[e.j - 1], dims[e.i - 1]) = e.coupling_ji;
    }
    return psi;
}

Eigen::VectorXd InformationSystem::dense_info() const {
    Eigen::VectorXd alpha(total_dim());
    for (int k = 0; k < n; ++k) alpha.segment(offsets[k], dims[k]) = info[k];
    return alpha;
}

InformationSystem assemble_information(const MeasurementGraph& g) {
    InformationSystem sys;
    sys.n = g.node_count();
    sys.dims.resize(sys.n);
    sys.info.resize(sys.n);
    sys.prec_diag.resize(sys.n);

    for (int id = 1; id <= sys.n; ++id) {
        const int d = g.dim(id);
        sys.dims[id - 1] = d;
        const auto& s = g.self(id);
        if (s.A.rows() > 0) {
            const Eigen::MatrixXd rinv =
                spd_inverse(s.R, "node " + std::to_string(id) + " self measurement");
            sys.info[id - 1] = s.A.transpose() * rinv * s.z;
            sys.prec_diag[id - 1] = s.A.transpose() * rinv * s.A;
        } else {
            sys.info[id - 1] = Eigen::VectorXd::Zero(d);
            sys.prec_diag[id - 1] = Eigen::MatrixXd::Zero(d, d);
        }
    }

    sys.edges.reserve(g.edge_count());
    for (const auto& e : g.edges()) {
        const Eigen::MatrixXd rinv = spd_inverse(e.R, "edge (" + std::to_string(e.i) + "," +
                                                          std::to_string(e.j) + ") measurement");
        InformationSystem::EdgeBlocks blocks;
        blocks.i = e.i;
        blocks.j = e.j;
        blocks.coupling_ij = e.Bi.transpose() * rinv * e.Bj;
        blocks.coupling_ji = blocks.coupling_ij.transpose();
        blocks.edge_prec_i = e.Bi.transpose() * rinv * e.Bi;
        blocks.edge_prec_j = e.Bj.transpose() * rinv * e.Bj;

        sys.info[e.i - 1] += e.Bi.transpose() * rinv * e.z;
        sys.info[e.j - 1] += e.Bj.transpose() * rinv * e.z;
        sys.prec_diag[e.i - 1] += blocks.edge_prec_i;
        sys.prec_diag[e.j - 1] += blocks.edge_prec_j;
        sys.edges.push_back(std::move(blocks));
    }

    sys.finalize();
    return sys;
}

StackedSystem assemble_stacked(const MeasurementGraph& g) {
    const int n = g.node_count();
    std::vector<int> offsets(n + 1, 0);
    for (int id = 1; id <= n; ++id) offsets[id] = offsets[id - 1] + g.dim(id);
    const int cols = offsets[n];

    int rows = 0;
    for (int id = 1; id <= n; ++id) rows += static_cast<int>(g.self(id).A.rows());
    for (const auto& e : g.edges()) rows += static_cast<int>(e.Bi.rows());

    StackedSystem s;
    s.H = Eigen::MatrixXd::Zero(rows, cols);
    s.R = Eigen::MatrixXd::Zero(rows, rows);
    s.z = Eigen::VectorXd::Zero(rows);

    int r = 0;
    for (int id = 1; id <= n; ++id) {
        const auto& m = g.self(id);
        const int mr = static_cast<int>(m.A.rows());
        if (mr == 0) continue;  // absent self measurement: no row block
        s.H.block(r, offsets[id - 1], mr, g.dim(id)) = m.A;
        s.R.block(r, r, mr, mr) = m.R;
        s.z.segment(r, mr) = m.z;
        r += mr;
    }
    for (const auto& e : g.edges()) {
        const int mr = static_cast<int>(e.Bi.rows());
        s.H.block(r, offsets[e.i - 1], mr, g.dim(e.i)) = e.Bi;
        s.H.block(r, offsets[e.j - 1], mr, g.dim(e.j)) = e.Bj;
        s.R.block(r, r, mr, mr) = e.R;
        s.z.segment(r, mr) = e.z;
        r += mr;
    }
    return s;
}

}  // namespace netwls

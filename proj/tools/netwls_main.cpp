#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "netwls/analysis.hpp"
#include "netwls/assembly.hpp"
#include "netwls/dwls.hpp"
#include "netwls/errors.hpp"
#include "netwls/gbp.hpp"
#include "netwls/graph.hpp"
#include "netwls/oracle.hpp"
#include "netwls/scenario.hpp"
#include "netwls/trace.hpp"

#include <Eigen/Eigenvalues>

namespace {

using namespace netwls;

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

const char* stop_name(StopReason s) {
    switch (s) {
        case StopReason::converged: return "converged";
        case StopReason::max_rounds: return "max_rounds";
        case StopReason::breakdown: return "breakdown";
    }
    return "unknown";
}

const char* yn(bool b) { return b ? "yes" : "no"; }

// out.csv -> out.dwls.csv when one run of a pair needs its own file.
std::string with_tag(const std::string& path, const std::string& tag) {
    const auto dot = path.find_last_of('.');
    const auto slash = path.find_last_of("/\\");
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return path + "." + tag;
    return path.substr(0, dot) + "." + tag + path.substr(dot);
}

struct GenerateArgs {
    std::string topology = "random_connected";
    int nodes = 10;
    int dim_min = 1, dim_max = 1;
    std::uint64_t seed = 1;
    double self_density = 0.7;
    double noise_self = 1.0, noise_edge = 1.0;
    int extra_edges = -1;
    std::string output = "scenario.scn";
    bool nodes_given = false;
};

int cmd_generate(const GenerateArgs& a) {
    ScenarioSpec spec;
    spec.topology = topology_from_name(a.topology);
    spec.n = a.nodes;
    if (spec.topology == Topology::loopy13 && !a.nodes_given) spec.n = 13;
    spec.dim_min = a.dim_min;
    spec.dim_max = a.dim_max;
    spec.seed = a.seed;
    spec.self_density = a.self_density;
    spec.noise_scale_self = a.noise_self;
    spec.noise_scale_edge = a.noise_edge;
    spec.extra_edges = a.extra_edges;

    Scenario scenario = generate(spec);
    const std::string truth_path = a.output + ".truth";
    save_scenario(scenario.graph, scenario.provenance, a.output);
    save_truth(scenario.truth, truth_path);

    const bool acyclic = scenario.graph.is_acyclic();
    std::cout << "n=" << scenario.graph.node_count() << " edges=" << scenario.graph.edge_count()
              << ' ' << (acyclic ? "acyclic" : "cyclic")
              << " diameter=" << scenario.graph.diameter() << "\n";
    std::cout << "scenario written to " << a.output << ", ground truth to " << truth_path
              << "\n";
    return 0;
}

struct RunArgs {
    std::string scenario;
    std::string algorithm = "dwls";
    int max_rounds = 500;
    double tol = 1e-9;
    std::string csv, fig_y1, fig_bound;
};

int cmd_run(const RunArgs& a) {
    if (a.algorithm != "dwls" && a.algorithm != "gbp" && a.algorithm != "both")
        throw InputError("--algorithm must be dwls, gbp, or both");

    MeasurementGraph graph = load_scenario(a.scenario);
    InformationSystem info = assemble_information(graph);
    GlobalSolution truth = solve_global(info);  // ground truth first; abort if unsolvable

    const bool scalar_cyclic = info.all_scalar() && !graph.is_acyclic();
    std::optional<RateBound> bound;
    if (scalar_cyclic) bound = rate_bound(info);

    const bool both = a.algorithm == "both";
    RunOptions opts;
    opts.log_details = both;

    bool any_breakdown = false;
    bool fig_written = false;
    auto report = [&](const RunTrace& trace) {
        ErrorTrace err = error_trace(trace, truth);
        std::optional<EnvelopeReport> envelope;
        if (bound) {
            EnvelopeReport e = rate_envelope(err, *bound);
            if (e.applicable) envelope = e;
        }

        std::cout << "algorithm=" << trace.algorithm << " stop=" << stop_name(trace.stop)
                  << " rounds=" << trace.rounds_executed << " final_y1="
                  << (err.y1.empty() ? std::string("n/a") : fmt(err.y1.back())) << "\n";
        if (bound) {
            std::cout << "  spectral_radius=" << fmt(bound->spectral_radius);
            if (envelope)
                std::cout << " envelope_C=" << fmt(envelope->envelope_constant)
                          << " empirical_rate=" << fmt(envelope->rate_hat);
            std::cout << "\n";
        }
        if (trace.stop == StopReason::breakdown && trace.breakdown) {
            any_breakdown = true;
            std::cerr << "breakdown at round " << trace.breakdown->round << ", node "
                      << trace.breakdown->node;
            if (trace.breakdown->to != 0)
                std::cerr << " (message to node " << trace.breakdown->to << ")";
            std::cerr << ": " << trace.breakdown->detail << "\n";
        }

        if (!a.csv.empty()) {
            const std::string path = both ? with_tag(a.csv, trace.algorithm) : a.csv;
            export_trace_csv(trace, err, envelope ? &*envelope : nullptr, path);
            std::cout << "  trace written to " << path << "\n";
        }
        if (!a.fig_y1.empty() && !a.fig_bound.empty() && !fig_written) {
            export_fig_data(err, envelope ? &*envelope : nullptr, a.fig_y1, a.fig_bound);
            fig_written = true;
        }
    };

    std::optional<RunTrace> dwls_trace, gbp_trace;
    if (a.algorithm == "dwls" || both) {
        dwls_trace = run_dwls(info, a.max_rounds, a.tol, opts);
        report(*dwls_trace);
    }
    if (a.algorithm == "gbp" || both) {
        // The second algorithm indexes rounds one later, so give it one more.
        const int rounds = both ? a.max_rounds + 1 : a.max_rounds;
        gbp_trace = run_gbp(info, rounds, a.tol, opts);
        report(*gbp_trace);
    }

    if (both) {
        EquivalenceReport rep = equivalence_audit(*dwls_trace, *gbp_trace);
        std::cout << "equivalence audit: rounds=" << rep.rounds_compared << " max discrepancy "
                  << fmt(std::max(rep.max_estimate_gap, rep.max_precision_gap))
                  << " (tolerance " << fmt(rep.tol) << "): " << (rep.pass ? "PASS" : "FAIL")
                  << "\n";
        if (!rep.pass) return 3;
    }
    return any_breakdown ? 3 : 0;
}

struct AuditArgs {
    std::string scenario;
    int max_rounds = 30;
    double tol = 1e-10;
};

int cmd_audit(const AuditArgs& a) {
    MeasurementGraph graph = load_scenario(a.scenario);
    InformationSystem info = assemble_information(graph);

    RunOptions opts;
    opts.log_details = true;
    // Run to the horizon: the tiny threshold only stops a run that has
    // reached an exact fixed point.
    RunTrace dwls_trace = run_dwls(info, a.max_rounds, 1e-300, opts);
    RunTrace gbp_trace = run_gbp(info, a.max_rounds + 1, 1e-300, opts);
    EquivalenceReport rep = equivalence_audit(dwls_trace, gbp_trace, a.tol);

    std::cout << "rounds compared: " << rep.rounds_compared << "\n";
    std::cout << "max estimate gap: " << fmt(rep.max_estimate_gap) << "\n";
    std::cout << "max precision gap: "
              << (rep.precisions_checked ? fmt(rep.max_precision_gap) : std::string("n/a"))
              << "\n";
    std::cout << "worst round: " << rep.worst_round << "\n";
    bool broke = false;
    for (const auto* trace : {&dwls_trace, &gbp_trace}) {
        if (trace->stop == StopReason::breakdown && trace->breakdown) {
            broke = true;
            std::cerr << trace->algorithm << " breakdown at round " << trace->breakdown->round
                      << ", node " << trace->breakdown->node << ": " << trace->breakdown->detail
                      << "\n";
        }
    }
    std::cout << "equivalence audit: max discrepancy "
              << fmt(std::max(rep.max_estimate_gap, rep.max_precision_gap)) << " (tolerance "
              << fmt(rep.tol) << "): " << (rep.pass ? "PASS" : "FAIL") << "\n";
    return (rep.pass && !broke) ? 0 : 3;
}

struct AnalyzeArgs {
    std::string scenario;
    std::string output;
};

int cmd_analyze(const AnalyzeArgs& a) {
    MeasurementGraph graph = load_scenario(a.scenario);
    InformationSystem info = assemble_information(graph);

    std::ostringstream rep;
    rep << "nodes: " << graph.node_count() << "\n";
    rep << "edges: " << graph.edge_count() << "\n";
    const bool connected = graph.is_connected();
    rep << "connected: " << yn(connected) << "\n";
    rep << "acyclic: " << yn(graph.is_acyclic()) << "\n";
    rep << "diameter: ";
    if (connected)
        rep << graph.diameter() << "\n";
    else
        rep << "n/a (disconnected)\n";
    rep << "state dimension: " << info.total_dim() << " (information matrix "
        << info.total_dim() << "x" << info.total_dim() << ")\n";

    bool any_self = false;
    for (int id = 1; id <= graph.node_count(); ++id)
        if (graph.has_self(id)) any_self = true;
    if (!any_self)
        rep << "warning: no node observes itself; the system is unidentifiable "
               "(needs at least one self measurement)\n";

    {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info.dense_prec(),
                                                          Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues().cwiseAbs().minCoeff();
        const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
        rep << "psi condition: " << (lo > 0.0 ? fmt(hi / lo) : std::string("inf")) << "\n";
    }

    if (info.all_scalar()) {
        DominanceCertificate cert = dominance_certificate(info);
        rep << "comparison matrix PD: " << yn(cert.is_pd) << "\n";
        if (cert.scaling) {
            rep << "dominance scaling: margin=" << fmt(cert.margin) << " d=[";
            for (int k = 0; k < cert.scaling->size(); ++k) {
                if (k) rep << ' ';
                rep << fmt((*cert.scaling)(k));
            }
            rep << "]\n";
        } else {
            rep << "dominance scaling: absent\n";
            rep << "warning: convergence guarantees need a connected network "
                   "with at least one self measurement\n";
        }
        try {
            RateBound bound = rate_bound(info);
            rep << "spectral radius of the absolute iteration matrix: "
                << fmt(bound.spectral_radius) << "\n";
        } catch (const NumericError& e) {
            rep << "spectral radius: n/a (" << e.what() << ")\n";
        }
    } else {
        rep << "comparison matrix PD: n/a (vector variables)\n";
        rep << "dominance scaling: n/a (vector variables)\n";
        rep << "spectral radius: n/a (vector variables)\n";
    }

    std::cout << rep.str();
    if (!a.output.empty()) {
        std::ofstream out(a.output, std::ios::binary);
        if (!out) throw InputError("cannot open '" + a.output + "' for writing");
        out << rep.str();
        if (!out) throw InputError("write failure on '" + a.output + "'");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"distributed weighted least-squares estimation over measurement networks"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* cgen = app.add_subcommand("generate", "generate a scenario and its ground truth");
    cgen->add_option("--topology", gen.topology,
                     "chain|star|ring|tree|random_connected|loopy13")
        ->capture_default_str();
    auto* nodes_opt = cgen->add_option("--nodes", gen.nodes, "node count")->capture_default_str();
    cgen->add_option("--dim-min", gen.dim_min, "smallest node state dimension")
        ->capture_default_str();
    cgen->add_option("--dim-max", gen.dim_max, "largest node state dimension")
        ->capture_default_str();
    cgen->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
    cgen->add_option("--self-density", gen.self_density,
                     "fraction of nodes with a self measurement, (0,1]")
        ->capture_default_str();
    cgen->add_option("--noise-self", gen.noise_self, "self covariance scale")
        ->capture_default_str();
    cgen->add_option("--noise-edge", gen.noise_edge, "edge covariance scale")
        ->capture_default_str();
    cgen->add_option("--extra-edges", gen.extra_edges,
                     "random_connected: edges beyond the spanning tree (-1 = default)")
        ->capture_default_str();
    cgen->add_option("-o,--output", gen.output, "scenario file path")->capture_default_str();

    RunArgs run;
    auto* crun = app.add_subcommand("run", "run an estimation algorithm on a scenario");
    crun->add_option("--scenario", run.scenario, "scenario file")->required();
    crun->add_option("--algorithm", run.algorithm, "dwls|gbp|both")->capture_default_str();
    crun->add_option("--max-rounds", run.max_rounds, "round limit")->capture_default_str();
    crun->add_option("--tol", run.tol, "early-stop threshold on estimate change")
        ->capture_default_str();
    crun->add_option("--csv", run.csv, "trace CSV output path");
    crun->add_option("--fig-y1", run.fig_y1, "plot data: per-round y1");
    crun->add_option("--fig-bound", run.fig_bound, "plot data: envelope line");

    AuditArgs audit;
    auto* caudit = app.add_subcommand("audit", "check that both algorithms agree round by round");
    caudit->add_option("--scenario", audit.scenario, "scenario file")->required();
    caudit->add_option("--max-rounds", audit.max_rounds, "comparison horizon")
        ->capture_default_str();
    caudit->add_option("--tol", audit.tol, "allowed relative discrepancy")->capture_default_str();

    AnalyzeArgs analyze;
    auto* canalyze = app.add_subcommand("analyze", "report matrix and graph diagnostics");
    canalyze->add_option("--scenario", analyze.scenario, "scenario file")->required();
    canalyze->add_option("-o,--output", analyze.output, "also write the report to a file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    gen.nodes_given = nodes_opt->count() > 0;

    try {
        if (cgen->parsed()) return cmd_generate(gen);
        if (crun->parsed()) return cmd_run(run);
        if (caudit->parsed()) return cmd_audit(audit);
        if (canalyze->parsed()) return cmd_analyze(analyze);
    } catch (const netwls::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const netwls::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}

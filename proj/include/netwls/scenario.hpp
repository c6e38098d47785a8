#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "netwls/analysis.hpp"
#include "netwls/graph.hpp"
#include "netwls/trace.hpp"

namespace netwls {

enum class Topology { chain, star, ring, tree, random_connected, loopy13, explicit_graph };

std::string topology_name(Topology t);
Topology topology_from_name(const std::string& name);  // throws InputError

// Parameters of a generated scenario. Every generated graph is connected,
// has at least one self measurement, positive definite covariances, and
// nonzero edge blocks; specs that cannot satisfy that are rejected.
struct ScenarioSpec {
    Topology topology = Topology::random_connected;
    int n = 10;
    int dim_min = 1;
    int dim_max = 1;
    std::uint64_t seed = 1;
    double self_density = 0.7;      // fraction of nodes with a self measurement, (0, 1]
    double noise_scale_self = 1.0;  // multiplies self covariance entries
    double noise_scale_edge = 1.0;  // multiplies edge covariance entries
    int extra_edges = -1;           // random_connected: edges beyond a spanning
                                    // tree; -1 means max(1, n/4)
};

// The sampled state and noise realizations behind a generated scenario. The
// stored measurement values satisfy z = A x + v (self) and
// z = B_i x_i + B_j x_j + w (edge) exactly for these draws.
struct GroundTruth {
    std::vector<Eigen::VectorXd> x_true;      // per node
    std::vector<Eigen::VectorXd> self_noise;  // per node; zero-length when no self measurement
    std::vector<Eigen::VectorXd> edge_noise;  // per edge, in edge-list order
};

struct Scenario {
    MeasurementGraph graph;
    GroundTruth truth;
    std::string provenance;  // one-line summary embedded in saved files
};

// Deterministic function of the spec: the same spec yields byte-identical
// saved files. Throws InputError on specs that violate the invariants above.
Scenario generate(const ScenarioSpec& spec);

// Versioned human-readable text formats; doubles carry 17 significant digits
// so round-trips are exact. Loading re-runs full graph validation.
void save_scenario(const MeasurementGraph& g, const std::string& provenance,
                   const std::string& path);
MeasurementGraph load_scenario(const std::string& path);

void save_truth(const GroundTruth& truth, const std::string& path);
GroundTruth load_truth(const std::string& path);

// Trace CSV: header plus one row per (round, node), round-major. Estimate
// columns are padded to the widest node dimension; y1 repeats per round; the
// envelope column is C * rho^round when a fitted envelope is supplied.
void export_trace_csv(const RunTrace& trace, const ErrorTrace& err,
                      const EnvelopeReport* envelope, const std::string& path);

// Two-column plot data: (round, y1) and, when the envelope applies, the
// matching bound line on the same log10 mean-squared-error scale.
void export_fig_data(const ErrorTrace& err, const EnvelopeReport* envelope,
                     const std::string& y1_path, const std::string& bound_path);

}  // namespace netwls

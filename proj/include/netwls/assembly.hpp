#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <utility>
#include <vector>

#include "netwls/graph.hpp"

namespace netwls {

/// The information form of a measurement graph: per-node information vectors
/// and precision blocks plus per-edge coupling and edge-precision blocks.
/// This is the only input the message-passing engines see.
struct InformationSystem {
    struct EdgeBlocks {
        int i = 0;
        int j = 0;
        Eigen::MatrixXd coupling_ij;  // dim(i) x dim(j) cross-precision block
        Eigen::MatrixXd coupling_ji;  // its transpose, stored for direct access
        Eigen::MatrixXd edge_prec_i;  // dim(i) x dim(i), edge's own contribution at i
        Eigen::MatrixXd edge_prec_j;  // dim(j) x dim(j), contribution at j
    };

    int n = 0;
    std::vector<int> dims;
    std::vector<int> offsets;                 // prefix sums of dims
    std::vector<Eigen::VectorXd> info;        // per-node information vector
    std::vector<Eigen::MatrixXd> prec_diag;   // per-node precision block
    std::vector<EdgeBlocks> edges;
    // Per node: (neighbor id, edge index) sorted by neighbor id.
    std::vector<std::vector<std::pair<int, int>>> adjacency;
    std::uint64_t fingerprint = 0;

    /// Builds adjacency, offsets, and the fingerprint from the filled-in
    /// fields above. Call after constructing an instance by hand.
    void finalize();

    int total_dim() const { return offsets.empty() ? 0 : offsets.back(); }
    bool all_scalar() const;
    bool has_edge(int i, int j) const;
    /// Cross-precision block for ordered pair (i, j); (i, j) must be an edge.
    const Eigen::MatrixXd& coupling(int i, int j) const;
    /// Edge precision contribution at endpoint i of edge (i, j).
    const Eigen::MatrixXd& edge_prec(int i, int j) const;

    /// Dense stacked precision matrix and information vector (oracle use).
    Eigen::MatrixXd dense_prec() const;
    Eigen::VectorXd dense_info() const;
};

/// Full stacked measurement model: one row block per self measurement
/// (nodes with measurements, in id order) followed by one per edge.
/// Kept solely for centralized cross-checks.
struct StackedSystem {
    Eigen::MatrixXd H;
    Eigen::MatrixXd R;  // block diagonal
    Eigen::VectorXd z;
};

/// Converts a measurement graph into its information form. Every node's
/// blocks depend only on the node's own measurement and its incident edges.
InformationSystem assemble_information(const MeasurementGraph& g);

/// Builds the stacked model (H, R, z) with node row blocks before edge row
/// blocks, both in declaration order.
StackedSystem assemble_stacked(const MeasurementGraph& g);

}  // namespace netwls

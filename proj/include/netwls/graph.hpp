#pragma once

#include <Eigen/Dense>

#include <set>
#include <vector>

namespace netwls {

/// One node of the measurement network. Ids are 1-based and contiguous.
struct NodeSpec {
    int id = 0;
    int dim = 1;  // state dimension of this node's variable
};

/// Noisy linear observation of a single node's own state: z = A*x_i + v,
/// v ~ N(0, R). A node without a self measurement is represented with an
/// empty A (zero rows), which contributes nothing to the information form.
struct SelfMeasurement {
    int node = 0;
    Eigen::MatrixXd A;  // m x dim(node); m may be 0
    Eigen::MatrixXd R;  // m x m, symmetric positive definite
    Eigen::VectorXd z;  // m
};

/// Noisy joint observation of the two endpoints of an edge:
/// z = Bi*x_i + Bj*x_j + v, v ~ N(0, R). Both blocks must be nonzero;
/// an edge with a zero block degenerates into a self measurement.
struct EdgeMeasurement {
    int i = 0;
    int j = 0;
    Eigen::MatrixXd Bi;  // m x dim(i), nonzero
    Eigen::MatrixXd Bj;  // m x dim(j), nonzero
    Eigen::MatrixXd R;   // m x m, symmetric positive definite
    Eigen::VectorXd z;   // m
};

/// Immutable measurement network: nodes with optional self measurements and
/// an ordered edge list of pairwise measurements. Construction validates all
/// structural invariants; afterwards the graph is safe for concurrent reads.
class MeasurementGraph {
public:
    MeasurementGraph(std::vector<NodeSpec> nodes,
                     std::vector<SelfMeasurement> selfs,
                     std::vector<EdgeMeasurement> edges);

    int node_count() const { return static_cast<int>(nodes_.size()); }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    int dim(int id) const { return nodes_[index(id)].dim; }
    int total_dim() const { return total_dim_; }

    const std::vector<NodeSpec>& nodes() const { return nodes_; }
    const std::vector<EdgeMeasurement>& edges() const { return edges_; }

    /// Self measurement of a node, normalized: absent measurements are stored
    /// with zero rows so downstream assembly needs no special case.
    const SelfMeasurement& self(int id) const { return selfs_[index(id)]; }
    bool has_self(int id) const { return selfs_[index(id)].A.rows() > 0; }

    std::set<int> neighbors(int id) const;
    /// Neighbor ids in ascending order (fixed iteration order for engines).
    const std::vector<int>& neighbor_list(int id) const;

    bool is_connected() const;
    bool is_acyclic() const;

    /// Largest hop distance between any two nodes. Throws std::domain_error
    /// if the graph is disconnected.
    int diameter() const;
    /// Largest hop distance from node `id` to any other node.
    int eccentricity(int id) const;
    std::vector<int> eccentricities() const;

    bool operator==(const MeasurementGraph& other) const;

private:
    int index(int id) const;  // 1-based id -> 0-based index, validated
    std::vector<int> bfs_distances(int start_index) const;

    std::vector<NodeSpec> nodes_;
    std::vector<SelfMeasurement> selfs_;  // one per node, zero-row when absent
    std::vector<EdgeMeasurement> edges_;
    std::vector<std::vector<int>> adjacency_;  // sorted neighbor ids per node
    int total_dim_ = 0;
};

}  // namespace netwls

#include "netwls/graph.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <deque>
#include <stdexcept>
#include <string>
#include <utility>

#include "netwls/errors.hpp"

namespace netwls {

namespace {

bool symmetric_pd(const Eigen::MatrixXd& R) {
    if (R.rows() != R.cols()) return false;
    if (R.rows() == 0) return true;  // vacuous for absent self measurements
    const double scale = std::max(1.0, R.cwiseAbs().maxCoeff());
    if ((R - R.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
    Eigen::LLT<Eigen::MatrixXd> llt(R);
    return llt.info() == Eigen::Success;
}

std::string edge_name(int i, int j) {
    return "edge (" + std::to_string(i) + "," + std::to_string(j) + ")";
}

bool same(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

bool same(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.size() == b.size() && (a.array() == b.array()).all();
}

}  // namespace

MeasurementGraph::MeasurementGraph(std::vector<NodeSpec> nodes,
                                   std::vector<SelfMeasurement> selfs,
                                   std::vector<EdgeMeasurement> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    const int n = static_cast<int>(nodes_.size());
    for (int k = 0; k < n; ++k) {
        if (nodes_[k].id != k + 1)
            throw InputError("node ids must be contiguous 1..n in order; found id " +
                             std::to_string(nodes_[k].id) + " at position " + std::to_string(k + 1));
        if (nodes_[k].dim < 1)
            throw InputError("node " + std::to_string(nodes_[k].id) + ": dim must be >= 1");
        total_dim_ += nodes_[k].dim;
    }

    // Normalize self measurements: every node gets a record, absent ones with
    // zero rows.
    selfs_.resize(n);
    for (int k = 0; k < n; ++k) {
        const int d = nodes_[k].dim;
        selfs_[k].node = k + 1;
        selfs_[k].A = Eigen::MatrixXd::Zero(0, d);
        selfs_[k].R = Eigen::MatrixXd::Zero(0, 0);
        selfs_[k].z = Eigen::VectorXd::Zero(0);
    }
    std::vector<bool> seen_self(n, false);
    for (auto& s : selfs) {
        if (s.node < 1 || s.node > n)
            throw InputError("self measurement references unknown node " + std::to_string(s.node));
        if (seen_self[s.node - 1])
            throw InputError("node " + std::to_string(s.node) + ": more than one self measurement");
        seen_self[s.node - 1] = true;
        const int d = nodes_[s.node - 1].dim;
        const auto m = s.A.rows();
        if (s.A.cols() != d)
            throw InputError("node " + std::to_string(s.node) + ": A must have " +
                             std::to_string(d) + " columns");
        if (s.R.rows() != m || s.R.cols() != m || s.z.size() != m)
            throw InputError("node " + std::to_string(s.node) + ": R and z must match A's row count");
        if (!symmetric_pd(s.R))
            throw InputError("node " + std::to_string(s.node) +
                             ": R is not symmetric positive definite");
        selfs_[s.node - 1] = std::move(s);
    }

    adjacency_.assign(n, {});
    std::set<std::pair<int, int>> pairs;
    for (const auto& e : edges_) {
        if (e.i < 1 || e.i > n || e.j < 1 || e.j > n)
            throw InputError(edge_name(e.i, e.j) + " references an unknown node");
        if (e.i == e.j)
            throw InputError(edge_name(e.i, e.j) + ": endpoints must differ");
        const auto key = std::minmax(e.i, e.j);
        if (!pairs.insert(key).second)
            throw InputError(edge_name(e.i, e.j) +
                             ": duplicate edge for this pair (stack the measurements into one)");
        const auto m = e.Bi.rows();
        if (m < 1 || e.Bi.cols() != dim(e.i))
            throw InputError(edge_name(e.i, e.j) + ": Bi must be m x " + std::to_string(dim(e.i)) +
                             " with m >= 1");
        if (e.Bj.rows() != m || e.Bj.cols() != dim(e.j))
            throw InputError(edge_name(e.i, e.j) + ": Bj must be " + std::to_string(m) + " x " +
                             std::to_string(dim(e.j)));
        if (e.Bi.isZero(0.0) || e.Bj.isZero(0.0))
            throw InputError(edge_name(e.i, e.j) +
                             ": zero observation block (a pairwise measurement must involve both endpoints)");
        if (e.R.rows() != m || e.R.cols() != m || e.z.size() != m)
            throw InputError(edge_name(e.i, e.j) + ": R and z must match the observation row count");
        if (!symmetric_pd(e.R))
            throw InputError(edge_name(e.i, e.j) + ": R is not symmetric positive definite");
        adjacency_[e.i - 1].push_back(e.j);
        adjacency_[e.j - 1].push_back(e.i);
    }
    for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
}

int MeasurementGraph::index(int id) const {
    if (id < 1 || id > node_count())
        throw InputError("unknown node id " + std::to_string(id));
    return id - 1;
}

std::set<int> MeasurementGraph::neighbors(int id) const {
    const auto& list = adjacency_[index(id)];
    return {list.begin(), list.end()};
}

const std::vector<int>& MeasurementGraph::neighbor_list(int id) const {
    return adjacency_[index(id)];
}

std::vector<int> MeasurementGraph::bfs_distances(int start_index) const {
    std::vector<int> dist(node_count(), -1);
    std::deque<int> queue;
    dist[start_index] = 0;
    queue.push_back(start_index);
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (int v : adjacency_[u]) {
            if (dist[v - 1] < 0) {
                dist[v - 1] = dist[u] + 1;
                queue.push_back(v - 1);
            }
        }
    }
    return dist;
}

bool MeasurementGraph::is_connected() const {
    if (node_count() <= 1) return true;
    const auto dist = bfs_distances(0);
    return std::none_of(dist.begin(), dist.end(), [](int d) { return d < 0; });
}

bool MeasurementGraph::is_acyclic() const {
    // No multi-edges or self-loops by construction, so the graph is a forest
    // iff |E| = |V| - (number of components).
    int components = 0;
    std::vector<bool> visited(node_count(), false);
    for (int s = 0; s < node_count(); ++s) {
        if (visited[s]) continue;
        ++components;
        std::deque<int> queue{s};
        visited[s] = true;
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop_front();
            for (int v : adjacency_[u]) {
                if (!visited[v - 1]) {
                    visited[v - 1] = true;
                    queue.push_back(v - 1);
                }
            }
        }
    }
    return edge_count() == node_count() - components;
}

int MeasurementGraph::eccentricity(int id) const {
    const auto dist = bfs_distances(index(id));
    int ecc = 0;
    for (int d : dist) {
        if (d < 0) throw std::domain_error("eccentricity undefined: graph is disconnected");
        ecc = std::max(ecc, d);
    }
    return ecc;
}

std::vector<int> MeasurementGraph::eccentricities() const {
    std::vector<int> ecc(node_count());
    for (int id = 1; id <= node_count(); ++id) ecc[id - 1] = eccentricity(id);
    return ecc;
}

int MeasurementGraph::diameter() const {
    if (node_count() == 0) return 0;
    const auto ecc = eccentricities();
    return *std::max_element(ecc.begin(), ecc.end());
}

bool MeasurementGraph::operator==(const MeasurementGraph& other) const {
    if (node_count() != other.node_count() || edge_count() != other.edge_count()) return false;
    for (int k = 0; k < node_count(); ++k) {
        if (nodes_[k].dim != other.nodes_[k].dim) return false;
        const auto& a = selfs_[k];
        const auto& b = other.selfs_[k];
        if (!same(a.A, b.A) || !same(a.R, b.R) || !same(a.z, b.z)) return false;
    }
    for (int k = 0; k < edge_count(); ++k) {
        const auto& a = edges_[k];
        const auto& b = other.edges_[k];
        if (a.i != b.i || a.j != b.j) return false;
        if (!same(a.Bi, b.Bi) || !same(a.Bj, b.Bj) || !same(a.R, b.R) || !same(a.z, b.z))
            return false;
    }
    return true;
}

}  // namespace netwls

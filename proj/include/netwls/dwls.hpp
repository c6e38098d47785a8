#pragma once

#include <Eigen/Core>

#include <optional>
#include <utility>
#include <vector>

#include "netwls/assembly.hpp"
#include "netwls/trace.hpp"

namespace netwls {

// Round-synchronous distributed WLS iteration working on the self/edge
// measurement blocks directly. Each node owns copies of its local blocks and
// the cross blocks of incident edges; a round reads nothing else besides the
// previous round's inbound messages.
class DwlsEngine {
public:
    struct Message {
        Eigen::MatrixXd cov;   // covariance carried on the directed edge
        Eigen::VectorXd mean;
    };

    // Performs the round-0 initialization, including the initial messages.
    // Throws NumericError when some node's own information block is singular
    // (locally unidentifiable node).
    explicit DwlsEngine(const InformationSystem& info);

    // One synchronous round over all nodes and directed edges. Returns false
    // on breakdown; the engine then keeps the state of the last completed
    // round and failure() describes the event.
    bool step();

    int round() const { return round_; }
    const std::optional<Breakdown>& failure() const { return breakdown_; }

    const Eigen::VectorXd& estimate(int id) const;   // current-round local estimate
    const Eigen::MatrixXd& precision(int id) const;  // current-round local information matrix
    const Message& message(int from, int to) const;  // current-round directed message

    // Locality audit: the neighbor ids whose cross blocks this node's
    // workspace holds. Must equal the graph adjacency and nothing more.
    std::vector<int> footprint(int id) const;

private:
    struct Inbound {
        int nbr = 0;             // neighbor id (1-based)
        int slot_in = -1;        // directed slot nbr -> this node
        int slot_out = -1;       // directed slot this node -> nbr
        Eigen::MatrixXd coupling;  // cross block from nbr into this node
    };
    struct Node {
        int dim = 0;
        Eigen::MatrixXd prec_diag;
        Eigen::VectorXd info;
        std::vector<Inbound> in;
        Eigen::MatrixXd prec_hat;
        Eigen::VectorXd info_hat;
        Eigen::VectorXd x_hat;
    };

    int n_ = 0;
    int round_ = 0;
    std::vector<Node> nodes_;
    std::vector<Message> prev_, next_;
    std::vector<std::pair<int, int>> slot_dir_;  // slot -> (from, to)
    std::optional<Breakdown> breakdown_;
};

// Drives the engine for up to max_rounds rounds, recording a snapshot per
// round (round 0 = initialization). Stops early once the largest per-node
// estimate change drops below tol, or on breakdown (recorded, not thrown).
RunTrace run_dwls(const InformationSystem& info, int max_rounds, double tol,
                  const RunOptions& opts = {});

}  // namespace netwls

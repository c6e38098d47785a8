#pragma once

#include <Eigen/Core>

#include <optional>
#include <utility>
#include <vector>

#include "netwls/assembly.hpp"
#include "netwls/trace.hpp"

namespace netwls {

// Round-synchronous Gaussian belief propagation on the information form.
// Deliberately implemented without reusing any update code from the other
// engine: only the assembled block types are shared, so agreement between the
// two iterations is an actual check rather than a tautology.
class GbpEngine {
public:
    struct Message {
        Eigen::MatrixXd prec;    // message precision
        Eigen::VectorXd wmean;   // precision-weighted mean (kept as a product;
                                 // the precision itself may be singular)
    };

    explicit GbpEngine(const InformationSystem& info);

    // One synchronous round: beliefs and outgoing messages, both computed
    // from the previous round's messages only. Returns false on breakdown.
    bool step();

    int round() const { return round_; }
    const std::optional<Breakdown>& failure() const { return breakdown_; }

    // Belief accessors are valid once round() >= 1.
    const Eigen::VectorXd& mean(int id) const;
    const Eigen::MatrixXd& belief_prec(int id) const;

    const Message& message(int from, int to) const;  // current-round message
    // Aggregates that produced the current-round message on (from, to): the
    // matrix that was inverted and the matching weighted-mean vector.
    const Eigen::MatrixXd& excl_prec(int from, int to) const;
    const Eigen::VectorXd& excl_wmean(int from, int to) const;

    // Locality audit, mirroring the other engine's contract.
    std::vector<int> footprint(int id) const;

private:
    struct Link {
        int nbr = 0;
        int slot_in = -1;
        int slot_out = -1;
        Eigen::MatrixXd edge_prec_own;   // edge information on this node's side
        Eigen::MatrixXd edge_prec_peer;  // edge information on the neighbor's side
        Eigen::MatrixXd cross_out;       // cross block from this node into nbr
    };
    struct Node {
        int dim = 0;
        Eigen::MatrixXd prec_self;  // node-local precision, edge terms removed
        Eigen::VectorXd winfo;      // node-local weighted information vector
        std::vector<Link> links;
        Eigen::MatrixXd belief_prec;
        Eigen::VectorXd belief_mean;
    };

    int slot(int from, int to) const;

    int n_ = 0;
    int round_ = 0;
    std::vector<Node> nodes_;
    std::vector<Message> prev_, next_;
    std::vector<Eigen::MatrixXd> excl_prec_;   // per outgoing slot, current round
    std::vector<Eigen::VectorXd> excl_wmean_;
    std::vector<std::pair<int, int>> slot_dir_;
    std::optional<Breakdown> breakdown_;
};

// Drives the engine for up to max_rounds rounds; snapshots start at round 1
// (there is no round-0 belief). Early stop below tol, breakdown recorded.
RunTrace run_gbp(const InformationSystem& info, int max_rounds, double tol,
                 const RunOptions& opts = {});

}  // namespace netwls

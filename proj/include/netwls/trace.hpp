#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace netwls {

// Why a run stopped. A breakdown is a numerical failure inside an update
// (singular local system); it halts the run but is reported, not thrown.
enum class StopReason { converged, max_rounds, breakdown };

struct Breakdown {
    int round = -1;
    int node = 0;        // node where the failure occurred (1-based id)
    int to = 0;          // destination node for a message-stage failure, 0 for belief stage
    std::string detail;
};

// Directed per-round message records, kept only when requested (RunOptions).
struct DwlsMessageLog {
    int from = 0, to = 0;
    Eigen::MatrixXd cov;   // covariance carried by the message
    Eigen::VectorXd mean;
};

struct GbpMessageLog {
    int from = 0, to = 0;
    Eigen::MatrixXd prec;        // message precision
    Eigen::VectorXd wmean;       // precision-weighted mean
    Eigen::MatrixXd excl_prec;   // aggregate inverted to form the message
    Eigen::VectorXd excl_wmean;  // matching weighted-mean aggregate
};

struct RunOptions {
    // Record per-round node precisions and directed messages in addition to
    // the estimates. Off by default: estimates are all the error analysis
    // needs, and the details grow with rounds times edges.
    bool log_details = false;
};

// Round-indexed history of one engine run. Snapshot k holds the beliefs of
// round round_index[k]; the two algorithms index rounds differently, so the
// explicit round numbers are what consumers should align on. Message logs
// list directed edges in edge-list order, both directions per edge, so logs
// from different engines on the same instance align positionally.
struct RunTrace {
    std::string algorithm;  // "dwls" or "gbp"
    std::uint64_t instance_id = 0;

    std::vector<int> round_index;
    std::vector<std::vector<Eigen::VectorXd>> estimates;   // [snapshot][node]
    std::vector<std::vector<Eigen::MatrixXd>> precisions;  // [snapshot][node], details only

    std::vector<std::vector<DwlsMessageLog>> dwls_messages;  // details only
    std::vector<std::vector<GbpMessageLog>> gbp_messages;

    StopReason stop = StopReason::max_rounds;
    int rounds_executed = 0;
    std::optional<Breakdown> breakdown;

    int snapshots() const { return static_cast<int>(round_index.size()); }
};

}  // namespace netwls

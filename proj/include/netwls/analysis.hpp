#pragma once

#include <limits>
#include <string>
#include <vector>

#include "netwls/oracle.hpp"
#include "netwls/trace.hpp"

namespace netwls {

// Per-round error summary of one run against the centralized solution.
// y1 is log10 of the mean squared estimation error over nodes; for
// vector-valued nodes the square is the squared Euclidean norm per node
// (extended_metric flags when that extension is in play). Rounds whose error
// sits at the machine floor are flagged exact and carry y1 = -infinity when
// the error is exactly zero.
struct ErrorTrace {
    std::vector<int> round_index;
    std::vector<double> y1;
    std::vector<bool> exact;
    std::vector<std::vector<double>> node_abs_error;  // [snapshot][node], Euclidean
    std::vector<double> max_abs_error;                // per snapshot, max over nodes
    std::vector<int> first_hit;                       // per node; -1 when never reached
    double hit_tol = 0.0;                             // absolute threshold used for first_hit
    double truth_norm = 0.0;
    bool extended_metric = false;
};

ErrorTrace error_trace(const RunTrace& trace, const GlobalSolution& truth,
                       double hit_tol = 1e-9);

// Outcome of comparing the two algorithms' traces round by round. Gaps are
// normalized by 1 + the larger magnitude. Precisions are compared only when
// both traces carry them (detail logging enabled).
struct EquivalenceReport {
    bool pass = false;
    double tol = 0.0;
    int rounds_compared = 0;
    std::vector<double> estimate_gap;   // per compared snapshot
    std::vector<double> precision_gap;
    double max_estimate_gap = 0.0;
    double max_precision_gap = 0.0;
    int worst_round = -1;  // round number (first algorithm's indexing) of the largest gap
    bool precisions_checked = false;
};

EquivalenceReport equivalence_audit(const RunTrace& dwls_trace, const RunTrace& gbp_trace,
                                    double tol = 1e-10);

// Fit of the geometric error envelope: the smallest constant C such that
// max-error(k) <= C * rho^k at every recorded round, plus the empirical
// asymptotic rate over the last half of the run.
struct EnvelopeReport {
    bool applicable = false;
    std::string note;
    double rho = std::numeric_limits<double>::quiet_NaN();
    double envelope_constant = std::numeric_limits<double>::quiet_NaN();
    double rate_hat = std::numeric_limits<double>::quiet_NaN();
    bool rate_ok = false;      // rate_hat <= rho + slack
    bool envelope_ok = false;  // fitted envelope holds at every round (sanity)
    int fit_round = -1;        // round where the envelope is tight
};

EnvelopeReport rate_envelope(const ErrorTrace& err, const RateBound& bound,
                             double slack = 0.05);

}  // namespace netwls

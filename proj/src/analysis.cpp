#include "netwls/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "netwls/errors.hpp"

namespace netwls {

ErrorTrace error_trace(const RunTrace& trace, const GlobalSolution& truth, double hit_tol) {
    if (!(hit_tol > 0.0)) throw InputError("hit tolerance must be positive");
    const int n = static_cast<int>(truth.x_star.size());
    for (const auto& round : trace.estimates) {
        if (static_cast<int>(round.size()) != n)
            throw InputError("trace and solution disagree on the node count");
        for (int k = 0; k < n; ++k)
            if (round[k].size() != truth.x_star[k].size())
                throw InputError("trace and solution disagree on node dimensions");
    }

    ErrorTrace err;
    err.round_index = trace.round_index;
    err.truth_norm = truth.norm();
    err.hit_tol = hit_tol * (1.0 + err.truth_norm);
    for (int k = 0; k < n; ++k)
        if (truth.x_star[k].size() > 1) err.extended_metric = true;
    err.first_hit.assign(n, -1);

    const double exact_floor = 1e-14 * (1.0 + err.truth_norm);
    for (int s = 0; s < trace.snapshots(); ++s) {
        std::vector<double> node_err(n);
        double sse = 0.0;
        double worst = 0.0;
        for (int k = 0; k < n; ++k) {
            const double e = (trace.estimates[s][k] - truth.x_star[k]).norm();
            node_err[k] = e;
            sse += e * e;
            worst = std::max(worst, e);
            if (err.first_hit[k] < 0 && e <= err.hit_tol) err.first_hit[k] = trace.round_index[s];
        }
        const double mse = sse / n;
        err.node_abs_error.push_back(std::move(node_err));
        err.max_abs_error.push_back(worst);
        err.y1.push_back(mse > 0.0 ? std::log10(mse)
                                   : -std::numeric_limits<double>::infinity());
        err.exact.push_back(std::sqrt(mse) <= exact_floor);
    }
    return err;
}

namespace {

double normalized_gap(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double mag = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
    return (a - b).cwiseAbs().maxCoeff() / (1.0 + mag);
}

double normalized_gap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const double mag = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
    return (a - b).cwiseAbs().maxCoeff() / (1.0 + mag);
}

}  // namespace

EquivalenceReport equivalence_audit(const RunTrace& dwls_trace, const RunTrace& gbp_trace,
                                    double tol) {
    if (dwls_trace.algorithm != "dwls" || gbp_trace.algorithm != "gbp")
        throw InputError("equivalence audit expects one trace per algorithm, in that order");
    if (dwls_trace.instance_id != gbp_trace.instance_id)
        throw InputError("traces come from different instances");

    EquivalenceReport rep;
    rep.tol = tol;
    const int common = std::min(dwls_trace.snapshots(), gbp_trace.snapshots());
    rep.precisions_checked = static_cast<int>(dwls_trace.precisions.size()) >= common &&
                             static_cast<int>(gbp_trace.precisions.size()) >= common;

    for (int k = 0; k < common; ++k) {
        // Snapshot k of the first trace is round k; the same position in the
        // second trace is round k+1, which is the pairing the round shift
        // between the algorithms calls for.
        if (gbp_trace.round_index[k] != dwls_trace.round_index[k] + 1)
            throw InputError("trace rounds are not aligned (expected a one-round shift)");

        const int n = static_cast<int>(dwls_trace.estimates[k].size());
        double gap = 0.0;
        for (int i = 0; i < n; ++i)
            gap = std::max(gap,
                           normalized_gap(dwls_trace.estimates[k][i], gbp_trace.estimates[k][i]));
        rep.estimate_gap.push_back(gap);
        if (gap > rep.max_estimate_gap) {
            rep.max_estimate_gap = gap;
            rep.worst_round = dwls_trace.round_index[k];
        }

        if (rep.precisions_checked) {
            double pgap = 0.0;
            for (int i = 0; i < n; ++i)
                pgap = std::max(pgap, normalized_gap(dwls_trace.precisions[k][i],
                                                     gbp_trace.precisions[k][i]));
            rep.precision_gap.push_back(pgap);
            rep.max_precision_gap = std::max(rep.max_precision_gap, pgap);
        }
    }
    rep.rounds_compared = common;
    rep.pass = common >= 1 && rep.max_estimate_gap <= tol &&
               (!rep.precisions_checked || rep.max_precision_gap <= tol);
    return rep;
}

EnvelopeReport rate_envelope(const ErrorTrace& err, const RateBound& bound, double slack) {
    EnvelopeReport rep;
    rep.rho = bound.spectral_radius;
    if (!(rep.rho < 1.0)) {
        rep.note = "bound inapplicable: spectral radius is not below one";
        return rep;
    }
    const int count = static_cast<int>(err.max_abs_error.size());
    if (count < 2) {
        rep.note = "bound inapplicable: fewer than two recorded rounds";
        return rep;
    }
    rep.applicable = true;

    double c = 0.0;
    int fit_round = -1;
    for (int k = 0; k < count; ++k) {
        const double e = err.max_abs_error[k];
        if (e <= 0.0) continue;
        const double ratio = e / std::pow(rep.rho, err.round_index[k]);
        if (ratio > c) {
            c = ratio;
            fit_round = err.round_index[k];
        }
    }
    rep.envelope_constant = c;
    rep.fit_round = fit_round;

    rep.envelope_ok = true;
    for (int k = 0; k < count; ++k)
        if (err.max_abs_error[k] >
            c * std::pow(rep.rho, err.round_index[k]) * (1.0 + 1e-12))
            rep.envelope_ok = false;

    // Empirical asymptotic rate: geometric mean of the successive max-error
    // ratios over the last half of the run, which telescopes to a single
    // end-over-start ratio.
    const int half = count / 2;
    const double e0 = err.max_abs_error[half];
    const double e1 = err.max_abs_error[count - 1];
    const int span = err.round_index[count - 1] - err.round_index[half];
    if (e1 <= 0.0 || e0 <= 0.0) {
        rep.rate_hat = 0.0;
    } else if (span <= 0) {
        rep.note = "rate estimate unavailable: degenerate round window";
        rep.rate_hat = std::numeric_limits<double>::quiet_NaN();
    } else {
        rep.rate_hat = std::pow(e1 / e0, 1.0 / span);
    }
    rep.rate_ok = rep.rate_hat <= rep.rho + slack;
    return rep;
}

}  // namespace netwls

#include "netwls/oracle.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <string>

#include "netwls/errors.hpp"

namespace netwls {

namespace {

void require_scalar(const InformationSystem& info, const char* op) {
    if (!info.all_scalar())
        throw UnsupportedCase(std::string(op) +
                              " is defined for scalar node variables only; "
                              "this instance has a vector-valued node");
}

double condition_number(const Eigen::MatrixXd& psi) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(psi, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd ev = es.eigenvalues().cwiseAbs();
    const double lo = ev.minCoeff();
    const double hi = ev.maxCoeff();
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

}  // namespace

Eigen::VectorXd GlobalSolution::stacked() const {
    int total = 0;
    for (const auto& x : x_star) total += static_cast<int>(x.size());
    Eigen::VectorXd v(total);
    int at = 0;
    for (const auto& x : x_star) {
        v.segment(at, x.size()) = x;
        at += static_cast<int>(x.size());
    }
    return v;
}

double GlobalSolution::norm() const { return stacked().norm(); }

GlobalSolution solve_global(const InformationSystem& info) {
    const Eigen::MatrixXd psi = info.dense_prec();
    const Eigen::VectorXd alpha = info.dense_info();
    const int total = info.total_dim();

    // Symmetric-definite path first; general solve as fallback for vector
    // instances where definiteness is not guaranteed.
    Eigen::VectorXd x;
    Eigen::LLT<Eigen::MatrixXd> llt(psi);
    if (llt.info() == Eigen::Success) {
        x = llt.solve(alpha);
    } else {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(psi);
        if (!lu.isInvertible())
            throw NumericError(
                "information matrix is singular: the system is unidentifiable "
                "(requires a connected graph with at least one self measurement)");
        x = lu.solve(alpha);
    }

    const double residual = (psi * x - alpha).norm();
    if (residual > 1e-10 * alpha.norm() && !(alpha.norm() == 0.0 && residual == 0.0))
        throw NumericError(
            "global solve residual too large (" + std::to_string(residual) +
            "): information matrix is numerically singular; the system is "
            "unidentifiable (requires a connected graph with at least one self measurement)");

    GlobalSolution sol;
    sol.psi_condition = condition_number(psi);
    sol.x_star.resize(info.n);
    for (int k = 0; k < info.n; ++k) sol.x_star[k] = x.segment(info.offsets[k], info.dims[k]);
    (void)total;
    return sol;
}

Eigen::MatrixXd comparison_matrix(const InformationSystem& info) {
    require_scalar(info, "comparison matrix");
    Eigen::MatrixXd bar = Eigen::MatrixXd::Zero(info.n, info.n);
    for (int k = 0; k < info.n; ++k) bar(k, k) = std::abs(info.prec_diag[k](0, 0));
    for (const auto& e : info.edges) {
        bar(e.i - 1, e.j - 1) = -std::abs(e.coupling_ij(0, 0));
        bar(e.j - 1, e.i - 1) = -std::abs(e.coupling_ji(0, 0));
    }
    return bar;
}

DominanceCertificate dominance_certificate(const InformationSystem& info) {
    const Eigen::MatrixXd bar = comparison_matrix(info);

    DominanceCertificate cert;
    Eigen::LLT<Eigen::MatrixXd> llt(bar);
    cert.is_pd = (llt.info() == Eigen::Success);
    if (!cert.is_pd) return cert;

    // For a positive definite matrix with this sign pattern the inverse is
    // entrywise nonnegative, so d = bar^{-1} * ones is positive and the
    // column scaling by d yields strict row dominance.
    const Eigen::VectorXd d = llt.solve(Eigen::VectorXd::Ones(info.n));
    if ((d.array() <= 0.0).any()) return cert;  // keep is_pd, no usable witness

    double margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < info.n; ++i) {
        double row = std::abs(bar(i, i)) * d(i);
        for (int j = 0; j < info.n; ++j)
            if (j != i) row -= std::abs(bar(i, j)) * d(j);
        margin = std::min(margin, row);
    }
    cert.scaling = d;
    cert.margin = margin;
    return cert;
}

RateBound rate_bound(const InformationSystem& info) {
    require_scalar(info, "rate bound");
    for (int k = 0; k < info.n; ++k)
        if (info.prec_diag[k](0, 0) <= 0.0)
            throw NumericError("node " + std::to_string(k + 1) +
                               " has zero diagonal precision (no measurements touch it)");

    RateBound rb;
    rb.jacobi_abs = Eigen::MatrixXd::Zero(info.n, info.n);
    for (const auto& e : info.edges) {
        rb.jacobi_abs(e.i - 1, e.j - 1) =
            std::abs(e.coupling_ij(0, 0)) / info.prec_diag[e.i - 1](0, 0);
        rb.jacobi_abs(e.j - 1, e.i - 1) =
            std::abs(e.coupling_ji(0, 0)) / info.prec_diag[e.j - 1](0, 0);
    }

    // Power iteration on I + M: for a nonnegative M the spectral radius just
    // shifts by one, and the shift keeps the iteration convergent on
    // bipartite sparsity patterns where plain power iteration cycles.
    const int n = info.n;
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
    double estimate = 0.0;
    double previous = -1.0;
    for (int iter = 0; iter < 10000; ++iter) {
        Eigen::VectorXd w = v + rb.jacobi_abs * v;
        const double norm = w.norm();
        if (norm == 0.0) {
            estimate = 0.0;
            break;
        }
        estimate = norm;
        v = w / norm;
        if (std::abs(estimate - previous) < 1e-12) break;
        previous = estimate;
    }
    rb.spectral_radius = std::max(0.0, estimate - 1.0);
    return rb;
}

}  // namespace netwls

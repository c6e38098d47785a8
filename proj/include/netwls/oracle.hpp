#pragma once

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <vector>

#include "netwls/assembly.hpp"

namespace netwls {

/// Centralized WLS solution, split back into per-node components.
struct GlobalSolution {
    std::vector<Eigen::VectorXd> x_star;
    double psi_condition = std::numeric_limits<double>::quiet_NaN();

    Eigen::VectorXd stacked() const;
    double norm() const;  // Euclidean norm of the stacked solution
};

/// Result of the generalized-diagonal-dominance test on the comparison
/// matrix. When `is_pd`, `scaling` holds a positive vector d such that
/// scaling the columns by d makes the matrix strictly diagonally dominant;
/// `margin` is the smallest row-wise dominance surplus.
struct DominanceCertificate {
    bool is_pd = false;
    std::optional<Eigen::VectorXd> scaling;
    double margin = std::numeric_limits<double>::quiet_NaN();
};

/// Convergence-rate quantities: the element-wise absolute Jacobi iteration
/// matrix, its spectral radius, and (once fitted against a run) the envelope
/// constant.
struct RateBound {
    Eigen::MatrixXd jacobi_abs;  // zero diagonal, |coupling| / diagonal off it
    double spectral_radius = 0.0;
    double envelope_constant = std::numeric_limits<double>::quiet_NaN();  // fitted later
};

/// Solves the global WLS problem from the information form. Throws
/// NumericError when the precision matrix is singular (unidentifiable
/// system: needs a connected graph with at least one self measurement).
GlobalSolution solve_global(const InformationSystem& info);

/// Comparison matrix: absolute values on the diagonal, negated absolute
/// values off it. Scalar node variables only.
Eigen::MatrixXd comparison_matrix(const InformationSystem& info);

/// Tests positive definiteness of the comparison matrix and, when it holds,
/// constructs the diagonal scaling witness by solving against the all-ones
/// vector. Scalar node variables only.
DominanceCertificate dominance_certificate(const InformationSystem& info);

/// Builds the absolute Jacobi iteration matrix and estimates its spectral
/// radius by power iteration. Scalar node variables only; every diagonal
/// precision must be positive.
RateBound rate_bound(const InformationSystem& info);

}  // namespace netwls

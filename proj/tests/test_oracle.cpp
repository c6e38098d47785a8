#include "doctest.h"

#include <Eigen/Dense>

#include <cmath>

#include "netwls/assembly.hpp"
#include "netwls/errors.hpp"
#include "netwls/oracle.hpp"
#include "netwls/scenario.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

using namespace netwls;
using testutil::mat1;
using testutil::vec1;

TEST_CASE("two-node example solves to (0, -2)") {
    InformationSystem sys = assemble_information(testutil::two_node_graph());
    GlobalSolution sol = solve_global(sys);

    REQUIRE(sol.x_star.size() == 2);
    CHECK(std::abs(sol.x_star[0](0)) < 1e-14);
    CHECK(sol.x_star[1](0) == doctest::Approx(-2.0).epsilon(1e-14));
    CHECK(sol.norm() == doctest::Approx(2.0).epsilon(1e-14));

    // Condition number of [[2,-1],[-1,1]]: (3+sqrt 5)/(3-sqrt 5).
    const double expected = (3.0 + std::sqrt(5.0)) / (3.0 - std::sqrt(5.0));
    CHECK(sol.psi_condition == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("a single anchored node returns its own measurement") {
    std::vector<NodeSpec> nodes{{1, 1}};
    std::vector<SelfMeasurement> selfs{{1, mat1(1.0), mat1(1.0), vec1(5.0)}};
    InformationSystem sys = assemble_information(MeasurementGraph(nodes, selfs, {}));
    GlobalSolution sol = solve_global(sys);
    CHECK(sol.x_star[0](0) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(sol.psi_condition == doctest::Approx(1.0));
}

TEST_CASE("global solve matches whitened least squares on mixed instances") {
    for (int k = 0; k < 12; ++k) {
        Scenario sc = generate(refimpl::mixed_spec(k));
        GlobalSolution sol = solve_global(assemble_information(sc.graph));
        const Eigen::VectorXd ref = refimpl::stacked_lsq(sc.graph);
        const double gap = (sol.stacked() - ref).norm();
        CHECK(gap <= 1e-10 * (1.0 + ref.norm()));
    }
}

TEST_CASE("an unanchored system is reported as unidentifiable") {
    InformationSystem sys = assemble_information(testutil::no_self_pair());
    CHECK(testutil::contains(
        testutil::thrown<NumericError>([&] { solve_global(sys); }), "unidentifiable"));
}

TEST_CASE("comparison matrix keeps diagonals and flips off-diagonal signs") {
    InformationSystem sys = assemble_information(testutil::two_node_graph());
    Eigen::MatrixXd expected(2, 2);
    expected << 2.0, -1.0, -1.0, 1.0;
    CHECK((comparison_matrix(sys) - expected).cwiseAbs().maxCoeff() < 1e-14);

    // Positive coupling gets negated just the same.
    Eigen::MatrixXd psi(2, 2);
    psi << 2.0, 1.0, 1.0, 1.0;
    InformationSystem flipped = testutil::scalar_system(psi, Eigen::Vector2d(2.0, -2.0));
    CHECK((comparison_matrix(flipped) - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dominance certificate on the two-node example") {
    InformationSystem sys = assemble_information(testutil::two_node_graph());
    DominanceCertificate cert = dominance_certificate(sys);
    REQUIRE(cert.is_pd);
    REQUIRE(cert.scaling.has_value());
    CHECK((*cert.scaling)(0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK((*cert.scaling)(1) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(cert.margin == doctest::Approx(1.0).epsilon(1e-12));

    // The witness makes every row strictly dominant by exactly the margin's
    // worth: recheck the inequality directly.
    const Eigen::MatrixXd bar = comparison_matrix(sys);
    for (int i = 0; i < 2; ++i) {
        double row = std::abs(bar(i, i)) * (*cert.scaling)(i);
        for (int j = 0; j < 2; ++j)
            if (j != i) row -= std::abs(bar(i, j)) * (*cert.scaling)(j);
        CHECK(row >= cert.margin - 1e-12);
    }
}

TEST_CASE("a decoupled system certifies trivially") {
    InformationSystem sys =
        testutil::scalar_system(Eigen::MatrixXd::Identity(3, 3), Eigen::Vector3d(1, 2, 3));
    DominanceCertificate cert = dominance_certificate(sys);
    REQUIRE(cert.is_pd);
    CHECK((*cert.scaling - Eigen::Vector3d::Ones()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(cert.margin == doctest::Approx(1.0));
}

TEST_CASE("a strongly coupled triangle fails the dominance test") {
    DominanceCertificate cert = dominance_certificate(testutil::frustrated_triangle());
    CHECK_FALSE(cert.is_pd);
    CHECK_FALSE(cert.scaling.has_value());
}

TEST_CASE("rate bound on the two-node example") {
    InformationSystem sys = assemble_information(testutil::two_node_graph());
    RateBound rb = rate_bound(sys);

    Eigen::MatrixXd expected(2, 2);
    expected << 0.0, 0.5, 1.0, 0.0;
    CHECK((rb.jacobi_abs - expected).cwiseAbs().maxCoeff() < 1e-14);
    // Known eigenvalue 1/sqrt(2); the bipartite sparsity pattern is exactly
    // the case a naive power iteration mishandles.
    CHECK(rb.spectral_radius == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-10));
}

TEST_CASE("rate bound of a decoupled system is zero") {
    InformationSystem sys =
        testutil::scalar_system(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(0, 0));
    CHECK(rate_bound(sys).spectral_radius == doctest::Approx(0.0));
}

TEST_CASE("rate bound agrees with a dense eigensolver on random instances") {
    for (int k = 0; k < 20; ++k) {
        ScenarioSpec spec;
        spec.topology = Topology::random_connected;
        spec.n = 6 + (k % 9);
        spec.seed = 400 + static_cast<std::uint64_t>(k);
        spec.self_density = 0.9;
        Scenario sc = generate(spec);
        InformationSystem sys = assemble_information(sc.graph);
        RateBound rb = rate_bound(sys);
        const double ref = refimpl::spectral_radius(rb.jacobi_abs);
        CHECK(rb.spectral_radius == doctest::Approx(ref).epsilon(1e-6));
    }
}

TEST_CASE("scalar-only analyses reject vector instances") {
    InformationSystem sys = assemble_information(testutil::vector_pair_graph());
    CHECK_THROWS_AS(comparison_matrix(sys), UnsupportedCase);
    CHECK_THROWS_AS(dominance_certificate(sys), UnsupportedCase);
    CHECK_THROWS_AS(rate_bound(sys), UnsupportedCase);
}

TEST_CASE("rate bound refuses a node no measurement touches") {
    Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(2, 2);
    psi(1, 1) = 1.0;
    InformationSystem sys = testutil::scalar_system(psi, Eigen::Vector2d(0, 0));
    CHECK(testutil::contains(testutil::thrown<NumericError>([&] { rate_bound(sys); }),
                             "node 1"));
}

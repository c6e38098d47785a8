#pragma once

// Shared fixtures for the test suites: tiny hand-checkable graphs, a builder
// for information systems given directly in dense form, and a scratch
// directory that cleans up after itself.

#include <Eigen/Dense>

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "netwls/assembly.hpp"
#include "netwls/graph.hpp"

namespace testutil {

inline Eigen::MatrixXd mat1(double v) {
    Eigen::MatrixXd m(1, 1);
    m(0, 0) = v;
    return m;
}

inline Eigen::VectorXd vec1(double v) {
    Eigen::VectorXd x(1);
    x(0) = v;
    return x;
}

inline bool contains(const std::string& s, const std::string& sub) {
    return s.find(sub) != std::string::npos;
}

// Runs fn expecting it to throw E; returns the exception message so the test
// can check for context without depending on the full wording.
template <class E, class F>
std::string thrown(F&& fn) {
    try {
        fn();
    } catch (const E& e) {
        return e.what();
    } catch (...) {
        return "<wrong exception type>";
    }
    return "<no exception>";
}

// Two scalar nodes. Node 1 observes itself (A=1, R=1, z=0); the edge observes
// the difference x1 - x2 (Bi=1, Bj=-1, R=1, z=2). The information form is
// prec = [[2,-1],[-1,1]], info = (2,-2), and the exact solution is (0,-2).
inline netwls::MeasurementGraph two_node_graph() {
    std::vector<netwls::NodeSpec> nodes{{1, 1}, {2, 1}};
    std::vector<netwls::SelfMeasurement> selfs;
    selfs.push_back({1, mat1(1.0), mat1(1.0), vec1(0.0)});
    std::vector<netwls::EdgeMeasurement> edges;
    edges.push_back({1, 2, mat1(1.0), mat1(-1.0), mat1(1.0), vec1(2.0)});
    return {std::move(nodes), std::move(selfs), std::move(edges)};
}

// Two scalar nodes joined by one edge and no self measurement anywhere. The
// stacked information matrix is rank one, so the global problem is
// unidentifiable, yet both per-node diagonal blocks are positive: the engines
// start fine and hit their breakdown rule a round in.
inline netwls::MeasurementGraph no_self_pair() {
    std::vector<netwls::NodeSpec> nodes{{1, 1}, {2, 1}};
    std::vector<netwls::EdgeMeasurement> edges;
    edges.push_back({1, 2, mat1(1.0), mat1(2.0), mat1(1.0), vec1(1.0)});
    return {std::move(nodes), {}, std::move(edges)};
}

// Mixed-dimension pair: node 1 carries a 2-vector, node 2 a scalar, one edge.
// A tree, so the engines are exact after one round.
inline netwls::MeasurementGraph vector_pair_graph() {
    std::vector<netwls::NodeSpec> nodes{{1, 2}, {2, 1}};

    std::vector<netwls::SelfMeasurement> selfs;
    netwls::SelfMeasurement s1;
    s1.node = 1;
    s1.A = Eigen::MatrixXd::Identity(2, 2);
    s1.R = Eigen::Vector2d(1.0, 2.0).asDiagonal();
    s1.z = Eigen::Vector2d(1.0, 2.0);
    selfs.push_back(std::move(s1));
    selfs.push_back({2, mat1(1.0), mat1(1.0), vec1(-1.0)});

    std::vector<netwls::EdgeMeasurement> edges;
    netwls::EdgeMeasurement e;
    e.i = 1;
    e.j = 2;
    e.Bi = Eigen::MatrixXd(1, 2);
    e.Bi << 1.0, 1.0;
    e.Bj = mat1(-1.0);
    e.R = mat1(0.5);
    e.z = vec1(0.3);
    edges.push_back(std::move(e));
    return {std::move(nodes), std::move(selfs), std::move(edges)};
}

// Scalar chain 1-2-3 where only the end nodes observe themselves; the middle
// node's diagonal block comes entirely from its two edges.
inline netwls::MeasurementGraph anchored_chain3() {
    std::vector<netwls::NodeSpec> nodes{{1, 1}, {2, 1}, {3, 1}};
    std::vector<netwls::SelfMeasurement> selfs;
    selfs.push_back({1, mat1(1.0), mat1(1.0), vec1(0.5)});
    selfs.push_back({3, mat1(1.0), mat1(1.0), vec1(-0.5)});
    std::vector<netwls::EdgeMeasurement> edges;
    edges.push_back({1, 2, mat1(1.0), mat1(-1.0), mat1(1.0), vec1(1.0)});
    edges.push_back({2, 3, mat1(1.0), mat1(-1.0), mat1(1.0), vec1(1.0)});
    return {std::move(nodes), std::move(selfs), std::move(edges)};
}

// Dense scalar system given directly as (psi, alpha). Off-diagonal entries
// become edges whose per-endpoint contributions are |psi_ij| on both sides,
// which keeps row sums consistent with how a real measurement would split.
inline netwls::InformationSystem scalar_system(const Eigen::MatrixXd& psi,
                                               const Eigen::VectorXd& alpha) {
    netwls::InformationSystem sys;
    sys.n = static_cast<int>(psi.rows());
    sys.dims.assign(sys.n, 1);
    for (int k = 0; k < sys.n; ++k) {
        sys.info.push_back(vec1(alpha(k)));
        sys.prec_diag.push_back(mat1(psi(k, k)));
    }
    for (int i = 0; i < sys.n; ++i) {
        for (int j = i + 1; j < sys.n; ++j) {
            if (psi(i, j) == 0.0) continue;
            netwls::InformationSystem::EdgeBlocks e;
            e.i = i + 1;
            e.j = j + 1;
            e.coupling_ij = mat1(psi(i, j));
            e.coupling_ji = mat1(psi(j, i));
            e.edge_prec_i = mat1(std::abs(psi(i, j)));
            e.edge_prec_j = mat1(std::abs(psi(i, j)));
            sys.edges.push_back(std::move(e));
        }
    }
    sys.finalize();
    return sys;
}

// Strongly coupled scalar triangle: psi is positive definite (eigenvalues
// 2.6, 0.2, 0.2) but the per-node elimination of the first round already
// drives the local matrix negative, a textbook loopy failure.
inline netwls::InformationSystem frustrated_triangle() {
    Eigen::MatrixXd psi(3, 3);
    psi << 1.0, 0.8, 0.8, 0.8, 1.0, 0.8, 0.8, 0.8, 1.0;
    return scalar_system(psi, Eigen::Vector3d(1.0, 1.0, 1.0));
}

class TempDir {
public:
    TempDir() {
        static std::atomic<long> counter{0};
        const long stamp =
            std::chrono::steady_clock::now().time_since_epoch().count() % 1000000000L;
        path_ = std::filesystem::temp_directory_path() /
                ("netwls-test-" + std::to_string(stamp) + "-" + std::to_string(++counter));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline int line_count(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

}  // namespace testutil

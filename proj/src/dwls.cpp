#include "netwls/dwls.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

#include "netwls/errors.hpp"

namespace netwls {

namespace {

// Every block inverted by this engine goes through this factorization. A
// block counts as usable only when it is numerically positive definite:
// smallest eigenvalue above 1e-12 times max(1, largest magnitude). That
// covers singular blocks and, in the scalar case, nonpositive ones.
struct BlockFactor {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    bool ok = false;

    explicit BlockFactor(const Eigen::MatrixXd& m) : es(m) {
        if (es.info() != Eigen::Success) return;
        const Eigen::VectorXd& ev = es.eigenvalues();
        const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
        ok = ev.minCoeff() > 1e-12 * scale;
    }
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
        return es.eigenvectors() *
               (es.eigenvalues().cwiseInverse().asDiagonal() * (es.eigenvectors().transpose() * b));
    }
    Eigen::MatrixXd inverse() const {
        return es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
               es.eigenvectors().transpose();
    }
};

}  // namespace

DwlsEngine::DwlsEngine(const InformationSystem& info) : n_(info.n) {
    const int slots = 2 * static_cast<int>(info.edges.size());
    prev_.resize(slots);
    next_.resize(slots);
    slot_dir_.resize(slots);
    for (int e = 0; e < static_cast<int>(info.edges.size()); ++e) {
        slot_dir_[2 * e] = {info.edges[e].i, info.edges[e].j};
        slot_dir_[2 * e + 1] = {info.edges[e].j, info.edges[e].i};
    }

    nodes_.resize(n_);
    for (int k = 0; k < n_; ++k) {
        const int id = k + 1;
        Node& node = nodes_[k];
        node.dim = info.dims[k];
        node.prec_diag = info.prec_diag[k];
        node.info = info.info[k];
        for (const auto& [nbr, e] : info.adjacency[k]) {
            Inbound link;
            link.nbr = nbr;
            if (info.edges[e].i == id) {
                link.slot_out = 2 * e;
                link.slot_in = 2 * e + 1;
            } else {
                link.slot_out = 2 * e + 1;
                link.slot_in = 2 * e;
            }
            link.coupling = info.coupling(nbr, id);
            node.in.push_back(std::move(link));
        }

        BlockFactor f(node.prec_diag);
        if (!f.ok)
            throw NumericError("locally unidentifiable node " + std::to_string(id) +
                               ": its own information block is singular");
        node.prec_hat = node.prec_diag;
        node.info_hat = node.info;
        node.x_hat = f.solve(node.info);
        const Eigen::MatrixXd cov0 = f.inverse();
        for (const auto& link : node.in) {
            prev_[link.slot_out].cov = cov0;
            prev_[link.slot_out].mean = node.x_hat;
        }
    }
}

bool DwlsEngine::step() {
    const int t = round_ + 1;
    std::vector<Eigen::MatrixXd> new_prec(n_);
    std::vector<Eigen::VectorXd> new_info(n_), new_x(n_);

    for (int k = 0; k < n_; ++k) {
        const Node& node = nodes_[k];
        Eigen::MatrixXd prec_hat = node.prec_diag;
        Eigen::VectorXd info_hat = node.info;
        for (const auto& link : node.in) {
            const Message& m = prev_[link.slot_in];
            prec_hat.noalias() -= link.coupling.transpose() * m.cov * link.coupling;
            info_hat.noalias() -= link.coupling.transpose() * m.mean;
        }

        BlockFactor f(prec_hat);
        if (!f.ok) {
            breakdown_ = Breakdown{t, k + 1, 0,
                                   "local information matrix is not numerically positive definite"};
            return false;
        }
        new_prec[k] = prec_hat;
        new_info[k] = info_hat;
        new_x[k] = f.solve(info_hat);

        // Outgoing messages: restore the recipient's own contribution instead
        // of re-summing the other neighbors.
        for (const auto& link : node.in) {
            const Message& back = prev_[link.slot_in];
            Eigen::MatrixXd restored = prec_hat;
            restored.noalias() += link.coupling.transpose() * back.cov * link.coupling;
            BlockFactor g(restored);
            if (!g.ok) {
                breakdown_ = Breakdown{t, k + 1, link.nbr,
                                       "message covariance update is not numerically positive definite"};
                return false;
            }
            next_[link.slot_out].cov = g.inverse();
            next_[link.slot_out].mean =
                next_[link.slot_out].cov * (info_hat + link.coupling.transpose() * back.mean);
        }
    }

    for (int k = 0; k < n_; ++k) {
        nodes_[k].prec_hat = std::move(new_prec[k]);
        nodes_[k].info_hat = std::move(new_info[k]);
        nodes_[k].x_hat = std::move(new_x[k]);
    }
    std::swap(prev_, next_);
    round_ = t;
    return true;
}

const Eigen::VectorXd& DwlsEngine::estimate(int id) const { return nodes_.at(id - 1).x_hat; }
const Eigen::MatrixXd& DwlsEngine::precision(int id) const { return nodes_.at(id - 1).prec_hat; }

const DwlsEngine::Message& DwlsEngine::message(int from, int to) const {
    for (int s = 0; s < static_cast<int>(slot_dir_.size()); ++s)
        if (slot_dir_[s] == std::pair<int, int>{from, to}) return prev_[s];
    throw InputError("no directed edge " + std::to_string(from) + "->" + std::to_string(to));
}

std::vector<int> DwlsEngine::footprint(int id) const {
    std::vector<int> out;
    for (const auto& link : nodes_.at(id - 1).in) out.push_back(link.nbr);
    return out;
}

RunTrace run_dwls(const InformationSystem& info, int max_rounds, double tol,
                  const RunOptions& opts) {
    if (max_rounds < 1) throw InputError("max_rounds must be at least 1");
    if (!(tol > 0.0)) throw InputError("tolerance must be positive");

    DwlsEngine engine(info);
    RunTrace trace;
    trace.algorithm = "dwls";
    trace.instance_id = info.fingerprint;

    auto snapshot = [&] {
        trace.round_index.push_back(engine.round());
        std::vector<Eigen::VectorXd> est(info.n);
        for (int id = 1; id <= info.n; ++id) est[id - 1] = engine.estimate(id);
        trace.estimates.push_back(std::move(est));
        if (opts.log_details) {
            std::vector<Eigen::MatrixXd> prec(info.n);
            for (int id = 1; id <= info.n; ++id) prec[id - 1] = engine.precision(id);
            trace.precisions.push_back(std::move(prec));
            std::vector<DwlsMessageLog> msgs;
            for (const auto& e : info.edges) {
                const auto& fwd = engine.message(e.i, e.j);
                const auto& bwd = engine.message(e.j, e.i);
                msgs.push_back({e.i, e.j, fwd.cov, fwd.mean});
                msgs.push_back({e.j, e.i, bwd.cov, bwd.mean});
            }
            trace.dwls_messages.push_back(std::move(msgs));
        }
    };

    snapshot();  // round 0: initialization state
    trace.stop = StopReason::max_rounds;
    for (int t = 1; t <= max_rounds; ++t) {
        std::vector<Eigen::VectorXd> before(info.n);
        for (int id = 1; id <= info.n; ++id) before[id - 1] = engine.estimate(id);

        if (!engine.step()) {
            trace.stop = StopReason::breakdown;
            trace.breakdown = engine.failure();
            break;
        }
        snapshot();

        double delta = 0.0;
        for (int id = 1; id <= info.n; ++id)
            delta = std::max(delta,
                             (engine.estimate(id) - before[id - 1]).lpNorm<Eigen::Infinity>());
        if (delta < tol) {
            trace.stop = StopReason::converged;
            break;
        }
    }
    trace.rounds_executed = engine.round();
    return trace;
}

}  // namespace netwls

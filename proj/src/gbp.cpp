#include "netwls/gbp.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

#include "netwls/errors.hpp"

namespace netwls {

namespace {

constexpr double kPivotFloor = 1e-12;

// Spectral check + inverse for the aggregates this engine inverts. Usable
// means numerically positive definite under the same pivot floor the other
// engine applies, so both iterations fail on the same inputs.
bool usable(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& es) {
    if (es.info() != Eigen::Success) return false;
    const Eigen::VectorXd& ev = es.eigenvalues();
    return ev.minCoeff() > kPivotFloor * std::max(1.0, ev.cwiseAbs().maxCoeff());
}

Eigen::MatrixXd inverse_of(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& es) {
    return es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
           es.eigenvectors().transpose();
}

}  // namespace

GbpEngine::GbpEngine(const InformationSystem& info) : n_(info.n) {
    const int slots = 2 * static_cast<int>(info.edges.size());
    prev_.resize(slots);
    next_.resize(slots);
    excl_prec_.resize(slots);
    excl_wmean_.resize(slots);
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
        node.winfo = info.info[k];
        // The node-local precision is the assembled diagonal block with every
        // incident edge term removed; for a node without a self measurement
        // this is exactly zero, which is fine — it is only ever added, never
        // inverted on its own.
        node.prec_self = info.prec_diag[k];
        for (const auto& [nbr, e] : info.adjacency[k]) {
            Link link;
            link.nbr = nbr;
            if (info.edges[e].i == id) {
                link.slot_out = 2 * e;
                link.slot_in = 2 * e + 1;
            } else {
                link.slot_out = 2 * e + 1;
                link.slot_in = 2 * e;
            }
            link.edge_prec_own = info.edge_prec(id, nbr);
            link.edge_prec_peer = info.edge_prec(nbr, id);
            link.cross_out = info.coupling(id, nbr);
            node.prec_self -= link.edge_prec_own;
            node.links.push_back(std::move(link));
        }

        // Initial messages: the receiver-side edge information with a zero
        // weighted mean.
        for (const auto& link : node.links) {
            prev_[link.slot_out].prec = link.edge_prec_peer;
            prev_[link.slot_out].wmean = Eigen::VectorXd::Zero(info.dims[link.nbr - 1]);
        }
        node.belief_prec = Eigen::MatrixXd();
        node.belief_mean = Eigen::VectorXd();
    }
}

bool GbpEngine::step() {
    const int t = round_ + 1;
    std::vector<Eigen::MatrixXd> new_prec(n_);
    std::vector<Eigen::VectorXd> new_mean(n_);
    std::vector<Eigen::MatrixXd> new_excl_prec(prev_.size());
    std::vector<Eigen::VectorXd> new_excl_wmean(prev_.size());

    for (int k = 0; k < n_; ++k) {
        const Node& node = nodes_[k];

        Eigen::MatrixXd bp = node.prec_self;
        Eigen::VectorXd bw = node.winfo;
        for (const auto& link : node.links) {
            bp += prev_[link.slot_in].prec;
            bw += prev_[link.slot_in].wmean;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> bes(bp);
        if (!usable(bes)) {
            breakdown_ = Breakdown{t, k + 1, 0,
                                   "belief precision is not numerically positive definite"};
            return false;
        }
        new_prec[k] = bp;
        new_mean[k] = bes.eigenvectors() * (bes.eigenvalues().cwiseInverse().asDiagonal() *
                                            (bes.eigenvectors().transpose() * bw));

        // Outgoing messages: the aggregate excluding the recipient is
        // re-summed from scratch rather than derived from the belief.
        for (const auto& link : node.links) {
            Eigen::MatrixXd agg = node.prec_self + link.edge_prec_own;
            Eigen::VectorXd wagg = node.winfo;
            for (const auto& other : node.links) {
                if (other.nbr == link.nbr) continue;
                agg += prev_[other.slot_in].prec;
                wagg += prev_[other.slot_in].wmean;
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ges(agg);
            if (!usable(ges)) {
                breakdown_ = Breakdown{t, k + 1, link.nbr,
                                       "message aggregate is not numerically positive definite"};
                return false;
            }
            const Eigen::MatrixXd gain = inverse_of(ges);
            next_[link.slot_out].prec =
                link.edge_prec_peer - link.cross_out.transpose() * gain * link.cross_out;
            next_[link.slot_out].wmean = -link.cross_out.transpose() * (gain * wagg);
            new_excl_prec[link.slot_out] = std::move(agg);
            new_excl_wmean[link.slot_out] = std::move(wagg);
        }
    }

    for (int k = 0; k < n_; ++k) {
        nodes_[k].belief_prec = std::move(new_prec[k]);
        nodes_[k].belief_mean = std::move(new_mean[k]);
    }
    excl_prec_ = std::move(new_excl_prec);
    excl_wmean_ = std::move(new_excl_wmean);
    std::swap(prev_, next_);
    round_ = t;
    return true;
}

const Eigen::VectorXd& GbpEngine::mean(int id) const {
    if (round_ < 1) throw InputError("beliefs are undefined before the first round");
    return nodes_.at(id - 1).belief_mean;
}

const Eigen::MatrixXd& GbpEngine::belief_prec(int id) const {
    if (round_ < 1) throw InputError("beliefs are undefined before the first round");
    return nodes_.at(id - 1).belief_prec;
}

int GbpEngine::slot(int from, int to) const {
    for (int s = 0; s < static_cast<int>(slot_dir_.size()); ++s)
        if (slot_dir_[s] == std::pair<int, int>{from, to}) return s;
    throw InputError("no directed edge " + std::to_string(from) + "->" + std::to_string(to));
}

const GbpEngine::Message& GbpEngine::message(int from, int to) const {
    return prev_[slot(from, to)];
}

const Eigen::MatrixXd& GbpEngine::excl_prec(int from, int to) const {
    if (round_ < 1) throw InputError("message aggregates are undefined before the first round");
    return excl_prec_[slot(from, to)];
}

const Eigen::VectorXd& GbpEngine::excl_wmean(int from, int to) const {
    if (round_ < 1) throw InputError("message aggregates are undefined before the first round");
    return excl_wmean_[slot(from, to)];
}

std::vector<int> GbpEngine::footprint(int id) const {
    std::vector<int> out;
    for (const auto& link : nodes_.at(id - 1).links) out.push_back(link.nbr);
    return out;
}

RunTrace run_gbp(const InformationSystem& info, int max_rounds, double tol,
                 const RunOptions& opts) {
    if (max_rounds < 1) throw InputError("max_rounds must be at least 1");
    if (!(tol > 0.0)) throw InputError("tolerance must be positive");

    GbpEngine engine(info);
    RunTrace trace;
    trace.algorithm = "gbp";
    trace.instance_id = info.fingerprint;

    auto snapshot = [&] {
        trace.round_index.push_back(engine.round());
        std::vector<Eigen::VectorXd> est(info.n);
        for (int id = 1; id <= info.n; ++id) est[id - 1] = engine.mean(id);
        trace.estimates.push_back(std::move(est));
        if (opts.log_details) {
            std::vector<Eigen::MatrixXd> prec(info.n);
            for (int id = 1; id <= info.n; ++id) prec[id - 1] = engine.belief_prec(id);
            trace.precisions.push_back(std::move(prec));
            std::vector<GbpMessageLog> msgs;
            for (const auto& e : info.edges) {
                for (const auto& [from, to] : {std::pair{e.i, e.j}, std::pair{e.j, e.i}}) {
                    const auto& m = engine.message(from, to);
                    msgs.push_back({from, to, m.prec, m.wmean, engine.excl_prec(from, to),
                                    engine.excl_wmean(from, to)});
                }
            }
            trace.gbp_messages.push_back(std::move(msgs));
        }
    };

    trace.stop = StopReason::max_rounds;
    std::vector<Eigen::VectorXd> before(info.n);
    for (int t = 1; t <= max_rounds; ++t) {
        if (t > 1)
            for (int id = 1; id <= info.n; ++id) before[id - 1] = engine.mean(id);

        if (!engine.step()) {
            trace.stop = StopReason::breakdown;
            trace.breakdown = engine.failure();
            break;
        }
        snapshot();

        if (t > 1) {
            double delta = 0.0;
            for (int id = 1; id <= info.n; ++id)
                delta = std::max(delta,
                                 (engine.mean(id) - before[id - 1]).lpNorm<Eigen::Infinity>());
            if (delta < tol) {
                trace.stop = StopReason::converged;
                break;
            }
        }
    }
    trace.rounds_executed = engine.round();
    return trace;
}

}  // namespace netwls

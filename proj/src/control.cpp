#include "hamroc/control.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hamroc/stats.hpp"

namespace hamroc {

void validate(const ControlTask& task, const MassSpringNetwork& net) {
    require(task.alpha > 0.0 && task.beta > 0.0, ErrorCode::InvalidConfig,
            "control gains must be positive");
    require(task.duration > 0.0, ErrorCode::InvalidConfig, "control duration must be > 0");
    require(static_cast<std::size_t>(task.target.size()) == net.dof_count(),
            ErrorCode::DimensionMismatch, "control target has wrong dimension");
    require_finite(task.target, "control target");
    actuation_matrix(net, task.actuated);
}

LatentController::LatentController(const ReducedSystem& rs, const ControlTask& task,
                                   ControlOptions opts)
    : rs_(ReducedSystem(rs.network(), rs.gravity(), rs.autoencoder(), task.actuated)),
      task_(task),
      opts_(opts) {
    validate(task_, rs_.network());
    xi_bar_ = encode(rs_.autoencoder(), task_.target);
    a_bar_ = latent_input_field(rs_, xi_bar_);
    a_left_ = pseudo_left_inverse(a_bar_);
    feedforward_ = latent_potential_gradient(rs_, xi_bar_);
}

LatentController::Evaluation LatentController::evaluate(const Vec& q, const Vec& q_dot) const {
    const LatentState lifted = lift_state(rs_, q, q_dot);
    Evaluation ev;
    ev.xi = lifted.xi;
    ev.pi = lifted.pi;
    ev.xi_dot = encoder_jacobian(rs_.autoencoder(), q) * q_dot;
    const Vec bracket = feedforward_ + task_.alpha * (xi_bar_ - ev.xi) - task_.beta * ev.pi;
    if (opts_.recompute_at_xi) {
        ev.u = pseudo_left_inverse(latent_input_field(rs_, ev.xi)) * bracket;
    } else {
        ev.u = a_left_ * bracket;
    }
    if (opts_.saturation) {
        const double limit = *opts_.saturation;
        ev.u = ev.u.cwiseMax(-limit).cwiseMin(limit);
    }
    return ev;
}

Vec compute_control(const ReducedSystem& rs, const ControlTask& task, const Vec& q, const Vec& q_dot) {
    return LatentController(rs, task)(q, q_dot);
}

double lyapunov_value(const ReducedSystem& rs, const ControlTask& task, const Vec& xi, const Vec& pi) {
    const Vec xi_bar = encode(rs.autoencoder(), task.target);
    const Vec ff = latent_potential_gradient(rs, xi_bar);
    const Vec err = xi_bar - xi;
    return latent_energy(rs, xi, pi) + ff.dot(err) + 0.5 * task.alpha * err.squaredNorm();
}

ControlLog run_regulation(const MassSpringNetwork& net, const GravityField& grav,
                          const ReducedSystem& rs, const ControlTask& task,
                          const ControlOptions& opts) {
    validate(task, net);
    const LatentController controller(rs.with_gravity(grav), task, opts);
    const ReducedSystem& model = controller.system();
    Controller law{task.actuated, [&](const FullState& s) {
                       return controller(s.q, velocity(net, s.p));
                   }};
    const Vec q0 = rest_configuration(net);
    const Trajectory traj = simulate_full(net, grav, q0, Vec::Zero(net.dof_count()),
                                          {task.duration, opts.dt, opts.sample_dt}, law);

    ControlLog log;
    log.task = task;
    const double n = static_cast<double>(net.dof_count());
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const FullState& s = traj.states[k];
        const LatentController::Evaluation ev = controller.evaluate(s.q, velocity(net, s.p));
        ControlRecord r;
        r.t = s.t;
        r.q = s.q;
        r.xi = ev.xi;
        r.xi_bar = controller.target_latent();
        r.pi = ev.pi;
        r.u = traj.input_log[k];
        r.lyapunov = lyapunov_value(model, task, ev.xi, ev.pi);
        r.mse_norm = (s.q - task.target).squaredNorm() / n;
        log.records.push_back(std::move(r));
    }
    return log;
}

std::vector<NodeIndex> default_actuation_candidates(const MassSpringNetwork& net, std::size_t count) {
    Eigen::Vector2d anchor = Eigen::Vector2d::Zero();
    std::size_t pinned = 0;
    for (const Node& nd : net.nodes()) {
        if (nd.pinned) {
            anchor += Eigen::Vector2d(nd.x0, nd.y0);
            ++pinned;
        }
    }
    if (pinned > 0) anchor /= static_cast<double>(pinned);
    auto distance = [&](NodeIndex i) {
        return (Eigen::Vector2d(net.nodes()[i].x0, net.nodes()[i].y0) - anchor).norm();
    };
    const auto& lateral = net.meta().lateral_nodes;
    std::vector<NodeIndex> lat;
    std::vector<NodeIndex> rest;
    for (NodeIndex i = 0; i < net.node_count(); ++i) {
        if (net.nodes()[i].pinned) continue;
        if (std::find(lateral.begin(), lateral.end(), i) != lateral.end()) {
            lat.push_back(i);
        } else {
            rest.push_back(i);
        }
    }
    auto by_distance = [&](NodeIndex a, NodeIndex b) {
        const double da = distance(a), db = distance(b);
        return da != db ? da > db : a < b;
    };
    std::sort(lat.begin(), lat.end(), by_distance);
    std::sort(rest.begin(), rest.end(), by_distance);
    lat.insert(lat.end(), rest.begin(), rest.end());
    if (lat.size() > count) lat.resize(count);
    return lat;
}

std::vector<ControlTask> sample_control_tasks(const std::vector<Vec>& pool,
                                              const std::vector<NodeIndex>& candidates,
                                              const TaskSampling& sampling,
                                              const std::vector<GravityField>* pool_gravity) {
    require(!pool.empty(), ErrorCode::InvalidConfig, "no target configurations to sample from");
    require(pool_gravity == nullptr || pool_gravity->size() == pool.size(), ErrorCode::DimensionMismatch,
            "target gravity list does not match the target pool");
    require(!candidates.empty(), ErrorCode::InvalidConfig, "no actuation candidates");
    std::mt19937_64 rng(sampling.seed);
    std::uniform_int_distribution<std::size_t> pick_target(0, pool.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_node(0, candidates.size() - 1);
    std::vector<ControlTask> tasks;
    for (std::size_t i = 0; i < sampling.n_tasks; ++i) {
        const std::size_t t = pick_target(rng);
        const std::size_t a = pick_node(rng);
        ControlTask task{pool[t], candidates[a], sampling.alpha, sampling.beta, sampling.duration, std::nullopt};
        if (pool_gravity) task.gravity = (*pool_gravity)[t];
        tasks.push_back(std::move(task));
    }
    return tasks;
}

ControlSummary summarize(const std::vector<ControlLog>& logs) {
    ControlSummary s;
    if (logs.empty()) return s;
    std::size_t samples = logs.front().records.size();
    for (const ControlLog& l : logs) samples = std::min(samples, l.records.size());
    for (std::size_t k = 0; k < samples; ++k) {
        std::vector<double> v;
        for (const ControlLog& l : logs) v.push_back(l.records[k].mse_norm);
        s.t.push_back(logs.front().records[k].t);
        s.mse_p25.push_back(percentile(v, 25.0));
        s.mse_median.push_back(percentile(v, 50.0));
        s.mse_p75.push_back(percentile(v, 75.0));
    }
    for (const ControlLog& l : logs) {
        if (l.records.empty()) continue;
        const double e0 = l.latent_error(0);
        const double e1 = l.latent_error(l.records.size() - 1);
        s.latent_error_ratio.push_back(e0 > 0.0 ? e1 / e0 : 0.0);
    }
    return s;
}

}  // namespace hamroc

#include "hamroc/full_sim.hpp"

#include <cmath>
#include <random>

namespace hamroc {

Vec velocity(const MassSpringNetwork& net, const Vec& p) {
    return p.cwiseQuotient(mass_diagonal(net));
}

StateDerivative full_rhs(const MassSpringNetwork& net, const GravityField& grav,
                         const FullState& state, const std::optional<Vec>& u,
                         std::optional<NodeIndex> actuated) {
    if (u.has_value() != actuated.has_value()) {
        fail(ErrorCode::InvalidConfig, "full_rhs: input and actuated node must be given together");
    }
    if (static_cast<std::size_t>(state.p.size()) != net.dof_count()) {
        fail(ErrorCode::DimensionMismatch, "full_rhs: momentum has wrong dimension");
    }
    Vec qdot = velocity(net, state.p);
    Vec pdot = -damping_force(net, state.q, qdot) - potential_gradient(net, grav, state.q);
    if (u) {
        if (u->size() != 2) {
            fail(ErrorCode::DimensionMismatch, "full_rhs: input must be two-dimensional");
        }
        const auto dof = net.dof_of(*actuated);
        if (!dof) {
            fail(ErrorCode::PinnedNode, "full_rhs: actuated node is pinned");
        }
        pdot.segment<2>(*dof) += *u;
    }
    return {std::move(qdot), std::move(pdot)};
}

StepPlan plan_steps(const SimOptions& opts) {
    require(opts.duration > 0.0, ErrorCode::InvalidConfig, "duration must be > 0");
    require(opts.dt > 0.0, ErrorCode::InvalidConfig, "dt must be > 0");
    require(opts.dt <= opts.sample_dt * (1.0 + 1e-12), ErrorCode::InvalidConfig,
            "dt must not exceed sample_dt");
    const double stride_f = opts.sample_dt / opts.dt;
    const long stride = std::lround(stride_f);
    require(std::abs(stride_f - static_cast<double>(stride)) < 1e-6 * stride_f,
            ErrorCode::InvalidConfig, "sample_dt must be an integer multiple of dt");
    const double steps_f = opts.duration / opts.dt;
    const long steps = std::lround(steps_f);
    require(std::abs(steps_f - static_cast<double>(steps)) < 1e-6 * steps_f,
            ErrorCode::InvalidConfig, "duration must be an integer multiple of dt");
    return {steps, stride};
}

Trajectory simulate_full(const MassSpringNetwork& net, const GravityField& grav, const Vec& q0,
                         const Vec& p0, const SimOptions& opts,
                         const std::optional<Controller>& controller) {
    const std::size_t n = net.dof_count();
    if (static_cast<std::size_t>(q0.size()) != n || static_cast<std::size_t>(p0.size()) != n) {
        fail(ErrorCode::DimensionMismatch, "simulate_full: initial state has wrong dimension");
    }
    require_finite(q0, "q0");
    require_finite(p0, "p0");
    const StepPlan plan = plan_steps(opts);
    if (controller) {
        actuation_matrix(net, controller->actuated);  // validates the node
    }

    Trajectory traj;
    traj.dt = opts.dt;
    traj.sample_dt = opts.sample_dt;
    traj.gravity = grav;
    if (controller) {
        traj.actuated = controller->actuated;
    }
    traj.states.reserve(static_cast<std::size_t>(plan.steps / plan.stride + 1));

    Vec y(2 * n);
    y << q0, p0;
    std::optional<Vec> held;
    std::optional<NodeIndex> actuated;
    if (controller) {
        actuated = controller->actuated;
    }
    const auto rhs = [&](double t, const Vec& state) {
        FullState s{state.head(n), state.tail(n), t};
        StateDerivative d = full_rhs(net, grav, s, held, actuated);
        Vec out(2 * n);
        out << d.qdot, d.pdot;
        return out;
    };

    for (long step = 0;; ++step) {
        const double t = static_cast<double>(step) * opts.dt;
        FullState current{y.head(n), y.tail(n), t};
        if (controller) {
            held = controller->law(current);
            if (held->size() != 2 || !held->allFinite()) {
                fail(ErrorCode::NumericalBlowup, "controller produced an invalid input");
            }
        }
        if (step % plan.stride == 0) {
            traj.states.push_back(current);
            if (controller) {
                traj.input_log.push_back(*held);
            }
        }
        if (step == plan.steps) {
            break;
        }
        y = rk4_step(rhs, y, t, opts.dt);
        if (!y.allFinite() || y.norm() > kBlowupThreshold) {
            fail(ErrorCode::NumericalBlowup,
                 "full-order state diverged at t=" + std::to_string(t + opts.dt) +
                     "; try a smaller dt");
        }
    }
    return traj;
}

Vec random_initial_configuration(const MassSpringNetwork& net, std::uint64_t seed,
                                 double amplitude) {
    require(amplitude > 0.0 && std::isfinite(amplitude), ErrorCode::InvalidConfig,
            "amplitude must be > 0");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-amplitude, amplitude);
    const Vec rest = rest_configuration(net);
    for (int attempt = 0; attempt < 100; ++attempt) {
        Vec q = rest;
        for (Eigen::Index k = 0; k < q.size(); ++k) {
            q[k] += dist(rng);
        }
        const Vec lengths = spring_lengths(net, q);
        bool ok = true;
        for (std::size_t j = 0; j < net.edge_count(); ++j) {
            if (lengths[j] < 0.1 * net.edges()[j].rest_length) {
                ok = false;
                break;
            }
        }
        if (ok) {
            return q;
        }
    }
    fail(ErrorCode::RejectionExhausted,
         "random_initial_configuration: no admissible sample in 100 attempts");
}

}  // namespace hamroc

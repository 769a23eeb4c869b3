#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "hamroc/msd_system.hpp"

namespace hamroc {

struct FullState {
    Vec q;  // m
    Vec p;  // kg m/s
    double t = 0.0;
};

struct Trajectory {
    std::vector<FullState> states;
    double dt = 0.0;
    double sample_dt = 0.0;
    GravityField gravity;
    /// Held control input at each sample (empty for unforced runs).
    std::vector<Vec> input_log;
    std::optional<NodeIndex> actuated;
};

struct StateDerivative {
    Vec qdot;
    Vec pdot;
};

/// Velocity q_dot = M^{-1} p.
Vec velocity(const MassSpringNetwork& net, const Vec& p);

/// Right-hand side of the dissipative Hamiltonian dynamics:
/// q_dot = M^{-1} p,  p_dot = -D(q) M^{-1} p - grad V(q) + G u.
StateDerivative full_rhs(const MassSpringNetwork& net, const GravityField& grav,
                         const FullState& state, const std::optional<Vec>& u = std::nullopt,
                         std::optional<NodeIndex> actuated = std::nullopt);

/// Feedback law evaluated once per integration step and held constant over it.
struct Controller {
    NodeIndex actuated = 0;
    std::function<Vec(const FullState&)> law;
};

struct SimOptions {
    double duration = 10.0;
    double dt = 1e-3;
    double sample_dt = 0.02;
};

/// Number of integration steps and the sampling stride implied by `opts`.
struct StepPlan {
    long steps;
    long stride;
};
StepPlan plan_steps(const SimOptions& opts);

/// Norm beyond which a simulation is declared unstable.
inline constexpr double kBlowupThreshold = 1e8;

Trajectory simulate_full(const MassSpringNetwork& net, const GravityField& grav, const Vec& q0,
                         const Vec& p0, const SimOptions& opts,
                         const std::optional<Controller>& controller = std::nullopt);

/// Rest positions plus a uniform perturbation in [-amplitude, amplitude] per
/// free coordinate; resampled (at most 100 times) while any spring is shorter
/// than a tenth of its rest length.
Vec random_initial_configuration(const MassSpringNetwork& net, std::uint64_t seed, double amplitude);

}  // namespace hamroc

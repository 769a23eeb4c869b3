#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hamroc/reduction.hpp"

namespace hamroc {

struct ControlTask {
    Vec target;  // q_bar
    NodeIndex actuated = 0;
    double alpha = 1.0;
    double beta = 1.0;
    double duration = 5.0;  // s
    /// Field the target was recorded under, if known.
    std::optional<GravityField> gravity{};
};

void validate(const ControlTask& task, const MassSpringNetwork& net);

struct ControlOptions {
    double dt = 1e-3;
    double sample_dt = 0.02;
    /// Evaluate A and its left inverse at the current xi instead of the target.
    bool recompute_at_xi = false;
    /// Optional clamp on |u|_inf (N).
    std::optional<double> saturation{};
};

/// Posture regulator acting through the latent space:
///   u = A^L(xi_bar) (grad V_eta(xi_bar) + alpha (xi_bar - xi) - beta pi),
/// with A = J^T G, xi = E(q), pi = M_eta(xi) dE/dq q_dot. The target encoding,
/// left inverse and feedforward term are computed once.
class LatentController {
public:
    LatentController(const ReducedSystem& rs, const ControlTask& task, ControlOptions opts = {});

    struct Evaluation {
        Vec xi;
        Vec xi_dot;
        Vec pi;
        Vec u;
    };

    Evaluation evaluate(const Vec& q, const Vec& q_dot) const;
    Vec operator()(const Vec& q, const Vec& q_dot) const { return evaluate(q, q_dot).u; }

    const ReducedSystem& system() const { return rs_; }
    const Vec& target_latent() const { return xi_bar_; }
    const Mat& actuation_map() const { return a_bar_; }
    const Mat& left_inverse() const { return a_left_; }
    const Vec& feedforward() const { return feedforward_; }

private:
    ReducedSystem rs_;
    ControlTask task_;
    ControlOptions opts_;
    Vec xi_bar_;
    Mat a_bar_;
    Mat a_left_;
    Vec feedforward_;
};

Vec compute_control(const ReducedSystem& rs, const ControlTask& task, const Vec& q, const Vec& q_dot);

/// Closed-loop storage function of the regulator,
///   W = eta(xi, pi) - grad V_eta(xi_bar)^T (xi - xi_bar) + alpha/2 |xi_bar - xi|^2,
/// which is non-increasing along the latent closed loop whenever A A^L = I.
double lyapunov_value(const ReducedSystem& rs, const ControlTask& task, const Vec& xi, const Vec& pi);

struct ControlRecord {
    double t = 0.0;
    Vec q;
    Vec xi;
    Vec xi_bar;
    Vec pi;
    Vec u;
    double lyapunov = 0.0;
    double mse_norm = 0.0;  // |q - q_bar|^2 / n
};

struct ControlLog {
    ControlTask task;
    std::vector<ControlRecord> records;

    double latent_error(std::size_t k) const { return (records[k].xi - records[k].xi_bar).norm(); }
};

/// Closed loop of the full-order plant with the latent controller, started at
/// the rest configuration with zero momentum.
ControlLog run_regulation(const MassSpringNetwork& net, const GravityField& grav,
                          const ReducedSystem& rs, const ControlTask& task,
                          const ControlOptions& opts = {});

/// Up to `count` free nodes suited for actuation: lateral-structure nodes
/// first, each group ordered by decreasing distance from the pinned nodes.
std::vector<NodeIndex> default_actuation_candidates(const MassSpringNetwork& net, std::size_t count = 3);

struct TaskSampling {
    std::size_t n_tasks = 50;
    std::uint64_t seed = 0;
    double alpha = 1.0;
    double beta = 1.0;
    double duration = 5.0;
};

/// Draws (target, actuated node) pairs: targets from `pool` (training and
/// validation configurations), actuated node from `candidates`. When
/// `pool_gravity` is given it runs parallel to `pool` and tags each task.
std::vector<ControlTask> sample_control_tasks(const std::vector<Vec>& pool,
                                              const std::vector<NodeIndex>& candidates,
                                              const TaskSampling& sampling,
                                              const std::vector<GravityField>* pool_gravity = nullptr);

struct ControlSummary {
    std::vector<double> t;
    std::vector<double> mse_p25;
    std::vector<double> mse_median;
    std::vector<double> mse_p75;
    std::vector<double> latent_error_ratio;  // |xi(T) - xi_bar| / |xi(0) - xi_bar| per task
};

ControlSummary summarize(const std::vector<ControlLog>& logs);

}  // namespace hamroc

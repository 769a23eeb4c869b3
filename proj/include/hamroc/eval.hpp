#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hamroc/reduction.hpp"

namespace hamroc {

/// Per-time-step 20th percentile, median and 80th percentile across trajectories.
struct Band {
    std::vector<double> p20;
    std::vector<double> median;
    std::vector<double> p80;
};

/// Errors of one trajectory, one entry per sample.
struct TrajectoryErrors {
    std::vector<double> q;         // |q - q~|^2 / n
    std::vector<double> q_dot;     // |q_dot - q_dot~|^2 / n
    std::vector<double> energy;    // (H - eta)^2
    double relative_error = 0.0;   // time average of |q~ - q| / |q - q_rest|
};

struct EvalReport {
    std::string mode;  // "pointwise" or "compressed"
    std::size_t dof = 0;
    std::vector<double> t;
    std::vector<TrajectoryErrors> trajectories;
    Band q;
    Band q_dot;
    Band energy;

    double mean_q() const;
    double mean_energy() const;
    double median_relative_error() const;
};

/// Scores D(E(q)), its velocity and its latent energy against every sample.
EvalReport evaluate_pointwise(const ReducedSystem& rs, const std::vector<Trajectory>& trajectories);

/// Integrates the reduced model from (E(q0), 0) under each trajectory's
/// gravity and scores the reconstruction against the ground truth.
EvalReport evaluate_compressed(const ReducedSystem& rs, const std::vector<Trajectory>& trajectories);

struct SweepRow {
    std::size_t latent_dim = 0;
    double train_mse = 0.0;  // per-sample sum of squares
    double valid_mse = 0.0;
    double test_mse = 0.0;
    double test_mse_per_dof = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<MlpAutoencoder> models;
};

/// One autoencoder per latent size, same data, seeds and training settings.
SweepResult compression_sweep(const ConfigurationDataset& train_set,
                              const ConfigurationDataset& valid_set,
                              const ConfigurationDataset& test_set,
                              const std::vector<std::size_t>& latent_sizes,
                              const TrainConfig& cfg, std::uint64_t init_seed);

struct NoiseRow {
    double sigma = 0.0;
    double mse = 0.0;  // mean over configurations and repeats of |q - D(E(q + noise))|^2
    double mse_per_dof = 0.0;
};

std::vector<NoiseRow> noise_robustness(const MlpAutoencoder& ae, const std::vector<Vec>& configs,
                                       const std::vector<double>& sigmas, std::uint64_t seed,
                                       int repeats = 5);

struct LatentSweepEntry {
    std::size_t base = 0;
    std::size_t latent_index = 0;
    double fraction = 0.0;
    Vec xi;
    Vec q;
};

/// Per-coordinate range of E(q) over `range_configs`.
Vec latent_ranges(const MlpAutoencoder& ae, const std::vector<Vec>& range_configs);

/// Decodes each base encoding with one latent coordinate shifted by
/// fraction * range of that coordinate.
std::vector<LatentSweepEntry> latent_sweep(const MlpAutoencoder& ae, const std::vector<Vec>& base_configs,
                                           const std::vector<Vec>& range_configs,
                                           const std::vector<double>& fractions = {-0.21, -0.14, -0.07,
                                                                                  0.07, 0.14, 0.21});

}  // namespace hamroc

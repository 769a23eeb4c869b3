#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hamroc/io.hpp"

namespace hamroc {

struct SimulationSection {
    SimOptions sim{10.0, 1e-3, 0.02};
    GravityField gravity{9.81, 1.5 * 3.14159265358979323846};
    double init_amplitude = 0.1;  // m
    std::uint64_t init_seed = 0;
};

struct DatasetSection {
    GravityProtocol protocol = GravityProtocol::reference();
    DatasetOptions options;
};

struct TrainingSection {
    TrainConfig train;
    std::size_t latent_dim = 3;
    std::uint64_t init_seed = 0;
    bool grid = false;
    GridSpec grid_spec = GridSpec::reference();
};

struct ReductionSection {
    SimOptions sim{10.0, 1e-3, 0.02};
};

struct ControlSection {
    TaskSampling sampling;
    std::size_t n_candidates = 3;
    ControlOptions options;
    /// "target": run each task under the field its target was recorded in;
    /// "fixed": run every task under `gravity`.
    std::string gravity_source = "target";
    GravityField gravity{9.81, 1.5 * 3.14159265358979323846};
};

struct EvalSection {
    std::string system = "msd";
    std::size_t n_trajectories = 10;  // test trajectories scored, 0 = all
    std::vector<std::size_t> latent_sizes{1, 2, 3, 4, 5};
    std::vector<double> sigmas{0.01, 0.05, 0.1, 0.5, 1.0, 5.0};
    std::uint64_t noise_seed = 0;
    int noise_repeats = 5;
    std::vector<double> fractions{-0.21, -0.14, -0.07, 0.07, 0.14, 0.21};
    std::size_t n_sweep_bases = 3;
};

struct RunConfig {
    GeneratorConfig generator;
    SimulationSection simulation;
    DatasetSection dataset;
    TrainingSection training;
    ReductionSection reduction;
    ControlSection control;
    EvalSection eval;
};

Json to_json(const RunConfig& cfg);
/// Missing keys keep their defaults; unknown keys raise SchemaViolation.
RunConfig run_config_from_json(const Json& j);
RunConfig load_run_config(const fs::path& path);
/// SHA-256 of the canonical serialization of the fully resolved config.
std::string config_hash(const RunConfig& cfg);
/// Every seed in the config, keyed by section.
Json seeds_json(const RunConfig& cfg);

/// Explicit root, else $HAMROC_WORKSPACE, else the current directory.
fs::path workspace_root(const std::optional<std::string>& explicit_root = std::nullopt);
/// Absolute paths pass through; relative ones are taken from `root`.
fs::path resolve_path(const fs::path& root, const fs::path& p);

}  // namespace hamroc

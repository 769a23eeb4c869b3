#pragma once

#include <optional>

#include "hamroc/config.hpp"

namespace hamroc {

/// Settings of the ~20-node system used by the end-to-end checks and by
/// configs/desk.json.
RunConfig desk_scale_config();

MassSpringNetwork build_network(const RunConfig& cfg);
DatasetBundle build_dataset(const MassSpringNetwork& net, const RunConfig& cfg);

struct TrainingOutcome {
    MlpAutoencoder model;
    TrainConfig config;
    LossHistory history;
    std::vector<GridEntry> grid;  // empty unless trained in grid mode
    std::size_t grid_best = 0;
};

/// Single run with `cfg.training.train`, or the grid search when
/// `cfg.training.grid` is set.
TrainingOutcome train_model(const RunConfig& cfg, const ConfigurationDataset& train_set,
                            const ConfigurationDataset& valid_set,
                            std::optional<std::size_t> latent_dim = std::nullopt);

/// Targets drawn from training and validation configurations. Each task is
/// tagged with the gravity of its source simulation (`sim_gravity` is indexed
/// by simulation id) unless the config asks for a fixed field.
std::vector<ControlTask> control_tasks(const MassSpringNetwork& net, const ConfigurationDataset& train_set,
                                       const ConfigurationDataset& valid_set,
                                       const std::vector<GravityField>& sim_gravity, const RunConfig& cfg);

/// Field a task's closed loop runs under.
GravityField task_gravity(const ControlTask& task, const RunConfig& cfg);

/// Gravity of every simulation in a bundle, by id.
std::vector<GravityField> simulation_gravities(const DatasetBundle& bundle);
/// Same, read from a dataset manifest.
std::vector<GravityField> simulation_gravities(const Json& manifest);

/// {config_hash, seeds} stamped into every output.
Json run_meta(const RunConfig& cfg);

}  // namespace hamroc

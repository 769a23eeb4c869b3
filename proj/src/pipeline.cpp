#include "hamroc/pipeline.hpp"

namespace hamroc {

RunConfig desk_scale_config() {
    RunConfig cfg;
    cfg.generator.seed = 7;
    cfg.generator.n_base_cells = 8;
    cfg.generator.lateral_attach_probability = 0.35;
    cfg.dataset.protocol.seed = 11;
    cfg.training.latent_dim = 3;
    cfg.training.init_seed = 3;
    cfg.training.train.seed = 5;
    cfg.control.sampling.seed = 13;
    cfg.control.sampling.n_tasks = 10;
    cfg.control.sampling.alpha = 2.0;
    cfg.control.sampling.beta = 2.0;
    cfg.eval.noise_seed = 17;
    cfg.eval.system = "desk";
    return cfg;
}

MassSpringNetwork build_network(const RunConfig& cfg) { return generate_network(cfg.generator); }

DatasetBundle build_dataset(const MassSpringNetwork& net, const RunConfig& cfg) {
    return build_dataset(net, cfg.dataset.protocol, cfg.dataset.options);
}

TrainingOutcome train_model(const RunConfig& cfg, const ConfigurationDataset& train_set,
                            const ConfigurationDataset& valid_set, std::optional<std::size_t> latent_dim) {
    require(!train_set.empty(), ErrorCode::InvalidConfig, "training set is empty");
    const std::size_t n = static_cast<std::size_t>(train_set.configurations.front().size());
    const ArchitectureSpec arch = ArchitectureSpec::scaled(n, latent_dim.value_or(cfg.training.latent_dim));
    if (cfg.training.grid) {
        GridResult g = grid_search(arch, cfg.training.init_seed, train_set, valid_set, cfg.training.train,
                                   cfg.training.grid_spec);
        const TrainConfig best_cfg = g.entries[g.best_index].config;
        return {std::move(g.best.model), best_cfg, std::move(g.best.history), std::move(g.entries), g.best_index};
    }
    TrainResult r = train(MlpAutoencoder::initialize(arch, cfg.training.init_seed), train_set, &valid_set,
                          cfg.training.train);
    return {std::move(r.model), cfg.training.train, std::move(r.history), {}, 0};
}

std::vector<ControlTask> control_tasks(const MassSpringNetwork& net, const ConfigurationDataset& train_set,
                                       const ConfigurationDataset& valid_set,
                                       const std::vector<GravityField>& sim_gravity, const RunConfig& cfg) {
    std::vector<Vec> pool;
    std::vector<GravityField> gravity;
    for (const ConfigurationDataset* ds : {&train_set, &valid_set}) {
        require(ds->sources.size() == ds->size(), ErrorCode::SchemaViolation,
                "dataset configurations lack source tags");
        for (std::size_t i = 0; i < ds->size(); ++i) {
            const std::size_t sim = ds->sources[i].simulation;
            require(sim < sim_gravity.size(), ErrorCode::IndexOutOfRange,
                    "configuration refers to unknown simulation " + std::to_string(sim));
            pool.push_back(ds->configurations[i]);
            gravity.push_back(sim_gravity[sim]);
        }
    }
    const auto candidates = default_actuation_candidates(net, cfg.control.n_candidates);
    const bool tagged = cfg.control.gravity_source == "target";
    return sample_control_tasks(pool, candidates, cfg.control.sampling, tagged ? &gravity : nullptr);
}

GravityField task_gravity(const ControlTask& task, const RunConfig& cfg) {
    return cfg.control.gravity_source == "target" && task.gravity ? *task.gravity : cfg.control.gravity;
}

std::vector<GravityField> simulation_gravities(const DatasetBundle& bundle) {
    std::vector<GravityField> out(bundle.simulations.size());
    for (const SimulationRecord& rec : bundle.simulations) {
        require(rec.id < out.size(), ErrorCode::IndexOutOfRange, "simulation ids are not contiguous");
        out[rec.id] = rec.gravity;
    }
    return out;
}

std::vector<GravityField> simulation_gravities(const Json& manifest) {
    const Json& sims = json_at(manifest, "simulations");
    std::vector<GravityField> out(sims.size());
    for (const Json& s : sims) {
        const std::size_t id = json_uint(s, "id");
        require(id < out.size(), ErrorCode::SchemaViolation, "manifest simulation ids are not contiguous");
        out[id] = gravity_from_json(json_at(s, "gravity"));
    }
    return out;
}

Json run_meta(const RunConfig& cfg) { return Json{{"config_hash", config_hash(cfg)}, {"seeds", seeds_json(cfg)}}; }

}  // namespace hamroc

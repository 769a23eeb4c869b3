// hamroc: command-line driver for network generation, simulation, dataset
// building, autoencoder training, reduced simulation, control and evaluation.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hamroc/pipeline.hpp"

using namespace hamroc;

namespace {

struct Common {
    std::string workspace;
    std::string config;
    fs::path root;
};

RunConfig load_config(const Common& c) {
    if (c.config.empty()) return RunConfig{};
    return load_run_config(resolve_path(c.root, c.config));
}

fs::path at(const Common& c, const std::string& p) { return resolve_path(c.root, p); }

template <typename T>
void apply(std::optional<T>& flag, T& target) {
    if (flag) target = *flag;
}

void report(const std::string& command, const RunConfig& cfg, const std::vector<fs::path>& outputs,
            const Json& extra = Json::object()) {
    Json j;
    j["command"] = command;
    j["config_hash"] = config_hash(cfg);
    j["seeds"] = seeds_json(cfg);
    Json files = Json::array();
    for (const auto& p : outputs) files.push_back(p.string());
    j["outputs"] = std::move(files);
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    std::cout << dump_json(j, 0);
}

std::string indexed(const std::string& stem, std::size_t i, const std::string& ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "_%03zu", i);
    return stem + buf + ext;
}

const char* kExitCodes =
    "Exit codes:\n"
    "  0 success, 1 unexpected failure, 2 usage error\n"
    "  10 DimensionMismatch      11 NotSPD              12 RankDeficient\n"
    "  13 RankDeficientJacobian  14 InvalidConfig       15 DegenerateSpring\n"
    "  16 IndexOutOfRange        17 PinnedNode          18 NumericalBlowup\n"
    "  19 RejectionExhausted     20 NonFiniteLoss       21 NonFiniteValue\n"
    "  22 SchemaViolation        23 MissingFile         24 IoFailure\n"
    "Errors are also written to stderr as one JSON object.\n"
    "Relative paths resolve against --workspace, else $HAMROC_WORKSPACE, else the current directory.";

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Structure-preserving reduced models of mass-spring-damper networks"};
    app.footer(kExitCodes);
    app.require_subcommand(1);

    Common common;
    app.add_option("--workspace", common.workspace, "Workspace root for relative paths");
    app.add_option("--config", common.config, "Run configuration (JSON); omitted sections keep their defaults");

    // generate
    auto* gen = app.add_subcommand("generate", "Generate a random mass-spring network");
    std::string gen_out = "network.json";
    std::optional<std::uint64_t> gen_seed;
    std::optional<int> gen_cells;
    gen->add_option("--out", gen_out, "Network file to write")->capture_default_str();
    gen->add_option("--seed", gen_seed, "Generator seed");
    gen->add_option("--cells", gen_cells, "Number of base cells");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Simulate the full-order system from a perturbed rest state");
    std::string sim_net, sim_out = "trajectory.csv";
    std::optional<double> sim_g, sim_theta, sim_duration, sim_dt, sim_sample_dt, sim_amp;
    std::optional<std::uint64_t> sim_seed;
    sim->add_option("--network", sim_net, "Network file")->required();
    sim->add_option("--out", sim_out, "Trajectory CSV (sidecar written to <out>.json)")->capture_default_str();
    sim->add_option("--g", sim_g, "Gravity intensity (m/s^2)");
    sim->add_option("--theta", sim_theta, "Gravity angle (rad)");
    sim->add_option("--init-seed", sim_seed, "Seed of the initial perturbation");
    sim->add_option("--amplitude", sim_amp, "Initial perturbation amplitude (m)");
    sim->add_option("--duration", sim_duration, "Simulated time (s)");
    sim->add_option("--dt", sim_dt, "Integration step (s)");
    sim->add_option("--sample-dt", sim_sample_dt, "Sampling interval (s)");

    // make-dataset
    auto* mkd = app.add_subcommand("make-dataset", "Simulate the gravity protocol and build filtered splits");
    std::string mkd_net, mkd_out = "dataset";
    std::optional<std::uint64_t> mkd_seed;
    std::optional<double> mkd_eps;
    mkd->add_option("--network", mkd_net, "Network file")->required();
    mkd->add_option("--out", mkd_out, "Output directory")->capture_default_str();
    mkd->add_option("--seed", mkd_seed, "Protocol seed");
    mkd->add_option("--epsilon", mkd_eps, "Filtering distance (m)");

    // train
    auto* trn = app.add_subcommand("train", "Train an autoencoder on a dataset");
    std::string trn_data, trn_out = "model.json", trn_grid_file;
    bool trn_grid = false;
    std::optional<std::size_t> trn_latent;
    std::optional<int> trn_epochs, trn_batch;
    trn->add_option("--dataset", trn_data, "Dataset directory")->required();
    trn->add_option("--out", trn_out, "Model file")->capture_default_str();
    trn->add_flag("--grid", trn_grid, "Run the hyperparameter grid and keep the best validation loss");
    trn->add_option("--grid-file", trn_grid_file, "JSON grid {lr, weight_decay, lr_gamma, lr_step}; implies --grid");
    trn->add_option("--latent-dim", trn_latent, "Latent size m");
    trn->add_option("--epochs", trn_epochs, "Training epochs");
    trn->add_option("--batch-size", trn_batch, "Minibatch size");

    // rom-sim
    auto* rom = app.add_subcommand("rom-sim", "Simulate the reduced model and reconstruct the full state");
    std::string rom_net, rom_model, rom_out = "rom";
    std::optional<double> rom_g, rom_theta, rom_duration, rom_dt, rom_sample_dt, rom_amp;
    std::optional<std::uint64_t> rom_seed;
    rom->add_option("--network", rom_net, "Network file")->required();
    rom->add_option("--model", rom_model, "Model file")->required();
    rom->add_option("--out", rom_out, "Output directory (latent.csv, reconstruction.csv)")->capture_default_str();
    rom->add_option("--g", rom_g, "Gravity intensity (m/s^2)");
    rom->add_option("--theta", rom_theta, "Gravity angle (rad)");
    rom->add_option("--init-seed", rom_seed, "Seed of the initial perturbation (same draw as simulate)");
    rom->add_option("--amplitude", rom_amp, "Initial perturbation amplitude (m)");
    rom->add_option("--duration", rom_duration, "Simulated time (s)");
    rom->add_option("--dt", rom_dt, "Integration step (s)");
    rom->add_option("--sample-dt", rom_sample_dt, "Sampling interval (s)");

    // control
    auto* ctl = app.add_subcommand("control", "Run latent-space posture regulation tasks");
    std::string ctl_net, ctl_model, ctl_data, ctl_out = "control";
    std::optional<double> ctl_alpha, ctl_beta, ctl_duration;
    std::optional<std::size_t> ctl_tasks;
    std::optional<std::uint64_t> ctl_seed;
    ctl->add_option("--network", ctl_net, "Network file")->required();
    ctl->add_option("--model", ctl_model, "Model file")->required();
    ctl->add_option("--dataset", ctl_data, "Dataset directory providing target configurations")->required();
    ctl->add_option("--out", ctl_out, "Output directory")->capture_default_str();
    ctl->add_option("--alpha", ctl_alpha, "Proportional gain");
    ctl->add_option("--beta", ctl_beta, "Damping gain");
    ctl->add_option("--duration", ctl_duration, "Task duration (s)");
    ctl->add_option("--n-tasks", ctl_tasks, "Number of tasks");
    ctl->add_option("--seed", ctl_seed, "Task sampling seed");

    // eval
    auto* evl = app.add_subcommand("eval", "Score pointwise and compressed reconstructions on test trajectories");
    std::string evl_net, evl_model, evl_data, evl_out = "eval", evl_mode = "both";
    std::optional<std::size_t> evl_n;
    evl->add_option("--network", evl_net, "Network file")->required();
    evl->add_option("--model", evl_model, "Model file")->required();
    evl->add_option("--dataset", evl_data, "Dataset directory with test trajectories")->required();
    evl->add_option("--out", evl_out, "Output directory")->capture_default_str();
    evl->add_option("--mode", evl_mode, "pointwise, compressed or both")
        ->check(CLI::IsMember({"pointwise", "compressed", "both"}))
        ->capture_default_str();
    evl->add_option("--trajectories", evl_n, "Number of test trajectories (0 = all)");

    // sweep
    auto* swp = app.add_subcommand("sweep", "Latent-size, noise or latent-perturbation sweeps");
    std::string swp_data, swp_model, swp_out = "sweep", swp_kind;
    swp->add_option("--dataset", swp_data, "Dataset directory")->required();
    swp->add_option("--kind", swp_kind, "sizes, sigmas or fractions")
        ->required()
        ->check(CLI::IsMember({"sizes", "sigmas", "fractions"}));
    swp->add_option("--model", swp_model, "Model file (sigmas and fractions)");
    swp->add_option("--out", swp_out, "Output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        common.root = workspace_root(common.workspace.empty() ? std::nullopt : std::optional(common.workspace));
        RunConfig cfg = load_config(common);

        if (*gen) {
            apply(gen_seed, cfg.generator.seed);
            apply(gen_cells, cfg.generator.n_base_cells);
            const fs::path out = at(common, gen_out);
            const MassSpringNetwork net = build_network(cfg);
            save_network(out, net);
            const fs::path side = fs::path(out.string() + ".run.json");
            write_json(side, run_meta(cfg));
            report("generate", cfg, {out, side},
                   Json{{"nodes", net.node_count()}, {"edges", net.edge_count()}, {"dof", net.dof_count()}});
        } else if (*sim) {
            SimulationSection& s = cfg.simulation;
            if (sim_g || sim_theta)
                s.gravity = GravityField::make(sim_g.value_or(s.gravity.g), sim_theta.value_or(s.gravity.theta));
            apply(sim_seed, s.init_seed);
            apply(sim_amp, s.init_amplitude);
            apply(sim_duration, s.sim.duration);
            apply(sim_dt, s.sim.dt);
            apply(sim_sample_dt, s.sim.sample_dt);
            const fs::path net_path = at(common, sim_net);
            const MassSpringNetwork net = load_network(net_path);
            const Vec q0 = random_initial_configuration(net, s.init_seed, s.init_amplitude);
            const Trajectory tr = simulate_full(net, s.gravity, q0, Vec::Zero(q0.size()), s.sim);
            Json meta = run_meta(cfg);
            meta["network_hash"] = sha256_file(net_path);
            const fs::path out = at(common, sim_out);
            save_trajectory(out, tr, meta);
            report("simulate", cfg, {out, sidecar_path(out)}, Json{{"samples", tr.states.size()}});
        } else if (*mkd) {
            apply(mkd_seed, cfg.dataset.protocol.seed);
            apply(mkd_eps, cfg.dataset.options.epsilon);
            const fs::path net_path = at(common, mkd_net);
            const MassSpringNetwork net = load_network(net_path);
            const DatasetBundle bundle = build_dataset(net, cfg);
            Json meta = run_meta(cfg);
            meta["network_hash"] = sha256_file(net_path);
            const fs::path out = at(common, mkd_out);
            save_dataset(out, bundle, cfg.dataset.protocol, cfg.dataset.options, meta);
            report("make-dataset", cfg, {out / "manifest.json"},
                   Json{{"train", bundle.train.size()}, {"valid", bundle.valid.size()}, {"test", bundle.test.size()}});
        } else if (*trn) {
            apply(trn_latent, cfg.training.latent_dim);
            apply(trn_epochs, cfg.training.train.epochs);
            apply(trn_batch, cfg.training.train.batch_size);
            if (trn_grid || !trn_grid_file.empty()) cfg.training.grid = true;
            if (!trn_grid_file.empty()) {
                Json wrapped{{"training", Json{{"grid_spec", read_json(at(common, trn_grid_file))}}}};
                cfg.training.grid_spec = run_config_from_json(wrapped).training.grid_spec;
            }
            const LoadedDataset data = load_dataset(at(common, trn_data), false);
            const TrainingOutcome outcome = train_model(cfg, data.train, data.valid);
            Json meta = run_meta(cfg);
            meta["dataset_manifest_hash"] = sha256_file(at(common, trn_data) / "manifest.json");
            if (!outcome.grid.empty()) {
                Json grid = Json::array();
                for (const GridEntry& e : outcome.grid)
                    grid.push_back(Json{{"config", to_json(e.config)},
                                        {"train_loss", e.train_loss},
                                        {"valid_loss", e.valid_loss}});
                meta["grid"] = std::move(grid);
                meta["grid_best"] = outcome.grid_best;
            }
            const fs::path out = at(common, trn_out);
            save_model(out, outcome.model, &outcome.config, &outcome.history, meta);
            report("train", cfg, {out},
                   Json{{"final_train_loss", outcome.history.train.back()},
                        {"final_valid_loss", outcome.history.valid.back()}});
        } else if (*rom) {
            SimulationSection& s = cfg.simulation;
            if (rom_g || rom_theta)
                s.gravity = GravityField::make(rom_g.value_or(s.gravity.g), rom_theta.value_or(s.gravity.theta));
            apply(rom_seed, s.init_seed);
            apply(rom_amp, s.init_amplitude);
            SimOptions& r = cfg.reduction.sim;
            apply(rom_duration, r.duration);
            apply(rom_dt, r.dt);
            apply(rom_sample_dt, r.sample_dt);
            const MassSpringNetwork net = load_network(at(common, rom_net));
            const ReducedSystem rs(net, s.gravity, load_model(at(common, rom_model)));
            const Vec q0 = random_initial_configuration(net, s.init_seed, s.init_amplitude);
            const LatentState start = lift_state(rs, q0, Vec::Zero(q0.size()));
            const LatentTrajectory latent = simulate_reduced(rs, start.xi, start.pi, r);
            const ReconstructedTrajectory rec = reconstruct(rs, latent);
            Json meta = run_meta(cfg);
            meta["network_hash"] = sha256_file(at(common, rom_net));
            meta["model_hash"] = sha256_file(at(common, rom_model));
            const fs::path dir = at(common, rom_out);
            write_csv(dir / "latent.csv", latent_table(latent));
            write_csv(dir / "reconstruction.csv", reconstruction_table(rec));
            Json side = meta;
            side["gravity"] = to_json(rec.full.gravity);
            side["dt"] = rec.full.dt;
            side["sample_dt"] = rec.full.sample_dt;
            side["actuated"] = nullptr;
            write_json(sidecar_path(dir / "reconstruction.csv"), side);
            write_json(sidecar_path(dir / "latent.csv"), meta);
            report("rom-sim", cfg, {dir / "latent.csv", dir / "reconstruction.csv"},
                   Json{{"latent_dim", rs.latent_dim()}, {"samples", latent.states.size()}});
        } else if (*ctl) {
            ControlSection& c = cfg.control;
            apply(ctl_alpha, c.sampling.alpha);
            apply(ctl_beta, c.sampling.beta);
            apply(ctl_duration, c.sampling.duration);
            apply(ctl_tasks, c.sampling.n_tasks);
            apply(ctl_seed, c.sampling.seed);
            const MassSpringNetwork net = load_network(at(common, ctl_net));
            const ReducedSystem rs(net, c.gravity, load_model(at(common, ctl_model)));
            const LoadedDataset data = load_dataset(at(common, ctl_data), false);
            const std::vector<ControlTask> tasks =
                control_tasks(net, data.train, data.valid, simulation_gravities(data.manifest), cfg);
            const fs::path dir = at(common, ctl_out);
            std::vector<ControlLog> logs;
            std::vector<fs::path> outputs;
            Json task_list = Json::array();
            for (std::size_t i = 0; i < tasks.size(); ++i) {
                const GravityField grav = task_gravity(tasks[i], cfg);
                logs.push_back(run_regulation(net, grav, rs, tasks[i], c.options));
                const fs::path file = dir / indexed("task", i, ".csv");
                write_csv(file, control_log_table(logs.back()));
                outputs.push_back(file);
                Json target = Json::array();
                for (Eigen::Index k = 0; k < tasks[i].target.size(); ++k) target.push_back(tasks[i].target[k]);
                task_list.push_back(Json{{"file", file.filename().string()},
                                         {"actuated", tasks[i].actuated},
                                         {"alpha", tasks[i].alpha},
                                         {"beta", tasks[i].beta},
                                         {"duration", tasks[i].duration},
                                         {"gravity", to_json(grav)},
                                         {"target", std::move(target)}});
            }
            Json summary = to_json(summarize(logs));
            summary["tasks"] = std::move(task_list);
            const Json meta = run_meta(cfg);
            for (auto it = meta.begin(); it != meta.end(); ++it) summary[it.key()] = it.value();
            write_json(dir / "summary.json", summary);
            outputs.push_back(dir / "summary.json");
            report("control", cfg, outputs);
        } else if (*evl) {
            apply(evl_n, cfg.eval.n_trajectories);
            const MassSpringNetwork net = load_network(at(common, evl_net));
            const ReducedSystem rs(net, cfg.simulation.gravity, load_model(at(common, evl_model)));
            LoadedDataset data = load_dataset(at(common, evl_data), true);
            std::vector<Trajectory>& trajs = data.test_trajectories;
            if (cfg.eval.n_trajectories > 0 && trajs.size() > cfg.eval.n_trajectories)
                trajs.resize(cfg.eval.n_trajectories);
            const fs::path dir = at(common, evl_out);
            std::vector<fs::path> outputs;
            for (const std::string mode : {"pointwise", "compressed"}) {
                if (evl_mode != "both" && evl_mode != mode) continue;
                const EvalReport rep = mode == "pointwise" ? evaluate_pointwise(rs, trajs) : evaluate_compressed(rs, trajs);
                const std::string stem = cfg.eval.system + "_" + mode + "_";
                for (const std::string metric : {"q", "q_dot", "energy"}) {
                    outputs.push_back(dir / (stem + metric + ".csv"));
                    write_csv(outputs.back(), report_metric_table(rep, metric));
                }
                Json summary = report_summary(rep);
                const Json meta = run_meta(cfg);
                for (auto it = meta.begin(); it != meta.end(); ++it) summary[it.key()] = it.value();
                outputs.push_back(dir / (stem + "summary.json"));
                write_json(outputs.back(), summary);
            }
            report("eval", cfg, outputs);
        } else if (*swp) {
            const LoadedDataset data = load_dataset(at(common, swp_data), false);
            const fs::path dir = at(common, swp_out);
            CsvTable table;
            Json summary = run_meta(cfg);
            summary["kind"] = swp_kind;
            if (swp_kind == "sizes") {
                const SweepResult r = compression_sweep(data.train, data.valid, data.test, cfg.eval.latent_sizes,
                                                        cfg.training.train, cfg.training.init_seed);
                table.header = {"latent_dim", "train_mse", "valid_mse", "test_mse", "test_mse_per_dof"};
                for (const SweepRow& row : r.rows)
                    table.rows.push_back({static_cast<double>(row.latent_dim), row.train_mse, row.valid_mse,
                                          row.test_mse, row.test_mse_per_dof});
            } else {
                require(!swp_model.empty(), ErrorCode::InvalidConfig, "--model is required for this sweep");
                const MlpAutoencoder ae = load_model(at(common, swp_model));
                if (swp_kind == "sigmas") {
                    const auto rows = noise_robustness(ae, data.test.configurations, cfg.eval.sigmas,
                                                       cfg.eval.noise_seed, cfg.eval.noise_repeats);
                    table.header = {"sigma", "mse", "mse_per_dof"};
                    for (const NoiseRow& row : rows) table.rows.push_back({row.sigma, row.mse, row.mse_per_dof});
                } else {
                    std::vector<Vec> all = data.train.configurations;
                    all.insert(all.end(), data.valid.configurations.begin(), data.valid.configurations.end());
                    all.insert(all.end(), data.test.configurations.begin(), data.test.configurations.end());
                    const std::size_t nb = std::min(cfg.eval.n_sweep_bases, data.test.size());
                    const std::vector<Vec> bases(data.test.configurations.begin(),
                                                 data.test.configurations.begin() + static_cast<long>(nb));
                    const auto entries = latent_sweep(ae, bases, all, cfg.eval.fractions);
                    table.header = {"base", "latent_index", "fraction"};
                    for (std::size_t i = 0; i < ae.latent_dim(); ++i) table.header.push_back("xi_" + std::to_string(i));
                    for (std::size_t i = 0; i < ae.input_dim(); ++i) table.header.push_back("q_" + std::to_string(i));
                    for (const LatentSweepEntry& e : entries) {
                        std::vector<double> row{static_cast<double>(e.base), static_cast<double>(e.latent_index),
                                                e.fraction};
                        row.insert(row.end(), e.xi.data(), e.xi.data() + e.xi.size());
                        row.insert(row.end(), e.q.data(), e.q.data() + e.q.size());
                        table.rows.push_back(std::move(row));
                    }
                }
            }
            const fs::path csv = dir / ("sweep_" + swp_kind + ".csv");
            write_csv(csv, table);
            write_json(dir / ("sweep_" + swp_kind + ".json"), summary);
            report("sweep", cfg, {csv, dir / ("sweep_" + swp_kind + ".json")});
        }
        return 0;
    } catch (const Error& e) {
        Json j{{"error", std::string(to_string(e.code()))}, {"message", e.what()}, {"exit_code", exit_code(e.code())}};
        std::cerr << dump_json(j, 0);
        return exit_code(e.code());
    } catch (const std::exception& e) {
        Json j{{"error", "Unexpected"}, {"message", e.what()}, {"exit_code", 1}};
        std::cerr << dump_json(j, 0);
        return 1;
    }
}

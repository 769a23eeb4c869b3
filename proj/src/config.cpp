#include "hamroc/config.hpp"

#include <cstdlib>

namespace hamroc {

namespace {

Json sim_to_json(const SimOptions& s) {
    return Json{{"duration", s.duration}, {"dt", s.dt}, {"sample_dt", s.sample_dt}};
}

SimOptions sim_from_json(const Json& j, SimOptions s, const std::string& where) {
    reject_unknown_keys(j, {"duration", "dt", "sample_dt"}, where);
    if (j.contains("duration")) s.duration = json_number(j, "duration");
    if (j.contains("dt")) s.dt = json_number(j, "dt");
    if (j.contains("sample_dt")) s.sample_dt = json_number(j, "sample_dt");
    plan_steps(s);
    return s;
}

Json interval_json(const Interval& r) { return Json::array({r.lo, r.hi}); }

Interval interval_from(const Json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        fail(ErrorCode::SchemaViolation, what + " must be a [lo, hi] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
std::vector<T> list_from(const Json& j, const std::string& what) {
    if (!j.is_array()) fail(ErrorCode::SchemaViolation, what + " must be an array");
    std::vector<T> out;
    for (const Json& v : j) {
        if (!v.is_number()) fail(ErrorCode::SchemaViolation, what + " must contain numbers");
        if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer() || v.get<long long>() < 0)
                fail(ErrorCode::SchemaViolation, what + " must contain non-negative integers");
        }
        out.push_back(v.get<T>());
    }
    return out;
}

int as_int(const Json& j, const std::string& key) { return static_cast<int>(json_uint(j, key)); }

}  // namespace

Json to_json(const RunConfig& cfg) {
    Json j;
    j["generator"] = to_json(cfg.generator);

    Json sim;
    sim["duration"] = cfg.simulation.sim.duration;
    sim["dt"] = cfg.simulation.sim.dt;
    sim["sample_dt"] = cfg.simulation.sim.sample_dt;
    sim["gravity"] = to_json(cfg.simulation.gravity);
    sim["init_amplitude"] = cfg.simulation.init_amplitude;
    sim["init_seed"] = cfg.simulation.init_seed;
    j["simulation"] = std::move(sim);

    const GravityProtocol& p = cfg.dataset.protocol;
    const DatasetOptions& o = cfg.dataset.options;
    Json conditions = Json::array();
    for (const GravityField& g : p.train_conditions) conditions.push_back(to_json(g));
    Json ds;
    ds["seed"] = p.seed;
    ds["train_conditions"] = std::move(conditions);
    ds["g_range"] = interval_json(p.g_range);
    ds["theta_range"] = interval_json(p.theta_range);
    ds["n_test"] = p.n_test;
    ds["simulation"] = sim_to_json(o.sim);
    ds["epsilon"] = o.epsilon;
    ds["init_amplitude"] = o.init_amplitude;
    ds["valid_fraction"] = o.valid_fraction;
    j["dataset"] = std::move(ds);

    const TrainingSection& t = cfg.training;
    Json tr = to_json(t.train);
    tr["latent_dim"] = t.latent_dim;
    tr["init_seed"] = t.init_seed;
    tr["grid"] = t.grid;
    tr["grid_spec"] = Json{{"lr", t.grid_spec.lr},
                           {"weight_decay", t.grid_spec.weight_decay},
                           {"lr_gamma", t.grid_spec.lr_gamma},
                           {"lr_step", t.grid_spec.lr_step}};
    j["training"] = std::move(tr);

    j["reduction"] = Json{{"simulation", sim_to_json(cfg.reduction.sim)}};

    const ControlSection& c = cfg.control;
    Json ctl;
    ctl["n_tasks"] = c.sampling.n_tasks;
    ctl["seed"] = c.sampling.seed;
    ctl["alpha"] = c.sampling.alpha;
    ctl["beta"] = c.sampling.beta;
    ctl["duration"] = c.sampling.duration;
    ctl["n_candidates"] = c.n_candidates;
    ctl["dt"] = c.options.dt;
    ctl["sample_dt"] = c.options.sample_dt;
    ctl["recompute_at_xi"] = c.options.recompute_at_xi;
    ctl["saturation"] = c.options.saturation ? Json(*c.options.saturation) : Json(nullptr);
    ctl["gravity_source"] = c.gravity_source;
    ctl["gravity"] = to_json(c.gravity);
    j["control"] = std::move(ctl);

    const EvalSection& e = cfg.eval;
    Json ev;
    ev["system"] = e.system;
    ev["n_trajectories"] = e.n_trajectories;
    ev["latent_sizes"] = e.latent_sizes;
    ev["sigmas"] = e.sigmas;
    ev["noise_seed"] = e.noise_seed;
    ev["noise_repeats"] = e.noise_repeats;
    ev["fractions"] = e.fractions;
    ev["n_sweep_bases"] = e.n_sweep_bases;
    j["eval"] = std::move(ev);
    return j;
}

RunConfig run_config_from_json(const Json& j) {
    reject_unknown_keys(j, {"generator", "simulation", "dataset", "training", "reduction", "control", "eval"},
                        "config");
    RunConfig cfg;
    if (j.contains("generator")) cfg.generator = generator_config_from_json(j["generator"]);

    if (j.contains("simulation")) {
        const Json& s = j["simulation"];
        reject_unknown_keys(s, {"duration", "dt", "sample_dt", "gravity", "init_amplitude", "init_seed"},
                            "simulation");
        Json timing = Json::object();
        for (const char* k : {"duration", "dt", "sample_dt"})
            if (s.contains(k)) timing[k] = s[k];
        cfg.simulation.sim = sim_from_json(timing, cfg.simulation.sim, "simulation");
        if (s.contains("gravity")) cfg.simulation.gravity = gravity_from_json(s["gravity"]);
        if (s.contains("init_amplitude")) cfg.simulation.init_amplitude = json_number(s, "init_amplitude");
        if (s.contains("init_seed")) cfg.simulation.init_seed = json_uint(s, "init_seed");
    }

    if (j.contains("dataset")) {
        const Json& d = j["dataset"];
        reject_unknown_keys(d,
                            {"seed", "train_conditions", "g_range", "theta_range", "n_test", "simulation",
                             "epsilon", "init_amplitude", "valid_fraction"},
                            "dataset");
        GravityProtocol& p = cfg.dataset.protocol;
        DatasetOptions& o = cfg.dataset.options;
        if (d.contains("seed")) p.seed = json_uint(d, "seed");
        if (d.contains("train_conditions")) {
            p.train_conditions.clear();
            for (const Json& g : d["train_conditions"]) p.train_conditions.push_back(gravity_from_json(g));
        }
        if (d.contains("g_range")) p.g_range = interval_from(d["g_range"], "g_range");
        if (d.contains("theta_range")) p.theta_range = interval_from(d["theta_range"], "theta_range");
        if (d.contains("n_test")) p.n_test = as_int(d, "n_test");
        if (d.contains("simulation")) o.sim = sim_from_json(d["simulation"], o.sim, "dataset.simulation");
        if (d.contains("epsilon")) o.epsilon = json_number(d, "epsilon");
        if (d.contains("init_amplitude")) o.init_amplitude = json_number(d, "init_amplitude");
        if (d.contains("valid_fraction")) o.valid_fraction = json_number(d, "valid_fraction");
    }

    if (j.contains("training")) {
        const Json& t = j["training"];
        reject_unknown_keys(t,
                            {"lr", "weight_decay", "lr_gamma", "lr_step", "epochs", "batch_size", "seed", "adam",
                             "latent_dim", "init_seed", "grid", "grid_spec"},
                            "training");
        Json train = Json::object();
        for (const char* k : {"lr", "weight_decay", "lr_gamma", "lr_step", "epochs", "batch_size", "seed", "adam"})
            if (t.contains(k)) train[k] = t[k];
        cfg.training.train = train_config_from_json(train);
        if (t.contains("latent_dim")) cfg.training.latent_dim = json_uint(t, "latent_dim");
        if (t.contains("init_seed")) cfg.training.init_seed = json_uint(t, "init_seed");
        if (t.contains("grid")) cfg.training.grid = json_bool(t, "grid");
        if (t.contains("grid_spec")) {
            const Json& g = t["grid_spec"];
            reject_unknown_keys(g, {"lr", "weight_decay", "lr_gamma", "lr_step"}, "grid_spec");
            GridSpec& gs = cfg.training.grid_spec;
            if (g.contains("lr")) gs.lr = list_from<double>(g["lr"], "grid_spec.lr");
            if (g.contains("weight_decay")) gs.weight_decay = list_from<double>(g["weight_decay"], "grid_spec.weight_decay");
            if (g.contains("lr_gamma")) gs.lr_gamma = list_from<double>(g["lr_gamma"], "grid_spec.lr_gamma");
            if (g.contains("lr_step")) gs.lr_step = list_from<int>(g["lr_step"], "grid_spec.lr_step");
        }
        if (cfg.training.latent_dim < 1) fail(ErrorCode::InvalidConfig, "latent_dim must be >= 1");
    }

    if (j.contains("reduction")) {
        const Json& r = j["reduction"];
        reject_unknown_keys(r, {"simulation"}, "reduction");
        if (r.contains("simulation"))
            cfg.reduction.sim = sim_from_json(r["simulation"], cfg.reduction.sim, "reduction.simulation");
    }

    if (j.contains("control")) {
        const Json& c = j["control"];
        reject_unknown_keys(c,
                            {"n_tasks", "seed", "alpha", "beta", "duration", "n_candidates", "dt", "sample_dt",
                             "recompute_at_xi", "saturation", "gravity_source", "gravity"},
                            "control");
        ControlSection& cs = cfg.control;
        if (c.contains("n_tasks")) cs.sampling.n_tasks = json_uint(c, "n_tasks");
        if (c.contains("seed")) cs.sampling.seed = json_uint(c, "seed");
        if (c.contains("alpha")) cs.sampling.alpha = json_number(c, "alpha");
        if (c.contains("beta")) cs.sampling.beta = json_number(c, "beta");
        if (c.contains("duration")) cs.sampling.duration = json_number(c, "duration");
        if (c.contains("n_candidates")) cs.n_candidates = json_uint(c, "n_candidates");
        if (c.contains("dt")) cs.options.dt = json_number(c, "dt");
        if (c.contains("sample_dt")) cs.options.sample_dt = json_number(c, "sample_dt");
        if (c.contains("recompute_at_xi")) cs.options.recompute_at_xi = json_bool(c, "recompute_at_xi");
        if (c.contains("saturation")) {
            if (c["saturation"].is_null()) cs.options.saturation.reset();
            else cs.options.saturation = json_number(c, "saturation");
        }
        if (c.contains("gravity_source")) cs.gravity_source = json_string(c, "gravity_source");
        if (cs.gravity_source != "target" && cs.gravity_source != "fixed")
            fail(ErrorCode::InvalidConfig, "control.gravity_source must be 'target' or 'fixed'");
        if (c.contains("gravity")) cs.gravity = gravity_from_json(c["gravity"]);
        if (!(cs.sampling.alpha > 0.0) || !(cs.sampling.beta > 0.0))
            fail(ErrorCode::InvalidConfig, "control gains must be > 0");
        if (cs.options.saturation && !(*cs.options.saturation > 0.0))
            fail(ErrorCode::InvalidConfig, "control saturation must be > 0");
        plan_steps({cs.sampling.duration, cs.options.dt, cs.options.sample_dt});
    }

    if (j.contains("eval")) {
        const Json& e = j["eval"];
        reject_unknown_keys(e,
                            {"system", "n_trajectories", "latent_sizes", "sigmas", "noise_seed", "noise_repeats",
                             "fractions", "n_sweep_bases"},
                            "eval");
        EvalSection& es = cfg.eval;
        if (e.contains("system")) es.system = json_string(e, "system");
        if (e.contains("n_trajectories")) es.n_trajectories = json_uint(e, "n_trajectories");
        if (e.contains("latent_sizes")) es.latent_sizes = list_from<std::size_t>(e["latent_sizes"], "latent_sizes");
        if (e.contains("sigmas")) es.sigmas = list_from<double>(e["sigmas"], "sigmas");
        if (e.contains("noise_seed")) es.noise_seed = json_uint(e, "noise_seed");
        if (e.contains("noise_repeats")) es.noise_repeats = as_int(e, "noise_repeats");
        if (e.contains("fractions")) es.fractions = list_from<double>(e["fractions"], "fractions");
        if (e.contains("n_sweep_bases")) es.n_sweep_bases = json_uint(e, "n_sweep_bases");
    }
    return cfg;
}

RunConfig load_run_config(const fs::path& path) { return run_config_from_json(read_json(path)); }

std::string config_hash(const RunConfig& cfg) { return sha256_hex(dump_json(to_json(cfg))); }

Json seeds_json(const RunConfig& cfg) {
    return Json{{"generator", cfg.generator.seed},
                {"simulation_init", cfg.simulation.init_seed},
                {"dataset", cfg.dataset.protocol.seed},
                {"training_init", cfg.training.init_seed},
                {"training_shuffle", cfg.training.train.seed},
                {"control", cfg.control.sampling.seed},
                {"eval_noise", cfg.eval.noise_seed}};
}

fs::path workspace_root(const std::optional<std::string>& explicit_root) {
    if (explicit_root && !explicit_root->empty()) return fs::absolute(*explicit_root);
    if (const char* env = std::getenv("HAMROC_WORKSPACE"); env && *env) return fs::absolute(env);
    return fs::current_path();
}

fs::path resolve_path(const fs::path& root, const fs::path& p) {
    if (p.empty() || p.is_absolute()) return p;
    return root / p;
}

}  // namespace hamroc

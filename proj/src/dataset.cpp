#include "hamroc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace hamroc {

std::string to_string(Split split) {
    switch (split) {
        case Split::Train: return "train";
        case Split::Valid: return "valid";
        case Split::Test: return "test";
    }
    return "unknown";
}

std::vector<std::size_t> epsilon_filter_indices(const std::vector<Vec>& configs, double epsilon) {
    require(epsilon > 0.0, ErrorCode::InvalidConfig, "epsilon must be > 0");
    std::vector<std::size_t> kept;
    const double eps2 = epsilon * epsilon;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        bool far = true;
        for (std::size_t k : kept) {
            if ((configs[i] - configs[k]).squaredNorm() < eps2) {
                far = false;
                break;
            }
        }
        if (far) {
            kept.push_back(i);
        }
    }
    return kept;
}

std::vector<Vec> epsilon_filter(const std::vector<Vec>& configs, double epsilon) {
    std::vector<Vec> out;
    for (std::size_t i : epsilon_filter_indices(configs, epsilon)) {
        out.push_back(configs[i]);
    }
    return out;
}

GravityProtocol GravityProtocol::reference() {
    using std::numbers::pi;
    GravityProtocol p;
    const double g[7] = {9.81, 9.81, 9.81, 9.81, 9.81, 6.0, 14.0};
    const double theta[7] = {-0.75 * pi, -pi / 3.0, -0.25 * pi, -2.0 * pi / 3.0,
                             0.5 * pi,   -pi / 3.0, -2.0 * pi / 3.0};
    for (int i = 0; i < 7; ++i) {
        p.train_conditions.push_back(GravityField::make(g[i], theta[i]));
    }
    return p;
}

std::vector<GravityField> sample_test_conditions(const GravityProtocol& protocol) {
    require(protocol.g_range.lo <= protocol.g_range.hi && protocol.g_range.lo >= 0.0,
            ErrorCode::InvalidConfig, "gravity intensity range is ill-formed");
    require(protocol.theta_range.lo <= protocol.theta_range.hi, ErrorCode::InvalidConfig,
            "gravity angle range is ill-formed");
    require(protocol.n_test >= 0, ErrorCode::InvalidConfig, "n_test must be >= 0");
    std::mt19937_64 rng(protocol.seed);
    std::uniform_real_distribution<double> gd(protocol.g_range.lo, protocol.g_range.hi);
    std::uniform_real_distribution<double> td(protocol.theta_range.lo, protocol.theta_range.hi);
    std::vector<GravityField> out;
    for (int i = 0; i < protocol.n_test; ++i) {
        const double g = gd(rng);
        const double th = td(rng);
        out.push_back(GravityField::make(g, th));
    }
    return out;
}

std::uint64_t simulation_seed(std::uint64_t protocol_seed, std::size_t id) {
    std::seed_seq seq{static_cast<std::uint32_t>(protocol_seed & 0xffffffffu),
                      static_cast<std::uint32_t>(protocol_seed >> 32),
                      static_cast<std::uint32_t>(id), 0x5eedu};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

DatasetBundle build_dataset(const MassSpringNetwork& net, const GravityProtocol& protocol,
                            const DatasetOptions& opts) {
    require(!protocol.train_conditions.empty(), ErrorCode::InvalidConfig,
            "protocol needs at least one training condition");
    require(opts.valid_fraction > 0.0 && opts.valid_fraction < 1.0, ErrorCode::InvalidConfig,
            "valid_fraction must lie in (0, 1)");
    const std::size_t n_train_sims = protocol.train_conditions.size();
    std::size_t n_valid = static_cast<std::size_t>(
        std::lround(opts.valid_fraction * static_cast<double>(n_train_sims)));
    n_valid = std::max<std::size_t>(n_valid, 1);
    require(n_valid < n_train_sims, ErrorCode::InvalidConfig,
            "train/valid partition needs at least two training simulations and one left for training");

    DatasetBundle bundle;
    bundle.train.split = Split::Train;
    bundle.valid.split = Split::Valid;
    bundle.test.split = Split::Test;
    bundle.train.epsilon = bundle.valid.epsilon = bundle.test.epsilon = opts.epsilon;

    std::vector<std::pair<GravityField, Split>> conditions;
    for (std::size_t i = 0; i < n_train_sims; ++i) {
        conditions.emplace_back(protocol.train_conditions[i],
                                i + n_valid >= n_train_sims ? Split::Valid : Split::Train);
    }
    for (const GravityField& g : sample_test_conditions(protocol)) {
        conditions.emplace_back(g, Split::Test);
    }

    for (std::size_t id = 0; id < conditions.size(); ++id) {
        const auto& [grav, split] = conditions[id];
        SimulationRecord rec;
        rec.id = id;
        rec.split = split;
        rec.gravity = grav;
        rec.init_seed = simulation_seed(protocol.seed, id);
        const Vec q0 = random_initial_configuration(net, rec.init_seed, opts.init_amplitude);
        rec.trajectory =
            simulate_full(net, grav, q0, Vec::Zero(net.dof_count()), opts.sim, std::nullopt);

        std::vector<Vec> configs;
        configs.reserve(rec.trajectory.states.size());
        for (const FullState& s : rec.trajectory.states) {
            configs.push_back(s.q);
        }
        ConfigurationDataset& target = split == Split::Train   ? bundle.train
                                       : split == Split::Valid ? bundle.valid
                                                               : bundle.test;
        for (std::size_t k : epsilon_filter_indices(configs, opts.epsilon)) {
            target.configurations.push_back(configs[k]);
            target.sources.push_back({id, rec.trajectory.states[k].t});
        }
        bundle.simulations.push_back(std::move(rec));
    }
    return bundle;
}

}  // namespace hamroc

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hamroc/full_sim.hpp"

namespace hamroc {

enum class Split { Train, Valid, Test };

std::string to_string(Split split);

struct SourceTag {
    std::size_t simulation = 0;
    double t = 0.0;
};

struct ConfigurationDataset {
    std::vector<Vec> configurations;
    std::vector<SourceTag> sources;
    Split split = Split::Train;
    double epsilon = 0.1;

    std::size_t size() const { return configurations.size(); }
    bool empty() const { return configurations.empty(); }
};

/// Greedy time-ordered pass: keeps a configuration iff it lies at least
/// `epsilon` away from every configuration kept so far. Returns kept indices.
std::vector<std::size_t> epsilon_filter_indices(const std::vector<Vec>& configs, double epsilon);
std::vector<Vec> epsilon_filter(const std::vector<Vec>& configs, double epsilon);

struct GravityProtocol {
    std::vector<GravityField> train_conditions;
    Interval g_range{3.0, 17.0};
    Interval theta_range{-0.75 * 3.14159265358979323846, -0.25 * 3.14159265358979323846};
    int n_test = 28;
    std::uint64_t seed = 0;

    /// Seven training conditions paired positionally from the published
    /// intensity and angle lists, and 28 test conditions.
    static GravityProtocol reference();
};

/// Deterministic test conditions drawn uniformly from the protocol ranges.
std::vector<GravityField> sample_test_conditions(const GravityProtocol& protocol);

struct DatasetOptions {
    SimOptions sim{10.0, 1e-3, 0.02};
    double epsilon = 0.1;
    double init_amplitude = 0.1;  // m
    /// Fraction of training-condition simulations withheld (from the end) for validation.
    double valid_fraction = 1.0 / 7.0;
};

struct SimulationRecord {
    std::size_t id = 0;
    Split split = Split::Train;
    GravityField gravity;
    std::uint64_t init_seed = 0;
    Trajectory trajectory;
};

struct DatasetBundle {
    ConfigurationDataset train;
    ConfigurationDataset valid;
    ConfigurationDataset test;
    std::vector<SimulationRecord> simulations;
};

/// Seed used for the initial configuration of simulation `id`.
std::uint64_t simulation_seed(std::uint64_t protocol_seed, std::size_t id);

DatasetBundle build_dataset(const MassSpringNetwork& net, const GravityProtocol& protocol,
                            const DatasetOptions& opts);

}  // namespace hamroc

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hamroc/control.hpp"
#include "hamroc/eval.hpp"

namespace hamroc {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

/// Decimal with 17 significant digits, enough to round-trip any double.
std::string format_double(double x);
double parse_double(std::string_view text);

/// Serializes with fixed key order and 17-significant-digit numbers.
std::string dump_json(const Json& j, int indent = 2);
Json parse_json(const std::string& text, const std::string& origin = "<memory>");

std::string sha256_hex(std::string_view data);
std::string sha256_file(const fs::path& path);

std::string read_text(const fs::path& path);
/// Creates parent directories as needed.
void write_text(const fs::path& path, const std::string& content);

Json read_json(const fs::path& path);
void write_json(const fs::path& path, const Json& j);

/// Accessors that raise SchemaViolation with the offending key in the message.
const Json& json_at(const Json& obj, const std::string& key);
double json_number(const Json& obj, const std::string& key);
std::uint64_t json_uint(const Json& obj, const std::string& key);
std::string json_string(const Json& obj, const std::string& key);
bool json_bool(const Json& obj, const std::string& key);
void reject_unknown_keys(const Json& obj, const std::vector<std::string>& allowed, const std::string& where);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const;
};

std::string to_csv(const CsvTable& table);
CsvTable parse_csv(const std::string& text, const std::string& origin = "<memory>");
CsvTable read_csv(const fs::path& path);
void write_csv(const fs::path& path, const CsvTable& table);

// Network files.
Json to_json(const GeneratorConfig& cfg);
GeneratorConfig generator_config_from_json(const Json& j);
Json to_json(const MassSpringNetwork& net);
MassSpringNetwork network_from_json(const Json& j);
void save_network(const fs::path& path, const MassSpringNetwork& net);
MassSpringNetwork load_network(const fs::path& path);

Json to_json(const GravityField& g);
GravityField gravity_from_json(const Json& j);

// Trajectory files: CSV plus a JSON sidecar at `<path>.json`.
fs::path sidecar_path(const fs::path& csv_path);
CsvTable trajectory_table(const Trajectory& tr);
void save_trajectory(const fs::path& path, const Trajectory& tr, const Json& extra_meta = Json::object());
Trajectory load_trajectory(const fs::path& path);

// Dataset files.
CsvTable configuration_table(const ConfigurationDataset& ds);
ConfigurationDataset configurations_from_table(const CsvTable& table, Split split, double epsilon);
/// Writes train/valid/test CSVs, test trajectories and manifest.json under `dir`.
void save_dataset(const fs::path& dir, const DatasetBundle& bundle, const GravityProtocol& protocol,
                  const DatasetOptions& opts, const Json& extra_meta = Json::object());
struct LoadedDataset {
    ConfigurationDataset train;
    ConfigurationDataset valid;
    ConfigurationDataset test;
    std::vector<Trajectory> test_trajectories;
    Json manifest;
};
LoadedDataset load_dataset(const fs::path& dir, bool with_trajectories = true);

// Model files.
Json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const Json& j);
Json to_json(const MlpAutoencoder& ae, const TrainConfig* cfg = nullptr, const LossHistory* history = nullptr);
MlpAutoencoder model_from_json(const Json& j);
void save_model(const fs::path& path, const MlpAutoencoder& ae, const TrainConfig* cfg = nullptr,
                const LossHistory* history = nullptr, const Json& extra_meta = Json::object());
MlpAutoencoder load_model(const fs::path& path);

// Reduced-model outputs.
CsvTable latent_table(const LatentTrajectory& tr);
CsvTable reconstruction_table(const ReconstructedTrajectory& rec);

// Control outputs.
CsvTable control_log_table(const ControlLog& log);
Json to_json(const ControlSummary& s);

// Evaluation outputs.
/// Columns t, p20, median, p80; MSE metrics also carry *_total columns (times n).
CsvTable report_metric_table(const EvalReport& report, const std::string& metric);
Json report_summary(const EvalReport& report);

}  // namespace hamroc

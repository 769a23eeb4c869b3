#include "hamroc/io.hpp"

#include <openssl/evp.h>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace hamroc {

std::string format_double(double x) {
    if (!std::isfinite(x)) fail(ErrorCode::NonFiniteValue, "cannot serialize a non-finite number");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

double parse_double(std::string_view text) {
    const std::string s(text);
    if (s.empty()) fail(ErrorCode::SchemaViolation, "empty numeric field");
    char* end = nullptr;
    errno = 0;
    const double x = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || (errno == ERANGE && std::isinf(x)))
        fail(ErrorCode::SchemaViolation, "malformed number '" + s + "'");
    return x;
}

namespace {

void dump_rec(const Json& j, int indent, int depth, std::string& out) {
    const std::string pad = indent > 0 ? "\n" + std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
    const std::string close = indent > 0 ? "\n" + std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) { out += "{}"; return; }
            out += '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ',';
                first = false;
                out += pad;
                out += Json(it.key()).dump();
                out += indent > 0 ? ": " : ":";
                dump_rec(it.value(), indent, depth + 1, out);
            }
            out += close;
            out += '}';
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) { out += "[]"; return; }
            // Arrays of plain numbers stay on one line.
            bool flat = true;
            for (const Json& v : j) flat = flat && v.is_number();
            out += '[';
            bool first = true;
            for (const Json& v : j) {
                if (!first) out += flat ? ", " : ",";
                first = false;
                if (!flat) out += pad;
                dump_rec(v, indent, depth + 1, out);
            }
            if (!flat) out += close;
            out += ']';
            return;
        }
        case Json::value_t::number_float:
            out += format_double(j.get<double>());
            return;
        default:
            out += j.dump();
    }
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
    std::string out;
    dump_rec(j, indent, 0, out);
    out += '\n';
    return out;
}

Json parse_json(const std::string& text, const std::string& origin) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::SchemaViolation, origin + ": invalid JSON: " + e.what());
    }
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        fail(ErrorCode::IoFailure, "SHA-256 digest failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return os.str();
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_text(path)); }

std::string read_text(const fs::path& path) {
    if (!fs::exists(path)) fail(ErrorCode::MissingFile, "missing file: " + path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
    out << content;
    if (!out) fail(ErrorCode::IoFailure, "write failed for " + path.string());
}

Json read_json(const fs::path& path) { return parse_json(read_text(path), path.string()); }

void write_json(const fs::path& path, const Json& j) { write_text(path, dump_json(j)); }

const Json& json_at(const Json& obj, const std::string& key) {
    if (!obj.is_object() || !obj.contains(key)) fail(ErrorCode::SchemaViolation, "missing key '" + key + "'");
    return obj.at(key);
}

double json_number(const Json& obj, const std::string& key) {
    const Json& v = json_at(obj, key);
    if (!v.is_number()) fail(ErrorCode::SchemaViolation, "key '" + key + "' must be a number");
    return v.get<double>();
}

std::uint64_t json_uint(const Json& obj, const std::string& key) {
    const Json& v = json_at(obj, key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        fail(ErrorCode::SchemaViolation, "key '" + key + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

std::string json_string(const Json& obj, const std::string& key) {
    const Json& v = json_at(obj, key);
    if (!v.is_string()) fail(ErrorCode::SchemaViolation, "key '" + key + "' must be a string");
    return v.get<std::string>();
}

bool json_bool(const Json& obj, const std::string& key) {
    const Json& v = json_at(obj, key);
    if (!v.is_boolean()) fail(ErrorCode::SchemaViolation, "key '" + key + "' must be a boolean");
    return v.get<bool>();
}

void reject_unknown_keys(const Json& obj, const std::vector<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) fail(ErrorCode::SchemaViolation, where + " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            fail(ErrorCode::SchemaViolation, "unknown key '" + it.key() + "' in " + where);
    }
}

// ---------------------------------------------------------------- CSV

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    fail(ErrorCode::SchemaViolation, "missing CSV column '" + name + "'");
}

std::string to_csv(const CsvTable& table) {
    std::string out;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (i) out += ',';
        out += table.header[i];
    }
    out += '\n';
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size())
            fail(ErrorCode::DimensionMismatch, "CSV row width differs from the header");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_double(row[i]);
        }
        out += '\n';
    }
    return out;
}

CsvTable parse_csv(const std::string& text, const std::string& origin) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    auto split = [](const std::string& l) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(l);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!l.empty() && l.back() == ',') cells.emplace_back();
        return cells;
    };
    if (!std::getline(in, line)) fail(ErrorCode::SchemaViolation, origin + ": empty CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    table.header = split(line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != table.header.size())
            fail(ErrorCode::SchemaViolation, origin + ": line " + std::to_string(lineno) + " has " +
                                                 std::to_string(cells.size()) + " fields, expected " +
                                                 std::to_string(table.header.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_double(c));
        table.rows.push_back(std::move(row));
    }
    return table;
}

CsvTable read_csv(const fs::path& path) { return parse_csv(read_text(path), path.string()); }

void write_csv(const fs::path& path, const CsvTable& table) { write_text(path, to_csv(table)); }

namespace {

void append_names(std::vector<std::string>& header, const std::string& prefix, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) header.push_back(prefix + std::to_string(i));
}

void append_values(std::vector<double>& row, const Vec& v) {
    row.insert(row.end(), v.data(), v.data() + v.size());
}

Vec slice(const std::vector<double>& row, std::size_t offset, std::size_t count) {
    Vec v(static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i) v[static_cast<Eigen::Index>(i)] = row[offset + i];
    return v;
}

Json vec_to_json(const Vec& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Vec vec_from_json(const Json& a, const std::string& what) {
    if (!a.is_array()) fail(ErrorCode::SchemaViolation, what + " must be an array");
    Vec v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number()) fail(ErrorCode::SchemaViolation, what + " must contain numbers");
        v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
    }
    return v;
}

Json interval_to_json(const Interval& r) { return Json::array({r.lo, r.hi}); }

Interval interval_from_json(const Json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        fail(ErrorCode::SchemaViolation, what + " must be a [lo, hi] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

// ---------------------------------------------------------------- networks

Json to_json(const GeneratorConfig& cfg) {
    Json j;
    j["seed"] = cfg.seed;
    j["n_base_cells"] = cfg.n_base_cells;
    j["lateral_attach_probability"] = cfg.lateral_attach_probability;
    j["cell_size"] = cfg.cell_size;
    j["mass_range"] = interval_to_json(cfg.mass_range);
    j["stiffness_range"] = interval_to_json(cfg.stiffness_range);
    j["damping_range"] = interval_to_json(cfg.damping_range);
    j["lateral_cells"] = cfg.lateral_cells;
    j["first_cell"] = cfg.first_cell == CellShape::Square ? "square" : "triangle";
    return j;
}

GeneratorConfig generator_config_from_json(const Json& j) {
    reject_unknown_keys(j,
                        {"seed", "n_base_cells", "lateral_attach_probability", "cell_size", "mass_range",
                         "stiffness_range", "damping_range", "lateral_cells", "first_cell"},
                        "generator");
    GeneratorConfig cfg;
    if (j.contains("seed")) cfg.seed = json_uint(j, "seed");
    if (j.contains("n_base_cells")) cfg.n_base_cells = static_cast<int>(json_uint(j, "n_base_cells"));
    if (j.contains("lateral_attach_probability"))
        cfg.lateral_attach_probability = json_number(j, "lateral_attach_probability");
    if (j.contains("cell_size")) cfg.cell_size = json_number(j, "cell_size");
    if (j.contains("mass_range")) cfg.mass_range = interval_from_json(j["mass_range"], "mass_range");
    if (j.contains("stiffness_range"))
        cfg.stiffness_range = interval_from_json(j["stiffness_range"], "stiffness_range");
    if (j.contains("damping_range")) cfg.damping_range = interval_from_json(j["damping_range"], "damping_range");
    if (j.contains("lateral_cells")) cfg.lateral_cells = static_cast<int>(json_uint(j, "lateral_cells"));
    if (j.contains("first_cell")) {
        const std::string s = json_string(j, "first_cell");
        if (s == "square") cfg.first_cell = CellShape::Square;
        else if (s == "triangle") cfg.first_cell = CellShape::Triangle;
        else fail(ErrorCode::SchemaViolation, "first_cell must be 'square' or 'triangle'");
    }
    return cfg;
}

Json to_json(const MassSpringNetwork& net) {
    Json j;
    Json nodes = Json::array();
    for (const Node& n : net.nodes())
        nodes.push_back(Json{{"mass", n.mass}, {"x0", n.x0}, {"y0", n.y0}, {"pinned", n.pinned}});
    Json edges = Json::array();
    for (const Edge& e : net.edges())
        edges.push_back(
            Json{{"i", e.i}, {"j", e.j}, {"k", e.stiffness}, {"c", e.damping}, {"l0", e.rest_length}});
    j["nodes"] = std::move(nodes);
    j["edges"] = std::move(edges);
    Json meta;
    const auto& gen = net.meta().generator;
    meta["seed"] = gen ? Json(gen->seed) : Json(nullptr);
    meta["generator_config"] = gen ? to_json(*gen) : Json(nullptr);
    meta["lateral_nodes"] = net.meta().lateral_nodes;
    j["meta"] = std::move(meta);
    return j;
}

MassSpringNetwork network_from_json(const Json& j) {
    reject_unknown_keys(j, {"nodes", "edges", "meta"}, "network");
    std::vector<Node> nodes;
    const Json& jn = json_at(j, "nodes");
    if (!jn.is_array()) fail(ErrorCode::SchemaViolation, "nodes must be an array");
    for (const Json& n : jn) {
        reject_unknown_keys(n, {"mass", "x0", "y0", "pinned"}, "node");
        nodes.push_back({json_number(n, "mass"), json_number(n, "x0"), json_number(n, "y0"), json_bool(n, "pinned")});
    }
    std::vector<Edge> edges;
    const Json& je = json_at(j, "edges");
    if (!je.is_array()) fail(ErrorCode::SchemaViolation, "edges must be an array");
    for (const Json& e : je) {
        reject_unknown_keys(e, {"i", "j", "k", "c", "l0"}, "edge");
        edges.push_back({json_uint(e, "i"), json_uint(e, "j"), json_number(e, "k"), json_number(e, "c"),
                         json_number(e, "l0")});
    }
    NetworkMeta meta;
    if (j.contains("meta")) {
        const Json& m = j["meta"];
        reject_unknown_keys(m, {"seed", "generator_config", "lateral_nodes"}, "network meta");
        if (m.contains("generator_config") && !m["generator_config"].is_null())
            meta.generator = generator_config_from_json(m["generator_config"]);
        if (m.contains("lateral_nodes")) {
            for (const Json& v : m["lateral_nodes"]) {
                if (!v.is_number_unsigned()) fail(ErrorCode::SchemaViolation, "lateral_nodes must hold indices");
                meta.lateral_nodes.push_back(v.get<NodeIndex>());
            }
        }
    }
    return MassSpringNetwork(std::move(nodes), std::move(edges), std::move(meta));
}

void save_network(const fs::path& path, const MassSpringNetwork& net) { write_json(path, to_json(net)); }

MassSpringNetwork load_network(const fs::path& path) { return network_from_json(read_json(path)); }

Json to_json(const GravityField& g) { return Json{{"g", g.g}, {"theta", g.theta}}; }

GravityField gravity_from_json(const Json& j) {
    reject_unknown_keys(j, {"g", "theta"}, "gravity");
    return GravityField::make(json_number(j, "g"), json_number(j, "theta"));
}

// ---------------------------------------------------------------- trajectories

fs::path sidecar_path(const fs::path& csv_path) { return fs::path(csv_path.string() + ".json"); }

CsvTable trajectory_table(const Trajectory& tr) {
    require(!tr.states.empty(), ErrorCode::InvalidConfig, "empty trajectory");
    const std::size_t n = static_cast<std::size_t>(tr.states.front().q.size());
    CsvTable table;
    table.header.push_back("t");
    append_names(table.header, "q_", n);
    append_names(table.header, "p_", n);
    for (const FullState& s : tr.states) {
        std::vector<double> row{s.t};
        append_values(row, s.q);
        append_values(row, s.p);
        table.rows.push_back(std::move(row));
    }
    return table;
}

void save_trajectory(const fs::path& path, const Trajectory& tr, const Json& extra_meta) {
    write_csv(path, trajectory_table(tr));
    Json meta;
    meta["gravity"] = to_json(tr.gravity);
    meta["dt"] = tr.dt;
    meta["sample_dt"] = tr.sample_dt;
    meta["actuated"] = tr.actuated ? Json(*tr.actuated) : Json(nullptr);
    for (auto it = extra_meta.begin(); it != extra_meta.end(); ++it) meta[it.key()] = it.value();
    write_json(sidecar_path(path), meta);
}

Trajectory load_trajectory(const fs::path& path) {
    const CsvTable table = read_csv(path);
    const Json meta = read_json(sidecar_path(path));
    // Reconstructions carry a trailing eta column.
    const bool has_eta = !table.header.empty() && table.header.back() == "eta";
    const std::size_t width = table.header.size() - (has_eta ? 1 : 0);
    if (table.header.empty() || table.header[0] != "t" || width % 2 != 1 || width < 3)
        fail(ErrorCode::SchemaViolation, path.string() + ": expected header t,q_*,p_*");
    const std::size_t n = (width - 1) / 2;
    for (std::size_t i = 0; i < n; ++i) {
        if (table.header[1 + i] != "q_" + std::to_string(i) || table.header[1 + n + i] != "p_" + std::to_string(i))
            fail(ErrorCode::SchemaViolation, path.string() + ": unexpected column names");
    }
    Trajectory tr;
    tr.gravity = gravity_from_json(json_at(meta, "gravity"));
    tr.dt = json_number(meta, "dt");
    tr.sample_dt = json_number(meta, "sample_dt");
    if (meta.contains("actuated") && !meta["actuated"].is_null()) tr.actuated = json_uint(meta, "actuated");
    for (const auto& row : table.rows) tr.states.push_back({slice(row, 1, n), slice(row, 1 + n, n), row[0]});
    return tr;
}

// ---------------------------------------------------------------- datasets

CsvTable configuration_table(const ConfigurationDataset& ds) {
    CsvTable table;
    const std::size_t n = ds.empty() ? 0 : static_cast<std::size_t>(ds.configurations.front().size());
    append_names(table.header, "q_", n);
    for (const Vec& q : ds.configurations) {
        std::vector<double> row;
        append_values(row, q);
        table.rows.push_back(std::move(row));
    }
    return table;
}

ConfigurationDataset configurations_from_table(const CsvTable& table, Split split, double epsilon) {
    ConfigurationDataset ds;
    ds.split = split;
    ds.epsilon = epsilon;
    for (std::size_t i = 0; i < table.header.size(); ++i)
        if (table.header[i] != "q_" + std::to_string(i))
            fail(ErrorCode::SchemaViolation, "configuration CSV columns must be q_0..q_{n-1}");
    for (const auto& row : table.rows) ds.configurations.push_back(slice(row, 0, row.size()));
    return ds;
}

namespace {

std::string trajectory_file_name(std::size_t id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "sim_%03zu.csv", id);
    return std::string("trajectories/") + buf;
}

}  // namespace

void save_dataset(const fs::path& dir, const DatasetBundle& bundle, const GravityProtocol& protocol,
                  const DatasetOptions& opts, const Json& extra_meta) {
    Json manifest;
    manifest["seed"] = protocol.seed;
    manifest["epsilon"] = opts.epsilon;
    manifest["init_amplitude"] = opts.init_amplitude;
    manifest["valid_fraction"] = opts.valid_fraction;
    manifest["simulation"] = Json{{"duration", opts.sim.duration}, {"dt", opts.sim.dt}, {"sample_dt", opts.sim.sample_dt}};
    Json conditions = Json::array();
    for (const GravityField& g : protocol.train_conditions) conditions.push_back(to_json(g));
    manifest["protocol"] = Json{{"train_conditions", conditions},
                                {"g_range", interval_to_json(protocol.g_range)},
                                {"theta_range", interval_to_json(protocol.theta_range)},
                                {"n_test", protocol.n_test}};
    Json splits;
    for (const ConfigurationDataset* ds : {&bundle.train, &bundle.valid, &bundle.test}) {
        const std::string name = to_string(ds->split);
        write_csv(dir / (name + ".csv"), configuration_table(*ds));
        Json sources = Json::array();
        for (const SourceTag& s : ds->sources) sources.push_back(Json::array({s.simulation, s.t}));
        splits[name] = Json{{"file", name + ".csv"}, {"count", ds->size()}, {"sources", sources}};
    }
    manifest["splits"] = std::move(splits);
    Json sims = Json::array();
    for (const SimulationRecord& rec : bundle.simulations) {
        Json s{{"id", rec.id},
               {"split", to_string(rec.split)},
               {"gravity", to_json(rec.gravity)},
               {"init_seed", rec.init_seed}};
        if (rec.split == Split::Test) {
            const std::string file = trajectory_file_name(rec.id);
            save_trajectory(dir / file, rec.trajectory, extra_meta);
            s["trajectory"] = file;
        } else {
            s["trajectory"] = nullptr;
        }
        sims.push_back(std::move(s));
    }
    manifest["simulations"] = std::move(sims);
    for (auto it = extra_meta.begin(); it != extra_meta.end(); ++it) manifest[it.key()] = it.value();
    write_json(dir / "manifest.json", manifest);
}

LoadedDataset load_dataset(const fs::path& dir, bool with_trajectories) {
    LoadedDataset out;
    out.manifest = read_json(dir / "manifest.json");
    const double eps = json_number(out.manifest, "epsilon");
    const Json& splits = json_at(out.manifest, "splits");
    auto load_split = [&](Split split) {
        const std::string name = to_string(split);
        const Json& entry = json_at(splits, name);
        ConfigurationDataset ds = configurations_from_table(read_csv(dir / json_string(entry, "file")), split, eps);
        if (ds.size() != json_uint(entry, "count"))
            fail(ErrorCode::SchemaViolation, name + " split size differs from the manifest");
        for (const Json& s : json_at(entry, "sources"))
            ds.sources.push_back({s.at(0).get<std::size_t>(), s.at(1).get<double>()});
        return ds;
    };
    out.train = load_split(Split::Train);
    out.valid = load_split(Split::Valid);
    out.test = load_split(Split::Test);
    if (with_trajectories) {
        for (const Json& s : json_at(out.manifest, "simulations")) {
            if (json_string(s, "split") != "test") continue;
            out.test_trajectories.push_back(load_trajectory(dir / json_string(s, "trajectory")));
        }
    }
    return out;
}

// ---------------------------------------------------------------- models

Json to_json(const TrainConfig& cfg) {
    return Json{{"lr", cfg.lr},
                {"weight_decay", cfg.weight_decay},
                {"lr_gamma", cfg.lr_gamma},
                {"lr_step", cfg.lr_step},
                {"epochs", cfg.epochs},
                {"batch_size", cfg.batch_size},
                {"seed", cfg.seed},
                {"adam", Json{{"beta1", cfg.adam.beta1}, {"beta2", cfg.adam.beta2}, {"epsilon", cfg.adam.epsilon}}}};
}

TrainConfig train_config_from_json(const Json& j) {
    reject_unknown_keys(j, {"lr", "weight_decay", "lr_gamma", "lr_step", "epochs", "batch_size", "seed", "adam"},
                        "train_config");
    TrainConfig cfg;
    if (j.contains("lr")) cfg.lr = json_number(j, "lr");
    if (j.contains("weight_decay")) cfg.weight_decay = json_number(j, "weight_decay");
    if (j.contains("lr_gamma")) cfg.lr_gamma = json_number(j, "lr_gamma");
    if (j.contains("lr_step")) cfg.lr_step = static_cast<int>(json_uint(j, "lr_step"));
    if (j.contains("epochs")) cfg.epochs = static_cast<int>(json_uint(j, "epochs"));
    if (j.contains("batch_size")) cfg.batch_size = static_cast<int>(json_uint(j, "batch_size"));
    if (j.contains("seed")) cfg.seed = json_uint(j, "seed");
    if (j.contains("adam")) {
        const Json& a = j["adam"];
        reject_unknown_keys(a, {"beta1", "beta2", "epsilon"}, "adam");
        if (a.contains("beta1")) cfg.adam.beta1 = json_number(a, "beta1");
        if (a.contains("beta2")) cfg.adam.beta2 = json_number(a, "beta2");
        if (a.contains("epsilon")) cfg.adam.epsilon = json_number(a, "epsilon");
    }
    validate(cfg);
    return cfg;
}

namespace {

Json chain_to_json(const LayerChain& chain) {
    Json a = Json::array();
    for (const DenseLayer& l : chain) {
        Json w = Json::array();
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
        a.push_back(Json{{"in", l.spec.in_dim},
                         {"out", l.spec.out_dim},
                         {"activation", to_string(l.spec.activation)},
                         {"weights", std::move(w)},
                         {"biases", vec_to_json(l.biases)}});
    }
    return a;
}

LayerChain chain_from_json(const Json& a, const std::string& what) {
    if (!a.is_array() || a.empty()) fail(ErrorCode::SchemaViolation, what + " must be a non-empty array");
    LayerChain chain;
    for (const Json& l : a) {
        reject_unknown_keys(l, {"in", "out", "activation", "weights", "biases"}, what + " layer");
        DenseLayer layer;
        layer.spec.in_dim = json_uint(l, "in");
        layer.spec.out_dim = json_uint(l, "out");
        try {
            layer.spec.activation = activation_from_string(json_string(l, "activation"));
        } catch (const Error& e) {
            fail(ErrorCode::SchemaViolation, e.what());
        }
        const Vec w = vec_from_json(json_at(l, "weights"), "weights");
        if (static_cast<std::size_t>(w.size()) != layer.spec.in_dim * layer.spec.out_dim)
            fail(ErrorCode::SchemaViolation, what + " weights size differs from in*out");
        layer.weights = Eigen::Map<const Mat>(w.data(), static_cast<Eigen::Index>(layer.spec.out_dim),
                                              static_cast<Eigen::Index>(layer.spec.in_dim));
        layer.biases = vec_from_json(json_at(l, "biases"), "biases");
        chain.push_back(std::move(layer));
    }
    return chain;
}

}  // namespace

Json to_json(const MlpAutoencoder& ae, const TrainConfig* cfg, const LossHistory* history) {
    Json j;
    j["latent_dim"] = ae.latent_dim();
    j["encoder"] = chain_to_json(ae.encoder());
    j["decoder"] = chain_to_json(ae.decoder());
    j["train_config"] = cfg ? to_json(*cfg) : Json(nullptr);
    if (history) {
        Json h;
        h["train"] = history->train;
        h["valid"] = history->valid;
        j["loss_history"] = std::move(h);
    } else {
        j["loss_history"] = nullptr;
    }
    return j;
}

MlpAutoencoder model_from_json(const Json& j) {
    if (!j.is_object()) fail(ErrorCode::SchemaViolation, "model must be an object");
    MlpAutoencoder ae(chain_from_json(json_at(j, "encoder"), "encoder"),
                      chain_from_json(json_at(j, "decoder"), "decoder"));
    if (ae.latent_dim() != json_uint(j, "latent_dim"))
        fail(ErrorCode::SchemaViolation, "latent_dim differs from the encoder output width");
    return ae;
}

void save_model(const fs::path& path, const MlpAutoencoder& ae, const TrainConfig* cfg, const LossHistory* history,
                const Json& extra_meta) {
    Json j = to_json(ae, cfg, history);
    for (auto it = extra_meta.begin(); it != extra_meta.end(); ++it) j[it.key()] = it.value();
    write_json(path, j);
}

MlpAutoencoder load_model(const fs::path& path) {
    try {
        return model_from_json(read_json(path));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::DimensionMismatch || e.code() == ErrorCode::InvalidConfig)
            fail(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
        throw;
    }
}

// ---------------------------------------------------------------- reduced outputs

CsvTable latent_table(const LatentTrajectory& tr) {
    require(!tr.states.empty(), ErrorCode::InvalidConfig, "empty latent trajectory");
    const std::size_t m = static_cast<std::size_t>(tr.states.front().xi.size());
    CsvTable table;
    table.header.push_back("t");
    append_names(table.header, "xi_", m);
    append_names(table.header, "pi_", m);
    table.header.push_back("eta");
    for (std::size_t k = 0; k < tr.states.size(); ++k) {
        const LatentState& s = tr.states[k];
        std::vector<double> row{s.t};
        append_values(row, s.xi);
        append_values(row, s.pi);
        row.push_back(tr.energy[k]);
        table.rows.push_back(std::move(row));
    }
    return table;
}

CsvTable reconstruction_table(const ReconstructedTrajectory& rec) {
    CsvTable table = trajectory_table(rec.full);
    table.header.push_back("eta");
    for (std::size_t k = 0; k < table.rows.size(); ++k) table.rows[k].push_back(rec.eta[k]);
    return table;
}

// ---------------------------------------------------------------- control outputs

CsvTable control_log_table(const ControlLog& log) {
    require(!log.records.empty(), ErrorCode::InvalidConfig, "empty control log");
    const std::size_t m = static_cast<std::size_t>(log.records.front().xi.size());
    CsvTable table;
    table.header = {"t", "mse_norm", "lyapunov", "u_x", "u_y"};
    append_names(table.header, "xi_", m);
    append_names(table.header, "xibar_", m);
    for (const ControlRecord& r : log.records) {
        std::vector<double> row{r.t, r.mse_norm, r.lyapunov, r.u[0], r.u[1]};
        append_values(row, r.xi);
        append_values(row, r.xi_bar);
        table.rows.push_back(std::move(row));
    }
    return table;
}

Json to_json(const ControlSummary& s) {
    Json j;
    j["t"] = s.t;
    j["mse_p25"] = s.mse_p25;
    j["mse_median"] = s.mse_median;
    j["mse_p75"] = s.mse_p75;
    j["latent_error_ratio"] = s.latent_error_ratio;
    return j;
}

// ---------------------------------------------------------------- evaluation outputs

CsvTable report_metric_table(const EvalReport& report, const std::string& metric) {
    const Band* band = nullptr;
    bool with_total = true;
    if (metric == "q") band = &report.q;
    else if (metric == "q_dot") band = &report.q_dot;
    else if (metric == "energy") { band = &report.energy; with_total = false; }
    else fail(ErrorCode::InvalidConfig, "unknown metric '" + metric + "'");
    CsvTable table;
    table.header = {"t", "p20", "median", "p80"};
    if (with_total) {
        table.header.insert(table.header.end(), {"p20_total", "median_total", "p80_total"});
    }
    const double n = static_cast<double>(report.dof);
    for (std::size_t k = 0; k < report.t.size(); ++k) {
        std::vector<double> row{report.t[k], band->p20[k], band->median[k], band->p80[k]};
        if (with_total) row.insert(row.end(), {n * band->p20[k], n * band->median[k], n * band->p80[k]});
        table.rows.push_back(std::move(row));
    }
    return table;
}

Json report_summary(const EvalReport& report) {
    Json j;
    j["mode"] = report.mode;
    j["dof"] = report.dof;
    j["n_trajectories"] = report.trajectories.size();
    j["n_steps"] = report.t.size();
    j["mean_mse_q"] = report.mean_q();
    j["mean_mse_q_total"] = report.mean_q() * static_cast<double>(report.dof);
    j["mean_energy_error"] = report.mean_energy();
    j["median_relative_error"] = report.median_relative_error();
    j["relative_error_definition"] = "time average of |q_rec - q| / |q - q_rest| per trajectory";
    Json rel = Json::array();
    for (const auto& e : report.trajectories) rel.push_back(e.relative_error);
    j["relative_error"] = std::move(rel);
    return j;
}

}  // namespace hamroc

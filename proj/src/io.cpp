#include "vmgcn/io.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <json.hpp>
#include <sstream>

#include "vmgcn/csv.hpp"
#include "vmgcn/errors.hpp"

namespace vmgcn {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Aggregation a) { return a == Aggregation::Sum ? "sum" : "mean"; }

Aggregation aggregation_from_string(const std::string& s) {
    if (s == "sum") return Aggregation::Sum;
    if (s == "mean") return Aggregation::Mean;
    throw InvalidConfig("aggregation must be 'sum' or 'mean', got '" + s + "'");
}

void IngestConfig::validate() const {
    if (input_step.count() <= 0) throw InvalidConfig("input step must be positive");
    if (block < 1) throw InvalidConfig("aggregation block must be >= 1");
    if (!(max_missing >= 0.0 && max_missing < 1.0)) throw InvalidConfig("max_missing must be in [0, 1)");
}

std::vector<double> aggregate_blocks(std::span<const double> x, int block, Aggregation mode) {
    if (block < 1) throw InvalidConfig("aggregation block must be >= 1");
    const std::size_t b = static_cast<std::size_t>(block);
    std::vector<double> out(x.size() / b, 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < b; ++j) s += x[i * b + j];
        out[i] = mode == Aggregation::Sum ? s : s / static_cast<double>(b);
    }
    return out;
}

std::size_t fill_gaps(std::vector<double>& values, const std::vector<bool>& present) {
    if (values.size() != present.size()) throw ShapeMismatch("fill_gaps: values and mask differ in length");
    std::vector<std::size_t> known;
    for (std::size_t i = 0; i < present.size(); ++i)
        if (present[i]) known.push_back(i);
    if (known.empty()) throw InvalidInput("fill_gaps: no samples present");

    std::size_t filled = 0;
    for (std::size_t i = 0; i < known.front(); ++i, ++filled) values[i] = values[known.front()];
    for (std::size_t i = known.back() + 1; i < values.size(); ++i, ++filled) values[i] = values[known.back()];
    for (std::size_t k = 0; k + 1 < known.size(); ++k) {
        const std::size_t a = known[k], b = known[k + 1];
        for (std::size_t i = a + 1; i < b; ++i, ++filled) {
            const double w = static_cast<double>(i - a) / static_cast<double>(b - a);
            values[i] = (1.0 - w) * values[a] + w * values[b];
        }
    }
    return filled;
}

namespace {

std::string list_lines(const std::vector<std::size_t>& lines) {
    std::string s;
    for (std::size_t i = 0; i < lines.size() && i < 10; ++i) s += (i ? ", " : "") + std::to_string(lines[i]);
    if (lines.size() > 10) s += ", ...";
    return s;
}

bool parse_time(const std::string& s, Timestamp& out) {
    try {
        out = parse_timestamp(s);
        return true;
    } catch (const InvalidInput&) {
        return false;
    }
}

}  // namespace

IngestResult ingest_flows(std::istream& flows, const IngestConfig& cfg) {
    cfg.validate();
    struct Row {
        Timestamp t;
        double v;
        std::size_t line;
    };
    std::map<std::string, std::vector<Row>> by_node;
    std::vector<std::size_t> bad;
    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    while (std::getline(flows, line)) {
        ++lineno;
        if (csv::trim(line).empty()) continue;
        const auto f = csv::split(line);
        if (first) {
            first = false;
            if (!f.empty() && f[0] == "timestamp") continue;
        }
        Row r{};
        r.line = lineno;
        if (f.size() != 3 || f[1].empty() || !parse_time(f[0], r.t) || !csv::to_double(f[2], r.v) ||
            !std::isfinite(r.v)) {
            bad.push_back(lineno);
            continue;
        }
        by_node[f[1]].push_back(r);
    }
    if (!bad.empty())
        throw ParseError("flows: " + std::to_string(bad.size()) + " malformed row(s) at line(s) " + list_lines(bad),
                         bad);
    if (by_node.empty()) throw InvalidInput("flows: no data rows");

    Timestamp t0 = Timestamp::max(), t1 = Timestamp::min();
    for (const auto& [id, rows] : by_node)
        for (const auto& r : rows) {
            t0 = std::min(t0, r.t);
            t1 = std::max(t1, r.t);
        }
    const std::int64_t step = cfg.input_step.count();
    for (const auto& [id, rows] : by_node)
        for (const auto& r : rows)
            if ((r.t - t0).count() % step != 0)
                throw AlignmentError("flows: node " + id + " at line " + std::to_string(r.line) + " (" +
                                     format_timestamp(r.t) + ") is off the " + std::to_string(step) +
                                     " s clock starting " + format_timestamp(t0));

    const std::size_t n = static_cast<std::size_t>((t1 - t0).count() / step) + 1;
    IngestResult out;
    out.dropped_tail = n % static_cast<std::size_t>(cfg.block);
    for (const auto& [id, rows] : by_node) {
        std::vector<double> values(n, 0.0);
        std::vector<bool> present(n, false);
        std::vector<std::size_t> seen_line(n, 0);
        for (const auto& r : rows) {
            const auto i = static_cast<std::size_t>((r.t - t0).count() / step);
            if (present[i])
                throw ParseError("flows: duplicate sample for node " + id + " at lines " +
                                     std::to_string(seen_line[i]) + " and " + std::to_string(r.line),
                                 {seen_line[i], r.line});
            present[i] = true;
            seen_line[i] = r.line;
            values[i] = r.v;
        }
        NodeIngestReport rep;
        rep.node_id = id;
        rep.missing = n - rows.size();
        rep.missing_fraction = static_cast<double>(rep.missing) / static_cast<double>(n);
        rep.rejected = rep.missing_fraction > cfg.max_missing;
        if (!rep.rejected) {
            rep.interpolated = fill_gaps(values, present);
            TimeSeries s;
            s.node_id = id;
            s.start_time = t0;
            s.step = cfg.input_step * cfg.block;
            s.values = aggregate_blocks(values, cfg.block, cfg.aggregation);
            out.series.push_back(std::move(s));
        }
        out.reports.push_back(rep);
    }
    if (out.series.empty()) throw InvalidInput("flows: every node exceeded the missing-data limit");
    if (out.series.front().values.empty()) throw InvalidInput("flows: fewer samples than one aggregation block");
    return out;
}

void write_series_csv(std::ostream& os, const std::vector<TimeSeries>& series) {
    if (series.empty()) throw InvalidInput("no series to write");
    os << "timestamp";
    for (const auto& s : series) os << ',' << s.node_id;
    os << '\n';
    for (std::size_t t = 0; t < series.front().size(); ++t) {
        os << format_timestamp(series.front().time_at(t));
        for (const auto& s : series) {
            if (s.size() != series.front().size()) throw ShapeMismatch("series differ in length");
            os << ',' << csv::format(s.values[t]);
        }
        os << '\n';
    }
}

std::vector<TimeSeries> read_series_csv(std::istream& is) {
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(is, line)) throw InvalidInput("series CSV is empty");
    const auto header = csv::split(line);
    if (header.size() < 2 || header[0] != "timestamp") throw ParseError("series CSV: bad header at line 1", {1});
    std::vector<TimeSeries> out(header.size() - 1);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].node_id = header[i + 1];
    std::vector<Timestamp> times;
    while (std::getline(is, line)) {
        ++lineno;
        if (csv::trim(line).empty()) continue;
        const auto f = csv::split(line);
        Timestamp t;
        if (f.size() != header.size() || !parse_time(f[0], t))
            throw ParseError("series CSV: malformed row at line " + std::to_string(lineno), {lineno});
        for (std::size_t i = 0; i < out.size(); ++i) {
            double v = 0.0;
            if (!csv::to_double(f[i + 1], v))
                throw ParseError("series CSV: bad value at line " + std::to_string(lineno), {lineno});
            out[i].values.push_back(v);
        }
        times.push_back(t);
    }
    if (times.empty()) throw InvalidInput("series CSV has no rows");
    const auto step = times.size() > 1 ? times[1] - times[0] : std::chrono::seconds(std::chrono::minutes(15));
    for (std::size_t i = 1; i < times.size(); ++i)
        if (times[i] - times[i - 1] != step || step.count() <= 0)
            throw AlignmentError("series CSV: irregular clock at row " + std::to_string(i + 1));
    for (auto& s : out) {
        s.start_time = times.front();
        s.step = step;
    }
    return out;
}

void write_flows_csv(std::ostream& os, const std::vector<TimeSeries>& series, int block) {
    if (series.empty()) throw InvalidInput("no series to write");
    if (block < 1) throw InvalidConfig("block must be >= 1");
    const auto sub = series.front().step / block;
    os << "timestamp,node_id,count\n";
    for (std::size_t t = 0; t < series.front().size(); ++t)
        for (int j = 0; j < block; ++j)
            for (const auto& s : series)
                os << format_timestamp(s.time_at(t) + sub * j) << ',' << s.node_id << ','
                   << csv::format(s.values[t] / block) << '\n';
}

RoadGraph align_graph(const RoadGraph& g, const std::vector<std::string>& node_ids) {
    std::map<std::string, Eigen::Index> pos;
    for (std::size_t i = 0; i < g.node_ids.size(); ++i) pos[g.node_ids[i]] = static_cast<Eigen::Index>(i);
    std::vector<Eigen::Index> idx;
    for (const auto& id : node_ids) {
        auto it = pos.find(id);
        if (it == pos.end()) throw AlignmentError("node " + id + " has flows but no graph entry");
        idx.push_back(it->second);
    }
    RoadGraph out;
    out.node_ids = node_ids;
    const auto n = static_cast<Eigen::Index>(idx.size());
    out.distances.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) out.distances(i, j) = g.distances(idx[i], idx[j]);
    if (g.adjacency.size()) {
        out.adjacency.resize(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) out.adjacency(i, j) = g.adjacency(idx[i], idx[j]);
    }
    for (auto i : idx)
        if (static_cast<std::size_t>(i) < g.metadata.size()) out.metadata.push_back(g.metadata[static_cast<std::size_t>(i)]);
    return out;
}

void write_nodes_csv(std::ostream& os, const RoadGraph& g) {
    os << "node_id,lat,lon,lanes\n";
    for (std::size_t i = 0; i < g.size(); ++i) {
        const NodeMeta m = i < g.metadata.size() ? g.metadata[i] : NodeMeta{};
        os << g.node_ids[i] << ',' << csv::format(m.latitude) << ',' << csv::format(m.longitude) << ','
           << m.lane_count << '\n';
    }
}

void write_distances_csv(std::ostream& os, const RoadGraph& g) {
    os << "id_a,id_b,distance_km\n";
    for (Eigen::Index i = 0; i < g.distances.rows(); ++i)
        for (Eigen::Index j = i + 1; j < g.distances.cols(); ++j)
            if (std::isfinite(g.distances(i, j)))
                os << g.node_ids[static_cast<std::size_t>(i)] << ',' << g.node_ids[static_cast<std::size_t>(j)] << ','
                   << csv::format(g.distances(i, j)) << '\n';
}

// ---------------------------------------------------------------------------
// RunConfig
// ---------------------------------------------------------------------------

namespace {

json config_to_json(const RunConfig& c) {
    json j;
    j["data"] = {{"flows", c.flows_path},
                 {"nodes", c.nodes_path},
                 {"distances", c.distances_path},
                 {"aggregation", to_string(c.ingest.aggregation)},
                 {"block", c.ingest.block},
                 {"input_step_s", c.ingest.input_step.count()},
                 {"max_missing", c.ingest.max_missing}};
    j["vmd"] = {{"K", c.vmd.num_modes},       {"alpha", c.vmd.alpha},
                {"tau", c.vmd.tau},           {"epsilon", c.vmd.epsilon},
                {"max_iter", c.vmd.max_iter}, {"omega_init", to_string(c.vmd.omega_init)},
                {"seed", c.vmd.seed}};
    j["select"] = {{"sample_fraction", c.select.sample_fraction},
                   {"k_min", c.select.k_min},
                   {"k_max", c.select.k_max},
                   {"zeta", c.select.zeta},
                   {"seed", c.select.seed}};
    j["graph"] = {{"sigma", c.sigma}, {"r", c.r}};
    j["model"] = {{"variant", to_string(c.variant)}, {"blocks", c.model.blocks},
                  {"cheb_order", c.model.cheb_order}, {"channels", c.model.channels},
                  {"time_kernel", c.model.time_kernel}, {"window", c.model.window},
                  {"horizon", c.model.horizon},      {"seed", c.model.seed}};
    j["train"] = {{"lr", c.train.learning_rate},
                  {"beta1", c.train.beta1},
                  {"beta2", c.train.beta2},
                  {"eps", c.train.eps},
                  {"batch_size", c.train.batch_size},
                  {"max_epochs", c.train.max_epochs},
                  {"patience", c.train.patience},
                  {"seed", c.train.seed},
                  {"threads", c.train.threads},
                  {"loss", c.train.loss == LossKind::MAE ? "mae" : "mse"}};
    j["split"] = {{"train", c.split.train}, {"val", c.split.val}};
    j["eval"] = {{"mask_threshold", c.mask_threshold}};
    j["output"] = {{"dir", c.output_dir}, {"cache_dir", c.cache_dir}};
    return j;
}

LossKind loss_from_string(const std::string& s) {
    if (s == "mae") return LossKind::MAE;
    if (s == "mse") return LossKind::MSE;
    throw InvalidConfig("train.loss must be 'mae' or 'mse', got '" + s + "'");
}

RunConfig config_from_json(const json& j) {
    RunConfig c;
    const auto& d = j.at("data");
    c.flows_path = d.at("flows").get<std::string>();
    c.nodes_path = d.at("nodes").get<std::string>();
    c.distances_path = d.at("distances").get<std::string>();
    c.ingest.aggregation = aggregation_from_string(d.at("aggregation").get<std::string>());
    c.ingest.block = d.at("block").get<int>();
    c.ingest.input_step = std::chrono::seconds(d.at("input_step_s").get<std::int64_t>());
    c.ingest.max_missing = d.at("max_missing").get<double>();
    const auto& v = j.at("vmd");
    c.vmd.num_modes = v.at("K").get<int>();
    c.vmd.alpha = v.at("alpha").get<double>();
    c.vmd.tau = v.at("tau").get<double>();
    c.vmd.epsilon = v.at("epsilon").get<double>();
    c.vmd.max_iter = v.at("max_iter").get<int>();
    c.vmd.omega_init = omega_init_from_string(v.at("omega_init").get<std::string>());
    c.vmd.seed = v.at("seed").get<std::uint64_t>();
    const auto& s = j.at("select");
    c.select.sample_fraction = s.at("sample_fraction").get<double>();
    c.select.k_min = s.at("k_min").get<int>();
    c.select.k_max = s.at("k_max").get<int>();
    c.select.zeta = s.at("zeta").get<double>();
    c.select.seed = s.at("seed").get<std::uint64_t>();
    c.sigma = j.at("graph").at("sigma").get<double>();
    c.r = j.at("graph").at("r").get<double>();
    const auto& m = j.at("model");
    c.variant = variant_from_string(m.at("variant").get<std::string>());
    c.model.blocks = m.at("blocks").get<int>();
    c.model.cheb_order = m.at("cheb_order").get<int>();
    c.model.channels = m.at("channels").get<int>();
    c.model.time_kernel = m.at("time_kernel").get<int>();
    c.model.window = m.at("window").get<int>();
    c.model.horizon = m.at("horizon").get<int>();
    c.model.seed = m.at("seed").get<std::uint64_t>();
    const auto& t = j.at("train");
    c.train.learning_rate = t.at("lr").get<double>();
    c.train.beta1 = t.at("beta1").get<double>();
    c.train.beta2 = t.at("beta2").get<double>();
    c.train.eps = t.at("eps").get<double>();
    c.train.batch_size = t.at("batch_size").get<int>();
    c.train.max_epochs = t.at("max_epochs").get<int>();
    c.train.patience = t.at("patience").get<int>();
    c.train.seed = t.at("seed").get<std::uint64_t>();
    c.train.threads = t.at("threads").get<unsigned>();
    c.train.loss = loss_from_string(t.at("loss").get<std::string>());
    c.split.train = j.at("split").at("train").get<double>();
    c.split.val = j.at("split").at("val").get<double>();
    c.mask_threshold = j.at("eval").at("mask_threshold").get<double>();
    c.output_dir = j.at("output").at("dir").get<std::string>();
    c.cache_dir = j.at("output").at("cache_dir").get<std::string>();
    return c;
}

// Overlays `user` onto `base`, refusing keys the base does not have.
void merge_strict(json& base, const json& user, const std::string& where) {
    if (!user.is_object()) throw InvalidConfig(where.empty() ? "config must be a JSON object" : where + " must be an object");
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string key = where.empty() ? it.key() : where + "." + it.key();
        if (!base.contains(it.key())) throw InvalidConfig("unknown config key '" + key + "'");
        json& slot = base[it.key()];
        if (slot.is_object())
            merge_strict(slot, it.value(), key);
        else if (it->is_object() || it->is_array() || it->is_null())
            throw InvalidConfig("config key '" + key + "' needs a scalar value");
        else
            slot = it.value();
    }
}

RunConfig decode(const json& j) {
    try {
        return config_from_json(j);
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("config value has the wrong type: ") + e.what());
    }
}

void resolve_path(std::string& p, const fs::path& base) {
    if (!p.empty() && !base.empty() && fs::path(p).is_relative()) p = (base / p).lexically_normal().string();
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text, const fs::path& base_dir) {
    json user;
    try {
        user = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidConfig(std::string("config is not valid JSON: ") + e.what());
    }
    json merged = config_to_json(RunConfig{});
    merge_strict(merged, user, "");
    RunConfig c = decode(merged);
    resolve_path(c.flows_path, base_dir);
    resolve_path(c.nodes_path, base_dir);
    resolve_path(c.distances_path, base_dir);
    return c;
}

RunConfig RunConfig::load(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw InvalidConfig("cannot read config file " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str(), file.parent_path());
}

std::string RunConfig::to_json_text() const { return config_to_json(*this).dump(2) + "\n"; }

void RunConfig::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw InvalidConfig("override must look like section.key=value: " + assignment);
    const std::string path = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    const auto dot = path.find('.');
    if (dot == std::string::npos) throw InvalidConfig("override key must be section.key: " + path);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    json patch;
    patch[path.substr(0, dot)][path.substr(dot + 1)] = value;
    json merged = config_to_json(*this);
    // a string slot keeps the literal text even when it parses as a number
    if (merged.contains(path.substr(0, dot)) && merged[path.substr(0, dot)].contains(path.substr(dot + 1)) &&
        merged[path.substr(0, dot)][path.substr(dot + 1)].is_string() && !value.is_string())
        patch[path.substr(0, dot)][path.substr(dot + 1)] = text;
    merge_strict(merged, patch, "");
    try {
        *this = decode(merged);
    } catch (const InvalidConfig& e) {
        throw InvalidConfig(path + ": " + e.what());
    }
}

void RunConfig::validate() const {
    ingest.validate();
    vmd.validate();
    select.validate();
    if (!std::isfinite(sigma)) throw InvalidConfig("graph.sigma must be finite");
    if (!(r >= 0.0 && r <= 1.0)) throw InvalidConfig("graph.r must be in [0, 1]");
    ModelConfig m = model;
    m.nodes = 1;
    m.in_channels = 1;
    m.validate();
    train.validate();
    split.validate();
    if (!(mask_threshold >= 0.0)) throw InvalidConfig("eval.mask_threshold must be >= 0");
    if (output_dir.empty()) throw InvalidConfig("output.dir must not be empty");
}

fs::path resolve_cache_dir(const RunConfig& cfg) {
    if (const char* env = std::getenv("VMGCN_CACHE_DIR"); env && *env) return env;
    return cfg.cache_dir;
}

void atomic_write(const fs::path& path, const std::function<void(std::ostream&)>& writer) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    try {
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw InvalidInput("cannot write " + tmp.string());
            writer(out);
            out.flush();
            if (!out) throw InvalidInput("write failed for " + tmp.string());
        }
        fs::rename(tmp, path);
    } catch (...) {
        std::error_code ec;
        fs::remove(tmp, ec);
        throw;
    }
}

std::uint64_t file_fingerprint(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return fingerprint(ss.str());
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

namespace {

std::string hex_of(const std::string& text) { return fingerprint_hex(fingerprint(text)); }

std::string require_path(const std::string& p, const char* key) {
    if (p.empty()) throw InvalidConfig(std::string("data.") + key + " is not set");
    return p;
}

Eigen::MatrixXd read_dense_csv(std::istream& is, std::vector<std::string>& ids) {
    std::string line;
    if (!std::getline(is, line)) throw InvalidInput("dense CSV is empty");
    auto header = csv::split(line);
    ids.assign(header.begin() + 1, header.end());
    const auto n = static_cast<Eigen::Index>(ids.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::getline(is, line)) throw InvalidInput("dense CSV is truncated");
        const auto f = csv::split(line);
        if (static_cast<Eigen::Index>(f.size()) != n + 1) throw InvalidInput("dense CSV row has the wrong width");
        for (Eigen::Index j = 0; j < n; ++j)
            if (!csv::to_double(f[static_cast<std::size_t>(j + 1)], m(i, j))) throw InvalidInput("dense CSV has a bad value");
    }
    return m;
}

std::vector<EpochRecord> read_history(std::istream& is) {
    std::string line;
    std::getline(is, line);
    std::vector<EpochRecord> h;
    while (std::getline(is, line)) {
        const auto f = csv::split(line);
        long long e = 0;
        EpochRecord r;
        if (f.size() != 3 || !csv::to_int(f[0], e) || !csv::to_double(f[1], r.train_mae) ||
            !csv::to_double(f[2], r.val_mae))
            throw InvalidInput("cached history is malformed");
        r.epoch = static_cast<int>(e);
        h.push_back(r);
    }
    return h;
}

ModeSelection read_selection(std::istream& is, const ModeSelectConfig& cfg, std::size_t nodes) {
    std::string line;
    std::getline(is, line);
    ModeSelection sel;
    while (std::getline(is, line)) {
        const auto f = csv::split(line);
        long long k = 0;
        LossPoint p;
        if (f.size() != 3 || !csv::to_int(f[0], k) || !csv::to_double(f[1], p.mean_loss) ||
            (f[2] != "true" && f[2] != "false"))
            throw InvalidInput("cached k selection is malformed");
        p.k = static_cast<int>(k);
        p.qualifying = f[2] == "true";
        sel.curve.push_back(p);
    }
    sel.k = cfg.k_max;
    for (const auto& p : sel.curve)
        if (p.qualifying) {
            sel.k = p.k;
            sel.threshold_met = true;
            break;
        }
    sel.sampled_nodes = sample_nodes(nodes, cfg.sample_fraction, cfg.seed);
    return sel;
}

}  // namespace

Pipeline::Pipeline(RunConfig cfg, std::ostream* log) : cfg_(std::move(cfg)), log_(log) {
    cfg_.validate();
    cache_dir_ = resolve_cache_dir(cfg_);
}

void Pipeline::notice(const std::string& msg) {
    if (log_) *log_ << "vmgcn: " << msg << '\n';
}

std::optional<std::string> Pipeline::read_cached(const std::string& name, const std::string& fp) {
    const fs::path path = cache_dir_ / name;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        ++misses_;
        return std::nullopt;
    }
    std::string first;
    std::getline(in, first);
    const std::string want = "#fingerprint " + fp;
    if (first != want) {
        ++misses_;
        notice("stale cache " + path.string() + " (" + first + ", want " + fp + "), recomputing");
        return std::nullopt;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    ++hits_;
    notice("cache hit " + path.string());
    return ss.str();
}

std::string Pipeline::series_fingerprint() {
    if (!series_fp_) {
        const std::string flows = require_path(cfg_.flows_path, "flows");
        json j = config_to_json(cfg_)["data"];
        j.erase("flows");
        j.erase("nodes");
        j.erase("distances");
        series_fp_ = hex_of("series " + fingerprint_hex(file_fingerprint(flows)) + " " + j.dump());
    }
    return *series_fp_;
}

std::string Pipeline::modes_fingerprint() { return hex_of("modes " + series_fingerprint() + " " + cfg_.vmd.canonical()); }

std::string Pipeline::graph_fingerprint() {
    const std::string nodes = require_path(cfg_.nodes_path, "nodes");
    const std::string dist = require_path(cfg_.distances_path, "distances");
    return hex_of("graph " + series_fingerprint() + " " + fingerprint_hex(file_fingerprint(nodes)) + " " +
                  fingerprint_hex(file_fingerprint(dist)) + " " + config_to_json(cfg_)["graph"].dump());
}

std::string Pipeline::selection_fingerprint() {
    VmdConfig base = cfg_.vmd;
    base.num_modes = 1;  // overridden per K
    return hex_of("select " + series_fingerprint() + " " + base.canonical() + " " +
                  config_to_json(cfg_)["select"].dump());
}

std::string Pipeline::model_fingerprint() {
    json t = config_to_json(cfg_)["train"];
    t.erase("threads");  // results do not depend on it
    const json j = config_to_json(cfg_);
    return hex_of("model " + modes_fingerprint() + " " + graph_fingerprint() + " " + j["model"].dump() + " " +
                  t.dump() + " " + j["split"].dump());
}

const std::vector<TimeSeries>& Pipeline::series() {
    if (series_) return *series_;
    const std::string fp = series_fingerprint();
    if (auto text = read_cached("series.csv", fp)) {
        std::istringstream is(*text);
        series_ = read_series_csv(is);
        return *series_;
    }
    std::ifstream in(cfg_.flows_path);
    if (!in) throw InvalidInput("cannot read flows file " + cfg_.flows_path);
    IngestResult r = ingest_flows(in, cfg_.ingest);
    std::size_t filled = 0;
    for (const auto& rep : r.reports) {
        filled += rep.interpolated;
        if (rep.rejected)
            notice("rejected node " + rep.node_id + ": " + std::to_string(rep.missing) + " missing samples (" +
                   csv::format(100.0 * rep.missing_fraction) + "%)");
    }
    notice("ingested " + std::to_string(r.series.size()) + " nodes, " + std::to_string(filled) +
           " interpolated samples");
    atomic_write(cache_dir_ / "series.csv", [&](std::ostream& os) {
        os << "#fingerprint " << fp << '\n';
        write_series_csv(os, r.series);
    });
    series_ = std::move(r.series);
    return *series_;
}

const RoadGraph& Pipeline::graph() {
    if (graph_) return *graph_;
    const std::string fp = graph_fingerprint();
    std::vector<std::string> ids;
    for (const auto& s : series()) ids.push_back(s.node_id);

    std::ifstream nodes(cfg_.nodes_path), dist(cfg_.distances_path);
    if (!nodes || !dist) throw InvalidInput("cannot read graph files");
    RoadGraph g = align_graph(read_road_graph(nodes, dist), ids);
    if (auto text = read_cached("adjacency.csv", fp)) {
        std::istringstream is(*text);
        std::vector<std::string> cached_ids;
        g.adjacency = read_dense_csv(is, cached_ids);
        if (cached_ids != ids) throw Inconsistency("cached adjacency node order differs from the series");
    } else {
        const double sigma = cfg_.sigma > 0.0 ? cfg_.sigma : distance_sigma(g.distances);
        g.adjacency = build_adjacency(g.distances, sigma, cfg_.r);
        atomic_write(cache_dir_ / "adjacency.csv", [&](std::ostream& os) {
            os << "#fingerprint " << fp << '\n';
            write_dense_csv(os, g.node_ids, g.adjacency);
        });
    }
    graph_ = std::move(g);
    return *graph_;
}

const SpectralOps& Pipeline::spectral() {
    if (!spectral_) spectral_ = make_spectral_ops(graph().adjacency, cfg_.model.cheb_order);
    return *spectral_;
}

const std::vector<ModeSet>& Pipeline::modes() {
    if (modes_) return *modes_;
    const std::string fp = modes_fingerprint();
    const auto& raw = series();
    if (auto text = read_cached("modes.txt", fp)) {
        std::istringstream is(*text);
        ModeCache mc = read_mode_cache(is);
        if (mc.entries.size() != raw.size()) throw Inconsistency("cached modes do not match the series");
        std::vector<ModeSet> out;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (mc.entries[i].node_id != raw[i].node_id) throw Inconsistency("cached modes are out of node order");
            out.push_back(std::move(mc.entries[i].modes));
        }
        modes_ = std::move(out);
        return *modes_;
    }
    auto out = decompose_all(raw, cfg_.vmd, cfg_.train.threads);
    std::size_t unconverged = 0;
    for (const auto& m : out) unconverged += m.converged ? 0 : 1;
    if (unconverged) notice(std::to_string(unconverged) + " node(s) hit the VMD iteration cap");
    std::vector<ModeCacheEntry> entries;
    for (std::size_t i = 0; i < raw.size(); ++i) entries.push_back({raw[i].node_id, out[i]});
    atomic_write(cache_dir_ / "modes.txt", [&](std::ostream& os) {
        os << "#fingerprint " << fp << '\n';
        write_mode_cache(os, cfg_.vmd, std::stoull(fp, nullptr, 16), entries);
    });
    modes_ = std::move(out);
    return *modes_;
}

const ModeSelection& Pipeline::selection() {
    if (selection_) return *selection_;
    const std::string fp = selection_fingerprint();
    const auto& raw = series();
    if (auto text = read_cached("k_selection.csv", fp)) {
        std::istringstream is(*text);
        selection_ = read_selection(is, cfg_.select, raw.size());
        return *selection_;
    }
    ModeSelection sel = select_num_modes(raw, cfg_.select, cfg_.vmd, cfg_.train.threads);
    atomic_write(cache_dir_ / "k_selection.csv", [&](std::ostream& os) {
        os << "#fingerprint " << fp << '\n';
        write_k_selection_csv(os, sel);
    });
    selection_ = std::move(sel);
    return *selection_;
}

const WindowedDataset& Pipeline::dataset() {
    if (!dataset_)
        dataset_ = make_dataset(series(), modes(), cfg_.variant, cfg_.model.window, cfg_.model.horizon, cfg_.split);
    return *dataset_;
}

const TrainedModel& Pipeline::trained_cached() {
    if (trained_) return *trained_;
    const std::string fp = model_fingerprint();
    auto ckpt = read_cached("model.json", fp);
    auto hist = ckpt ? read_cached("history.csv", fp) : std::nullopt;
    if (!ckpt || !hist) throw MissingArtifact("no trained model in " + cache_dir_.string() + " for this configuration; run 'train' first");
    TrainedModel tm;
    std::istringstream ci(*ckpt), hi(*hist);
    tm.checkpoint = read_checkpoint(ci);
    tm.history = read_history(hi);
    for (const auto& e : tm.history)
        if (e.val_mae < tm.history[static_cast<std::size_t>(tm.best_epoch)].val_mae) tm.best_epoch = e.epoch;
    trained_ = std::move(tm);
    return *trained_;
}

const TrainedModel& Pipeline::trained() {
    if (trained_) return *trained_;
    try {
        return trained_cached();
    } catch (const MissingArtifact&) {
    }
    const std::string fp = model_fingerprint();
    const auto& ds = dataset();
    ModelConfig mc = cfg_.model;
    mc.nodes = static_cast<int>(ds.nodes());
    mc.in_channels = static_cast<int>(ds.channel_map.size());
    TrainResult r = train(init_params(mc), ds, spectral(), cfg_.train);
    if (r.diverged) notice("training diverged; keeping the best parameters before divergence");
    TrainedModel tm;
    tm.checkpoint = Checkpoint{std::move(r.params), ds.norm, ds.channel_map, cfg_.variant, fp};
    tm.history = std::move(r.history);
    tm.best_epoch = r.best_epoch;
    atomic_write(cache_dir_ / "model.json", [&](std::ostream& os) {
        os << "#fingerprint " << fp << '\n';
        write_checkpoint(os, tm.checkpoint);
    });
    atomic_write(cache_dir_ / "history.csv", [&](std::ostream& os) {
        os << "#fingerprint " << fp << '\n';
        write_history_csv(os, tm.history);
    });
    trained_ = std::move(tm);
    return *trained_;
}

}  // namespace vmgcn

#pragma once

// Ingestion, run configuration, the on-disk cache and the staged pipeline
// the command-line tool drives.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vmgcn/graph.hpp"
#include "vmgcn/model.hpp"
#include "vmgcn/modeselect.hpp"
#include "vmgcn/traineval.hpp"
#include "vmgcn/vmd.hpp"

namespace vmgcn {

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

enum class Aggregation { Sum, Mean };
std::string to_string(Aggregation a);
Aggregation aggregation_from_string(const std::string& s);

struct IngestConfig {
    std::chrono::seconds input_step{std::chrono::minutes(5)};
    int block = 3;  // input samples per output step
    Aggregation aggregation = Aggregation::Sum;
    double max_missing = 0.05;  // fraction of input samples

    void validate() const;
};

struct NodeIngestReport {
    std::string node_id;
    std::size_t missing = 0;       // absent input samples on the common clock
    std::size_t interpolated = 0;  // filled by linear interpolation
    double missing_fraction = 0.0;
    bool rejected = false;
};

struct IngestResult {
    std::vector<TimeSeries> series;         // accepted nodes, sorted by id
    std::vector<NodeIngestReport> reports;  // every node seen, sorted by id
    std::size_t dropped_tail = 0;           // input samples past the last full block
};

/// Sums (or averages) consecutive blocks; a trailing partial block is dropped.
std::vector<double> aggregate_blocks(std::span<const double> x, int block, Aggregation mode);

/// Fills gaps by linear interpolation between the nearest present samples
/// (edge gaps copy the nearest one). Returns the number of filled samples.
/// Throws InvalidInput if nothing is present.
std::size_t fill_gaps(std::vector<double>& values, const std::vector<bool>& present);

/// Long-format flows CSV: timestamp,node_id,count at `input_step`. Every node
/// is placed on one clock spanning the earliest to the latest row. Nodes
/// missing more than `max_missing` of their samples are rejected and listed
/// in the reports. Throws ParseError (with line numbers) on malformed rows
/// or duplicates and AlignmentError on timestamps off the clock grid.
IngestResult ingest_flows(std::istream& flows, const IngestConfig& cfg);

/// Wide CSV: timestamp,<id>,<id>,... one row per step.
void write_series_csv(std::ostream& os, const std::vector<TimeSeries>& series);
std::vector<TimeSeries> read_series_csv(std::istream& is);

/// Long CSV in the ingest format; each value is split evenly into `block`
/// input samples so that sum aggregation restores it.
void write_flows_csv(std::ostream& os, const std::vector<TimeSeries>& series, int block);

/// Graph restricted and reordered to `node_ids`. Throws AlignmentError if a
/// node has no graph entry.
RoadGraph align_graph(const RoadGraph& g, const std::vector<std::string>& node_ids);

void write_nodes_csv(std::ostream& os, const RoadGraph& g);
/// Finite off-diagonal pairs with i < j.
void write_distances_csv(std::ostream& os, const RoadGraph& g);

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

/// Every knob of a pipeline run. JSON form, grouped by section:
///   data.{flows,nodes,distances,aggregation,block,input_step_s,max_missing}
///   vmd.{K,alpha,tau,epsilon,max_iter,omega_init,seed}
///   select.{sample_fraction,k_min,k_max,zeta,seed}
///   graph.{sigma,r}            sigma <= 0 means the std of the distances
///   model.{variant,blocks,cheb_order,channels,time_kernel,window,horizon,seed}
///   train.{lr,beta1,beta2,eps,batch_size,max_epochs,patience,seed,threads,loss}
///   split.{train,val}
///   eval.{mask_threshold}
///   output.{dir,cache_dir}
/// Relative data paths resolve against the config file's directory.
struct RunConfig {
    std::string flows_path, nodes_path, distances_path;
    IngestConfig ingest;
    VmdConfig vmd;
    ModeSelectConfig select;
    double sigma = 0.0;
    double r = 0.1;
    Variant variant = Variant::V2;
    ModelConfig model;
    TrainConfig train;
    SplitConfig split;
    double mask_threshold = 1.0;
    std::string output_dir = "out";
    std::string cache_dir = "cache";

    /// Unknown keys and mistyped values throw InvalidConfig.
    static RunConfig from_json_text(const std::string& text, const std::filesystem::path& base_dir = {});
    static RunConfig load(const std::filesystem::path& file);
    std::string to_json_text() const;

    /// "section.key=value"; value is parsed as JSON, falling back to a string.
    void apply_override(const std::string& assignment);
    void validate() const;
};

/// VMGCN_CACHE_DIR wins over the configured cache directory.
std::filesystem::path resolve_cache_dir(const RunConfig& cfg);

/// Writes through a temporary sibling and renames it into place.
void atomic_write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer);

/// FNV-1a over a file's bytes; throws InvalidInput if unreadable.
std::uint64_t file_fingerprint(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Staged pipeline with fingerprinted cache
// ---------------------------------------------------------------------------

struct TrainedModel {
    Checkpoint checkpoint;
    std::vector<EpochRecord> history;
    int best_epoch = 0;
};

/// Each stage is computed at most once per object and persisted in the
/// cache directory under a fixed name whose first lines carry the stage
/// fingerprint. A mismatching fingerprint logs a notice and recomputes.
class Pipeline {
public:
    explicit Pipeline(RunConfig cfg, std::ostream* log = nullptr);

    const RunConfig& config() const noexcept { return cfg_; }
    std::filesystem::path cache_dir() const { return cache_dir_; }

    const std::vector<TimeSeries>& series();
    const RoadGraph& graph();
    const SpectralOps& spectral();
    const std::vector<ModeSet>& modes();
    const ModeSelection& selection();
    const WindowedDataset& dataset();
    const TrainedModel& trained();
    /// Cached model only; throws MissingArtifact when absent or stale.
    const TrainedModel& trained_cached();

    std::string series_fingerprint();
    std::string modes_fingerprint();
    std::string graph_fingerprint();
    std::string selection_fingerprint();
    std::string model_fingerprint();

    int cache_hits() const noexcept { return hits_; }
    int cache_misses() const noexcept { return misses_; }

private:
    void notice(const std::string& msg);
    std::optional<std::string> read_cached(const std::string& name, const std::string& fp);

    RunConfig cfg_;
    std::ostream* log_;
    std::filesystem::path cache_dir_;
    int hits_ = 0, misses_ = 0;

    std::optional<std::vector<TimeSeries>> series_;
    std::optional<RoadGraph> graph_;
    std::optional<SpectralOps> spectral_;
    std::optional<std::vector<ModeSet>> modes_;
    std::optional<ModeSelection> selection_;
    std::optional<WindowedDataset> dataset_;
    std::optional<TrainedModel> trained_;
    std::optional<std::string> series_fp_;
};

}  // namespace vmgcn

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vmgcn/graph.hpp"
#include "vmgcn/model.hpp"
#include "vmgcn/time_series.hpp"
#include "vmgcn/vmd.hpp"

namespace vmgcn {

enum class Split { Train, Val, Test };

struct SplitConfig {
    double train = 0.6;
    double val = 0.2;  // test takes the rest

    void validate() const;
};

/// Half-open [begin, end) step ranges of the three chronological segments.
struct Segment {
    std::size_t begin = 0, end = 0;
};
std::array<Segment, 3> split_timeline(std::size_t length, const SplitConfig& cfg);

/// Window start indices inside [begin, end): each window reads `window`
/// inputs and the following `horizon` targets, stride 1.
std::vector<std::size_t> make_windows(std::size_t begin, std::size_t end, int window, int horizon);
/// Whole-series form. Throws InvalidInput if the series is too short.
std::vector<std::size_t> make_windows(std::size_t length, int window, int horizon);

struct WindowedDataset {
    int window = 12;
    int horizon = 12;
    Variant variant = Variant::V2;
    std::vector<std::string> node_ids;
    std::vector<std::string> channel_map;
    std::vector<Eigen::MatrixXd> stacks;  // per node, d x L, z-scored with train stats
    Eigen::MatrixXd flows;                // N x L raw flows
    Timestamp start_time{};
    std::chrono::seconds step{std::chrono::minutes(15)};
    std::array<Segment, 3> segments{};
    std::vector<std::size_t> train, val, test;  // window start indices
    Normalization norm;

    std::size_t nodes() const noexcept { return node_ids.size(); }
    const std::vector<std::size_t>& windows(Split s) const;
    FeatureTensor input(std::size_t start) const;
    /// Raw N x N_H flows following the window.
    Eigen::MatrixXd target(std::size_t start) const;
    /// Index of the mode_k channel (k is 1-based); throws InvalidInput if absent.
    Eigen::Index mode_channel(int k) const;
    int num_modes() const;
};

/// Features from `modes[i]` and `raw[i]` (same node order and length), split
/// chronologically, normalized with train-segment statistics.
WindowedDataset make_dataset(const std::vector<TimeSeries>& raw, const std::vector<ModeSet>& modes, Variant v,
                             int window, int horizon, const SplitConfig& split = {});

// Metrics. MAPE is in percent and skips targets with |y| < mask_threshold.

double mae(std::span<const double> pred, std::span<const double> target);
double rmse(std::span<const double> pred, std::span<const double> target);
struct MapeResult {
    double value = 0.0;
    std::size_t excluded = 0;
};
/// Throws UndefinedMetric when every point is masked.
MapeResult mape(std::span<const double> pred, std::span<const double> target, double mask_threshold = 1.0);

struct HorizonMetrics {
    double mae = 0.0, rmse = 0.0, mape = 0.0;  // mape NaN when every point was masked
    std::size_t masked = 0;
};

struct MetricsReport {
    std::vector<HorizonMetrics> per_horizon;  // index h-1
    HorizonMetrics average;
    std::size_t samples = 0;
    std::size_t masked = 0;
};

/// preds and targets are N x N_H each; horizon h collects column h-1 over
/// every sample and node.
MetricsReport evaluate_forecasts(const std::vector<Eigen::MatrixXd>& preds,
                                 const std::vector<Eigen::MatrixXd>& targets, double mask_threshold = 1.0);

/// Repeats the last column of an N x T_w raw window across the horizon.
Eigen::MatrixXd historical_last_baseline(const Eigen::MatrixXd& window_flows, int horizon);
MetricsReport historical_last_report(const WindowedDataset& ds, Split split, double mask_threshold = 1.0);

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int batch_size = 32;
    int max_epochs = 100;
    int patience = 10;
    std::uint64_t seed = 0;
    unsigned threads = 0;  // 0 = hardware concurrency
    LossKind loss = LossKind::MAE;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;           // 0 is the untrained model
    double train_mae = 0.0;  // raw units
    double val_mae = 0.0;    // raw units
};

struct TrainResult {
    StModelParams params;  // best on validation
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    double best_val_mae = 0.0;
    bool diverged = false;
};

/// Adam with early stopping on validation MAE. Per-sample gradients are
/// summed in sample order, so results do not depend on the thread count.
/// On a non-finite loss training stops and the best parameters so far are
/// returned with diverged = true.
TrainResult train(const StModelParams& init, const WindowedDataset& ds, const SpectralOps& ops,
                  const TrainConfig& cfg);

/// Raw-scale forecasts for the given window starts. Channels listed in
/// `zeroed` are set to 0 in the normalized input (the channel mean).
std::vector<Eigen::MatrixXd> predict(const StModelParams& params, const WindowedDataset& ds, const SpectralOps& ops,
                                     const std::vector<std::size_t>& starts, const std::vector<Eigen::Index>& zeroed = {},
                                     unsigned threads = 0);

MetricsReport evaluate(const StModelParams& params, const WindowedDataset& ds, const SpectralOps& ops, Split split,
                       double mask_threshold = 1.0, unsigned threads = 0);

/// Signed per-horizon metric changes, ablated minus intact.
struct MetricsDelta {
    std::vector<HorizonMetrics> per_horizon;
    HorizonMetrics average;
};
MetricsDelta metrics_delta(const MetricsReport& ablated, const MetricsReport& intact);

/// Zeroes mode k (1-based) in every test input and reports the change.
MetricsDelta ablate_mode(const StModelParams& params, const WindowedDataset& ds, const SpectralOps& ops, int k,
                         double mask_threshold = 1.0, unsigned threads = 0);
/// Same with any set of 1-based modes zeroed together.
MetricsDelta ablate_modes(const StModelParams& params, const WindowedDataset& ds, const SpectralOps& ops,
                          const std::vector<int>& modes, double mask_threshold = 1.0, unsigned threads = 0);

/// (1/L) sum_t |sum_k a_k(t) - sum_k b_k(t)|
double mode_divergence(const ModeSet& a, const ModeSet& b);

/// One run: dataset, model init, training, test evaluation and baseline.
struct Experiment {
    Variant variant = Variant::V2;
    int window = 12;
    int horizon = 12;
    SplitConfig split;
    ModelConfig model;  // nodes, in_channels, window and horizon are filled in
    TrainConfig train;
    double mask_threshold = 1.0;
};

struct ExperimentResult {
    WindowedDataset dataset;
    TrainResult training;
    MetricsReport test;
    MetricsReport baseline;
};

ExperimentResult run_experiment(const std::vector<TimeSeries>& raw, const std::vector<ModeSet>& modes,
                                const SpectralOps& ops, const Experiment& exp);

/// Mean over nodes of mean|phi| divided by the node's value range.
double mean_reconstruction_loss(const std::vector<TimeSeries>& raw, const std::vector<ModeSet>& modes);

struct SweepRow {
    VmdConfig vmd;
    Variant variant = Variant::V2;
    double reconstruction_loss = 0.0;
    MetricsReport test;
    std::string error;  // empty on success
};

/// Decomposes, trains and evaluates once per VMD configuration. A failing
/// configuration is recorded in its row and the sweep continues.
std::vector<SweepRow> sweep(const std::vector<VmdConfig>& configs, const std::vector<TimeSeries>& raw,
                            const SpectralOps& ops, const Experiment& exp, unsigned threads = 0);

/// Horizons 3, 6 and 12 that fit within n_h, in that order.
std::vector<int> reported_horizons(int n_h);
std::string sweep_header(int n_h);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, int n_h);

void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& history);
/// mode,horizon,delta_mae,delta_rmse,delta_mape; horizon "avg" for the average row.
void write_ablation_csv(std::ostream& os, const std::vector<std::pair<int, MetricsDelta>>& deltas);
/// node_id,origin_timestamp,horizon_step,y_true,y_pred
void write_forecasts_csv(std::ostream& os, const WindowedDataset& ds, const std::vector<std::size_t>& starts,
                         const std::vector<Eigen::MatrixXd>& preds);
void write_metrics_json(std::ostream& os, const MetricsReport& report, const MetricsReport* baseline,
                        const std::string& fingerprint, std::uint64_t seed);

}  // namespace vmgcn

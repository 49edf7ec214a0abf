#include "vmgcn/traineval.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "parallel.hpp"
#include "vmgcn/csv.hpp"
#include "vmgcn/errors.hpp"

namespace vmgcn {

using Eigen::Index;
using Eigen::MatrixXd;

void SplitConfig::validate() const {
    if (!(train > 0.0 && val > 0.0 && train + val < 1.0)) throw InvalidConfig("split fractions must be positive and leave room for test");
}

std::array<Segment, 3> split_timeline(std::size_t length, const SplitConfig& cfg) {
    cfg.validate();
    const double l = static_cast<double>(length);
    const auto train_end = static_cast<std::size_t>(std::floor(l * cfg.train));
    const auto val_end = static_cast<std::size_t>(std::floor(l * (cfg.train + cfg.val)));
    return {Segment{0, train_end}, Segment{train_end, val_end}, Segment{val_end, length}};
}

std::vector<std::size_t> make_windows(std::size_t begin, std::size_t end, int window, int horizon) {
    if (window < 1 || horizon < 1) throw InvalidConfig("window and horizon must be positive");
    const auto span = static_cast<std::size_t>(window + horizon);
    std::vector<std::size_t> starts;
    for (std::size_t s = begin; s + span <= end; ++s) starts.push_back(s);
    return starts;
}

std::vector<std::size_t> make_windows(std::size_t length, int window, int horizon) {
    if (length < static_cast<std::size_t>(window + horizon))
        throw InvalidInput("series of length " + std::to_string(length) + " is shorter than window + horizon");
    return make_windows(0, length, window, horizon);
}

const std::vector<std::size_t>& WindowedDataset::windows(Split s) const {
    switch (s) {
        case Split::Train: return train;
        case Split::Val: return val;
        case Split::Test: return test;
    }
    return test;
}

FeatureTensor WindowedDataset::input(std::size_t start) const {
    return assemble_features(stacks, channel_map, start, static_cast<std::size_t>(window));
}

MatrixXd WindowedDataset::target(std::size_t start) const {
    return flows.middleCols(static_cast<Index>(start) + window, horizon);
}

int WindowedDataset::num_modes() const {
    int k = 0;
    for (const auto& c : channel_map)
        if (c.rfind("mode_", 0) == 0) ++k;
    return k;
}

Index WindowedDataset::mode_channel(int k) const {
    const std::string label = "mode_" + std::to_string(k);
    for (std::size_t i = 0; i < channel_map.size(); ++i)
        if (channel_map[i] == label) return static_cast<Index>(i);
    throw InvalidInput("mode " + std::to_string(k) + " is not among the " + std::to_string(num_modes()) +
                       " mode channels");
}

WindowedDataset make_dataset(const std::vector<TimeSeries>& raw, const std::vector<ModeSet>& modes, Variant v,
                             int window, int horizon, const SplitConfig& split) {
    if (raw.empty()) throw InvalidInput("make_dataset: no series");
    if (raw.size() != modes.size()) throw InvalidInput("make_dataset: one mode set per series is required");
    const std::size_t len = raw[0].size();
    for (const auto& s : raw) {
        if (s.size() != len) throw AlignmentError("series " + s.node_id + " has a different length");
        if (s.start_time != raw[0].start_time || s.step != raw[0].step)
            throw AlignmentError("series " + s.node_id + " is not on the common clock");
    }
    make_windows(len, window, horizon);  // length check

    WindowedDataset ds;
    ds.window = window;
    ds.horizon = horizon;
    ds.variant = v;
    ds.start_time = raw[0].start_time;
    ds.step = raw[0].step;
    ds.channel_map = channel_labels(static_cast<int>(modes[0].num_modes()), v);
    ds.flows.resize(static_cast<Index>(raw.size()), static_cast<Index>(len));
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (modes[i].num_modes() != modes[0].num_modes()) throw InvalidConfig("every node needs the same K");
        ds.node_ids.push_back(raw[i].node_id);
        const auto phi = v == Variant::V3 ? redemption(raw[i], modes[i]) : std::vector<double>{};
        ds.stacks.push_back(node_channels(modes[i], raw[i], phi, v));
        for (std::size_t t = 0; t < len; ++t) ds.flows(static_cast<Index>(i), static_cast<Index>(t)) = raw[i].values[t];
    }

    ds.segments = split_timeline(len, split);
    ds.train = make_windows(ds.segments[0].begin, ds.segments[0].end, window, horizon);
    ds.val = make_windows(ds.segments[1].begin, ds.segments[1].end, window, horizon);
    ds.test = make_windows(ds.segments[2].begin, ds.segments[2].end, window, horizon);

    // Statistics from the train segment only.
    const Index train_len = static_cast<Index>(ds.segments[0].end);
    if (train_len < 1) throw InvalidInput("train segment is empty");
    const Index d = static_cast<Index>(ds.channel_map.size());
    const double count = static_cast<double>(train_len) * static_cast<double>(raw.size());
    auto safe_std = [](double var) { return var > 1e-24 ? std::sqrt(var) : 1.0; };
    for (Index c = 0; c < d; ++c) {
        double sum = 0.0, sq = 0.0;
        for (const auto& s : ds.stacks) {
            sum += s.row(c).head(train_len).sum();
            sq += s.row(c).head(train_len).squaredNorm();
        }
        const double mean = sum / count;
        ds.norm.channel_mean.push_back(mean);
        ds.norm.channel_std.push_back(safe_std(sq / count - mean * mean));
    }
    const auto train_flows = ds.flows.leftCols(train_len);
    ds.norm.target_mean = train_flows.mean();
    ds.norm.target_std = safe_std((train_flows.array() - ds.norm.target_mean).square().mean());

    for (auto& s : ds.stacks)
        for (Index c = 0; c < d; ++c)
            s.row(c) = (s.row(c).array() - ds.norm.channel_mean[static_cast<std::size_t>(c)]) /
                       ds.norm.channel_std[static_cast<std::size_t>(c)];
    return ds;
}

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeMismatch("prediction and target lengths differ");
    if (a.empty()) throw InvalidInput("metric of an empty sequence");
}

}  // namespace

double mae(std::span<const double> pred, std::span<const double> target) {
    require_same_length(pred, target);
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - target[i]);
    return s / static_cast<double>(pred.size());
}

double rmse(std::span<const double> pred, std::span<const double> target) {
    require_same_length(pred, target);
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - target[i]) * (pred[i] - target[i]);
    return std::sqrt(s / static_cast<double>(pred.size()));
}

MapeResult mape(std::span<const double> pred, std::span<const double> target, double mask_threshold) {
    require_same_length(pred, target);
    MapeResult r;
    double s = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (std::abs(target[i]) < mask_threshold) {
            ++r.excluded;
            continue;
        }
        s += std::abs((pred[i] - target[i]) / target[i]);
        ++used;
    }
    if (used == 0) throw UndefinedMetric("MAPE undefined: every target is below the mask threshold");
    r.value = 100.0 * s / static_cast<double>(used);
    return r;
}

namespace {

HorizonMetrics metrics_of(const std::vector<double>& p, const std::vector<double>& y, double mask) {
    HorizonMetrics m;
    m.mae = mae(p, y);
    m.rmse = rmse(p, y);
    try {
        const MapeResult r = mape(p, y, mask);
        m.mape = r.value;
        m.masked = r.excluded;
    } catch (const UndefinedMetric&) {
        m.mape = std::numeric_limits<double>::quiet_NaN();
        m.masked = p.size();
    }
    return m;
}

}  // namespace

MetricsReport evaluate_forecasts(const std::vector<MatrixXd>& preds, const std::vector<MatrixXd>& targets,
                                 double mask_threshold) {
    if (preds.size() != targets.size()) throw ShapeMismatch("prediction and target counts differ");
    if (preds.empty()) throw InvalidInput("no forecasts to evaluate");
    const Index h = preds[0].cols();
    MetricsReport r;
    r.samples = preds.size();
    std::vector<double> all_p, all_y;
    for (Index k = 0; k < h; ++k) {
        std::vector<double> p, y;
        for (std::size_t s = 0; s < preds.size(); ++s) {
            if (preds[s].rows() != targets[s].rows() || preds[s].cols() != h || targets[s].cols() != h)
                throw ShapeMismatch("forecast shapes differ");
            for (Index n = 0; n < preds[s].rows(); ++n) {
                p.push_back(preds[s](n, k));
                y.push_back(targets[s](n, k));
            }
        }
        r.per_horizon.push_back(metrics_of(p, y, mask_threshold));
        all_p.insert(all_p.end(), p.begin(), p.end());
        all_y.insert(all_y.end(), y.begin(), y.end());
    }
    r.average = metrics_of(all_p, all_y, mask_threshold);
    r.masked = r.average.masked;
    return r;
}

MatrixXd historical_last_baseline(const MatrixXd& window_flows, int horizon) {
    if (window_flows.cols() < 1) throw InvalidInput("historical-last needs at least one observed step");
    return window_flows.col(window_flows.cols() - 1).replicate(1, horizon);
}

MetricsReport historical_last_report(const WindowedDataset& ds, Split split, double mask_threshold) {
    std::vector<MatrixXd> preds, targets;
    for (std::size_t s : ds.windows(split)) {
        preds.push_back(historical_last_baseline(ds.flows.middleCols(static_cast<Index>(s), ds.window), ds.horizon));
        targets.push_back(ds.target(s));
    }
    return evaluate_forecasts(preds, targets, mask_threshold);
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw InvalidConfig("learning rate must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw InvalidConfig("Adam betas must be in [0, 1)");
    if (!(eps > 0.0)) throw InvalidConfig("Adam epsilon must be positive");
    if (batch_size < 1) throw InvalidConfig("batch size must be >= 1");
    if (max_epochs < 0) throw InvalidConfig("max_epochs must be >= 0");
    if (patience < 1) throw InvalidConfig("patience must be >= 1");
}

std::vector<MatrixXd> predict(const StModelParams& params, const WindowedDataset& ds, const SpectralOps& ops,
                              const std::vector<std::size_t>& starts, const std::vector<Index>& zeroed,
                              unsigned threads) {
    std::vector<MatrixXd> out(starts.size());
    detail::parallel_for(starts.size(), threads, [&](std::size_t i) {
        FeatureTensor x = ds.input(starts[i]);
        for (Index c : zeroed)
            for (Index t = 0; t < x.steps; ++t) x.data.col(c + x.channels * t).setZero();
        out[i] = (model_forward(x, params, ops).array() * ds.norm.target_std + ds.norm.target_mean).matrix();
    });
    return out;
}

MetricsReport evaluate(const StModelParams& params, const WindowedDataset& ds, const SpectralOps& ops, Split split,
                       double mask_threshold, unsigned threads) {
    const auto& starts = ds.windows(split);
    std::vector<MatrixXd> targets;
    for (std::size_t s : starts) targets.push_back(ds.target(s));
    return evaluate_forecasts(predict(params, ds, ops, starts, {}, threads), targets, mask_threshold);
}

namespace {

std::vector<MatrixXd*> tensors_of(StModelParams& p) {
    std::vector<MatrixXd*> out;
    p.for_each([&](const std::string&, MatrixXd& m) { out.push_back(&m); });
    return out;
}

bool all_finite(StModelParams& p) {
    for (MatrixXd* m : tensors_of(p))
        if (!m->allFinite()) return false;
    return true;
}

double split_mae(const StModelParams& params, const WindowedDataset& ds, const SpectralOps& ops, Split s,
                 unsigned threads) {
    const auto& starts = ds.windows(s);
    const auto preds = predict(params, ds, ops, starts, {}, threads);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        sum += (preds[i] - ds.target(starts[i])).cwiseAbs().sum();
        count += static_cast<std::size_t>(preds[i].size());
    }
    return sum / static_cast<double>(count);
}

}  // namespace

TrainResult train(const StModelParams& init, const WindowedDataset& ds, const SpectralOps& ops,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (ds.train.empty() || ds.val.empty()) throw InvalidInput("training needs at least one train and one val window");

    TrainResult res;
    StModelParams params = init;
    StModelParams m = init.zeros_like(), v = init.zeros_like();
    auto pt = tensors_of(params), mt = tensors_of(m), vt = tensors_of(v);

    res.params = params;
    res.best_val_mae = split_mae(params, ds, ops, Split::Val, cfg.threads);
    res.history.push_back({0, split_mae(params, ds, ops, Split::Train, cfg.threads), res.best_val_mae});

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order = ds.train;
    const double tstd = ds.norm.target_std, tmean = ds.norm.target_mean;
    long step = 0;
    int waited = 0;

    for (int epoch = 1; epoch <= cfg.max_epochs && !res.diverged; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

        double abs_sum = 0.0;
        std::size_t abs_count = 0;
        for (std::size_t b0 = 0; b0 < order.size() && !res.diverged; b0 += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(cfg.batch_size));
            std::vector<Gradients> grads(b1 - b0);
            try {
                detail::parallel_for(grads.size(), cfg.threads, [&](std::size_t i) {
                    const std::size_t s = order[b0 + i];
                    const MatrixXd target = (ds.target(s).array() - tmean) / tstd;
                    grads[i] = model_backward(ds.input(s), params, ops, target, cfg.loss);
                    grads[i].prediction = (grads[i].prediction - target).cwiseAbs();  // keep only |error|
                });
            } catch (const NonFiniteLoss&) {
                res.diverged = true;
                break;
            }
            // Reduce in sample order so the sum is schedule-independent.
            std::vector<MatrixXd> total;
            for (MatrixXd* p : pt) total.push_back(MatrixXd::Zero(p->rows(), p->cols()));
            for (auto& g : grads) {
                auto gt = tensors_of(g.grads);
                for (std::size_t j = 0; j < gt.size(); ++j) total[j] += *gt[j];
                abs_sum += g.prediction.sum();
                abs_count += static_cast<std::size_t>(g.prediction.size());
            }
            ++step;
            const double scale = 1.0 / static_cast<double>(grads.size());
            const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            for (std::size_t j = 0; j < pt.size(); ++j) {
                const MatrixXd g = total[j] * scale;
                *mt[j] = cfg.beta1 * *mt[j] + (1.0 - cfg.beta1) * g;
                *vt[j] = cfg.beta2 * *vt[j] + (1.0 - cfg.beta2) * g.cwiseAbs2();
                *pt[j] -= (cfg.learning_rate * (mt[j]->array() / c1) /
                           ((vt[j]->array() / c2).sqrt() + cfg.eps))
                              .matrix();
            }
            if (!all_finite(params)) res.diverged = true;
        }
        if (res.diverged) break;

        const double train_mae = abs_sum / static_cast<double>(abs_count) * tstd;
        const double val_mae = split_mae(params, ds, ops, Split::Val, cfg.threads);
        if (!std::isfinite(val_mae)) {
            res.diverged = true;
            break;
        }
        res.history.push_back({epoch, train_mae, val_mae});
        if (val_mae < res.best_val_mae) {
            res.best_val_mae = val_mae;
            res.best_epoch = epoch;
            res.params = params;
            waited = 0;
        } else if (++waited >= cfg.patience) {
            break;
        }
    }
    return res;
}

MetricsDelta metrics_delta(const MetricsReport& ablated, const MetricsReport& intact) {
    if (ablated.per_horizon.size() != intact.per_horizon.size()) throw ShapeMismatch("reports cover different horizons");
    auto diff = [](const HorizonMetrics& a, const HorizonMetrics& b) {
        HorizonMetrics d;
        d.mae = a.mae - b.mae;
        d.rmse = a.rmse - b.rmse;
        d.mape = a.mape - b.mape;
        d.masked = a.masked;
        return d;
    };
    MetricsDelta d;
    for (std::size_t h = 0; h < intact.per_horizon.size(); ++h)
        d.per_horizon.push_back(diff(ablated.per_horizon[h], intact.per_horizon[h]));
    d.average = diff(ablated.average, intact.average);
    return d;
}

MetricsDelta ablate_modes(const StModelParams& params, const WindowedDataset& ds, const SpectralOps& ops,
                          const std::vector<int>& modes, double mask_threshold, unsigned threads) {
    std::vector<Index> channels;
    for (int k : modes) channels.push_back(ds.mode_channel(k));
    std::vector<MatrixXd> targets;
    for (std::size_t s : ds.test) targets.push_back(ds.target(s));
    const MetricsReport intact =
        evaluate_forecasts(predict(params, ds, ops, ds.test, {}, threads), targets, mask_threshold);
    const MetricsReport ablated =
        evaluate_forecasts(predict(params, ds, ops, ds.test, channels, threads), targets, mask_threshold);
    return metrics_delta(ablated, intact);
}

MetricsDelta ablate_mode(const StModelParams& params, const WindowedDataset& ds, const SpectralOps& ops, int k,
                         double mask_threshold, unsigned threads) {
    return ablate_modes(params, ds, ops, {k}, mask_threshold, threads);
}

double mode_divergence(const ModeSet& a, const ModeSet& b) {
    if (a.num_modes() != b.num_modes() || a.length() != b.length())
        throw ShapeMismatch("mode sets differ in K or length");
    if (a.length() == 0) throw InvalidInput("empty mode sets");
    const auto ra = a.reconstruction(), rb = b.reconstruction();
    double s = 0.0;
    for (std::size_t t = 0; t < ra.size(); ++t) s += std::abs(ra[t] - rb[t]);
    return s / static_cast<double>(ra.size());
}

ExperimentResult run_experiment(const std::vector<TimeSeries>& raw, const std::vector<ModeSet>& modes,
                                const SpectralOps& ops, const Experiment& exp) {
    ExperimentResult r;
    r.dataset = make_dataset(raw, modes, exp.variant, exp.window, exp.horizon, exp.split);
    ModelConfig mc = exp.model;
    mc.nodes = static_cast<int>(r.dataset.nodes());
    mc.in_channels = static_cast<int>(r.dataset.channel_map.size());
    mc.window = exp.window;
    mc.horizon = exp.horizon;
    r.training = train(init_params(mc), r.dataset, ops, exp.train);
    r.test = evaluate(r.training.params, r.dataset, ops, Split::Test, exp.mask_threshold, exp.train.threads);
    r.baseline = historical_last_report(r.dataset, Split::Test, exp.mask_threshold);
    return r;
}

double mean_reconstruction_loss(const std::vector<TimeSeries>& raw, const std::vector<ModeSet>& modes) {
    if (raw.size() != modes.size() || raw.empty()) throw InvalidInput("one mode set per series is required");
    double total = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto [lo, hi] = std::minmax_element(raw[i].values.begin(), raw[i].values.end());
        const double range = *hi - *lo > 0.0 ? *hi - *lo : 1.0;
        const auto phi = redemption(raw[i], modes[i]);
        double s = 0.0;
        for (double p : phi) s += std::abs(p);
        total += s / static_cast<double>(phi.size()) / range;
    }
    return total / static_cast<double>(raw.size());
}

std::vector<SweepRow> sweep(const std::vector<VmdConfig>& configs, const std::vector<TimeSeries>& raw,
                            const SpectralOps& ops, const Experiment& exp, unsigned threads) {
    if (configs.empty()) throw InvalidConfig("sweep needs at least one configuration");
    std::vector<SweepRow> rows;
    for (const auto& cfg : configs) {
        SweepRow row;
        row.vmd = cfg;
        row.variant = exp.variant;
        try {
            const auto modes = decompose_all(raw, cfg, threads);
            row.reconstruction_loss = mean_reconstruction_loss(raw, modes);
            row.test = run_experiment(raw, modes, ops, exp).test;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<int> reported_horizons(int n_h) {
    std::vector<int> out;
    for (int h : {3, 6, 12})
        if (h <= n_h) out.push_back(h);
    return out;
}

std::string sweep_header(int n_h) {
    std::string s = "variant,K,alpha,tau,epsilon,omega_init,reconstruction_loss";
    for (int h : reported_horizons(n_h)) {
        const std::string p = ",h" + std::to_string(h) + "_";
        s += p + "mae" + p + "rmse" + p + "mape";
    }
    s += ",avg_mae,avg_rmse,avg_mape,status";
    return s;
}

namespace {

std::string num(double v) { return std::isfinite(v) ? csv::format(v) : std::string("nan"); }

std::string quoted(const std::string& s) {
    std::string out = "\"";
    for (char c : s) out += (c == '"') ? std::string("\"\"") : std::string(1, c == '\n' ? ' ' : c);
    return out + "\"";
}

}  // namespace

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, int n_h) {
    os << sweep_header(n_h) << '\n';
    const auto hs = reported_horizons(n_h);
    for (const auto& r : rows) {
        os << to_string(r.variant) << ',' << r.vmd.num_modes << ',' << num(r.vmd.alpha) << ',' << num(r.vmd.tau) << ','
           << num(r.vmd.epsilon) << ',' << to_string(r.vmd.omega_init) << ',';
        const bool ok = r.error.empty();
        os << (ok ? num(r.reconstruction_loss) : std::string("nan"));
        for (int h : hs) {
            const auto& m = ok ? r.test.per_horizon[static_cast<std::size_t>(h - 1)] : HorizonMetrics{};
            os << ',' << (ok ? num(m.mae) : "nan") << ',' << (ok ? num(m.rmse) : "nan") << ','
               << (ok ? num(m.mape) : "nan");
        }
        os << ',' << (ok ? num(r.test.average.mae) : "nan") << ',' << (ok ? num(r.test.average.rmse) : "nan") << ','
           << (ok ? num(r.test.average.mape) : "nan") << ',' << (ok ? std::string("ok") : quoted("error: " + r.error))
           << '\n';
    }
}

void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& history) {
    os << "epoch,train_mae,val_mae\n";
    for (const auto& e : history) os << e.epoch << ',' << num(e.train_mae) << ',' << num(e.val_mae) << '\n';
}

void write_ablation_csv(std::ostream& os, const std::vector<std::pair<int, MetricsDelta>>& deltas) {
    os << "mode,horizon,delta_mae,delta_rmse,delta_mape\n";
    for (const auto& [k, d] : deltas) {
        for (std::size_t h = 0; h < d.per_horizon.size(); ++h)
            os << k << ',' << h + 1 << ',' << num(d.per_horizon[h].mae) << ',' << num(d.per_horizon[h].rmse) << ','
               << num(d.per_horizon[h].mape) << '\n';
        os << k << ",avg," << num(d.average.mae) << ',' << num(d.average.rmse) << ',' << num(d.average.mape) << '\n';
    }
}

void write_forecasts_csv(std::ostream& os, const WindowedDataset& ds, const std::vector<std::size_t>& starts,
                         const std::vector<MatrixXd>& preds) {
    if (starts.size() != preds.size()) throw ShapeMismatch("one forecast per window start is required");
    os << "node_id,origin_timestamp,horizon_step,y_true,y_pred\n";
    for (std::size_t i = 0; i < starts.size(); ++i) {
        const MatrixXd y = ds.target(starts[i]);
        const std::size_t origin = starts[i] + static_cast<std::size_t>(ds.window) - 1;  // last observed step
        const std::string ts = format_timestamp(ds.start_time + ds.step * static_cast<std::int64_t>(origin));
        for (Index n = 0; n < y.rows(); ++n)
            for (Index h = 0; h < y.cols(); ++h)
                os << ds.node_ids[static_cast<std::size_t>(n)] << ',' << ts << ',' << h + 1 << ',' << num(y(n, h))
                   << ',' << num(preds[i](n, h)) << '\n';
    }
}

namespace {

nlohmann::json metrics_json(const HorizonMetrics& m) {
    auto finite = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    return {{"mae", finite(m.mae)}, {"rmse", finite(m.rmse)}, {"mape", finite(m.mape)}, {"masked", m.masked}};
}

nlohmann::json report_json(const MetricsReport& r) {
    nlohmann::json j;
    j["samples"] = r.samples;
    j["masked"] = r.masked;
    nlohmann::json hs = nlohmann::json::array();
    for (std::size_t h = 0; h < r.per_horizon.size(); ++h) {
        auto e = metrics_json(r.per_horizon[h]);
        e["horizon"] = h + 1;
        hs.push_back(std::move(e));
    }
    j["horizons"] = std::move(hs);
    j["average"] = metrics_json(r.average);
    return j;
}

}  // namespace

void write_metrics_json(std::ostream& os, const MetricsReport& report, const MetricsReport* baseline,
                        const std::string& fingerprint, std::uint64_t seed) {
    nlohmann::json j;
    j["fingerprint"] = fingerprint;
    j["seed"] = seed;
    j["mape_unit"] = "percent";
    j["model"] = report_json(report);
    if (baseline) j["historical_last"] = report_json(*baseline);
    os << j.dump(2) << '\n';
}

}  // namespace vmgcn

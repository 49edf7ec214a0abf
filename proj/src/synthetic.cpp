#include "vmgcn/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "vmgcn/errors.hpp"

namespace vmgcn {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Draws from the raw engine so the data does not depend on the standard
// library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }

private:
    std::mt19937_64 engine_;
};

TimeSeries empty_series(const std::string& id, std::size_t steps) {
    TimeSeries s;
    s.node_id = id;
    s.start_time = parse_timestamp("2019-01-01 00:00");
    s.values.assign(steps, 0.0);
    return s;
}

std::string node_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "S%03d", i);
    return buf;
}

}  // namespace

SyntheticRegion ring_traffic(int nodes, std::size_t steps, std::uint64_t seed) {
    if (nodes < 3) throw InvalidConfig("a ring needs at least three nodes");
    Rng rng(seed);
    const auto n = static_cast<std::size_t>(nodes);
    const double day = 96.0, week = 672.0;

    SyntheticRegion r;
    std::vector<double> base(n), amp(n), phase(n);
    for (std::size_t i = 0; i < n; ++i) {
        base[i] = 180.0 + 40.0 * rng.uniform();
        amp[i] = 70.0 + 30.0 * rng.uniform();
        phase[i] = 0.6 * kTwoPi * static_cast<double>(i) / static_cast<double>(n);
        r.series.push_back(empty_series(node_name(static_cast<int>(i)), steps));
    }

    std::vector<double> d(n, 0.0), next(n, 0.0);
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const double left = d[(i + n - 1) % n], right = d[(i + 1) % n];
            next[i] = 0.7 * d[i] + 0.1 * (left + right) + 5.0 * rng.normal();
        }
        d.swap(next);
        const double td = static_cast<double>(t);
        const double weekly = 1.0 + 0.1 * std::sin(kTwoPi * td / week);
        for (std::size_t i = 0; i < n; ++i) {
            const double a = kTwoPi * td / day + phase[i];
            const double daily = std::sin(a) + 0.3 * std::sin(2.0 * a);
            const double v = base[i] + amp[i] * weekly * daily + d[i] + 3.0 * rng.normal();
            r.series[i].values[t] = std::max(0.0, v);
        }
    }

    r.graph.distances = Eigen::MatrixXd::Zero(nodes, nodes);
    for (int i = 0; i < nodes; ++i) {
        r.graph.node_ids.push_back(node_name(i));
        const double angle = kTwoPi * i / nodes;
        r.graph.metadata.push_back({32.7 + 0.05 * std::cos(angle), -117.1 + 0.05 * std::sin(angle), 3});
        for (int j = 0; j < nodes; ++j) {
            const int hops = std::min(std::abs(i - j), nodes - std::abs(i - j));
            r.graph.distances(i, j) = 1.5 * hops;
        }
    }
    return r;
}

SyntheticRegion tone_region(int nodes, std::size_t length, const std::vector<double>& tones, double noise,
                            std::uint64_t seed) {
    if (nodes < 1) throw InvalidConfig("tone region needs at least one node");
    Rng rng(seed);
    SyntheticRegion r;
    for (int i = 0; i < nodes; ++i) {
        TimeSeries s = empty_series(node_name(i), length);
        std::vector<double> amp, ph;
        for (std::size_t k = 0; k < tones.size(); ++k) {
            amp.push_back(0.5 + rng.uniform());
            ph.push_back(kTwoPi * rng.uniform());
        }
        for (std::size_t t = 0; t < length; ++t) {
            double v = 0.0;
            for (std::size_t k = 0; k < tones.size(); ++k)
                v += amp[k] * std::cos(kTwoPi * tones[k] * static_cast<double>(t) + ph[k]);
            s.values[t] = v + noise * rng.normal();
        }
        r.series.push_back(std::move(s));
        r.graph.node_ids.push_back(node_name(i));
        r.graph.metadata.push_back({0.0, 0.01 * i, 2});
    }
    r.graph.distances = Eigen::MatrixXd::Zero(nodes, nodes);
    for (int i = 0; i < nodes; ++i)
        for (int j = 0; j < nodes; ++j) r.graph.distances(i, j) = std::abs(i - j);
    return r;
}

SyntheticRegion low_frequency_driven(int nodes, std::size_t steps, std::uint64_t seed) {
    if (nodes < 2) throw InvalidConfig("fixture needs at least two nodes");
    Rng rng(seed);
    SyntheticRegion r;
    for (int i = 0; i < nodes; ++i) {
        TimeSeries s = empty_series(node_name(i), steps);
        const double slow_phase = kTwoPi * rng.uniform(), fast_phase = kTwoPi * rng.uniform();
        for (std::size_t t = 0; t < steps; ++t) {
            const double td = static_cast<double>(t);
            s.values[t] = 100.0 + 60.0 * std::sin(kTwoPi * td / 96.0 + slow_phase) +
                          8.0 * std::sin(kTwoPi * td / 6.0 + fast_phase) + rng.normal();
        }
        r.series.push_back(std::move(s));
        r.graph.node_ids.push_back(node_name(i));
        r.graph.metadata.push_back({0.0, 0.01 * i, 2});
    }
    r.graph.distances = Eigen::MatrixXd::Zero(nodes, nodes);
    for (int i = 0; i < nodes; ++i)
        for (int j = 0; j < nodes; ++j) r.graph.distances(i, j) = std::abs(i - j);
    return r;
}

}  // namespace vmgcn

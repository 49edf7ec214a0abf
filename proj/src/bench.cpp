#include "vmgcn/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "vmgcn/csv.hpp"
#include "vmgcn/errors.hpp"
#include "vmgcn/graph.hpp"
#include "vmgcn/model.hpp"
#include "vmgcn/vmd.hpp"

namespace vmgcn {

namespace {

template <class Fn>
double median_seconds(int repeats, Fn&& fn) {
    std::vector<double> t;
    for (int i = 0; i < std::max(1, repeats); ++i) {
        const auto a = std::chrono::steady_clock::now();
        fn();
        t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - a).count());
    }
    std::sort(t.begin(), t.end());
    return t[t.size() / 2];
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

std::vector<VmdBenchRow> bench_vmd(const std::vector<int>& ks, const std::vector<std::size_t>& lengths,
                                   int iterations, int repeats, std::uint64_t seed) {
    if (iterations < 1) throw InvalidConfig("bench needs at least one iteration");
    std::vector<VmdBenchRow> rows;
    for (std::size_t len : lengths) {
        std::mt19937_64 rng(seed);
        std::vector<double> x(len, 0.0);
        for (double f : {0.01, 0.07, 0.19, 0.33})
            for (std::size_t t = 0; t < len; ++t)
                x[t] += std::cos(2.0 * std::numbers::pi * f * static_cast<double>(t)) + 0.1 * (unit(rng) - 0.5);
        for (int k : ks) {
            VmdConfig c;
            c.num_modes = k;
            c.max_iter = iterations;
            c.epsilon = 1e-300;  // never met, so every run does the full count
            VmdBenchRow r{k, len, 0, 0.0};
            r.seconds_per_node = median_seconds(repeats, [&] { r.iterations = decompose(x, c).iterations_used; });
            rows.push_back(r);
        }
    }
    return rows;
}

std::vector<ForwardBenchRow> bench_forward(const std::vector<int>& nodes, int repeats, std::uint64_t seed) {
    std::vector<ForwardBenchRow> rows;
    for (int n : nodes) {
        if (n < 3) throw InvalidConfig("forward bench needs at least three nodes");
        Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) adj(i, (i + 1) % n) = adj((i + 1) % n, i) = 1.0;
        ModelConfig mc;
        mc.nodes = n;
        mc.in_channels = 7;
        mc.seed = seed;
        const StModelParams params = init_params(mc);
        const SpectralOps ops = make_spectral_ops(adj, mc.cheb_order);

        std::mt19937_64 rng(seed + 1);
        FeatureTensor x;
        x.nodes = n;
        x.channels = mc.in_channels;
        x.steps = mc.window;
        x.data.resize(n, mc.in_channels * mc.window);
        for (Eigen::Index i = 0; i < x.data.size(); ++i) x.data.data()[i] = unit(rng) - 0.5;

        ForwardBenchRow r;
        r.nodes = n;
        double sink = 0.0;
        r.forward_seconds = median_seconds(repeats, [&] { sink += model_forward(x, params, ops)(0, 0); });
        r.spatial_attention_seconds = median_seconds(repeats, [&] { sink += spatial_attention(x, params.blocks[0])(0, 0); });
        if (!rows.empty() && rows.back().spatial_attention_seconds > 0.0)
            r.attention_ratio = r.spatial_attention_seconds / rows.back().spatial_attention_seconds;
        if (std::isnan(sink)) r.forward_seconds = -1.0;  // keeps the calls observable
        rows.push_back(r);
    }
    return rows;
}

void write_vmd_bench_csv(std::ostream& os, const std::vector<VmdBenchRow>& rows) {
    os << "K,L,iterations,seconds_per_node,seconds_per_iteration\n";
    for (const auto& r : rows)
        os << r.k << ',' << r.length << ',' << r.iterations << ',' << csv::format(r.seconds_per_node) << ','
           << csv::format(r.seconds_per_node / std::max(1, r.iterations)) << '\n';
}

void write_forward_bench_csv(std::ostream& os, const std::vector<ForwardBenchRow>& rows) {
    os << "N,forward_seconds,spatial_attention_seconds,attention_ratio\n";
    for (const auto& r : rows)
        os << r.nodes << ',' << csv::format(r.forward_seconds) << ',' << csv::format(r.spatial_attention_seconds) << ','
           << csv::format(r.attention_ratio) << '\n';
}

}  // namespace vmgcn

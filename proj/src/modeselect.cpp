#include "vmgcn/modeselect.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include "vmgcn/errors.hpp"

namespace vmgcn {

void ModeSelectConfig::validate() const {
    if (!(sample_fraction > 0.0 && sample_fraction <= 1.0)) throw InvalidConfig("sample_fraction must be in (0, 1]");
    if (k_min < 1) throw InvalidConfig("k_min must be >= 1");
    if (k_max < k_min) throw InvalidConfig("k_max must be >= k_min");
    if (!(zeta > 0.0)) throw InvalidConfig("zeta must be positive");
}

std::vector<std::size_t> sample_nodes(std::size_t n, double fraction, std::uint64_t seed) {
    if (n == 0) return {};
    auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-12));
    count = std::clamp<std::size_t>(count, 1, n);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    // Partial Fisher-Yates on the raw engine output, so the draw does not
    // depend on the standard library's distribution implementation.
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

ModeSelection select_num_modes(const std::vector<TimeSeries>& dataset, const ModeSelectConfig& cfg,
                               const VmdConfig& vmd_base, unsigned threads) {
    cfg.validate();
    if (dataset.empty()) throw InvalidInput("select_num_modes: empty dataset");

    ModeSelection sel;
    sel.sampled_nodes = sample_nodes(dataset.size(), cfg.sample_fraction, cfg.seed);

    std::vector<std::vector<double>> normalized;
    for (std::size_t i : sel.sampled_nodes) normalized.push_back(normalize_min_max(dataset[i].values));

    const std::size_t num_k = static_cast<std::size_t>(cfg.k_max - cfg.k_min + 1);
    const std::size_t num_nodes = normalized.size();
    // losses[k][node]; filled in any order, reduced in node order
    std::vector<std::vector<double>> losses(num_k, std::vector<double>(num_nodes, 0.0));

    const std::size_t jobs = num_k * num_nodes;
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t j = next++; j < jobs; j = next++) {
            const std::size_t ki = j / num_nodes;
            const std::size_t ni = j % num_nodes;
            try {
                VmdConfig c = vmd_base;
                c.num_modes = cfg.k_min + static_cast<int>(ki);
                const ModeSet ms = decompose(normalized[ni], c);
                losses[ki][ni] = reconstruction_loss(normalized[ni], ms);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    sel.k = cfg.k_max;
    for (std::size_t ki = 0; ki < num_k; ++ki) {
        double sum = 0.0;
        for (double v : losses[ki]) sum += v;
        LossPoint p;
        p.k = cfg.k_min + static_cast<int>(ki);
        p.mean_loss = sum / static_cast<double>(num_nodes);
        p.qualifying = p.mean_loss < cfg.zeta;
        if (p.qualifying && !sel.threshold_met) {
            sel.threshold_met = true;
            sel.k = p.k;
        }
        sel.curve.push_back(p);
    }
    return sel;
}

void write_k_selection_csv(std::ostream& os, const ModeSelection& sel) {
    os << "K,mean_loss,qualifying\n";
    char buf[64];
    for (const auto& p : sel.curve) {
        std::snprintf(buf, sizeof(buf), "%.17g", p.mean_loss);
        os << p.k << ',' << buf << ',' << (p.qualifying ? "true" : "false") << '\n';
    }
}

}  // namespace vmgcn

#pragma once

// Timing probes for the cost trends of decomposition and the forward pass.
// Informational only; nothing asserts on wall-clock numbers.

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace vmgcn {

struct VmdBenchRow {
    int k = 0;
    std::size_t length = 0;
    int iterations = 0;
    double seconds_per_node = 0.0;
};

/// Runs up to `iterations` ADMM sweeps per (K, L) on a seeded multi-tone
/// signal (fewer only if it reaches an exact fixed point) and reports the
/// median of `repeats` timings.
std::vector<VmdBenchRow> bench_vmd(const std::vector<int>& ks, const std::vector<std::size_t>& lengths,
                                   int iterations, int repeats, std::uint64_t seed);

struct ForwardBenchRow {
    int nodes = 0;
    double forward_seconds = 0.0;
    double spatial_attention_seconds = 0.0;
    double attention_ratio = 0.0;  // vs the previous row; 0 on the first
};

/// Default-sized model on a ring graph of each size.
std::vector<ForwardBenchRow> bench_forward(const std::vector<int>& nodes, int repeats, std::uint64_t seed);

void write_vmd_bench_csv(std::ostream& os, const std::vector<VmdBenchRow>& rows);
void write_forward_bench_csv(std::ostream& os, const std::vector<ForwardBenchRow>& rows);

}  // namespace vmgcn

#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "vmgcn/time_series.hpp"
#include "vmgcn/vmd.hpp"

namespace vmgcn {

struct ModeSelectConfig {
    double sample_fraction = 0.02;
    int k_min = 2;
    int k_max = 29;
    double zeta = 1e-3;
    std::uint64_t seed = 0;

    void validate() const;
};

struct LossPoint {
    int k = 0;
    double mean_loss = 0.0;
    bool qualifying = false;
};

struct ModeSelection {
    int k = 0;
    bool threshold_met = false;
    std::vector<LossPoint> curve;
    std::vector<std::size_t> sampled_nodes;  // indices into the dataset, ascending
};

/// ceil(fraction * n) distinct indices, seeded, returned in ascending order.
std::vector<std::size_t> sample_nodes(std::size_t n, double fraction, std::uint64_t seed);

/// Sweeps K over [k_min, k_max], decomposing each sampled node after min-max
/// normalization and averaging the reconstruction loss. Picks the smallest K
/// whose mean loss is strictly below zeta; otherwise k_max with
/// threshold_met = false. `vmd_base.num_modes` is overridden per K.
ModeSelection select_num_modes(const std::vector<TimeSeries>& dataset, const ModeSelectConfig& cfg,
                               const VmdConfig& vmd_base, unsigned threads = 0);

/// K,mean_loss,qualifying
void write_k_selection_csv(std::ostream& os, const ModeSelection& sel);

}  // namespace vmgcn

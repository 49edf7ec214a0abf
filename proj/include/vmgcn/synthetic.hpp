#pragma once

// Seeded synthetic datasets for tests, benchmarks and demos.

#include <cstdint>
#include <vector>

#include "vmgcn/graph.hpp"
#include "vmgcn/time_series.hpp"

namespace vmgcn {

struct SyntheticRegion {
    std::vector<TimeSeries> series;
    RoadGraph graph;  // distances and metadata filled, adjacency empty
};

/// Ring of `nodes` sensors at 15-minute resolution: a daily cycle with a
/// per-node phase, a weekly modulation, a disturbance that diffuses to ring
/// neighbours, and white noise. Flows stay positive.
SyntheticRegion ring_traffic(int nodes, std::size_t steps, std::uint64_t seed);

/// Each node is the sum of `tones` (cycles per sample) with random
/// amplitudes in [0.5, 1.5) and phases, plus Gaussian noise of std `noise`.
/// Nodes sit on a line 1 km apart.
SyntheticRegion tone_region(int nodes, std::size_t length, const std::vector<double>& tones, double noise,
                            std::uint64_t seed);

/// Flow dominated by a slow oscillation plus a weaker fast one, with small
/// noise; future values mostly follow the slow component.
SyntheticRegion low_frequency_driven(int nodes, std::size_t steps, std::uint64_t seed);

}  // namespace vmgcn

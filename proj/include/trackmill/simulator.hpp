#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "trackmill/types.hpp"

namespace trackmill {

/// Discrete distribution over the number of distinct IDs a noisy tracklet
/// carries. Weights need not sum to 1; values must be >= 2.
using IdsPerNoisyDist = std::map<int, double>;

IdsPerNoisyDist default_ids_per_noisy_dist();  // {2: .80, 3: .15, 4: .05}

struct SimulationPlan {
    NoiseRates target;
    std::size_t m_units = 0;        // clean (identity, camera) units to fragment
    std::size_t n_total = 0;        // output tracklet count
    std::size_t n_noisy = 0;        // tracklets with >= 2 distinct IDs
    IdsPerNoisyDist ids_per_noisy_dist;
    std::uint64_t seed = 0;

    // Resolved internals, deterministic functions of the inputs above.
    std::size_t incidence_pairs = 0;            // segment budget P
    std::vector<int> segments_per_unit;         // per clean tracklet, input order
    std::vector<int> noisy_sizes;               // |Q_i| per noisy tracklet, descending
};

inline constexpr int kMinSegmentLen = 2;

/// Derive a fragmentation/merge plan hitting the target rates. Units too
/// short to cut stay whole and the budget is recomputed around them.
SimulationPlan plan_simulation(const Dataset& ds, NoiseRates target,
                               const IdsPerNoisyDist& dist, std::uint64_t seed);

/// Execute a plan: cut each unit into consecutive segments, deal segments of
/// distinct same-camera units into the noisy tracklets (segment order
/// shuffled inside each), leave the rest as pure tracklets. Every input
/// frame appears exactly once in the output.
Dataset generate_noisy_dataset(const Dataset& ds, const SimulationPlan& plan);

}  // namespace trackmill

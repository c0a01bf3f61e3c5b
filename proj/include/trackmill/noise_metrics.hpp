#pragma once

#include <cstdint>
#include <vector>

#include "trackmill/types.hpp"

namespace trackmill {

/// Per-tracklet ground-truth contamination summary.
struct TrackletNoiseProfile {
    std::string tracklet_id;
    int distinct_ids = 1;                 // |Q_i|
    std::int64_t majority_id = 0;         // ties broken by smallest gt_pid
    double majority_fraction = 1.0;       // frames with majority_id / L_i
    std::vector<int> switch_points;       // seq where gt_pid differs from previous frame
};

struct NoiseReport {
    NoiseRates rates;
    std::size_t n_tracklets = 0;
    std::size_t n_ids = 0;                // M under the chosen counting
    std::size_t incidence_pairs = 0;      // sum over tracklets of |Q_i|
    double noise_pct = 0.0;               // 100 * (1 - mean majority_fraction)
    IdCounting counting = IdCounting::per_camera;
};

/// r_fm / r_sw of a fully labeled dataset. Both rates divide the same
/// incidence-pair count, so N * r_sw == M * r_fm by construction.
NoiseRates measure_rates(const Dataset& ds, IdCounting counting = IdCounting::per_camera);

std::vector<TrackletNoiseProfile> noise_profiles(const Dataset& ds);

NoiseReport noise_report(const Dataset& ds, IdCounting counting = IdCounting::per_camera);

}  // namespace trackmill

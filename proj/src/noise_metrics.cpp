#include "trackmill/noise_metrics.hpp"

#include <map>

namespace trackmill {

namespace {

void require_labeled(const Dataset& ds) {
    for (const auto& t : ds.tracklets)
        for (const auto& f : t.frames)
            if (!f.gt_pid)
                fail(ErrorKind::integrity,
                     "noise metrics require gt_pid on every frame (tracklet '" + t.id + "')");
}

std::size_t count_incidence_pairs(const Dataset& ds) {
    std::size_t p = 0;
    for (const auto& t : ds.tracklets) p += t.distinct_ids().size();
    return p;
}

}  // namespace

NoiseRates measure_rates(const Dataset& ds, IdCounting counting) {
    require_labeled(ds);
    std::size_t n = ds.n_tracklets();
    std::size_t m = ds.n_ids(counting);
    if (n == 0 || m == 0)
        fail(ErrorKind::integrity, "measure_rates needs at least one labeled tracklet");
    std::size_t pairs = count_incidence_pairs(ds);
    return NoiseRates{static_cast<double>(pairs) / static_cast<double>(m),
                      static_cast<double>(pairs) / static_cast<double>(n)};
}

std::vector<TrackletNoiseProfile> noise_profiles(const Dataset& ds) {
    require_labeled(ds);
    std::vector<TrackletNoiseProfile> out;
    out.reserve(ds.tracklets.size());
    for (const auto& t : ds.tracklets) {
        TrackletNoiseProfile p;
        p.tracklet_id = t.id;
        std::map<std::int64_t, std::size_t> counts;
        for (const auto& f : t.frames) ++counts[*f.gt_pid];
        p.distinct_ids = static_cast<int>(counts.size());
        // std::map iterates in ascending pid order, so the first maximum is the smallest pid.
        std::size_t best = 0;
        for (const auto& [pid, c] : counts)
            if (c > best) { best = c; p.majority_id = pid; }
        p.majority_fraction = static_cast<double>(best) / static_cast<double>(t.frames.size());
        for (std::size_t j = 1; j < t.frames.size(); ++j)
            if (*t.frames[j].gt_pid != *t.frames[j - 1].gt_pid)
                p.switch_points.push_back(t.frames[j].seq);
        out.push_back(std::move(p));
    }
    return out;
}

NoiseReport noise_report(const Dataset& ds, IdCounting counting) {
    NoiseReport r;
    r.rates = measure_rates(ds, counting);
    r.n_tracklets = ds.n_tracklets();
    r.n_ids = ds.n_ids(counting);
    r.incidence_pairs = count_incidence_pairs(ds);
    r.counting = counting;
    auto profiles = noise_profiles(ds);
    double sum = 0.0;
    for (const auto& p : profiles) sum += p.majority_fraction;
    r.noise_pct = 100.0 * (1.0 - sum / static_cast<double>(profiles.size()));
    return r;
}

}  // namespace trackmill

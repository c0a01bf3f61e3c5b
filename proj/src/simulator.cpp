#include "trackmill/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace trackmill {

namespace {

constexpr std::uint64_t kCutTag = 0xc1;
constexpr std::uint64_t kAssignTag = 0xa2;
constexpr std::uint64_t kSizesTag = 0x53;

void require_clean_labeled(const Dataset& ds) {
    if (!ds.fully_labeled())
        fail(ErrorKind::integrity, "simulation requires a fully labeled dataset");
    std::map<std::pair<std::int64_t, int>, int> unit_count;
    for (const auto& t : ds.tracklets) {
        auto ids = t.distinct_ids();
        if (ids.size() != 1)
            fail(ErrorKind::integrity, "input tracklet '" + t.id + "' is not clean (|Q| > 1)");
        ++unit_count[{*ids.begin(), t.camera_id}];
    }
    for (const auto& [unit, c] : unit_count)
        if (c != 1)
            fail(ErrorKind::integrity,
                 "input is not clean: identity " + std::to_string(unit.first) + " has " +
                     std::to_string(c) + " tracklets in camera " + std::to_string(unit.second));
}

std::map<int, std::size_t> units_per_camera(const Dataset& ds) {
    std::map<int, std::size_t> out;
    for (const auto& t : ds.tracklets) ++out[t.camera_id];
    return out;
}

int sample_dist(const IdsPerNoisyDist& dist, double total_w, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, total_w);
    double r = u(rng);
    for (const auto& [k, w] : dist) {
        r -= w;
        if (r <= 0) return k;
    }
    return dist.rbegin()->first;
}

}  // namespace

IdsPerNoisyDist default_ids_per_noisy_dist() { return {{2, 0.80}, {3, 0.15}, {4, 0.05}}; }

SimulationPlan plan_simulation(const Dataset& ds, NoiseRates target,
                               const IdsPerNoisyDist& dist, std::uint64_t seed) {
    require_clean_labeled(ds);
    if (target.r_fm < 1.0 || target.r_sw < 1.0)
        fail(ErrorKind::config, "target rates must be >= 1");
    double total_w = 0.0;
    for (const auto& [k, w] : dist) {
        if (k < 2) fail(ErrorKind::config, "ids-per-noisy-tracklet values must be >= 2");
        if (w < 0) fail(ErrorKind::config, "distribution weights must be >= 0");
        total_w += w;
    }
    if (target.r_sw > 1.0 && total_w <= 0.0)
        fail(ErrorKind::config, "ids-per-noisy-tracklet distribution is empty");

    SimulationPlan plan;
    plan.target = target;
    plan.ids_per_noisy_dist = dist;
    plan.seed = seed;
    plan.m_units = ds.n_tracklets();
    if (plan.m_units == 0) fail(ErrorKind::integrity, "empty dataset");

    // Segment budget: P incidence pairs spread over the units, honoring the
    // minimum segment length. Units too short to cut absorb fewer segments and
    // the budget shrinks accordingly.
    auto p_target = static_cast<std::size_t>(std::llround(static_cast<double>(plan.m_units) * target.r_fm));
    plan.segments_per_unit.assign(plan.m_units, 1);
    std::vector<int> capacity(plan.m_units);
    for (std::size_t i = 0; i < plan.m_units; ++i)
        capacity[i] = std::max(1, static_cast<int>(ds.tracklets[i].length()) / kMinSegmentLen);

    std::mt19937_64 rng(mix_seed(seed, kCutTag));
    std::vector<std::size_t> order(plan.m_units);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t extras = p_target > plan.m_units ? p_target - plan.m_units : 0;
    bool progressed = true;
    while (extras > 0 && progressed) {
        progressed = false;
        for (auto i : order) {
            if (extras == 0) break;
            if (plan.segments_per_unit[i] < capacity[i]) {
                ++plan.segments_per_unit[i];
                --extras;
                progressed = true;
            }
        }
    }
    plan.incidence_pairs =
        static_cast<std::size_t>(std::accumulate(plan.segments_per_unit.begin(),
                                                 plan.segments_per_unit.end(), 0));

    plan.n_total = static_cast<std::size_t>(
        std::llround(static_cast<double>(plan.incidence_pairs) / target.r_sw));
    plan.n_total = std::clamp<std::size_t>(plan.n_total, 1, plan.incidence_pairs);

    std::size_t max_cam_units = 0;
    for (const auto& [cam, n] : units_per_camera(ds)) max_cam_units = std::max(max_cam_units, n);

    std::size_t extra_pairs = plan.incidence_pairs - plan.n_total;
    std::mt19937_64 size_rng(mix_seed(seed, kSizesTag));
    while (extra_pairs > 0) {
        if (plan.noisy_sizes.size() == plan.n_total)
            fail(ErrorKind::feasibility,
                 "target r_sw needs more ID merges than there are tracklets; "
                 "increase the ids-per-noisy-tracklet sizes");
        int q = sample_dist(dist, total_w, size_rng);
        q = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(q), extra_pairs + 1));
        if (static_cast<std::size_t>(q) > max_cam_units)
            fail(ErrorKind::feasibility,
                 "a noisy tracklet needs " + std::to_string(q) +
                     " distinct same-camera identities but the largest camera has only " +
                     std::to_string(max_cam_units));
        plan.noisy_sizes.push_back(q);
        extra_pairs -= static_cast<std::size_t>(q - 1);
    }
    std::sort(plan.noisy_sizes.rbegin(), plan.noisy_sizes.rend());
    plan.n_noisy = plan.noisy_sizes.size();
    return plan;
}

Dataset generate_noisy_dataset(const Dataset& ds, const SimulationPlan& plan) {
    require_clean_labeled(ds);
    if (plan.segments_per_unit.size() != ds.n_tracklets())
        fail(ErrorKind::integrity, "plan does not match dataset (unit count differs)");

    struct Segment {
        std::size_t unit;
        std::size_t begin, end;  // frame range [begin, end)
    };

    std::mt19937_64 rng(mix_seed(plan.seed, kAssignTag));

    // Cut every unit into its planned number of consecutive segments.
    std::vector<std::vector<Segment>> remaining(ds.n_tracklets());
    for (std::size_t i = 0; i < ds.n_tracklets(); ++i) {
        const std::size_t len = ds.tracklets[i].length();
        const int c = plan.segments_per_unit[i];
        if (c < 1 || static_cast<std::size_t>(c) * kMinSegmentLen > len + (c == 1 ? 1 : 0))
            fail(ErrorKind::integrity, "plan cuts unit '" + ds.tracklets[i].id + "' too finely");
        std::vector<std::size_t> lens(static_cast<std::size_t>(c),
                                      c == 1 ? len : kMinSegmentLen);
        if (c > 1) {
            std::size_t extra = len - static_cast<std::size_t>(c) * kMinSegmentLen;
            std::uniform_int_distribution<std::size_t> pick(0, static_cast<std::size_t>(c) - 1);
            for (std::size_t e = 0; e < extra; ++e) ++lens[pick(rng)];
        }
        std::size_t pos = 0;
        for (auto l : lens) {
            remaining[i].push_back({i, pos, pos + l});
            pos += l;
        }
    }

    std::map<int, std::vector<std::size_t>> cam_units;
    for (std::size_t i = 0; i < ds.n_tracklets(); ++i)
        cam_units[ds.tracklets[i].camera_id].push_back(i);

    Dataset out;
    out.embedding_dim = ds.embedding_dim;

    auto emit = [&](const std::string& id, int camera, std::vector<Segment> segs) {
        Tracklet t;
        t.id = id;
        t.camera_id = camera;
        int seq = 0;
        for (const auto& s : segs)
            for (std::size_t j = s.begin; j < s.end; ++j) {
                FrameRecord f = ds.tracklets[s.unit].frames[j];
                f.tracklet_id = id;
                f.seq = seq++;
                t.frames.push_back(std::move(f));
            }
        out.tracklets.push_back(std::move(t));
    };

    // Noisy tracklets first, largest ID count first; each draws one segment
    // from the same-camera units with the most segments left, which keeps
    // depletion balanced across units.
    std::size_t noisy_idx = 0;
    for (int q : plan.noisy_sizes) {
        int best_cam = -1;
        std::size_t best_avail = 0;
        for (const auto& [cam, units] : cam_units) {
            std::size_t avail = 0;
            for (auto u : units) avail += remaining[u].empty() ? 0 : 1;
            if (avail > best_avail) { best_avail = avail; best_cam = cam; }
        }
        if (best_cam < 0 || best_avail < static_cast<std::size_t>(q))
            fail(ErrorKind::feasibility,
                 "ran out of same-camera identities while assembling noisy tracklets");

        std::vector<std::size_t> candidates;
        for (auto u : cam_units[best_cam])
            if (!remaining[u].empty()) candidates.push_back(u);
        std::shuffle(candidates.begin(), candidates.end(), rng);
        std::stable_sort(candidates.begin(), candidates.end(),
                         [&](std::size_t a, std::size_t b) {
                             return remaining[a].size() > remaining[b].size();
                         });
        candidates.resize(static_cast<std::size_t>(q));

        std::vector<Segment> segs;
        for (auto u : candidates) {
            std::uniform_int_distribution<std::size_t> pick(0, remaining[u].size() - 1);
            std::size_t k = pick(rng);
            segs.push_back(remaining[u][k]);
            remaining[u].erase(remaining[u].begin() + static_cast<std::ptrdiff_t>(k));
        }
        std::shuffle(segs.begin(), segs.end(), rng);
        emit("n" + std::to_string(noisy_idx++), best_cam, std::move(segs));
    }

    // Leftover segments become pure tracklets.
    std::size_t pure_idx = 0;
    for (std::size_t i = 0; i < remaining.size(); ++i)
        for (const auto& s : remaining[i])
            emit("p" + std::to_string(pure_idx++), ds.tracklets[i].camera_id, {s});

    if (out.n_tracklets() != plan.n_total)
        fail(ErrorKind::integrity,
             "generated tracklet count " + std::to_string(out.n_tracklets()) +
                 " does not match plan n_total " + std::to_string(plan.n_total));
    out.validate();
    return out;
}

}  // namespace trackmill

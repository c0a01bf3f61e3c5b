#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "trackmill/noise_metrics.hpp"
#include "trackmill/oracle.hpp"
#include "trackmill/simulator.hpp"

using namespace trackmill;

namespace {

// Sort-and-compare bijection oracle over image_refs.
std::vector<std::string> frame_refs(const Dataset& ds) {
    std::vector<std::string> refs;
    for (const auto& t : ds.tracklets)
        for (const auto& f : t.frames) refs.push_back(f.image_ref.value_or(""));
    std::sort(refs.begin(), refs.end());
    return refs;
}

}  // namespace

TEST_CASE("target (1, 1) plans a passthrough") {
    Dataset clean = make_clean_dataset(20, 2, 4, 6, 1);
    auto plan = plan_simulation(clean, {1.0, 1.0}, default_ids_per_noisy_dist(), 3);
    CHECK(plan.n_total == clean.n_tracklets());
    CHECK(plan.n_noisy == 0);
    Dataset out = generate_noisy_dataset(clean, plan);
    REQUIRE(out.n_tracklets() == clean.n_tracklets());
    // Equal up to tracklet renaming: same per-tracklet frame sequences.
    for (std::size_t i = 0; i < out.tracklets.size(); ++i) {
        REQUIRE(out.tracklets[i].length() == clean.tracklets[i].length());
        for (std::size_t j = 0; j < out.tracklets[i].frames.size(); ++j)
            CHECK(out.tracklets[i].frames[j].image_ref == clean.tracklets[i].frames[j].image_ref);
    }
}

TEST_CASE("planned tracklet count follows n = round(P / r_sw)") {
    Dataset clean = make_clean_dataset(1000, 2, 4, 8, 2);
    REQUIRE(clean.n_tracklets() == 2000);
    auto plan = plan_simulation(clean, {2.5, 1.2}, default_ids_per_noisy_dist(), 1);
    CHECK(plan.incidence_pairs == 5000);
    CHECK(plan.n_total == 4167);
}

TEST_CASE("benchmark-scale plans land within 3% of the reference counts") {
    struct Row { int m; NoiseRates target; double n_ref; };
    // n_ids * units_per_id hits the odd unit counts exactly.
    for (const auto& row : {Row{1931, {2.5, 1.2}, 4023.0},
                            Row{2001, {1.7, 1.2}, 2835.0},
                            Row{1963, {2.5, 1.5}, 3272.0}}) {
        Dataset clean = make_clean_dataset(row.m, 1, 4, 8, 2);
        auto plan = plan_simulation(clean, row.target, default_ids_per_noisy_dist(), 0);
        CHECK(std::abs(static_cast<double>(plan.n_total) - row.n_ref) <= 0.03 * row.n_ref);
    }
}

TEST_CASE("every input frame appears exactly once in the output") {
    Dataset clean = make_clean_dataset(50, 2, 4, 8, 4);
    for (std::uint64_t seed : {1ull, 7ull, 42ull}) {
        auto plan = plan_simulation(clean, {2.5, 1.5}, default_ids_per_noisy_dist(), seed);
        Dataset noisy = generate_noisy_dataset(clean, plan);
        CHECK(frame_refs(noisy) == frame_refs(clean));
    }
}

TEST_CASE("measured rates track the targets over seeded runs") {
    Dataset clean = make_clean_dataset(100, 2, 4, 8, 9);
    int within = 0;
    const int runs = 10;
    for (std::uint64_t seed = 0; seed < runs; ++seed) {
        auto plan = plan_simulation(clean, {2.5, 1.5}, default_ids_per_noisy_dist(), seed);
        Dataset noisy = generate_noisy_dataset(clean, plan);
        NoiseRates r = measure_rates(noisy);
        if (std::abs(r.r_fm - 2.5) <= 0.05 && std::abs(r.r_sw - 1.5) <= 0.05) ++within;
    }
    CHECK(within >= runs - 1);
}

TEST_CASE("noisy tracklets mix distinct same-camera identities") {
    Dataset clean = make_clean_dataset(40, 2, 4, 8, 5);
    auto plan = plan_simulation(clean, {2.0, 1.4}, default_ids_per_noisy_dist(), 11);
    Dataset noisy = generate_noisy_dataset(clean, plan);
    std::size_t n_noisy = 0;
    for (const auto& t : noisy.tracklets) {
        auto ids = t.distinct_ids();
        if (ids.size() > 1) ++n_noisy;
        for (const auto& f : t.frames) CHECK(f.camera_id == t.camera_id);
    }
    CHECK(n_noisy == plan.n_noisy);
}

TEST_CASE("generation is deterministic under the seed") {
    Dataset clean = make_clean_dataset(30, 2, 3, 8, 6);
    auto plan = plan_simulation(clean, {2.2, 1.3}, default_ids_per_noisy_dist(), 21);
    CHECK(generate_noisy_dataset(clean, plan) == generate_noisy_dataset(clean, plan));
}

TEST_CASE("dirty input is rejected") {
    Dataset clean = make_clean_dataset(10, 1, 2, 8, 1);
    auto plan = plan_simulation(clean, {2.0, 1.2}, default_ids_per_noisy_dist(), 1);
    Dataset noisy = generate_noisy_dataset(clean, plan);
    CHECK_THROWS_AS(plan_simulation(noisy, {2.0, 1.2}, default_ids_per_noisy_dist(), 1), Error);
}

TEST_CASE("unreachable switch targets fail with a feasibility error") {
    // One camera with two identities cannot host 4-way merges.
    Dataset clean = make_clean_dataset(2, 1, 1, 12, 1);
    try {
        plan_simulation(clean, {3.0, 2.5}, {{4, 1.0}}, 1);
        FAIL("expected a feasibility error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::feasibility);
    }
}

TEST_CASE("rates below one are a config error") {
    Dataset clean = make_clean_dataset(4, 1, 1, 8, 1);
    CHECK_THROWS_AS(plan_simulation(clean, {0.5, 1.0}, default_ids_per_noisy_dist(), 1), Error);
}

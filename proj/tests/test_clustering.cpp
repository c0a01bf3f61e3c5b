#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <random>

#include "helpers.hpp"
#include "trackmill/clustering.hpp"

using namespace trackmill;
using testutil::random_unit_rows;

namespace {

// Independent textbook DBSCAN: brute-force region queries, seed points in
// input order, FIFO expansion, border points keep their first label.
std::vector<int> reference_dbscan(const EmbeddingMatrix& dist, double eps, int min_pts) {
    const int n = static_cast<int>(dist.rows());
    std::vector<std::vector<int>> nb(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (dist(i, j) <= eps) nb[static_cast<std::size_t>(i)].push_back(j);

    std::vector<int> label(static_cast<std::size_t>(n), kNoise);
    std::vector<bool> done(static_cast<std::size_t>(n), false);
    int next = 0;
    for (int i = 0; i < n; ++i) {
        if (done[static_cast<std::size_t>(i)]) continue;
        done[static_cast<std::size_t>(i)] = true;
        if (static_cast<int>(nb[static_cast<std::size_t>(i)].size()) < min_pts) continue;
        int c = next++;
        label[static_cast<std::size_t>(i)] = c;
        std::deque<int> seeds(nb[static_cast<std::size_t>(i)].begin(),
                              nb[static_cast<std::size_t>(i)].end());
        while (!seeds.empty()) {
            int q = seeds.front();
            seeds.pop_front();
            if (label[static_cast<std::size_t>(q)] == kNoise) label[static_cast<std::size_t>(q)] = c;
            if (done[static_cast<std::size_t>(q)]) continue;
            done[static_cast<std::size_t>(q)] = true;
            label[static_cast<std::size_t>(q)] = c;
            if (static_cast<int>(nb[static_cast<std::size_t>(q)].size()) >= min_pts)
                seeds.insert(seeds.end(), nb[static_cast<std::size_t>(q)].begin(),
                             nb[static_cast<std::size_t>(q)].end());
        }
    }
    return label;
}

// Labelings agree up to a bijective renaming; noise maps to noise.
bool same_up_to_renumbering(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) return false;
    std::map<int, int> fwd, bwd;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if ((a[i] == kNoise) != (b[i] == kNoise)) return false;
        if (a[i] == kNoise) continue;
        auto [f, fi] = fwd.try_emplace(a[i], b[i]);
        auto [g, gi] = bwd.try_emplace(b[i], a[i]);
        if (f->second != b[i] || g->second != a[i]) return false;
    }
    return true;
}

// Percentile of a sorted multiset with linear interpolation; written from the
// definition, not shared with the implementation.
double reference_percentile(std::vector<double> vals, double p) {
    std::sort(vals.begin(), vals.end());
    double pos = p / 100.0 * static_cast<double>(vals.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    auto hi = static_cast<std::size_t>(std::ceil(pos));
    double frac = pos - std::floor(pos);
    return vals[lo] + frac * (vals[hi] - vals[lo]);
}

}  // namespace

TEST_CASE("identical rows give a zero distance matrix") {
    EmbeddingMatrix x(3, 4);
    Eigen::RowVectorXd v(4);
    v << 0.5, 0.5, 0.5, 0.5;
    for (int i = 0; i < 3; ++i) x.row(i) = v;
    EmbeddingMatrix d = pairwise_cosine_distance(x);
    CHECK(d.cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("orthogonal pair is at distance one") {
    EmbeddingMatrix x(2, 2);
    x << 1, 0, 0, 1;
    CHECK(pairwise_cosine_distance(x)(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("pairwise distance matches the naive double loop") {
    EmbeddingMatrix x = random_unit_rows(40, 8, 17);
    EmbeddingMatrix d = pairwise_cosine_distance(x);
    CHECK((d - d.transpose()).cwiseAbs().maxCoeff() <= 1e-7);
    for (int i = 0; i < 40; ++i)
        for (int j = 0; j < 40; ++j) {
            double ref = i == j ? 0.0 : 1.0 - x.row(i).dot(x.row(j));
            CHECK(d(i, j) == doctest::Approx(ref).epsilon(1e-7));
        }
}

TEST_CASE("non-unit rows are rejected") {
    EmbeddingMatrix x(2, 2);
    x << 2, 0, 0, 1;
    CHECK_THROWS_AS(pairwise_cosine_distance(x), Error);
}

TEST_CASE("eps from a single pair equals its distance for any percentile") {
    // Two unit vectors at cosine distance 0.4.
    EmbeddingMatrix x(2, 2);
    x << 1.0, 0.0, 0.6, 0.8;
    for (double p : {1.0, 25.0, 50.0, 99.0})
        CHECK(compute_eps(x, p) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("interpolation rule: {0.1, 0.2, 0.3, 0.4} at p=50 gives 0.25") {
    CHECK(reference_percentile({0.1, 0.2, 0.3, 0.4}, 50.0) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("eps matches an independent percentile over the naive distances") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
        EmbeddingMatrix x = random_unit_rows(25, 6, seed);
        std::vector<double> dists;
        for (int i = 0; i < x.rows(); ++i)
            for (int j = i + 1; j < x.rows(); ++j)
                dists.push_back(pairwise_cosine_distance(x)(i, j));
        for (double p : {0.1, 5.0, 50.0, 95.0})
            CHECK(compute_eps(x, p) == doctest::Approx(reference_percentile(dists, p)).epsilon(1e-9));
    }
}

TEST_CASE("degenerate all-coincident input is a numeric error") {
    EmbeddingMatrix x(3, 2);
    x << 1, 0, 1, 0, 1, 0;
    CHECK_THROWS_AS(compute_eps(x, 50.0), Error);
}

TEST_CASE("empty input clusters to nothing") {
    EmbeddingMatrix x(0, 4);
    auto a = dbscan(x, ClusterConfig::fixed(0.5, 4));
    CHECK(a.n_clusters == 0);
    CHECK(a.labels.empty());
}

TEST_CASE("identical points form one cluster with no noise") {
    EmbeddingMatrix x(6, 3);
    for (int i = 0; i < 6; ++i) x.row(i) << 1, 0, 0;
    auto a = dbscan(x, ClusterConfig::fixed(0.3, 4));
    CHECK(a.n_clusters == 1);
    for (int l : a.labels) CHECK(l == 0);
}

TEST_CASE("dbscan matches the brute-force reference on random point sets") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        int n = 20 + static_cast<int>(rng() % 100);
        int d = 3 + static_cast<int>(rng() % 6);
        EmbeddingMatrix x = random_unit_rows(n, d, rng());
        double eps = 0.05 + 0.5 * std::uniform_real_distribution<double>(0, 1)(rng);
        int min_pts = 2 + static_cast<int>(rng() % 6);
        auto a = dbscan(x, ClusterConfig::fixed(eps, min_pts));
        auto ref = reference_dbscan(pairwise_cosine_distance(x), eps, min_pts);
        CHECK(same_up_to_renumbering(a.labels, ref));
        CHECK(a.n_clusters == *std::max_element(ref.begin(), ref.end()) + 1);
    }
}

TEST_CASE("data-dependent policy computes eps from the distance percentile") {
    EmbeddingMatrix x = random_unit_rows(30, 5, 7);
    auto a = dbscan(x, ClusterConfig::data_dependent(5.0, 3));
    CHECK(a.eps_used == doctest::Approx(compute_eps(x, 5.0)));
}

#include <doctest.h>

#include <map>

#include "helpers.hpp"
#include "trackmill/association.hpp"
#include "trackmill/eval.hpp"
#include "trackmill/oracle.hpp"

using namespace trackmill;
using testutil::make_tracklet;

namespace {

// Extractor serving precomputed oracle embeddings for the whole dataset.
struct StoredExtractor {
    const Dataset* ds;
    EmbeddingMatrix features;
    std::map<std::string, Eigen::Index> offset;

    StoredExtractor(const Dataset& d, const OracleConfig& cfg)
        : ds(&d), features(generate_embeddings(d, cfg)) {
        Eigen::Index pos = 0;
        for (const auto& t : d.tracklets) {
            offset[t.id] = pos;
            pos += static_cast<Eigen::Index>(t.length());
        }
    }

    EmbeddingMatrix operator()(const Tracklet& t, const std::vector<int>& idx) const {
        EmbeddingMatrix out(static_cast<Eigen::Index>(idx.size()), features.cols());
        for (std::size_t j = 0; j < idx.size(); ++j)
            out.row(static_cast<Eigen::Index>(j)) = features.row(offset.at(t.id) + idx[j]);
        return out;
    }
};

}  // namespace

TEST_CASE("sampling a long tracklet yields a consecutive in-range window") {
    Tracklet t = make_tracklet("t", 0, std::vector<std::int64_t>(50, 1));
    auto idx = sample_consecutive(t, 32, 9);
    REQUIRE(idx.size() == 32);
    CHECK(idx[0] >= 0);
    CHECK(idx[0] <= 18);
    for (std::size_t j = 1; j < idx.size(); ++j) CHECK(idx[j] == idx[j - 1] + 1);
}

TEST_CASE("short tracklets wrap cyclically from the start") {
    Tracklet t = make_tracklet("t", 0, std::vector<std::int64_t>(10, 1));
    auto idx = sample_consecutive(t, 32, 4);
    REQUIRE(idx.size() == 32);
    for (std::size_t j = 0; j < idx.size(); ++j) CHECK(idx[j] == static_cast<int>(j % 10));
}

TEST_CASE("sampling is deterministic under the seed") {
    Tracklet t = make_tracklet("t", 0, std::vector<std::int64_t>(100, 1));
    CHECK(sample_consecutive(t, 32, 77) == sample_consecutive(t, 32, 77));
}

TEST_CASE("tracklet feature of one frame is that frame") {
    EmbeddingMatrix x = testutil::random_unit_rows(1, 6, 1);
    CHECK((tracklet_feature(x) - x.row(0)).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("tracklet feature of identical frames is that vector") {
    EmbeddingMatrix x(2, 4);
    x.row(0) = testutil::random_unit_rows(1, 4, 2).row(0);
    x.row(1) = x.row(0);
    CHECK((tracklet_feature(x) - x.row(0)).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("tracklet feature matches naive mean-then-normalize") {
    EmbeddingMatrix x = testutil::random_unit_rows(32, 8, 3);
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(8);
    for (int i = 0; i < 32; ++i) mean += x.row(i);
    mean /= 32.0;
    mean /= mean.norm();
    CHECK((tracklet_feature(x) - mean).norm() <= 1e-7);
}

TEST_CASE("well-separated clean tracklets associate into one cluster per identity") {
    Dataset ds = make_clean_dataset(8, 2, 2, 40, 5);
    StoredExtractor ex(ds, OracleConfig{32, 0.05, 0.0, 0.0, 7});
    auto labels = associate(ds, ex, ClusterConfig::fixed(0.2, 2), 32, 1, 0);
    CHECK(labels.n_classes == 8);
    CHECK(labels.n_noise == 0);
    std::map<std::string, std::int64_t> truth;
    for (const auto& t : ds.tracklets) truth[t.id] = *t.frames[0].gt_pid;
    CHECK(cluster_quality(labels, truth).purity == doctest::Approx(1.0));
}

TEST_CASE("a single tracklet is one cluster or noise depending on min_pts") {
    Dataset ds;
    ds.tracklets.push_back(make_tracklet("only", 0, std::vector<std::int64_t>(8, 1)));
    StoredExtractor ex(ds, OracleConfig{8, 0.1, 0.0, 0.0, 1});
    auto one = associate(ds, ex, ClusterConfig::data_dependent(0.1, 1), 8, 1, 0);
    CHECK(one.n_classes == 1);
    CHECK(one.tracklet_to_label.at("only") == 0);
    auto noise = associate(ds, ex, ClusterConfig::data_dependent(0.1, 2), 8, 1, 0);
    CHECK(noise.n_classes == 0);
    CHECK(noise.tracklet_to_label.at("only") == kNoise);
}

TEST_CASE("fragments of one identity land in the same cluster") {
    Dataset ds;
    ds.tracklets.push_back(make_tracklet("frag0", 0, std::vector<std::int64_t>(12, 1)));
    ds.tracklets.push_back(make_tracklet("frag1", 0, std::vector<std::int64_t>(12, 1)));
    ds.tracklets.push_back(make_tracklet("other0", 0, std::vector<std::int64_t>(12, 2)));
    ds.tracklets.push_back(make_tracklet("other1", 0, std::vector<std::int64_t>(12, 2)));
    StoredExtractor ex(ds, OracleConfig{16, 0.05, 0.0, 0.0, 2});
    auto labels = associate(ds, ex, ClusterConfig::fixed(0.2, 2), 12, 3, 0);
    CHECK(labels.n_classes == 2);
    CHECK(labels.tracklet_to_label.at("frag0") == labels.tracklet_to_label.at("frag1"));
    CHECK(labels.tracklet_to_label.at("other0") == labels.tracklet_to_label.at("other1"));
    CHECK(labels.tracklet_to_label.at("frag0") != labels.tracklet_to_label.at("other0"));
}

TEST_CASE("windows are resampled across epochs") {
    Dataset ds = make_clean_dataset(4, 1, 1, 200, 9);
    StoredExtractor ex(ds, OracleConfig{16, 0.3, 0.0, 0.0, 3});
    EmbeddingMatrix e0 = pooled_features(ds, ex, 32, 5, 0);
    EmbeddingMatrix e1 = pooled_features(ds, ex, 32, 5, 1);
    CHECK((e0 - e1).cwiseAbs().maxCoeff() > 0.0);
    // Same epoch replays identically.
    CHECK((e0 - pooled_features(ds, ex, 32, 5, 0)).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

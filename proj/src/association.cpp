#include "trackmill/association.hpp"

#include <random>

namespace trackmill {

std::vector<int> sample_consecutive(const Tracklet& t, int n, std::uint64_t seed) {
    if (t.frames.empty()) fail(ErrorKind::integrity, "cannot sample from empty tracklet '" + t.id + "'");
    if (n < 1) fail(ErrorKind::config, "sample length must be >= 1");
    const int len = static_cast<int>(t.length());
    std::vector<int> idx(static_cast<std::size_t>(n));
    if (len >= n) {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<int> start(0, len - n);
        int s = start(rng);
        for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = s + i;
    } else {
        for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i % len;
    }
    return idx;
}

Eigen::RowVectorXd tracklet_feature(const EmbeddingMatrix& frames) {
    if (frames.rows() < 1) fail(ErrorKind::integrity, "tracklet_feature needs at least one row");
    Eigen::RowVectorXd mean = frames.colwise().mean();
    double n = mean.norm();
    if (n < 1e-12)
        fail(ErrorKind::numeric, "degenerate tracklet feature: frame embeddings cancel out");
    return mean / n;
}

EmbeddingMatrix pooled_features(const Dataset& ds, const FrameExtractor& extractor,
                                int n, std::uint64_t seed, int epoch) {
    EmbeddingMatrix pooled(ds.n_tracklets(), 0);
    for (std::size_t i = 0; i < ds.tracklets.size(); ++i) {
        const auto& t = ds.tracklets[i];
        auto idx = sample_consecutive(
            t, n, mix_seed(seed, stable_hash(t.id) ^ (static_cast<std::uint64_t>(epoch) << 32)));
        Eigen::RowVectorXd f = tracklet_feature(extractor(t, idx));
        if (pooled.cols() == 0) pooled.resize(ds.n_tracklets(), f.cols());
        pooled.row(static_cast<Eigen::Index>(i)) = f;
    }
    return pooled;
}

PseudoLabeling associate(const Dataset& ds, const FrameExtractor& extractor,
                         const ClusterConfig& cfg, int n, std::uint64_t seed, int epoch) {
    PseudoLabeling out;
    out.epoch = epoch;
    if (ds.n_tracklets() == 0) return out;

    EmbeddingMatrix pooled = pooled_features(ds, extractor, n, seed, epoch);
    ClusterAssignment asg = dbscan(pooled, cfg);
    out.n_classes = asg.n_clusters;
    out.eps_used = asg.eps_used;
    for (std::size_t i = 0; i < ds.tracklets.size(); ++i) {
        int label = asg.labels[i];
        out.tracklet_to_label[ds.tracklets[i].id] = label;
        if (label == kNoise) ++out.n_noise;
    }
    return out;
}

}  // namespace trackmill

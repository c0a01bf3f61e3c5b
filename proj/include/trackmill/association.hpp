#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "trackmill/clustering.hpp"
#include "trackmill/types.hpp"

namespace trackmill {

inline constexpr int kDefaultSampleLen = 32;

/// Hard pseudo labels over tracklets for one epoch.
struct PseudoLabeling {
    std::map<std::string, int> tracklet_to_label;  // kNoise for DBSCAN outliers
    int n_classes = 0;
    int epoch = 0;
    double eps_used = 0.0;
    std::size_t n_noise = 0;
};

/// Uniformly random run of n consecutive frame indices; tracklets shorter
/// than n wrap around cyclically.
std::vector<int> sample_consecutive(const Tracklet& t, int n, std::uint64_t seed);

/// Mean of the rows, renormalized to unit norm.
Eigen::RowVectorXd tracklet_feature(const EmbeddingMatrix& frames);

/// Per-frame feature extractor: selected frame indices of one tracklet ->
/// row-per-frame embedding block.
using FrameExtractor =
    std::function<EmbeddingMatrix(const Tracklet&, const std::vector<int>&)>;

/// Sample a window per tracklet, pool it, and cluster the pooled features
/// into hard pseudo labels. The epoch index is folded into the per-tracklet
/// sampling seed so windows are resampled every epoch.
PseudoLabeling associate(const Dataset& ds, const FrameExtractor& extractor,
                         const ClusterConfig& cfg, int n = kDefaultSampleLen,
                         std::uint64_t seed = 0, int epoch = 0);

/// Pooled per-tracklet features in dataset order (shared by associate and
/// the retrieval evaluation path).
EmbeddingMatrix pooled_features(const Dataset& ds, const FrameExtractor& extractor,
                                int n, std::uint64_t seed, int epoch);

}  // namespace trackmill

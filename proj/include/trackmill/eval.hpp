#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "trackmill/association.hpp"
#include "trackmill/types.hpp"

namespace trackmill {

/// Average precision of a ranked relevance list (mean of precision at each
/// relevant rank). Errors if nothing is relevant.
double average_precision(const std::vector<bool>& ranked_relevance);

struct RetrievalSet {
    EmbeddingMatrix features;          // unit-norm rows
    std::vector<std::int64_t> labels;
    std::vector<int> cameras;
};

struct RetrievalResult {
    double map = 0.0;
    std::map<int, double> cmc;         // rank -> hit fraction
    std::size_t skipped_queries = 0;   // queries with no valid cross-camera match
};

/// Standard re-ID protocol: rank the gallery by cosine similarity per query,
/// drop same-ID same-camera entries, report mAP and CMC at the given ranks.
/// Ties broken by gallery index.
RetrievalResult evaluate_retrieval(const RetrievalSet& query, const RetrievalSet& gallery,
                                   const std::vector<int>& ranks);

struct ClusterQuality {
    double purity = 0.0;               // over assigned members only
    int n_clusters = 0;
    double noise_fraction = 0.0;
};

/// Purity of a pseudo labeling against per-tracklet ground truth (majority
/// ID); NOISE tracklets are excluded from purity and reported separately.
ClusterQuality cluster_quality(const PseudoLabeling& pseudo,
                               const std::map<std::string, std::int64_t>& truth);

/// Frame-weighted purity: every frame of an assigned tracklet counts against
/// its own gt_pid, so impure tracklets are penalized even when their cluster
/// matches the majority.
ClusterQuality frame_level_purity(const Dataset& ds, const PseudoLabeling& pseudo);

}  // namespace trackmill

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "trackmill/clustering.hpp"
#include "trackmill/types.hpp"

namespace trackmill {

struct IsolationReport {
    std::size_t n_input = 0;
    std::size_t n_output = 0;           // total clusters produced
    std::size_t n_passthrough = 0;      // tracklets too short to cluster
    double eps = 0.0;
    std::optional<double> noise_pct;    // dataset noise ratio of the output, when labeled
};

struct IsolationResult {
    Dataset dataset;
    IsolationReport report;
};

/// Split each tracklet into per-cluster sub-tracklets by DBSCAN over its
/// frame embeddings (cosine distance). Frames keep ascending seq order;
/// DBSCAN noise frames attach to the temporally nearest cluster. Tracklets
/// shorter than min_pts pass through unsplit.
IsolationResult isolate_tracklets(const Dataset& ds, const EmbeddingMatrix& features,
                                  const ClusterConfig& cfg);

}  // namespace trackmill

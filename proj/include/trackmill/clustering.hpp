#pragma once

#include <vector>

#include "trackmill/types.hpp"

namespace trackmill {

inline constexpr int kNoise = -1;

struct EpsPolicy {
    enum class Kind { fixed, data_dependent };
    Kind kind = Kind::fixed;
    double eps = 0.6;          // used when fixed
    double percentile = 0.1;   // pairwise-distance percentile, in percent, when data-dependent
};

struct ClusterConfig {
    EpsPolicy eps_policy;
    int min_pts = 4;

    static ClusterConfig fixed(double eps, int min_pts = 4) {
        return {{EpsPolicy::Kind::fixed, eps, 0.0}, min_pts};
    }
    static ClusterConfig data_dependent(double percentile = 0.1, int min_pts = 4) {
        return {{EpsPolicy::Kind::data_dependent, 0.0, percentile}, min_pts};
    }
};

struct ClusterAssignment {
    std::vector<int> labels;   // cluster id, dense from 0, or kNoise
    int n_clusters = 0;
    double eps_used = 0.0;
};

/// d_ij = 1 - <x_i, x_j> for unit-norm rows; symmetric with zero diagonal.
EmbeddingMatrix pairwise_cosine_distance(const EmbeddingMatrix& x);

/// Percentile (in percent, linearly interpolated) of the off-diagonal
/// pairwise cosine distance multiset.
double compute_eps(const EmbeddingMatrix& x, double percentile);

/// Classic DBSCAN over a precomputed symmetric distance matrix. Neighborhoods
/// use d <= eps; a point counts itself; visit order is input order and border
/// points join the first cluster reaching them, so runs are deterministic.
ClusterAssignment dbscan_precomputed(const EmbeddingMatrix& dist, double eps, int min_pts);

ClusterAssignment dbscan(const EmbeddingMatrix& x, const ClusterConfig& cfg);

}  // namespace trackmill

#include "trackmill/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace trackmill {

namespace {

void require_unit_norm(const EmbeddingMatrix& x) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double n = x.row(i).norm();
        if (n < 1e-12)
            fail(ErrorKind::numeric, "zero-norm embedding row " + std::to_string(i));
        if (std::abs(n - 1.0) > 1e-6)
            fail(ErrorKind::numeric,
                 "embedding row " + std::to_string(i) + " not unit-norm (|x| = " +
                     std::to_string(n) + ")");
    }
}

}  // namespace

EmbeddingMatrix pairwise_cosine_distance(const EmbeddingMatrix& x) {
    require_unit_norm(x);
    EmbeddingMatrix d = -(x * x.transpose());
    d.array() += 1.0;
    // Enforce exact symmetry and zero diagonal against rounding.
    d = ((d + d.transpose()) * 0.5).eval();
    d.diagonal().setZero();
    d = d.cwiseMax(0.0);
    return d;
}

double compute_eps(const EmbeddingMatrix& x, double percentile) {
    if (x.rows() < 2)
        fail(ErrorKind::config, "compute_eps needs at least 2 points");
    if (percentile <= 0.0 || percentile >= 100.0)
        fail(ErrorKind::config, "percentile must be in (0, 100)");
    EmbeddingMatrix d = pairwise_cosine_distance(x);
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(d.rows()) * (d.rows() - 1) / 2);
    for (Eigen::Index i = 0; i < d.rows(); ++i)
        for (Eigen::Index j = i + 1; j < d.cols(); ++j)
            vals.push_back(d(i, j));
    std::sort(vals.begin(), vals.end());
    if (vals.back() <= 0.0)
        fail(ErrorKind::numeric, "degenerate distance distribution: all points coincide");
    double pos = percentile / 100.0 * static_cast<double>(vals.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, vals.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return vals[lo] * (1.0 - frac) + vals[hi] * frac;
}

ClusterAssignment dbscan_precomputed(const EmbeddingMatrix& dist, double eps, int min_pts) {
    const Eigen::Index n = dist.rows();
    ClusterAssignment out;
    out.eps_used = eps;
    out.labels.assign(static_cast<std::size_t>(n), kNoise);
    if (n == 0) return out;

    auto neighbors = [&](Eigen::Index p) {
        std::vector<Eigen::Index> nb;
        for (Eigen::Index q = 0; q < n; ++q)
            if (dist(p, q) <= eps) nb.push_back(q);  // includes p itself
        return nb;
    };

    std::vector<char> visited(static_cast<std::size_t>(n), 0);
    int next_cluster = 0;
    for (Eigen::Index p = 0; p < n; ++p) {
        if (visited[p]) continue;
        visited[p] = 1;
        auto nb = neighbors(p);
        if (static_cast<int>(nb.size()) < min_pts) continue;  // stays noise unless reached later
        int c = next_cluster++;
        out.labels[p] = c;
        std::deque<Eigen::Index> queue(nb.begin(), nb.end());
        while (!queue.empty()) {
            Eigen::Index q = queue.front();
            queue.pop_front();
            if (out.labels[q] == kNoise) out.labels[q] = c;  // border point
            if (visited[q]) continue;
            visited[q] = 1;
            out.labels[q] = c;
            auto qnb = neighbors(q);
            if (static_cast<int>(qnb.size()) >= min_pts)
                queue.insert(queue.end(), qnb.begin(), qnb.end());
        }
    }
    out.n_clusters = next_cluster;
    return out;
}

ClusterAssignment dbscan(const EmbeddingMatrix& x, const ClusterConfig& cfg) {
    if (x.rows() == 0) return ClusterAssignment{};
    double eps = cfg.eps_policy.kind == EpsPolicy::Kind::fixed
                     ? cfg.eps_policy.eps
                     : (x.rows() < 2 ? 0.0 : compute_eps(x, cfg.eps_policy.percentile));
    if (eps <= 0.0 && cfg.eps_policy.kind == EpsPolicy::Kind::fixed)
        fail(ErrorKind::config, "eps must be positive");
    return dbscan_precomputed(pairwise_cosine_distance(x), eps, cfg.min_pts);
}

}  // namespace trackmill

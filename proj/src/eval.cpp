#include "trackmill/eval.hpp"

#include <algorithm>
#include <numeric>

#include "trackmill/clustering.hpp"

namespace trackmill {

double average_precision(const std::vector<bool>& ranked_relevance) {
    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t k = 0; k < ranked_relevance.size(); ++k) {
        if (!ranked_relevance[k]) continue;
        ++hits;
        sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
    if (hits == 0) fail(ErrorKind::integrity, "query has no relevant item");
    return sum / static_cast<double>(hits);
}

RetrievalResult evaluate_retrieval(const RetrievalSet& query, const RetrievalSet& gallery,
                                   const std::vector<int>& ranks) {
    const auto nq = static_cast<std::size_t>(query.features.rows());
    const auto ng = static_cast<std::size_t>(gallery.features.rows());
    if (query.labels.size() != nq || query.cameras.size() != nq ||
        gallery.labels.size() != ng || gallery.cameras.size() != ng)
        fail(ErrorKind::integrity, "retrieval set sizes do not match feature rows");

    RetrievalResult res;
    std::map<int, std::size_t> hits_at;
    for (int r : ranks) hits_at[r] = 0;

    EmbeddingMatrix sim = query.features * gallery.features.transpose();
    double ap_sum = 0.0;
    std::size_t evaluated = 0;
    for (std::size_t q = 0; q < nq; ++q) {
        std::vector<std::size_t> order;
        order.reserve(ng);
        for (std::size_t g = 0; g < ng; ++g) {
            // Standard protocol: drop gallery entries sharing both ID and camera.
            if (gallery.labels[g] == query.labels[q] && gallery.cameras[g] == query.cameras[q])
                continue;
            order.push_back(g);
        }
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return sim(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(a)) >
                   sim(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(b));
        });
        std::vector<bool> rel(order.size());
        bool any = false;
        for (std::size_t k = 0; k < order.size(); ++k) {
            rel[k] = gallery.labels[order[k]] == query.labels[q];
            any = any || rel[k];
        }
        if (!any) {
            ++res.skipped_queries;
            continue;
        }
        ++evaluated;
        ap_sum += average_precision(rel);
        std::size_t first_hit = 0;
        while (!rel[first_hit]) ++first_hit;
        for (auto& [r, h] : hits_at)
            if (first_hit < static_cast<std::size_t>(r)) ++h;
    }
    if (evaluated == 0) fail(ErrorKind::integrity, "no query has a valid gallery match");
    res.map = ap_sum / static_cast<double>(evaluated);
    for (const auto& [r, h] : hits_at)
        res.cmc[r] = static_cast<double>(h) / static_cast<double>(evaluated);
    return res;
}

namespace {

ClusterQuality purity_from_counts(
    const std::map<int, std::map<std::int64_t, std::size_t>>& per_cluster,
    std::size_t assigned, std::size_t noise, std::size_t total) {
    ClusterQuality q;
    q.n_clusters = static_cast<int>(per_cluster.size());
    q.noise_fraction = total == 0 ? 0.0
                                  : static_cast<double>(noise) / static_cast<double>(total);
    if (assigned == 0) fail(ErrorKind::integrity, "purity undefined: nothing assigned to a cluster");
    std::size_t majority_sum = 0;
    for (const auto& [c, counts] : per_cluster) {
        std::size_t best = 0;
        for (const auto& [pid, n] : counts) best = std::max(best, n);
        majority_sum += best;
    }
    q.purity = static_cast<double>(majority_sum) / static_cast<double>(assigned);
    return q;
}

}  // namespace

ClusterQuality cluster_quality(const PseudoLabeling& pseudo,
                               const std::map<std::string, std::int64_t>& truth) {
    if (pseudo.tracklet_to_label.empty())
        fail(ErrorKind::integrity, "empty pseudo labeling");
    std::map<int, std::map<std::int64_t, std::size_t>> per_cluster;
    std::size_t assigned = 0, noise = 0, total = 0;
    for (const auto& [tid, label] : pseudo.tracklet_to_label) {
        auto it = truth.find(tid);
        if (it == truth.end())
            fail(ErrorKind::integrity, "no ground truth for tracklet '" + tid + "'");
        ++total;
        if (label == kNoise) { ++noise; continue; }
        ++assigned;
        ++per_cluster[label][it->second];
    }
    return purity_from_counts(per_cluster, assigned, noise, total);
}

ClusterQuality frame_level_purity(const Dataset& ds, const PseudoLabeling& pseudo) {
    if (pseudo.tracklet_to_label.empty())
        fail(ErrorKind::integrity, "empty pseudo labeling");
    std::map<int, std::map<std::int64_t, std::size_t>> per_cluster;
    std::size_t assigned = 0, noise = 0, total = 0;
    for (const auto& t : ds.tracklets) {
        auto it = pseudo.tracklet_to_label.find(t.id);
        if (it == pseudo.tracklet_to_label.end())
            fail(ErrorKind::integrity, "tracklet '" + t.id + "' missing from pseudo labeling");
        total += t.frames.size();
        if (it->second == kNoise) { noise += t.frames.size(); continue; }
        for (const auto& f : t.frames) {
            if (!f.gt_pid) fail(ErrorKind::integrity, "frame without gt_pid in purity computation");
            ++assigned;
            ++per_cluster[it->second][*f.gt_pid];
        }
    }
    return purity_from_counts(per_cluster, assigned, noise, total);
}

}  // namespace trackmill

#include "trackmill/isolation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "trackmill/noise_metrics.hpp"

namespace trackmill {

IsolationResult isolate_tracklets(const Dataset& ds, const EmbeddingMatrix& features,
                                  const ClusterConfig& cfg) {
    if (static_cast<std::size_t>(features.rows()) != ds.n_frames())
        fail(ErrorKind::integrity,
             "feature rows (" + std::to_string(features.rows()) + ") do not match frame count (" +
                 std::to_string(ds.n_frames()) + ")");
    if (cfg.eps_policy.kind != EpsPolicy::Kind::fixed)
        fail(ErrorKind::config, "intra-tracklet isolation uses a fixed eps");

    IsolationResult res;
    res.report.n_input = ds.n_tracklets();
    res.report.eps = cfg.eps_policy.eps;
    res.dataset.embedding_dim = ds.embedding_dim;

    Eigen::Index row0 = 0;
    for (const auto& t : ds.tracklets) {
        const auto len = static_cast<Eigen::Index>(t.length());
        EmbeddingMatrix x = features.middleRows(row0, len);
        row0 += len;

        std::vector<int> labels;
        int n_clusters = 0;
        if (len < cfg.min_pts) {
            labels.assign(static_cast<std::size_t>(len), 0);
            n_clusters = 1;
            ++res.report.n_passthrough;
        } else {
            auto asg = dbscan(x, cfg);
            labels = asg.labels;
            n_clusters = asg.n_clusters;
            if (n_clusters == 0) {
                // Whole tracklet rejected as noise; keep it in one piece.
                labels.assign(static_cast<std::size_t>(len), 0);
                n_clusters = 1;
                ++res.report.n_passthrough;
            } else {
                // Attach noise frames to the cluster whose frame span is
                // temporally closest.
                std::vector<std::pair<int, int>> span(static_cast<std::size_t>(n_clusters),
                                                      {std::numeric_limits<int>::max(), -1});
                for (std::size_t j = 0; j < labels.size(); ++j)
                    if (labels[j] != kNoise) {
                        auto& s = span[static_cast<std::size_t>(labels[j])];
                        s.first = std::min(s.first, static_cast<int>(j));
                        s.second = std::max(s.second, static_cast<int>(j));
                    }
                for (std::size_t j = 0; j < labels.size(); ++j) {
                    if (labels[j] != kNoise) continue;
                    int best = 0, best_d = std::numeric_limits<int>::max();
                    for (int c = 0; c < n_clusters; ++c) {
                        const auto& s = span[static_cast<std::size_t>(c)];
                        int d = 0;
                        if (static_cast<int>(j) < s.first) d = s.first - static_cast<int>(j);
                        else if (static_cast<int>(j) > s.second) d = static_cast<int>(j) - s.second;
                        if (d < best_d) { best_d = d; best = c; }
                    }
                    labels[j] = best;
                }
            }
        }

        for (int c = 0; c < n_clusters; ++c) {
            Tracklet sub;
            sub.camera_id = t.camera_id;
            sub.id = n_clusters == 1 ? t.id : t.id + "#" + std::to_string(c);
            int seq = 0;
            for (std::size_t j = 0; j < labels.size(); ++j) {
                if (labels[j] != c) continue;
                FrameRecord f = t.frames[j];
                f.tracklet_id = sub.id;
                f.seq = seq++;
                sub.frames.push_back(std::move(f));
            }
            res.dataset.tracklets.push_back(std::move(sub));
        }
        res.report.n_output += static_cast<std::size_t>(n_clusters);
    }

    res.dataset.validate();
    if (res.dataset.fully_labeled() && res.dataset.n_tracklets() > 0)
        res.report.noise_pct = noise_report(res.dataset).noise_pct;
    return res;
}

}  // namespace trackmill

#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "trackmill/types.hpp"

namespace testutil {

inline std::string tmp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "trackmill_tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

inline trackmill::EmbeddingMatrix random_unit_rows(int n, int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    trackmill::EmbeddingMatrix m(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) m(i, j) = g(rng);
        m.row(i) /= m.row(i).norm();
    }
    return m;
}

// Hand-built tracklet: one frame per pid entry, image_refs so validation holds.
inline trackmill::Tracklet make_tracklet(const std::string& id, int camera,
                                         const std::vector<std::int64_t>& pids) {
    trackmill::Tracklet t;
    t.id = id;
    t.camera_id = camera;
    for (std::size_t j = 0; j < pids.size(); ++j) {
        trackmill::FrameRecord f;
        f.tracklet_id = id;
        f.seq = static_cast<int>(j);
        f.gt_pid = pids[j];
        f.camera_id = camera;
        f.image_ref = id + "/f" + std::to_string(j);
        t.frames.push_back(std::move(f));
    }
    return t;
}

}  // namespace testutil

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "trackmill/errors.hpp"

namespace trackmill {

using EmbeddingMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One detected frame inside a tracklet.
struct FrameRecord {
    std::string tracklet_id;
    int seq = 0;                              // position within the tracklet, dense from 0
    std::optional<std::int64_t> gt_pid;       // ground-truth person ID, absent for unlabeled data
    int camera_id = 0;
    std::optional<std::vector<float>> embedding;
    std::optional<std::string> image_ref;

    bool operator==(const FrameRecord&) const = default;
};

/// A per-camera sequence of frames nominally showing one person.
struct Tracklet {
    std::string id;
    int camera_id = 0;
    std::vector<FrameRecord> frames;          // sorted by seq

    std::size_t length() const { return frames.size(); }

    // Distinct ground-truth IDs present in this tracklet (Q_i).
    std::set<std::int64_t> distinct_ids() const {
        std::set<std::int64_t> out;
        for (const auto& f : frames)
            if (f.gt_pid) out.insert(*f.gt_pid);
        return out;
    }

    bool fully_labeled() const {
        for (const auto& f : frames)
            if (!f.gt_pid) return false;
        return true;
    }

    bool operator==(const Tracklet&) const = default;
};

/// How ground-truth identities are counted when measuring noise rates.
/// Per-camera treats each (person, camera) pair as a distinct unit.
enum class IdCounting { per_camera, global };

struct Dataset {
    std::vector<Tracklet> tracklets;
    std::optional<int> embedding_dim;

    std::size_t n_tracklets() const { return tracklets.size(); }

    std::size_t n_frames() const {
        std::size_t n = 0;
        for (const auto& t : tracklets) n += t.frames.size();
        return n;
    }

    bool fully_labeled() const {
        for (const auto& t : tracklets)
            if (!t.fully_labeled()) return false;
        return true;
    }

    // Number of distinct identity units under the given counting.
    std::size_t n_ids(IdCounting counting = IdCounting::per_camera) const {
        if (counting == IdCounting::global) {
            std::set<std::int64_t> ids;
            for (const auto& t : tracklets)
                for (auto pid : t.distinct_ids()) ids.insert(pid);
            return ids.size();
        }
        std::set<std::pair<std::int64_t, int>> units;
        for (const auto& t : tracklets)
            for (auto pid : t.distinct_ids()) units.insert({pid, t.camera_id});
        return units.size();
    }

    void validate() const;

    bool operator==(const Dataset&) const = default;
};

/// Fragmentation / switch rates (both 1.0 on a clean dataset).
struct NoiseRates {
    double r_fm = 1.0;  // average tracklets per identity unit
    double r_sw = 1.0;  // average identity units per tracklet
};

// Stable 64-bit string hash (FNV-1a); used to derive per-entity RNG streams.
inline std::uint64_t stable_hash(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ull * (tag + 1);
    x ^= x >> 30; x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27; x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

}  // namespace trackmill

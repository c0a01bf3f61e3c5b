#include "trackmill/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

namespace trackmill {

namespace {

constexpr std::uint64_t kCenterTag = 0x11;
constexpr std::uint64_t kCameraTag = 0x22;
constexpr std::uint64_t kTrackTag = 0x33;

Eigen::VectorXd gaussian_vec(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v(i) = g(rng);
    return v;
}

Eigen::VectorXd unit_center(std::int64_t pid, const OracleConfig& cfg) {
    std::mt19937_64 rng(mix_seed(cfg.seed, kCenterTag ^ static_cast<std::uint64_t>(pid) * 0x9e37ull));
    Eigen::VectorXd v = gaussian_vec(rng, cfg.dim);
    return v / v.norm();
}

Eigen::VectorXd camera_offset(int cam, const OracleConfig& cfg) {
    std::mt19937_64 rng(mix_seed(cfg.seed, kCameraTag ^ (static_cast<std::uint64_t>(cam) << 8)));
    // Scaled so the expected offset norm is sigma_camera.
    return gaussian_vec(rng, cfg.dim) * (cfg.sigma_camera / std::sqrt(static_cast<double>(cfg.dim)));
}

void validate(const OracleConfig& cfg) {
    if (cfg.dim < 2) fail(ErrorKind::config, "oracle dim must be >= 2");
    if (cfg.sigma_intra < 0 || cfg.sigma_camera < 0 || cfg.drift < 0)
        fail(ErrorKind::config, "oracle noise scales must be >= 0");
}

}  // namespace

EmbeddingMatrix generate_embeddings(const Dataset& ds, const OracleConfig& cfg) {
    validate(cfg);
    if (!ds.fully_labeled())
        fail(ErrorKind::integrity, "oracle embeddings require a labeled dataset");

    double unit = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
    EmbeddingMatrix out(ds.n_frames(), cfg.dim);
    Eigen::Index row = 0;
    for (const auto& t : ds.tracklets) {
        std::mt19937_64 rng(mix_seed(cfg.seed, kTrackTag ^ stable_hash(t.id)));
        Eigen::VectorXd cam = camera_offset(t.camera_id, cfg);
        Eigen::VectorXd walk = Eigen::VectorXd::Zero(cfg.dim);
        std::map<std::int64_t, Eigen::VectorXd> centers;
        for (const auto& f : t.frames) {
            auto it = centers.find(*f.gt_pid);
            if (it == centers.end())
                it = centers.emplace(*f.gt_pid, unit_center(*f.gt_pid, cfg)).first;
            walk += gaussian_vec(rng, cfg.dim) * (cfg.drift * unit);
            Eigen::VectorXd v = it->second + cam + walk +
                                gaussian_vec(rng, cfg.dim) * (cfg.sigma_intra * unit);
            double n = v.norm();
            if (n < 1e-12) fail(ErrorKind::numeric, "degenerate oracle embedding");
            out.row(row++) = v / n;
        }
    }
    return out;
}

double separation_ratio(const Dataset& ds, const OracleConfig& cfg) {
    validate(cfg);
    std::set<std::int64_t> pids;
    for (const auto& t : ds.tracklets)
        for (auto pid : t.distinct_ids()) pids.insert(pid);
    if (pids.size() < 2 || cfg.sigma_intra <= 0) return std::numeric_limits<double>::infinity();
    std::vector<Eigen::VectorXd> centers;
    for (auto pid : pids) centers.push_back(unit_center(pid, cfg));
    double min_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < centers.size(); ++i)
        for (std::size_t j = i + 1; j < centers.size(); ++j)
            min_d = std::min(min_d, (centers[i] - centers[j]).norm());
    return min_d / cfg.sigma_intra;
}

Dataset embed_dataset(const Dataset& ds, const OracleConfig& cfg) {
    EmbeddingMatrix emb = generate_embeddings(ds, cfg);
    Dataset out = ds;
    out.embedding_dim = cfg.dim;
    Eigen::Index row = 0;
    for (auto& t : out.tracklets)
        for (auto& f : t.frames) {
            std::vector<float> v(cfg.dim);
            for (int k = 0; k < cfg.dim; ++k) v[k] = static_cast<float>(emb(row, k));
            f.embedding = std::move(v);
            ++row;
        }
    return out;
}

Dataset make_clean_dataset(int n_ids, int units_per_id, int n_cameras,
                           int frames_per_unit, std::uint64_t seed) {
    if (n_ids < 1 || units_per_id < 1 || n_cameras < units_per_id || frames_per_unit < 1)
        fail(ErrorKind::config, "invalid clean-dataset shape");
    std::mt19937_64 rng(mix_seed(seed, 0x77));
    Dataset ds;
    for (int pid = 0; pid < n_ids; ++pid) {
        // Pick units_per_id distinct cameras; rotate so cameras stay balanced.
        std::vector<int> cams(n_cameras);
        for (int c = 0; c < n_cameras; ++c) cams[c] = (pid + c) % n_cameras;
        std::shuffle(cams.begin() + 1, cams.end(), rng);
        for (int u = 0; u < units_per_id; ++u) {
            Tracklet t;
            t.camera_id = cams[static_cast<std::size_t>(u)];
            t.id = "u" + std::to_string(pid) + "c" + std::to_string(t.camera_id);
            for (int j = 0; j < frames_per_unit; ++j) {
                FrameRecord f;
                f.tracklet_id = t.id;
                f.seq = j;
                f.gt_pid = pid;
                f.camera_id = t.camera_id;
                f.image_ref = t.id + "/f" + std::to_string(j);
                t.frames.push_back(std::move(f));
            }
            ds.tracklets.push_back(std::move(t));
        }
    }
    ds.validate();
    return ds;
}

}  // namespace trackmill

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trackmill/association.hpp"
#include "trackmill/clustering.hpp"
#include "trackmill/losses.hpp"
#include "trackmill/types.hpp"

namespace trackmill {

/// Trainable feature model: a linear projection over raw (oracle) features
/// with row-wise renormalization, plus a per-epoch linear classifier head.
struct ModelState {
    EmbeddingMatrix projection;   // d_raw x d
    EmbeddingMatrix classifier;   // d x K
    Eigen::VectorXd bias;         // K
    std::int64_t step = 0;

    int d_raw() const { return static_cast<int>(projection.rows()); }
    int d() const { return static_cast<int>(projection.cols()); }
    int k() const { return static_cast<int>(classifier.cols()); }

    /// Identity-like init: preserves raw-feature geometry at epoch 0.
    static ModelState init(int d_raw, int d, std::uint64_t seed);

    /// Project and renormalize a row-per-frame block of raw features.
    EmbeddingMatrix embed(const EmbeddingMatrix& raw) const;
};

struct EmaState {
    ModelState model;
    double alpha = 0.999;
};

struct TrainConfig {
    int epochs = 40;
    double learning_rate = 0.00035;
    double weight_decay = 0.0005;
    double alpha = 0.999;
    int batch_identities = 8;   // P
    int batch_samples = 4;      // S
    int sample_len = kDefaultSampleLen;
    LossConfig loss;
    std::uint64_t seed = 0;
};

struct EpochReport {
    int epoch = 0;
    int n_classes = 0;
    std::size_t n_noise_tracklets = 0;
    double eps_used = 0.0;
    double mean_loss = 0.0;
    double purity = -1.0;       // frame-level, -1 when ground truth absent
};

struct TrainReport {
    std::vector<EpochReport> epochs;
    PseudoLabeling final_labels;
};

struct TrainResult {
    ModelState net;
    EmaState mean_net;
    TrainReport report;
};

/// E <- alpha * E + (1 - alpha) * theta, elementwise over shared shapes.
/// The classifier is copied outright when its shape changed this epoch.
void ema_update(EmaState& ema, const ModelState& net);

/// Alternating loop: regenerate pseudo labels, optimize the four-term loss
/// with AdamW, track the mean net by EMA. Deterministic given cfg.seed.
TrainResult train(const Dataset& ds, const EmbeddingMatrix& raw_features,
                  const TrainConfig& cfg, const ClusterConfig& cluster_cfg);

void save_model(const ModelState& net, const EmaState& ema, const std::string& path);
struct LoadedModel { ModelState net; EmaState mean_net; };
LoadedModel load_model(const std::string& path);

}  // namespace trackmill

#pragma once

#include <cstdint>

#include "trackmill/types.hpp"

namespace trackmill {

/// Synthetic backbone stand-in: identities are Gaussian blobs on the unit
/// sphere, with optional per-camera offsets and a slow per-tracklet drift.
struct OracleConfig {
    int dim = 64;
    double sigma_intra = 0.15;   // per-frame isotropic noise (expected norm)
    double sigma_camera = 0.0;   // per-camera additive offset scale
    double drift = 0.0;          // per-step random-walk scale within a tracklet
    std::uint64_t seed = 0;
};

/// Row-per-frame embeddings, unit-norm, frames in dataset order.
/// Deterministic under seed and independent of tracklet iteration order.
EmbeddingMatrix generate_embeddings(const Dataset& ds, const OracleConfig& cfg);

/// Minimum inter-identity center distance divided by sigma_intra.
double separation_ratio(const Dataset& ds, const OracleConfig& cfg);

/// Attach oracle embeddings to a copy of the dataset (32-bit storage).
Dataset embed_dataset(const Dataset& ds, const OracleConfig& cfg);

/// Clean synthetic dataset: n_ids identities, each with one tracklet in
/// units_per_id distinct cameras, frames_per_unit frames each. Clean under
/// per-camera identity counting.
Dataset make_clean_dataset(int n_ids, int units_per_id, int n_cameras,
                           int frames_per_unit, std::uint64_t seed);

}  // namespace trackmill

#pragma once

#include <vector>

#include "trackmill/types.hpp"

namespace trackmill {

/// One mini-batch as seen by the loss functions. Logits are pre-softmax.
struct Batch {
    EmbeddingMatrix features_net;   // N x d
    EmbeddingMatrix logits_net;     // N x K
    EmbeddingMatrix features_mean;  // N x d, teacher side
    EmbeddingMatrix logits_mean;    // N x K, teacher side
    std::vector<int> labels;        // hard pseudo labels
};

struct LossConfig {
    double margin = 0.5;
    double lambda_id = 0.5;
    double lambda_tri = 0.8;
};

struct LossValueGrad {
    double value = 0.0;
    EmbeddingMatrix grad;  // w.r.t. logits_net or features_net, matching the term
};

struct TotalLoss {
    double value = 0.0;
    double hard_id = 0.0, soft_id = 0.0, hard_tri = 0.0, soft_tri = 0.0;
    EmbeddingMatrix grad_logits;    // N x K
    EmbeddingMatrix grad_features;  // N x d
};

/// Hardest positive / negative index per anchor, mined on net features with
/// L2 distances; ties broken by lowest index.
struct MinedPairs {
    std::vector<int> positive;
    std::vector<int> negative;
};

MinedPairs mine_hard_pairs(const EmbeddingMatrix& features, const std::vector<int>& labels);

/// Mean cross-entropy against the hard pseudo labels.
LossValueGrad hard_id_loss(const Batch& b);

/// Batch-hard triplet loss with margin m; zero subgradient on the hinge.
LossValueGrad hard_triplet_loss(const Batch& b, double margin);

/// Cross-entropy of net probabilities against the teacher's softmax; the
/// teacher side is a constant.
LossValueGrad soft_id_loss(const Batch& b);

/// Softmax-triplet BCE against the teacher's soft triplet targets, using the
/// pairs mined on net features for both sides.
LossValueGrad soft_triplet_loss(const Batch& b);

TotalLoss total_loss(const Batch& b, const LossConfig& cfg);

}  // namespace trackmill

#include "trackmill/losses.hpp"

#include <cmath>

namespace trackmill {

namespace {

// Row-wise softmax with the usual max shift.
EmbeddingMatrix softmax(const EmbeddingMatrix& logits) {
    EmbeddingMatrix p = logits;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        double m = p.row(i).maxCoeff();
        p.row(i) = (p.row(i).array() - m).exp();
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

EmbeddingMatrix log_softmax(const EmbeddingMatrix& logits) {
    EmbeddingMatrix out = logits;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        double m = out.row(i).maxCoeff();
        double lse = std::log((out.row(i).array() - m).exp().sum()) + m;
        out.row(i).array() -= lse;
    }
    return out;
}

void check_labels(const Batch& b) {
    if (b.labels.size() != static_cast<std::size_t>(b.logits_net.rows()))
        fail(ErrorKind::integrity, "label count does not match batch size");
    for (int y : b.labels)
        if (y < 0 || y >= b.logits_net.cols())
            fail(ErrorKind::integrity, "label " + std::to_string(y) + " out of range for K = " +
                                           std::to_string(b.logits_net.cols()));
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

MinedPairs mine_hard_pairs(const EmbeddingMatrix& f, const std::vector<int>& labels) {
    const Eigen::Index n = f.rows();
    MinedPairs out;
    out.positive.assign(static_cast<std::size_t>(n), -1);
    out.negative.assign(static_cast<std::size_t>(n), -1);
    for (Eigen::Index i = 0; i < n; ++i) {
        double worst_pos = -1.0, best_neg = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            double d = (f.row(i) - f.row(j)).norm();
            if (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(i)]) {
                if (d > worst_pos) { worst_pos = d; out.positive[static_cast<std::size_t>(i)] = static_cast<int>(j); }
            } else {
                if (out.negative[static_cast<std::size_t>(i)] < 0 || d < best_neg) {
                    best_neg = d;
                    out.negative[static_cast<std::size_t>(i)] = static_cast<int>(j);
                }
            }
        }
        if (out.positive[static_cast<std::size_t>(i)] < 0)
            fail(ErrorKind::integrity, "anchor " + std::to_string(i) + " has no positive in the batch");
        if (out.negative[static_cast<std::size_t>(i)] < 0)
            fail(ErrorKind::integrity, "anchor " + std::to_string(i) + " has no negative in the batch");
    }
    return out;
}

LossValueGrad hard_id_loss(const Batch& b) {
    check_labels(b);
    const auto n = static_cast<double>(b.logits_net.rows());
    EmbeddingMatrix ls = log_softmax(b.logits_net);
    LossValueGrad out;
    out.grad = softmax(b.logits_net) / n;
    for (Eigen::Index i = 0; i < b.logits_net.rows(); ++i) {
        int y = b.labels[static_cast<std::size_t>(i)];
        out.value -= ls(i, y) / n;
        out.grad(i, y) -= 1.0 / n;
    }
    return out;
}

LossValueGrad hard_triplet_loss(const Batch& b, double margin) {
    const Eigen::Index n = b.features_net.rows();
    if (n < 2) fail(ErrorKind::integrity, "triplet loss needs a batch of >= 2");
    auto pairs = mine_hard_pairs(b.features_net, b.labels);
    LossValueGrad out;
    out.grad = EmbeddingMatrix::Zero(n, b.features_net.cols());
    const double inv_n = 1.0 / static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index p = pairs.positive[static_cast<std::size_t>(i)];
        Eigen::Index q = pairs.negative[static_cast<std::size_t>(i)];
        Eigen::RowVectorXd dp_vec = b.features_net.row(i) - b.features_net.row(p);
        Eigen::RowVectorXd dn_vec = b.features_net.row(i) - b.features_net.row(q);
        double dp = dp_vec.norm(), dn = dn_vec.norm();
        double hinge = dp + margin - dn;
        if (hinge <= 0.0) continue;  // zero subgradient at and past the boundary
        out.value += hinge * inv_n;
        if (dp > 1e-12) {
            out.grad.row(i) += dp_vec * (inv_n / dp);
            out.grad.row(p) -= dp_vec * (inv_n / dp);
        }
        if (dn > 1e-12) {
            out.grad.row(i) -= dn_vec * (inv_n / dn);
            out.grad.row(q) += dn_vec * (inv_n / dn);
        }
    }
    return out;
}

LossValueGrad soft_id_loss(const Batch& b) {
    if (b.logits_mean.cols() != b.logits_net.cols() || b.logits_mean.rows() != b.logits_net.rows())
        fail(ErrorKind::integrity, "net and mean-net logit shapes differ");
    const auto n = static_cast<double>(b.logits_net.rows());
    EmbeddingMatrix target = softmax(b.logits_mean);  // constant, no gradient
    EmbeddingMatrix ls = log_softmax(b.logits_net);
    LossValueGrad out;
    out.value = -(target.array() * ls.array()).sum() / n;
    out.grad = (softmax(b.logits_net) - target) / n;
    return out;
}

LossValueGrad soft_triplet_loss(const Batch& b) {
    const Eigen::Index n = b.features_net.rows();
    if (n < 2) fail(ErrorKind::integrity, "triplet loss needs a batch of >= 2");
    if (b.features_mean.rows() != n || b.features_mean.cols() != b.features_net.cols())
        fail(ErrorKind::integrity, "net and mean-net feature shapes differ");
    auto pairs = mine_hard_pairs(b.features_net, b.labels);
    LossValueGrad out;
    out.grad = EmbeddingMatrix::Zero(n, b.features_net.cols());
    const double inv_n = 1.0 / static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index p = pairs.positive[static_cast<std::size_t>(i)];
        Eigen::Index q = pairs.negative[static_cast<std::size_t>(i)];
        Eigen::RowVectorXd dp_vec = b.features_net.row(i) - b.features_net.row(p);
        Eigen::RowVectorXd dn_vec = b.features_net.row(i) - b.features_net.row(q);
        double dp = dp_vec.norm(), dn = dn_vec.norm();
        // T = sigmoid(dn - dp), the probability the triplet is satisfied.
        double t_net = sigmoid(dn - dp);
        double dp_m = (b.features_mean.row(i) - b.features_mean.row(p)).norm();
        double dn_m = (b.features_mean.row(i) - b.features_mean.row(q)).norm();
        double t_mean = sigmoid(dn_m - dp_m);  // constant target
        constexpr double tiny = 1e-12;
        out.value -= (t_mean * std::log(std::max(t_net, tiny)) +
                      (1.0 - t_mean) * std::log(std::max(1.0 - t_net, tiny))) * inv_n;
        double dz = (t_net - t_mean) * inv_n;  // dL/d(dn - dp)
        if (dn > 1e-12) {
            out.grad.row(i) += dn_vec * (dz / dn);
            out.grad.row(q) -= dn_vec * (dz / dn);
        }
        if (dp > 1e-12) {
            out.grad.row(i) -= dp_vec * (dz / dp);
            out.grad.row(p) += dp_vec * (dz / dp);
        }
    }
    return out;
}

TotalLoss total_loss(const Batch& b, const LossConfig& cfg) {
    auto id = hard_id_loss(b);
    auto sid = soft_id_loss(b);
    auto tri = hard_triplet_loss(b, cfg.margin);
    auto stri = soft_triplet_loss(b);
    TotalLoss out;
    out.hard_id = id.value;
    out.soft_id = sid.value;
    out.hard_tri = tri.value;
    out.soft_tri = stri.value;
    out.value = (1.0 - cfg.lambda_id) * id.value + cfg.lambda_id * sid.value +
                (1.0 - cfg.lambda_tri) * tri.value + cfg.lambda_tri * stri.value;
    out.grad_logits = (1.0 - cfg.lambda_id) * id.grad + cfg.lambda_id * sid.grad;
    out.grad_features = (1.0 - cfg.lambda_tri) * tri.grad + cfg.lambda_tri * stri.grad;
    return out;
}

}  // namespace trackmill

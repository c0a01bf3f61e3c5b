#include "trackmill/trainer.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include "trackmill/eval.hpp"

namespace trackmill {

namespace {

constexpr std::uint64_t kInitTag = 0x1111;
constexpr std::uint64_t kHeadTag = 0x2222;
constexpr std::uint64_t kBatchTag = 0x3333;
constexpr std::uint64_t kWindowTag = 0x4444;

EmbeddingMatrix random_matrix(Eigen::Index r, Eigen::Index c, double scale, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, scale);
    EmbeddingMatrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = g(rng);
    return m;
}

// Per-parameter AdamW accumulator.
struct Adam {
    EmbeddingMatrix m, v;
    std::int64_t t = 0;

    void reset(Eigen::Index r, Eigen::Index c) {
        m = EmbeddingMatrix::Zero(r, c);
        v = EmbeddingMatrix::Zero(r, c);
        t = 0;
    }

    void step(EmbeddingMatrix& param, const EmbeddingMatrix& grad, double lr, double wd) {
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        ++t;
        m = b1 * m + (1.0 - b1) * grad;
        v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
        double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
        double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
        EmbeddingMatrix update =
            (m / c1).cwiseQuotient(((v / c2).cwiseSqrt().array() + eps).matrix());
        param -= lr * (update + wd * param);
    }
};

}  // namespace

ModelState ModelState::init(int d_raw, int d, std::uint64_t seed) {
    if (d_raw < 1 || d < 1) fail(ErrorKind::config, "model dimensions must be >= 1");
    ModelState s;
    std::mt19937_64 rng(mix_seed(seed, kInitTag));
    if (d_raw == d) {
        s.projection = EmbeddingMatrix::Identity(d_raw, d);
    } else {
        s.projection = random_matrix(d_raw, d, 1.0 / std::sqrt(static_cast<double>(d_raw)), rng);
    }
    s.classifier = EmbeddingMatrix(d, 0);
    s.bias = Eigen::VectorXd(0);
    return s;
}

EmbeddingMatrix ModelState::embed(const EmbeddingMatrix& raw) const {
    if (raw.cols() != projection.rows())
        fail(ErrorKind::integrity, "raw feature dim does not match projection");
    EmbeddingMatrix out = raw * projection;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        double n = out.row(i).norm();
        if (n < 1e-12) fail(ErrorKind::numeric, "projected feature collapsed to zero");
        out.row(i) /= n;
    }
    return out;
}

void ema_update(EmaState& ema, const ModelState& net) {
    auto& e = ema.model;
    if (e.projection.rows() != net.projection.rows() || e.projection.cols() != net.projection.cols())
        fail(ErrorKind::integrity, "EMA/net projection shapes differ");
    const double a = ema.alpha;
    e.projection = a * e.projection + (1.0 - a) * net.projection;
    if (e.classifier.cols() != net.classifier.cols()) {
        // Head was rebuilt this epoch; EMA restarts from the new head.
        e.classifier = net.classifier;
        e.bias = net.bias;
    } else {
        e.classifier = a * e.classifier + (1.0 - a) * net.classifier;
        e.bias = a * e.bias + (1.0 - a) * net.bias;
    }
    e.step = net.step;
}

TrainResult train(const Dataset& ds, const EmbeddingMatrix& raw_features,
                  const TrainConfig& cfg, const ClusterConfig& cluster_cfg) {
    if (static_cast<std::size_t>(raw_features.rows()) != ds.n_frames())
        fail(ErrorKind::integrity, "raw feature rows do not match dataset frames");
    if (cfg.batch_identities * cfg.batch_samples < 4)
        fail(ErrorKind::config, "batch composition P*S must be >= 4");
    const int d_raw = static_cast<int>(raw_features.cols());

    // Row offset of each tracklet inside raw_features.
    std::vector<Eigen::Index> offset(ds.n_tracklets());
    {
        Eigen::Index pos = 0;
        for (std::size_t i = 0; i < ds.tracklets.size(); ++i) {
            offset[i] = pos;
            pos += static_cast<Eigen::Index>(ds.tracklets[i].length());
        }
    }
    std::map<std::string, std::size_t> tracklet_index;
    for (std::size_t i = 0; i < ds.tracklets.size(); ++i) tracklet_index[ds.tracklets[i].id] = i;

    TrainResult res;
    res.net = ModelState::init(d_raw, d_raw, cfg.seed);
    res.mean_net.alpha = cfg.alpha;
    res.mean_net.model = res.net;

    auto raw_block = [&](const Tracklet& t, const std::vector<int>& idx) {
        Eigen::Index base = offset[tracklet_index.at(t.id)];
        EmbeddingMatrix block(static_cast<Eigen::Index>(idx.size()), d_raw);
        for (std::size_t j = 0; j < idx.size(); ++j)
            block.row(static_cast<Eigen::Index>(j)) = raw_features.row(base + idx[j]);
        return block;
    };
    FrameExtractor net_extractor = [&](const Tracklet& t, const std::vector<int>& idx) {
        return res.net.embed(raw_block(t, idx));
    };

    Adam adam_w, adam_c, adam_b;
    adam_w.reset(d_raw, d_raw);
    const bool labeled = ds.fully_labeled();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        PseudoLabeling labels =
            associate(ds, net_extractor, cluster_cfg, cfg.sample_len, cfg.seed, epoch);

        std::map<int, std::vector<std::size_t>> by_class;
        for (std::size_t i = 0; i < ds.tracklets.size(); ++i) {
            int y = labels.tracklet_to_label.at(ds.tracklets[i].id);
            if (y != kNoise) by_class[y].push_back(i);
        }
        if (by_class.empty())
            fail(ErrorKind::integrity,
                 "epoch " + std::to_string(epoch) + ": every tracklet was labeled NOISE (eps = " +
                     std::to_string(labels.eps_used) + ", n = " +
                     std::to_string(ds.n_tracklets()) + ")");
        if (by_class.size() < 2)
            fail(ErrorKind::integrity,
                 "epoch " + std::to_string(epoch) +
                     ": only one pseudo class; triplet mining needs at least two");

        // Rebuild the classifier head whenever K changes.
        if (labels.n_classes != res.net.k()) {
            std::mt19937_64 rng(mix_seed(cfg.seed, kHeadTag + static_cast<std::uint64_t>(epoch)));
            res.net.classifier = random_matrix(d_raw, labels.n_classes, 0.01, rng);
            res.net.bias = Eigen::VectorXd::Zero(labels.n_classes);
            adam_c.reset(d_raw, labels.n_classes);
            adam_b.reset(labels.n_classes, 1);
            res.mean_net.model.classifier = res.net.classifier;
            res.mean_net.model.bias = res.net.bias;
        }

        std::vector<int> classes;
        for (const auto& [c, members] : by_class) classes.push_back(c);

        std::size_t n_labeled = 0;
        for (const auto& [c, members] : by_class) n_labeled += members.size();
        const int batch_size = cfg.batch_identities * cfg.batch_samples;
        const auto iterations = std::max<std::size_t>(
            1, n_labeled / static_cast<std::size_t>(batch_size));

        std::mt19937_64 rng(mix_seed(cfg.seed, kBatchTag + static_cast<std::uint64_t>(epoch)));
        double loss_sum = 0.0;
        for (std::size_t iter = 0; iter < iterations; ++iter) {
            // P distinct pseudo classes, S members each (repetition if short).
            std::vector<int> picked = classes;
            std::shuffle(picked.begin(), picked.end(), rng);
            picked.resize(std::min<std::size_t>(picked.size(),
                                                static_cast<std::size_t>(cfg.batch_identities)));
            std::vector<std::size_t> batch;
            for (int c : picked) {
                const auto& members = by_class[c];
                std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
                if (members.size() >= static_cast<std::size_t>(cfg.batch_samples)) {
                    std::vector<std::size_t> pool = members;
                    std::shuffle(pool.begin(), pool.end(), rng);
                    batch.insert(batch.end(), pool.begin(),
                                 pool.begin() + cfg.batch_samples);
                } else {
                    for (int s = 0; s < cfg.batch_samples; ++s) batch.push_back(members[pick(rng)]);
                }
            }

            const auto n = static_cast<Eigen::Index>(batch.size());
            EmbeddingMatrix raw_means(n, d_raw);
            Batch b;
            b.features_net.resize(n, d_raw);
            b.features_mean.resize(n, d_raw);
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto& t = ds.tracklets[batch[static_cast<std::size_t>(i)]];
                auto idx = sample_consecutive(
                    t, cfg.sample_len,
                    mix_seed(cfg.seed, kWindowTag ^ stable_hash(t.id) ^
                                           (static_cast<std::uint64_t>(epoch) << 40) ^
                                           (static_cast<std::uint64_t>(iter) << 20) ^
                                           static_cast<std::uint64_t>(i)));
                raw_means.row(i) = raw_block(t, idx).colwise().mean();
                b.labels.push_back(labels.tracklet_to_label.at(t.id));
            }
            b.features_net = res.net.embed(raw_means);
            b.features_mean = res.mean_net.model.embed(raw_means);
            b.logits_net = (b.features_net * res.net.classifier).rowwise() +
                           res.net.bias.transpose();
            b.logits_mean = (b.features_mean * res.mean_net.model.classifier).rowwise() +
                            res.mean_net.model.bias.transpose();

            TotalLoss loss = total_loss(b, cfg.loss);
            loss_sum += loss.value;

            // Backprop through classifier and normalized projection.
            EmbeddingMatrix g_f = loss.grad_features +
                                  loss.grad_logits * res.net.classifier.transpose();
            EmbeddingMatrix g_c = b.features_net.transpose() * loss.grad_logits;
            Eigen::VectorXd g_b = loss.grad_logits.colwise().sum().transpose();
            EmbeddingMatrix g_u(n, d_raw);
            for (Eigen::Index i = 0; i < n; ++i) {
                Eigen::RowVectorXd u = raw_means.row(i) * res.net.projection;
                double un = u.norm();
                Eigen::RowVectorXd f = u / un;
                Eigen::RowVectorXd g = g_f.row(i);
                g_u.row(i) = (g - (g.dot(f)) * f) / un;
            }
            EmbeddingMatrix g_w = raw_means.transpose() * g_u;

            adam_w.step(res.net.projection, g_w, cfg.learning_rate, cfg.weight_decay);
            adam_c.step(res.net.classifier, g_c, cfg.learning_rate, cfg.weight_decay);
            EmbeddingMatrix bias_m = res.net.bias;
            adam_b.step(bias_m, g_b, cfg.learning_rate, 0.0);  // no decay on bias
            res.net.bias = bias_m;

            ++res.net.step;
            ema_update(res.mean_net, res.net);
        }

        EpochReport er;
        er.epoch = epoch;
        er.n_classes = labels.n_classes;
        er.n_noise_tracklets = labels.n_noise;
        er.eps_used = labels.eps_used;
        er.mean_loss = loss_sum / static_cast<double>(iterations);
        if (labeled) er.purity = frame_level_purity(ds, labels).purity;
        res.report.epochs.push_back(er);
        res.report.final_labels = std::move(labels);
    }
    return res;
}

namespace {

void write_mat(std::ofstream& out, const EmbeddingMatrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            float v = static_cast<float>(m(i, j));
            out.write(reinterpret_cast<const char*>(&v), sizeof(float));
        }
}

EmbeddingMatrix read_mat(std::ifstream& in, Eigen::Index r, Eigen::Index c) {
    EmbeddingMatrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) {
            float v = 0;
            in.read(reinterpret_cast<char*>(&v), sizeof(float));
            m(i, j) = v;
        }
    return m;
}

}  // namespace

void save_model(const ModelState& net, const EmaState& ema, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot open model file for writing: " + path);
    nlohmann::ordered_json header;
    header["format"] = "trackmill.model";
    header["version"] = 1;
    header["d_raw"] = net.d_raw();
    header["d"] = net.d();
    header["k"] = net.k();
    header["alpha"] = ema.alpha;
    out << header.dump() << "\n";
    for (const ModelState* s : {&net, &ema.model}) {
        write_mat(out, s->projection);
        write_mat(out, s->classifier);
        write_mat(out, s->bias);
    }
    if (!out) fail(ErrorKind::io, "write failure on model file: " + path);
}

LoadedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open model file: " + path);
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::parse, "empty model file: " + path);
    int d_raw = 0, d = 0, k = 0;
    double alpha = 0.999;
    try {
        auto header = nlohmann::json::parse(line);
        if (header.value("format", "") != "trackmill.model" || header.value("version", 0) != 1)
            fail(ErrorKind::parse, "not a trackmill model file: " + path);
        d_raw = header.at("d_raw").get<int>();
        d = header.at("d").get<int>();
        k = header.at("k").get<int>();
        alpha = header.value("alpha", 0.999);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::parse, path + ": malformed model header: " + e.what());
    }
    LoadedModel m;
    m.mean_net.alpha = alpha;
    for (ModelState* s : {&m.net, &m.mean_net.model}) {
        s->projection = read_mat(in, d_raw, d);
        s->classifier = read_mat(in, d, k);
        s->bias = read_mat(in, k, 1).col(0);
    }
    if (!in) fail(ErrorKind::parse, "truncated model file: " + path);
    return m;
}

}  // namespace trackmill

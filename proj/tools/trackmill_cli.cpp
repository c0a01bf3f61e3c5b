// trackmill: noisy-tracklet simulation, two-level clustering, self-training
// and retrieval evaluation, wired as subcommands around the core library.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>

#include "trackmill/association.hpp"
#include "trackmill/eval.hpp"
#include "trackmill/isolation.hpp"
#include "trackmill/manifest.hpp"
#include "trackmill/noise_metrics.hpp"
#include "trackmill/oracle.hpp"
#include "trackmill/pipeline.hpp"
#include "trackmill/simulator.hpp"
#include "trackmill/trainer.hpp"

namespace tk = trackmill;
using ordered_json = nlohmann::ordered_json;

namespace {

int exit_code_for(tk::ErrorKind k) {
    switch (k) {
        case tk::ErrorKind::config: return 2;
        case tk::ErrorKind::parse:
        case tk::ErrorKind::integrity:
        case tk::ErrorKind::io: return 3;
        default: return 4;
    }
}

tk::EpsPolicy parse_eps_policy(const std::string& s) {
    if (s.rfind("fixed:", 0) == 0)
        return {tk::EpsPolicy::Kind::fixed, std::stod(s.substr(6)), 0.0};
    if (s.rfind("p", 0) == 0 && s.size() > 1)
        return {tk::EpsPolicy::Kind::data_dependent, 0.0, std::stod(s.substr(1))};
    tk::fail(tk::ErrorKind::config, "eps policy must be 'pN' or 'fixed:V', got '" + s + "'");
}

tk::IdsPerNoisyDist parse_dist(const std::string& s) {
    tk::IdsPerNoisyDist dist;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto colon = item.find(':');
        if (colon == std::string::npos)
            tk::fail(tk::ErrorKind::config, "distribution entries look like k:p, got '" + item + "'");
        dist[std::stoi(item.substr(0, colon))] = std::stod(item.substr(colon + 1));
    }
    return dist;
}

ordered_json measure_json(const tk::NoiseReport& r) {
    ordered_json j;
    j["r_fm"] = r.rates.r_fm;
    j["r_sw"] = r.rates.r_sw;
    j["n_tracklets"] = r.n_tracklets;
    j["n_ids"] = r.n_ids;
    j["noise_pct"] = r.noise_pct;
    j["id_counting"] = r.counting == tk::IdCounting::per_camera ? "per_camera" : "global";
    return j;
}

void emit(const ordered_json& j, const std::string& path) {
    if (path.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::ofstream out(path);
        if (!out) tk::fail(tk::ErrorKind::io, "cannot write report: " + path);
        out << j.dump(2) << "\n";
    }
}

// Extractor that reads embeddings straight out of the manifest frames.
tk::FrameExtractor stored_embedding_extractor() {
    return [](const tk::Tracklet& t, const std::vector<int>& idx) {
        if (!t.frames.empty() && !t.frames[0].embedding)
            tk::fail(tk::ErrorKind::integrity,
                     "tracklet '" + t.id + "' has no stored embeddings; run `embed` first");
        const auto d = static_cast<Eigen::Index>(t.frames[0].embedding->size());
        tk::EmbeddingMatrix block(static_cast<Eigen::Index>(idx.size()), d);
        for (std::size_t j = 0; j < idx.size(); ++j) {
            const auto& e = *t.frames[static_cast<std::size_t>(idx[j])].embedding;
            for (Eigen::Index k = 0; k < d; ++k)
                block(static_cast<Eigen::Index>(j), k) = e[static_cast<std::size_t>(k)];
        }
        return block;
    };
}

tk::EmbeddingMatrix stored_embeddings(const tk::Dataset& ds) {
    if (!ds.embedding_dim)
        tk::fail(tk::ErrorKind::integrity, "dataset has no embeddings; run `embed` first");
    tk::EmbeddingMatrix m(ds.n_frames(), *ds.embedding_dim);
    Eigen::Index row = 0;
    for (const auto& t : ds.tracklets)
        for (const auto& f : t.frames) {
            if (!f.embedding)
                tk::fail(tk::ErrorKind::integrity, "frame without embedding in '" + t.id + "'");
            for (int k = 0; k < *ds.embedding_dim; ++k)
                m(row, k) = (*f.embedding)[static_cast<std::size_t>(k)];
            ++row;
        }
    return m;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trackmill: noisy tracklet simulation, clustering and self-training toolkit"};
    app.require_subcommand(1);

    if (const char* threads = std::getenv("TRACKMILL_THREADS"))
        Eigen::setNbThreads(std::max(1, std::atoi(threads)));

    std::string in_path, out_path, report_path, query_path, gallery_path, config_path;
    std::string eps_policy = "p0.1", dist_str;
    double rfm = 1.7, rsw = 1.2, eps = 0.6, sigma = 0.15, sigma_cam = 0.0, drift = 0.0;
    int dim = 64, min_pts = 4, epochs = 40, sample_len = 32;
    int n_ids = 100, units_per_id = 2, n_cameras = 4, frames = 128;
    double lr = 0.00035, alpha = 0.999, wd = 0.0005;
    std::uint64_t seed = 0;
    bool global_ids = false, use_net = false;
    std::vector<int> ranks{1, 5, 10, 20};

    auto* synth = app.add_subcommand("synth", "Generate a clean synthetic dataset");
    synth->add_option("-o,--output", out_path)->required();
    synth->add_option("--ids", n_ids);
    synth->add_option("--units-per-id", units_per_id);
    synth->add_option("--cameras", n_cameras);
    synth->add_option("--frames", frames);
    synth->add_option("--seed", seed);

    auto* simulate = app.add_subcommand("simulate", "Fragment and merge a clean dataset to target noise rates");
    simulate->add_option("-i,--input", in_path)->required();
    simulate->add_option("-o,--output", out_path)->required();
    simulate->add_option("--rfm", rfm)->required();
    simulate->add_option("--rsw", rsw)->required();
    simulate->add_option("--seed", seed);
    simulate->add_option("--dist", dist_str, "ids-per-noisy-tracklet distribution, e.g. 2:0.8,3:0.2");

    auto* measure = app.add_subcommand("measure", "Measure fragmentation/switch rates");
    measure->add_option("-i,--input", in_path)->required();
    measure->add_option("-o,--output", report_path, "report path (stdout when absent)");
    measure->add_flag("--global-ids", global_ids, "count identities globally instead of per camera");

    auto* embed = app.add_subcommand("embed", "Attach synthetic oracle embeddings");
    embed->add_option("-i,--input", in_path)->required();
    embed->add_option("-o,--output", out_path)->required();
    embed->add_option("--dim", dim);
    embed->add_option("--sigma", sigma);
    embed->add_option("--sigma-camera", sigma_cam);
    embed->add_option("--drift", drift);
    embed->add_option("--seed", seed);

    auto* isolate = app.add_subcommand("isolate", "Intra-tracklet isolation");
    isolate->add_option("-i,--input", in_path)->required();
    isolate->add_option("-o,--output", out_path)->required();
    isolate->add_option("--eps", eps);
    isolate->add_option("--min-pts", min_pts);
    isolate->add_option("--report", report_path);

    auto* associate = app.add_subcommand("associate", "Inter-tracklet association into pseudo labels");
    associate->add_option("-i,--input", in_path)->required();
    associate->add_option("-o,--output", out_path)->required();
    associate->add_option("--eps-policy", eps_policy, "pN (percentile) or fixed:V");
    associate->add_option("--min-pts", min_pts);
    associate->add_option("--sample-len", sample_len);
    associate->add_option("--seed", seed);

    auto* train_cmd = app.add_subcommand("train", "Self-training loop over stored embeddings");
    train_cmd->add_option("-i,--input", in_path)->required();
    train_cmd->add_option("-o,--output", out_path, "model file")->required();
    train_cmd->add_option("--report", report_path);
    train_cmd->add_option("--epochs", epochs);
    train_cmd->add_option("--lr", lr);
    train_cmd->add_option("--alpha", alpha);
    train_cmd->add_option("--weight-decay", wd);
    train_cmd->add_option("--eps-policy", eps_policy);
    train_cmd->add_option("--min-pts", min_pts);
    train_cmd->add_option("--sample-len", sample_len);
    train_cmd->add_option("--seed", seed);

    auto* eval_cmd = app.add_subcommand("eval", "Retrieval evaluation (mAP / CMC)");
    eval_cmd->add_option("--query", query_path)->required();
    eval_cmd->add_option("--gallery", gallery_path)->required();
    eval_cmd->add_option("--ranks", ranks)->delimiter(',');
    eval_cmd->add_option("-o,--output", report_path);

    auto* pipeline = app.add_subcommand("pipeline", "Run the full configured pipeline");
    pipeline->add_option("config", config_path, "pipeline config JSON")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            auto ds = tk::make_clean_dataset(n_ids, units_per_id, n_cameras, frames, seed);
            tk::save_manifest(ds, out_path);
        } else if (*simulate) {
            auto ds = tk::load_manifest(in_path);
            auto dist = dist_str.empty() ? tk::default_ids_per_noisy_dist() : parse_dist(dist_str);
            auto plan = tk::plan_simulation(ds, {rfm, rsw}, dist, seed);
            auto noisy = tk::generate_noisy_dataset(ds, plan);
            tk::save_manifest(noisy, out_path);
            emit(measure_json(tk::noise_report(noisy)), "");
        } else if (*measure) {
            auto ds = tk::load_manifest(in_path);
            auto counting = global_ids ? tk::IdCounting::global : tk::IdCounting::per_camera;
            emit(measure_json(tk::noise_report(ds, counting)), report_path);
        } else if (*embed) {
            auto ds = tk::load_manifest(in_path);
            tk::OracleConfig cfg{dim, sigma, sigma_cam, drift, seed};
            tk::save_manifest(tk::embed_dataset(ds, cfg), out_path);
        } else if (*isolate) {
            auto ds = tk::load_manifest(in_path);
            auto res = tk::isolate_tracklets(ds, stored_embeddings(ds),
                                             tk::ClusterConfig::fixed(eps, min_pts));
            tk::save_manifest(res.dataset, out_path);
            ordered_json j;
            j["n_input"] = res.report.n_input;
            j["n_output"] = res.report.n_output;
            j["n_passthrough"] = res.report.n_passthrough;
            j["eps"] = res.report.eps;
            if (res.report.noise_pct) j["noise_pct"] = *res.report.noise_pct;
            emit(j, report_path);
        } else if (*associate) {
            auto ds = tk::load_manifest(in_path);
            tk::ClusterConfig cfg{parse_eps_policy(eps_policy), min_pts};
            auto labels = tk::associate(ds, stored_embedding_extractor(), cfg, sample_len, seed, 0);
            ordered_json j;
            j["n_classes"] = labels.n_classes;
            j["n_noise"] = labels.n_noise;
            j["eps_used"] = labels.eps_used;
            ordered_json lj;
            for (const auto& [tid, label] : labels.tracklet_to_label) lj[tid] = label;
            j["labels"] = lj;
            emit(j, out_path);
        } else if (*train_cmd) {
            auto ds = tk::load_manifest(in_path);
            tk::TrainConfig cfg;
            cfg.epochs = epochs;
            cfg.learning_rate = lr;
            cfg.weight_decay = wd;
            cfg.alpha = alpha;
            cfg.sample_len = sample_len;
            cfg.seed = seed;
            tk::ClusterConfig ccfg{parse_eps_policy(eps_policy), min_pts};
            auto res = tk::train(ds, stored_embeddings(ds), cfg, ccfg);
            tk::save_model(res.net, res.mean_net, out_path);
            ordered_json j;
            ordered_json ep = ordered_json::array();
            for (const auto& e : res.report.epochs) {
                ordered_json r;
                r["epoch"] = e.epoch;
                r["n_classes"] = e.n_classes;
                r["mean_loss"] = e.mean_loss;
                r["eps_used"] = e.eps_used;
                if (e.purity >= 0) r["purity"] = e.purity;
                ep.push_back(r);
            }
            j["epochs"] = ep;
            emit(j, report_path);
        } else if (*eval_cmd) {
            auto build_set = [](const std::string& path) {
                auto ds = tk::load_manifest(path);
                tk::RetrievalSet set;
                set.features.resize(ds.n_tracklets(), ds.embedding_dim.value_or(0));
                auto profiles = tk::noise_profiles(ds);
                for (std::size_t i = 0; i < ds.tracklets.size(); ++i) {
                    set.features.row(static_cast<Eigen::Index>(i)) =
                        tk::tracklet_feature(stored_embedding_extractor()(
                            ds.tracklets[i],
                            [&] {
                                std::vector<int> all(ds.tracklets[i].length());
                                std::iota(all.begin(), all.end(), 0);
                                return all;
                            }()));
                    set.labels.push_back(profiles[i].majority_id);
                    set.cameras.push_back(ds.tracklets[i].camera_id);
                }
                return set;
            };
            auto rr = tk::evaluate_retrieval(build_set(query_path), build_set(gallery_path), ranks);
            ordered_json j;
            j["mAP"] = rr.map;
            ordered_json cmc;
            for (const auto& [r, v] : rr.cmc) cmc["rank" + std::to_string(r)] = v;
            j["cmc"] = cmc;
            j["skipped_queries"] = rr.skipped_queries;
            emit(j, report_path);
        } else if (*pipeline) {
            auto res = tk::run_pipeline_file(config_path);
            std::cout << res.report.dump(2) << "\n";
            return res.exit_code;
        }
    } catch (const tk::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}

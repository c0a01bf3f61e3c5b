#include "trackmill/pipeline.hpp"

#include <filesystem>
#include <fstream>

#include "trackmill/association.hpp"
#include "trackmill/eval.hpp"
#include "trackmill/isolation.hpp"
#include "trackmill/manifest.hpp"
#include "trackmill/noise_metrics.hpp"

namespace trackmill {

namespace {

PipelineJson rates_json(const NoiseReport& r) {
    PipelineJson j;
    j["r_fm"] = r.rates.r_fm;
    j["r_sw"] = r.rates.r_sw;
    j["n_tracklets"] = r.n_tracklets;
    j["n_ids"] = r.n_ids;
    j["incidence_pairs"] = r.incidence_pairs;
    j["noise_pct"] = r.noise_pct;
    j["id_counting"] = r.counting == IdCounting::per_camera ? "per_camera" : "global";
    return j;
}

PipelineJson cluster_cfg_json(const ClusterConfig& c) {
    PipelineJson j;
    if (c.eps_policy.kind == EpsPolicy::Kind::fixed) {
        j["eps_policy"] = "fixed";
        j["eps"] = c.eps_policy.eps;
    } else {
        j["eps_policy"] = "data_dependent";
        j["percentile"] = c.eps_policy.percentile;
    }
    j["min_pts"] = c.min_pts;
    return j;
}

ClusterConfig cluster_cfg_from_json(const PipelineJson& j, const ClusterConfig& defaults) {
    ClusterConfig c = defaults;
    if (j.contains("eps_policy")) {
        std::string p = j["eps_policy"].get<std::string>();
        if (p == "fixed") c.eps_policy.kind = EpsPolicy::Kind::fixed;
        else if (p == "data_dependent") c.eps_policy.kind = EpsPolicy::Kind::data_dependent;
        else fail(ErrorKind::config, "unknown eps_policy '" + p + "'");
    }
    if (j.contains("eps")) c.eps_policy.eps = j["eps"].get<double>();
    if (j.contains("percentile")) c.eps_policy.percentile = j["percentile"].get<double>();
    if (j.contains("min_pts")) c.min_pts = j["min_pts"].get<int>();
    return c;
}

int exit_code_for(ErrorKind k) {
    switch (k) {
        case ErrorKind::config: return 2;
        case ErrorKind::parse:
        case ErrorKind::integrity:
        case ErrorKind::io: return 3;
        default: return 4;
    }
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const PipelineJson& j) {
    PipelineConfig c;
    try {
        c.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("input") && !j["input"].is_null())
            c.input = j["input"].get<std::string>();
        if (j.contains("synth")) {
            const auto& s = j["synth"];
            c.synth_n_ids = s.value("n_ids", c.synth_n_ids);
            c.synth_units_per_id = s.value("units_per_id", c.synth_units_per_id);
            c.synth_n_cameras = s.value("n_cameras", c.synth_n_cameras);
            c.synth_frames = s.value("frames", c.synth_frames);
        }
        if (j.contains("simulate")) {
            const auto& s = j["simulate"];
            c.simulate = s.value("enabled", true);
            c.target.r_fm = s.value("rfm", c.target.r_fm);
            c.target.r_sw = s.value("rsw", c.target.r_sw);
            if (s.contains("dist")) {
                c.dist.clear();
                for (const auto& [k, v] : s["dist"].items())
                    c.dist[std::stoi(k)] = v.get<double>();
            }
        }
        if (j.contains("oracle")) {
            const auto& o = j["oracle"];
            c.oracle.dim = o.value("dim", c.oracle.dim);
            c.oracle.sigma_intra = o.value("sigma_intra", c.oracle.sigma_intra);
            c.oracle.sigma_camera = o.value("sigma_camera", c.oracle.sigma_camera);
            c.oracle.drift = o.value("drift", c.oracle.drift);
        }
        if (j.contains("isolate")) {
            c.skip_isolation = !j["isolate"].value("enabled", true);
            c.isolation_cfg = cluster_cfg_from_json(j["isolate"], c.isolation_cfg);
        }
        if (j.contains("associate"))
            c.association_cfg = cluster_cfg_from_json(j["associate"], c.association_cfg);
        if (j.contains("train")) {
            const auto& t = j["train"];
            c.train_cfg.epochs = t.value("epochs", c.train_cfg.epochs);
            c.train_cfg.learning_rate = t.value("lr", c.train_cfg.learning_rate);
            c.train_cfg.weight_decay = t.value("weight_decay", c.train_cfg.weight_decay);
            c.train_cfg.alpha = t.value("alpha", c.train_cfg.alpha);
            c.train_cfg.batch_identities = t.value("batch_identities", c.train_cfg.batch_identities);
            c.train_cfg.batch_samples = t.value("batch_samples", c.train_cfg.batch_samples);
            c.train_cfg.sample_len = t.value("sample_len", c.train_cfg.sample_len);
            c.train_cfg.loss.margin = t.value("margin", c.train_cfg.loss.margin);
            c.train_cfg.loss.lambda_id = t.value("lambda_id", c.train_cfg.loss.lambda_id);
            c.train_cfg.loss.lambda_tri = t.value("lambda_tri", c.train_cfg.loss.lambda_tri);
        }
        if (j.contains("eval")) {
            const auto& e = j["eval"];
            if (e.contains("ranks")) c.eval_ranks = e["ranks"].get<std::vector<int>>();
            c.eval_with_mean_net = e.value("use_mean_net", true);
        }
        if (j.contains("output_dir") && !j["output_dir"].is_null())
            c.output_dir = j["output_dir"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::config, std::string("invalid pipeline config: ") + e.what());
    }
    c.train_cfg.seed = c.seed;
    c.oracle.seed = mix_seed(c.seed, 0xe0);
    return c;
}

PipelineJson PipelineConfig::to_json() const {
    PipelineJson j;
    j["seed"] = seed;
    j["input"] = input ? PipelineJson(*input) : PipelineJson(nullptr);
    j["synth"] = {{"n_ids", synth_n_ids},
                  {"units_per_id", synth_units_per_id},
                  {"n_cameras", synth_n_cameras},
                  {"frames", synth_frames}};
    PipelineJson dist_j;
    for (const auto& [k, v] : dist) dist_j[std::to_string(k)] = v;
    j["simulate"] = {{"enabled", simulate},
                     {"rfm", target.r_fm},
                     {"rsw", target.r_sw},
                     {"dist", dist_j}};
    j["oracle"] = {{"dim", oracle.dim},
                   {"sigma_intra", oracle.sigma_intra},
                   {"sigma_camera", oracle.sigma_camera},
                   {"drift", oracle.drift}};
    j["isolate"] = cluster_cfg_json(isolation_cfg);
    j["isolate"]["enabled"] = !skip_isolation;
    j["associate"] = cluster_cfg_json(association_cfg);
    j["train"] = {{"epochs", train_cfg.epochs},
                  {"lr", train_cfg.learning_rate},
                  {"weight_decay", train_cfg.weight_decay},
                  {"alpha", train_cfg.alpha},
                  {"batch_identities", train_cfg.batch_identities},
                  {"batch_samples", train_cfg.batch_samples},
                  {"sample_len", train_cfg.sample_len},
                  {"margin", train_cfg.loss.margin},
                  {"lambda_id", train_cfg.loss.lambda_id},
                  {"lambda_tri", train_cfg.loss.lambda_tri}};
    j["eval"] = {{"ranks", eval_ranks}, {"use_mean_net", eval_with_mean_net}};
    j["output_dir"] = output_dir ? PipelineJson(*output_dir) : PipelineJson(nullptr);
    return j;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    namespace fs = std::filesystem;
    PipelineResult res;
    res.report["config"] = cfg.to_json();
    std::string stage = "setup";

    auto save_stage = [&](const Dataset& ds, const std::string& name) {
        if (!cfg.output_dir) return;
        fs::create_directories(*cfg.output_dir);
        save_manifest(ds, (fs::path(*cfg.output_dir) / name).string());
    };

    try {
        stage = "input";
        Dataset clean = cfg.input
                            ? load_manifest(*cfg.input)
                            : make_clean_dataset(cfg.synth_n_ids, cfg.synth_units_per_id,
                                                 cfg.synth_n_cameras, cfg.synth_frames,
                                                 cfg.seed);

        stage = "simulate";
        Dataset working = clean;
        if (cfg.simulate) {
            auto plan = plan_simulation(clean, cfg.target, cfg.dist, cfg.seed);
            working = generate_noisy_dataset(clean, plan);
            res.report["simulate"] = rates_json(noise_report(working));
            res.report["simulate"]["n_noisy_planned"] = plan.n_noisy;
            save_stage(working, "noisy.jsonl");
        }

        stage = "embed";
        EmbeddingMatrix raw = generate_embeddings(working, cfg.oracle);
        res.report["embed"] = {{"dim", cfg.oracle.dim},
                               {"separation_ratio", separation_ratio(working, cfg.oracle)}};

        stage = "isolate";
        Dataset train_ds = working;
        if (!cfg.skip_isolation) {
            auto iso = isolate_tracklets(working, raw, cfg.isolation_cfg);
            train_ds = std::move(iso.dataset);
            raw = generate_embeddings(train_ds, cfg.oracle);
            PipelineJson ij;
            ij["n_input"] = iso.report.n_input;
            ij["n_output"] = iso.report.n_output;
            ij["n_passthrough"] = iso.report.n_passthrough;
            ij["eps"] = iso.report.eps;
            if (iso.report.noise_pct) ij["noise_pct"] = *iso.report.noise_pct;
            res.report["isolate"] = ij;
            save_stage(train_ds, "isolated.jsonl");
        } else {
            res.report["isolate"] = {{"skipped", true}};
        }

        stage = "train";
        TrainResult tr = train(train_ds, raw, cfg.train_cfg, cfg.association_cfg);
        PipelineJson epochs = PipelineJson::array();
        for (const auto& e : tr.report.epochs) {
            PipelineJson ej;
            ej["epoch"] = e.epoch;
            ej["n_classes"] = e.n_classes;
            ej["n_noise_tracklets"] = e.n_noise_tracklets;
            ej["eps_used"] = e.eps_used;
            ej["mean_loss"] = e.mean_loss;
            if (e.purity >= 0) ej["purity"] = e.purity;
            epochs.push_back(ej);
        }
        res.report["train"] = {{"epochs", epochs}};
        if (cfg.output_dir) {
            fs::create_directories(*cfg.output_dir);
            save_model(tr.net, tr.mean_net,
                       (fs::path(*cfg.output_dir) / "model.bin").string());
        }

        stage = "labels";
        if (train_ds.fully_labeled()) {
            auto fq = frame_level_purity(train_ds, tr.report.final_labels);
            res.report["labels"] = {{"purity", fq.purity},
                                    {"n_clusters", fq.n_clusters},
                                    {"noise_fraction", fq.noise_fraction},
                                    {"n_classes", tr.report.final_labels.n_classes}};
        }

        stage = "eval";
        if (train_ds.fully_labeled()) {
            const ModelState& model = cfg.eval_with_mean_net ? tr.mean_net.model : tr.net;
            std::map<std::string, Eigen::Index> offsets;
            {
                Eigen::Index pos = 0;
                for (const auto& u : train_ds.tracklets) {
                    offsets[u.id] = pos;
                    pos += static_cast<Eigen::Index>(u.length());
                }
            }
            FrameExtractor ex = [&](const Tracklet& t, const std::vector<int>& idx) {
                Eigen::Index base = offsets.at(t.id);
                EmbeddingMatrix block(static_cast<Eigen::Index>(idx.size()), raw.cols());
                for (std::size_t j = 0; j < idx.size(); ++j)
                    block.row(static_cast<Eigen::Index>(j)) = raw.row(base + idx[j]);
                return model.embed(block);
            };
            RetrievalSet set;
            set.features = pooled_features(train_ds, ex, cfg.train_cfg.sample_len,
                                           cfg.seed, cfg.train_cfg.epochs);
            auto profiles = noise_profiles(train_ds);
            for (std::size_t i = 0; i < train_ds.tracklets.size(); ++i) {
                set.labels.push_back(profiles[i].majority_id);
                set.cameras.push_back(train_ds.tracklets[i].camera_id);
            }
            auto rr = evaluate_retrieval(set, set, cfg.eval_ranks);
            PipelineJson cmc;
            for (const auto& [r, v] : rr.cmc) cmc["rank" + std::to_string(r)] = v;
            res.report["eval"] = {{"mAP", rr.map},
                                  {"cmc", cmc},
                                  {"skipped_queries", rr.skipped_queries},
                                  {"use_mean_net", cfg.eval_with_mean_net}};
        }

        res.report["status"] = "ok";
    } catch (const Error& e) {
        res.report["status"] = "error";
        res.report["error"] = {{"stage", stage}, {"message", e.what()}};
        res.exit_code = exit_code_for(e.kind());
    }

    if (cfg.output_dir) {
        fs::create_directories(*cfg.output_dir);
        std::string name = res.exit_code == 0 ? "report.json" : "report.json.partial";
        std::ofstream out(fs::path(*cfg.output_dir) / name);
        out << res.report.dump(2) << "\n";
    }
    return res;
}

PipelineResult run_pipeline_file(const std::string& config_path) {
    std::ifstream in(config_path);
    if (!in) {
        PipelineResult res;
        res.report["status"] = "error";
        res.report["error"] = {{"stage", "config"},
                               {"message", "cannot open config: " + config_path}};
        res.exit_code = 2;
        return res;
    }
    PipelineJson j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        PipelineResult res;
        res.report["status"] = "error";
        res.report["error"] = {{"stage", "config"},
                               {"message", config_path + ": " + e.what()}};
        res.exit_code = 2;
        return res;
    }
    try {
        return run_pipeline(PipelineConfig::from_json(j));
    } catch (const Error& e) {
        PipelineResult res;
        res.report["status"] = "error";
        res.report["error"] = {{"stage", "config"}, {"message", e.what()}};
        res.exit_code = 2;
        return res;
    }
}

}  // namespace trackmill

// Python surface for the trackmill core: file-level pipeline stages plus the
// main numeric operations on numpy arrays.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "trackmill/association.hpp"
#include "trackmill/clustering.hpp"
#include "trackmill/eval.hpp"
#include "trackmill/isolation.hpp"
#include "trackmill/losses.hpp"
#include "trackmill/manifest.hpp"
#include "trackmill/noise_metrics.hpp"
#include "trackmill/oracle.hpp"
#include "trackmill/pipeline.hpp"
#include "trackmill/simulator.hpp"
#include "trackmill/trainer.hpp"

namespace py = pybind11;
namespace tk = trackmill;

namespace {

tk::ClusterConfig make_cluster_cfg(double eps, double percentile, int min_pts) {
    if (eps > 0) return tk::ClusterConfig::fixed(eps, min_pts);
    return tk::ClusterConfig::data_dependent(percentile, min_pts);
}

tk::EmbeddingMatrix stored_embeddings(const tk::Dataset& ds) {
    if (!ds.embedding_dim) tk::fail(tk::ErrorKind::integrity, "dataset has no embeddings");
    tk::EmbeddingMatrix m(ds.n_frames(), *ds.embedding_dim);
    Eigen::Index row = 0;
    for (const auto& t : ds.tracklets)
        for (const auto& f : t.frames) {
            for (int k = 0; k < *ds.embedding_dim; ++k)
                m(row, k) = (*f.embedding)[static_cast<std::size_t>(k)];
            ++row;
        }
    return m;
}

}  // namespace

PYBIND11_MODULE(_trackmill, m) {
    m.doc() = "Noisy tracklet simulation, two-level clustering and self-training toolkit";

    py::register_exception<tk::Error>(m, "TrackmillError");

    // Numeric core.
    m.def("pairwise_cosine_distance", &tk::pairwise_cosine_distance, py::arg("x"));
    m.def("compute_eps", &tk::compute_eps, py::arg("x"), py::arg("percentile"));
    m.def(
        "dbscan",
        [](const tk::EmbeddingMatrix& x, double eps, double percentile, int min_pts) {
            auto a = tk::dbscan(x, make_cluster_cfg(eps, percentile, min_pts));
            return py::make_tuple(a.labels, a.n_clusters, a.eps_used);
        },
        py::arg("x"), py::arg("eps") = 0.0, py::arg("percentile") = 0.1, py::arg("min_pts") = 4,
        "Returns (labels, n_clusters, eps_used); eps <= 0 selects the data-dependent policy");
    m.def("tracklet_feature", &tk::tracklet_feature, py::arg("frames"));
    m.def("average_precision", &tk::average_precision, py::arg("ranked_relevance"));
    m.def(
        "evaluate_retrieval",
        [](const tk::EmbeddingMatrix& qf, const std::vector<std::int64_t>& ql,
           const std::vector<int>& qc, const tk::EmbeddingMatrix& gf,
           const std::vector<std::int64_t>& gl, const std::vector<int>& gc,
           const std::vector<int>& ranks) {
            auto r = tk::evaluate_retrieval({qf, ql, qc}, {gf, gl, gc}, ranks);
            py::dict cmc;
            for (const auto& [rank, v] : r.cmc) cmc[py::int_(rank)] = v;
            return py::make_tuple(r.map, cmc, r.skipped_queries);
        },
        py::arg("query_features"), py::arg("query_labels"), py::arg("query_cameras"),
        py::arg("gallery_features"), py::arg("gallery_labels"), py::arg("gallery_cameras"),
        py::arg("ranks"));

    // Loss terms (value, grad).
    auto batch = [](const tk::EmbeddingMatrix& fn, const tk::EmbeddingMatrix& ln,
                    const tk::EmbeddingMatrix& fm, const tk::EmbeddingMatrix& lm,
                    const std::vector<int>& labels) {
        return tk::Batch{fn, ln, fm, lm, labels};
    };
    m.def(
        "hard_id_loss",
        [batch](const tk::EmbeddingMatrix& logits, const std::vector<int>& labels) {
            auto r = tk::hard_id_loss(batch({}, logits, {}, {}, labels));
            return py::make_tuple(r.value, r.grad);
        },
        py::arg("logits"), py::arg("labels"));
    m.def(
        "hard_triplet_loss",
        [batch](const tk::EmbeddingMatrix& features, const std::vector<int>& labels, double margin) {
            auto r = tk::hard_triplet_loss(batch(features, {}, {}, {}, labels), margin);
            return py::make_tuple(r.value, r.grad);
        },
        py::arg("features"), py::arg("labels"), py::arg("margin") = 0.5);
    m.def(
        "soft_id_loss",
        [batch](const tk::EmbeddingMatrix& logits_net, const tk::EmbeddingMatrix& logits_mean) {
            auto r = tk::soft_id_loss(batch({}, logits_net, {}, logits_mean, {}));
            return py::make_tuple(r.value, r.grad);
        },
        py::arg("logits_net"), py::arg("logits_mean"));
    m.def(
        "soft_triplet_loss",
        [batch](const tk::EmbeddingMatrix& features_net, const tk::EmbeddingMatrix& features_mean,
                const std::vector<int>& labels) {
            auto r = tk::soft_triplet_loss(batch(features_net, {}, features_mean, {}, labels));
            return py::make_tuple(r.value, r.grad);
        },
        py::arg("features_net"), py::arg("features_mean"), py::arg("labels"));

    // File-level stages.
    m.def(
        "make_clean_dataset",
        [](const std::string& path, int n_ids, int units_per_id, int n_cameras, int frames,
           std::uint64_t seed) {
            tk::save_manifest(tk::make_clean_dataset(n_ids, units_per_id, n_cameras, frames, seed),
                              path);
        },
        py::arg("path"), py::arg("n_ids"), py::arg("units_per_id") = 1, py::arg("n_cameras") = 1,
        py::arg("frames") = 32, py::arg("seed") = 0);
    m.def(
        "measure",
        [](const std::string& path, bool global_ids) {
            auto r = tk::noise_report(tk::load_manifest(path),
                                      global_ids ? tk::IdCounting::global
                                                 : tk::IdCounting::per_camera);
            py::dict d;
            d["r_fm"] = r.rates.r_fm;
            d["r_sw"] = r.rates.r_sw;
            d["n_tracklets"] = r.n_tracklets;
            d["n_ids"] = r.n_ids;
            d["noise_pct"] = r.noise_pct;
            return d;
        },
        py::arg("path"), py::arg("global_ids") = false);
    m.def(
        "simulate",
        [](const std::string& input, const std::string& output, double rfm, double rsw,
           std::uint64_t seed) {
            auto ds = tk::load_manifest(input);
            auto plan = tk::plan_simulation(ds, {rfm, rsw}, tk::default_ids_per_noisy_dist(), seed);
            tk::save_manifest(tk::generate_noisy_dataset(ds, plan), output);
        },
        py::arg("input"), py::arg("output"), py::arg("rfm"), py::arg("rsw"), py::arg("seed") = 0);
    m.def(
        "embed",
        [](const std::string& input, const std::string& output, int dim, double sigma,
           double sigma_camera, double drift, std::uint64_t seed) {
            tk::OracleConfig cfg{dim, sigma, sigma_camera, drift, seed};
            tk::save_manifest(tk::embed_dataset(tk::load_manifest(input), cfg), output);
        },
        py::arg("input"), py::arg("output"), py::arg("dim") = 64, py::arg("sigma") = 0.15,
        py::arg("sigma_camera") = 0.0, py::arg("drift") = 0.0, py::arg("seed") = 0);
    m.def(
        "isolate",
        [](const std::string& input, const std::string& output, double eps, int min_pts) {
            auto ds = tk::load_manifest(input);
            auto res = tk::isolate_tracklets(ds, stored_embeddings(ds),
                                             tk::ClusterConfig::fixed(eps, min_pts));
            tk::save_manifest(res.dataset, output);
            py::dict d;
            d["n_input"] = res.report.n_input;
            d["n_output"] = res.report.n_output;
            d["n_passthrough"] = res.report.n_passthrough;
            if (res.report.noise_pct) d["noise_pct"] = *res.report.noise_pct;
            return d;
        },
        py::arg("input"), py::arg("output"), py::arg("eps") = 0.6, py::arg("min_pts") = 4);
    m.def(
        "run_pipeline",
        [](const std::string& config_path) {
            auto res = tk::run_pipeline_file(config_path);
            return py::make_tuple(res.exit_code, res.report.dump());
        },
        py::arg("config_path"), "Returns (exit_code, report_json_string)");
}

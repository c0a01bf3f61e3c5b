#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "trackmill/manifest.hpp"
#include "trackmill/oracle.hpp"
#include "trackmill/pipeline.hpp"

using namespace trackmill;
using testutil::tmp_path;

namespace {

PipelineJson small_config() {
    return PipelineJson{
        {"seed", 5},
        {"synth", {{"n_ids", 12}, {"units_per_id", 2}, {"n_cameras", 2}, {"frames", 64}}},
        {"simulate", {{"enabled", true}, {"rfm", 2.0}, {"rsw", 1.3}}},
        {"oracle", {{"dim", 16}, {"sigma_intra", 0.08}}},
        {"isolate", {{"eps", 0.3}, {"min_pts", 4}}},
        {"associate", {{"eps_policy", "fixed"}, {"eps", 0.25}, {"min_pts", 2}}},
        {"train", {{"epochs", 2}, {"batch_identities", 4}, {"batch_samples", 2}, {"sample_len", 16}}},
    };
}

}  // namespace

TEST_CASE("config round trip materializes every default") {
    auto cfg = PipelineConfig::from_json(small_config());
    auto j = cfg.to_json();
    CHECK(j["seed"] == 5);
    CHECK(j["train"]["lr"] == doctest::Approx(0.00035));
    CHECK(j["train"]["alpha"] == doctest::Approx(0.999));
    CHECK(j["train"]["margin"] == doctest::Approx(0.5));
    CHECK(j["train"]["lambda_id"] == doctest::Approx(0.5));
    CHECK(j["train"]["lambda_tri"] == doctest::Approx(0.8));
    CHECK(j["simulate"]["dist"]["2"] == doctest::Approx(0.8));
    CHECK(j["eval"]["ranks"].size() == 4);
    // A reparse of the materialized config resolves to the same config.
    CHECK(PipelineConfig::from_json(j).to_json() == j);
}

TEST_CASE("full pipeline run reports every stage") {
    auto res = run_pipeline(PipelineConfig::from_json(small_config()));
    REQUIRE(res.exit_code == 0);
    CHECK(res.report["status"] == "ok");
    CHECK(res.report.contains("simulate"));
    CHECK(res.report.contains("isolate"));
    CHECK(res.report["train"]["epochs"].size() == 2);
    for (const auto& e : res.report["train"]["epochs"]) CHECK(e.contains("mean_loss"));
    CHECK(res.report["labels"].contains("purity"));
    CHECK(res.report["eval"].contains("mAP"));
    CHECK(res.report["eval"]["cmc"].contains("rank1"));
    CHECK(res.report["config"] == PipelineConfig::from_json(small_config()).to_json());
}

TEST_CASE("skipping isolation is flagged in the report") {
    auto j = small_config();
    j["isolate"]["enabled"] = false;
    auto res = run_pipeline(PipelineConfig::from_json(j));
    REQUIRE(res.exit_code == 0);
    CHECK(res.report["isolate"]["skipped"] == true);
}

TEST_CASE("missing input file fails and names the path") {
    auto j = small_config();
    j["input"] = "/nonexistent/input.jsonl";
    auto res = run_pipeline(PipelineConfig::from_json(j));
    CHECK(res.exit_code == 3);
    CHECK(res.report["status"] == "error");
    CHECK(res.report["error"]["stage"] == "input");
    std::string msg = res.report["error"]["message"];
    CHECK(msg.find("/nonexistent/input.jsonl") != std::string::npos);
}

TEST_CASE("an existing clean manifest can drive the pipeline") {
    auto input = tmp_path("pipeline_input.jsonl");
    save_manifest(make_clean_dataset(10, 2, 2, 48, 3), input);
    auto j = small_config();
    j["input"] = input;
    auto res = run_pipeline(PipelineConfig::from_json(j));
    CHECK(res.exit_code == 0);
    CHECK(res.report["simulate"]["n_ids"] == 20);
}

TEST_CASE("reports and artifacts land in the output directory") {
    auto dir = tmp_path("pipeline_out");
    std::filesystem::remove_all(dir);
    auto j = small_config();
    j["output_dir"] = dir;
    auto res = run_pipeline(PipelineConfig::from_json(j));
    REQUIRE(res.exit_code == 0);
    namespace fs = std::filesystem;
    CHECK(fs::exists(fs::path(dir) / "report.json"));
    CHECK(fs::exists(fs::path(dir) / "noisy.jsonl"));
    CHECK(fs::exists(fs::path(dir) / "isolated.jsonl"));
    CHECK(fs::exists(fs::path(dir) / "model.bin"));
    std::ifstream in(fs::path(dir) / "report.json");
    PipelineJson from_disk;
    in >> from_disk;
    CHECK(from_disk == res.report);
}

TEST_CASE("a failing run keeps a partial report") {
    auto dir = tmp_path("pipeline_partial");
    std::filesystem::remove_all(dir);
    auto j = small_config();
    j["input"] = "/nonexistent/input.jsonl";
    j["output_dir"] = dir;
    auto res = run_pipeline(PipelineConfig::from_json(j));
    CHECK(res.exit_code != 0);
    CHECK(std::filesystem::exists(std::filesystem::path(dir) / "report.json.partial"));
}

TEST_CASE("pipeline runs are bit-reproducible under the seed") {
    auto a = run_pipeline(PipelineConfig::from_json(small_config()));
    auto b = run_pipeline(PipelineConfig::from_json(small_config()));
    REQUIRE(a.exit_code == 0);
    CHECK(a.report.dump() == b.report.dump());
}

TEST_CASE("config file errors exit with code 2") {
    auto res = run_pipeline_file(tmp_path("missing_config.json"));
    CHECK(res.exit_code == 2);

    auto bad = tmp_path("bad_config.json");
    std::ofstream(bad) << "{not json";
    CHECK(run_pipeline_file(bad).exit_code == 2);
}

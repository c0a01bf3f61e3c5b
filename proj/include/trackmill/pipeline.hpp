#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>

#include "trackmill/clustering.hpp"
#include "trackmill/oracle.hpp"
#include "trackmill/simulator.hpp"
#include "trackmill/trainer.hpp"
#include "trackmill/types.hpp"

namespace trackmill {

using PipelineJson = nlohmann::ordered_json;

/// Fully resolved pipeline configuration. `from_json` materializes every
/// default so reports can embed the exact configuration that ran.
struct PipelineConfig {
    std::uint64_t seed = 0;
    std::optional<std::string> input;      // clean manifest; absent -> synthesize
    int synth_n_ids = 100;
    int synth_units_per_id = 2;
    int synth_n_cameras = 4;
    int synth_frames = 256;

    bool simulate = true;
    NoiseRates target{2.5, 1.5};
    IdsPerNoisyDist dist = default_ids_per_noisy_dist();

    OracleConfig oracle;

    bool skip_isolation = false;
    ClusterConfig isolation_cfg = ClusterConfig::fixed(0.6, 4);

    ClusterConfig association_cfg = ClusterConfig::data_dependent(0.1, 4);

    TrainConfig train_cfg;
    bool eval_with_mean_net = true;

    std::vector<int> eval_ranks{1, 5, 10, 20};
    std::optional<std::string> output_dir;  // stage artifacts written when set

    static PipelineConfig from_json(const PipelineJson& j);
    PipelineJson to_json() const;
};

struct PipelineResult {
    PipelineJson report;
    int exit_code = 0;
};

/// simulate? -> embed -> isolate? -> train (association inside) -> eval.
/// The report embeds the resolved config; everything is seed-reproducible.
PipelineResult run_pipeline(const PipelineConfig& cfg);

PipelineResult run_pipeline_file(const std::string& config_path);

}  // namespace trackmill

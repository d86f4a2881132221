#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "surglab/grpo.hpp"
#include "surglab/refine.hpp"
#include "surglab/reward.hpp"
#include "surglab/synth_env.hpp"

namespace surglab {

struct StageToggles {
    bool sft = true;
    bool cot = true;
    bool grpo = true;
    bool refine = true;
};

struct DatasetSpec {
    TaskKind kind = TaskKind::kPhase;
    int n = 1000;
    int holdout = 200;
    std::uint64_t seed = 7;
};

struct PolicySpec {
    int embed_dim = 32;
    int hidden_dim = 64;
    int max_output_len = 64;
    double init_scale = 0.3;
};

struct SftSpec {
    int steps = 400;
    int batch_size = 32;
    double learning_rate = 1.0;
};

struct GrpoStageSpec {
    int steps = 200;
    int batch_instances = 8;
};

struct RunConfig {
    std::uint64_t seed = 7;
    std::string out_dir = "runs/demo";
    StageToggles stages;
    DatasetSpec dataset;
    PolicySpec policy;
    SftSpec sft;
    SftSpec cot;
    GrpoConfig grpo;
    GrpoStageSpec grpo_stage;
    RewardConfig reward;
    RefineConfig refine;
    bool refine_include_cot_traces = true;
};

// Thrown for malformed configuration; the CLI maps it to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when a pipeline stage aborts; the CLI maps it to exit code 3.
struct StageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

RunConfig default_config();
RunConfig load_config(const std::string& path);
void save_config(const RunConfig& cfg, const std::string& path);

// Canonical JSON rendering (sorted keys) used for hashing and echoing.
std::string config_to_json(const RunConfig& cfg);

// FNV-1a over the canonical rendering, as a fixed-width hex string.
std::string config_hash(const RunConfig& cfg);

void validate_config(const RunConfig& cfg);

}  // namespace surglab

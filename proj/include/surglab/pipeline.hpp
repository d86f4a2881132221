#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "surglab/config.hpp"
#include "surglab/grpo.hpp"
#include "surglab/metrics.hpp"
#include "surglab/policy.hpp"
#include "surglab/refine.hpp"
#include "surglab/reward.hpp"
#include "surglab/synth_env.hpp"

namespace surglab {

// One reward-curve sample per training step. frac_level1_text counts raw
// outputs containing the literal "Level 1"; frac_level1_ind counts the
// structure indicator (marker inside a recoverable think segment).
struct RewardCurveEntry {
    int step = 0;
    double mean_reward = 0.0;
    double frac_format = 0.0;
    double frac_answer = 0.0;
    double frac_level1_ind = 0.0;
    double frac_level1_text = 0.0;
    double mean_objective = 0.0;
};

// Supervised fine-tuning on bare answer targets (label tokens + eos).
PolicyParams stage_sft_answers(const PolicyParams& policy,
                               const std::vector<TaskInstance>& dataset, const SftSpec& spec,
                               std::vector<double>* loss_curve = nullptr);

// Cold-start fine-tuning on full teacher traces.
PolicyParams stage_sft_cot(const PolicyParams& policy, const std::vector<TaskInstance>& dataset,
                           const ConstraintBundle& bundle, const SftSpec& spec,
                           std::vector<double>* loss_curve = nullptr);

// Policy-gradient refinement. Each step samples one group per batch instance,
// scores it with the composite reward at the current step, and applies the
// mean of the per-group gradients. A final measurement-only entry is appended
// at step == spec.steps.
PolicyParams stage_grpo(const PolicyParams& policy, const std::vector<TaskInstance>& dataset,
                        const GrpoConfig& grpo_cfg, const GrpoStageSpec& spec,
                        const RewardConfig& reward_cfg, std::uint64_t seed,
                        std::vector<RewardCurveEntry>* curve = nullptr);

// Greedy-decode predictions for a holdout set; answers that do not match any
// declared label canonicalize to "invalid".
std::vector<LabelRecord> holdout_predictions(const PolicyParams& policy,
                                             const std::vector<TaskInstance>& holdout);

MetricReport evaluate_holdout(const PolicyParams& policy,
                              const std::vector<TaskInstance>& holdout, TaskKind kind);

// The task id and primary-metric name used for the arena entry of a kind.
std::string primary_metric_name(TaskKind kind);

struct PipelineResult {
    std::string out_dir;
    std::string hash;
    double holdout_accuracy = 0.0;
    double arena = 0.0;
    bool any_stage_ran = false;
};

// Executes the enabled stages in order (answer SFT, CoT SFT, GRPO,
// refinement), writing datasets, checkpoints, curves, reports, and the final
// metric/arena files under cfg.out_dir. Every artifact records the seed and
// the config hash. Throws ConfigError / StageError.
PipelineResult run_stage_pipeline(const RunConfig& cfg);

}  // namespace surglab

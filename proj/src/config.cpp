#include "surglab/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "surglab/rng.hpp"

namespace surglab {

namespace {

using nlohmann::json;

json to_json(const RunConfig& c) {
    return json{
        {"format_version", 1},
        {"seed", c.seed},
        {"out_dir", c.out_dir},
        {"stages",
         {{"sft", c.stages.sft},
          {"cot", c.stages.cot},
          {"grpo", c.stages.grpo},
          {"refine", c.stages.refine}}},
        {"dataset",
         {{"kind", to_string(c.dataset.kind)},
          {"n", c.dataset.n},
          {"holdout", c.dataset.holdout},
          {"seed", c.dataset.seed}}},
        {"policy",
         {{"embed_dim", c.policy.embed_dim},
          {"hidden_dim", c.policy.hidden_dim},
          {"max_output_len", c.policy.max_output_len},
          {"init_scale", c.policy.init_scale}}},
        {"sft",
         {{"steps", c.sft.steps},
          {"batch_size", c.sft.batch_size},
          {"learning_rate", c.sft.learning_rate}}},
        {"cot",
         {{"steps", c.cot.steps},
          {"batch_size", c.cot.batch_size},
          {"learning_rate", c.cot.learning_rate}}},
        {"grpo",
         {{"group_size", c.grpo.group_size},
          {"epsilon", c.grpo.epsilon},
          {"tau", c.grpo.tau},
          {"entropy_focus", c.grpo.entropy_focus},
          {"learning_rate", c.grpo.learning_rate},
          {"max_output_len", c.grpo.max_output_len},
          {"steps", c.grpo_stage.steps},
          {"batch_instances", c.grpo_stage.batch_instances}}},
        {"reward",
         {{"lambda_f", c.reward.lambda_f},
          {"lambda_a", c.reward.lambda_a},
          {"lambda_s", c.reward.lambda_s},
          {"structure_cutoff_step", c.reward.structure_cutoff_step}}},
        {"refine",
         {{"k_rollouts", c.refine.k_rollouts},
          {"iterations", c.refine.iterations},
          {"distill_steps", c.refine.distill_steps},
          {"distill_batch", c.refine.distill_batch},
          {"distill_lr", c.refine.distill_lr},
          {"include_cot_traces", c.refine_include_cot_traces}}},
    };
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

RunConfig from_json(const json& j) {
    RunConfig c = default_config();
    maybe(j, "seed", c.seed);
    maybe(j, "out_dir", c.out_dir);
    if (j.contains("stages")) {
        const auto& s = j.at("stages");
        maybe(s, "sft", c.stages.sft);
        maybe(s, "cot", c.stages.cot);
        maybe(s, "grpo", c.stages.grpo);
        maybe(s, "refine", c.stages.refine);
    }
    if (j.contains("dataset")) {
        const auto& s = j.at("dataset");
        if (s.contains("kind")) c.dataset.kind = task_kind_from_string(s.at("kind"));
        maybe(s, "n", c.dataset.n);
        maybe(s, "holdout", c.dataset.holdout);
        maybe(s, "seed", c.dataset.seed);
    }
    if (j.contains("policy")) {
        const auto& s = j.at("policy");
        maybe(s, "embed_dim", c.policy.embed_dim);
        maybe(s, "hidden_dim", c.policy.hidden_dim);
        maybe(s, "max_output_len", c.policy.max_output_len);
        maybe(s, "init_scale", c.policy.init_scale);
    }
    if (j.contains("sft")) {
        const auto& s = j.at("sft");
        maybe(s, "steps", c.sft.steps);
        maybe(s, "batch_size", c.sft.batch_size);
        maybe(s, "learning_rate", c.sft.learning_rate);
    }
    if (j.contains("cot")) {
        const auto& s = j.at("cot");
        maybe(s, "steps", c.cot.steps);
        maybe(s, "batch_size", c.cot.batch_size);
        maybe(s, "learning_rate", c.cot.learning_rate);
    }
    if (j.contains("grpo")) {
        const auto& s = j.at("grpo");
        maybe(s, "group_size", c.grpo.group_size);
        maybe(s, "epsilon", c.grpo.epsilon);
        maybe(s, "tau", c.grpo.tau);
        maybe(s, "entropy_focus", c.grpo.entropy_focus);
        maybe(s, "learning_rate", c.grpo.learning_rate);
        maybe(s, "max_output_len", c.grpo.max_output_len);
        maybe(s, "steps", c.grpo_stage.steps);
        maybe(s, "batch_instances", c.grpo_stage.batch_instances);
    }
    if (j.contains("reward")) {
        const auto& s = j.at("reward");
        maybe(s, "lambda_f", c.reward.lambda_f);
        maybe(s, "lambda_a", c.reward.lambda_a);
        maybe(s, "lambda_s", c.reward.lambda_s);
        maybe(s, "structure_cutoff_step", c.reward.structure_cutoff_step);
    }
    if (j.contains("refine")) {
        const auto& s = j.at("refine");
        maybe(s, "k_rollouts", c.refine.k_rollouts);
        maybe(s, "iterations", c.refine.iterations);
        maybe(s, "distill_steps", c.refine.distill_steps);
        maybe(s, "distill_batch", c.refine.distill_batch);
        maybe(s, "distill_lr", c.refine.distill_lr);
        maybe(s, "include_cot_traces", c.refine_include_cot_traces);
    }
    return c;
}

}  // namespace

RunConfig default_config() { return RunConfig{}; }

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
        return from_json(j);
    } catch (const json::exception& e) {
        throw ConfigError("bad config file " + path + ": " + e.what());
    }
}

void save_config(const RunConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write config: " + path);
    json j = to_json(cfg);
    j["config_hash"] = config_hash(cfg);
    out << j.dump(2) << "\n";
}

std::string config_to_json(const RunConfig& cfg) { return to_json(cfg).dump(); }

std::string config_hash(const RunConfig& cfg) {
    const std::uint64_t h = fnv1a(config_to_json(cfg));
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void validate_config(const RunConfig& cfg) {
    if (cfg.dataset.n < 1) throw ConfigError("dataset.n must be >= 1");
    if (cfg.dataset.holdout < 0) throw ConfigError("dataset.holdout must be >= 0");
    if (cfg.policy.embed_dim < 1 || cfg.policy.embed_dim > 32)
        throw ConfigError("policy.embed_dim must be in [1, 32]");
    if (cfg.policy.hidden_dim < 1 || cfg.policy.hidden_dim > 64)
        throw ConfigError("policy.hidden_dim must be in [1, 64]");
    if (cfg.policy.max_output_len < 1) throw ConfigError("policy.max_output_len must be >= 1");
    if (cfg.grpo.group_size < 2) throw ConfigError("grpo.group_size must be >= 2");
    if (!(cfg.grpo.epsilon > 0.0)) throw ConfigError("grpo.epsilon must be > 0");
    if (!(cfg.grpo.tau > 0.0)) throw ConfigError("grpo.tau must be > 0");
    if (cfg.grpo.max_output_len < 1) throw ConfigError("grpo.max_output_len must be >= 1");
    if (cfg.grpo_stage.batch_instances < 1)
        throw ConfigError("grpo.batch_instances must be >= 1");
    if (cfg.reward.lambda_f < 0.0 || cfg.reward.lambda_a < 0.0 || cfg.reward.lambda_s < 0.0)
        throw ConfigError("reward weights must be >= 0");
    if (cfg.reward.structure_cutoff_step < 0)
        throw ConfigError("reward.structure_cutoff_step must be >= 0");
    if (cfg.refine.k_rollouts < 1) throw ConfigError("refine.k_rollouts must be >= 1");
    if (cfg.refine.iterations < 1) throw ConfigError("refine.iterations must be >= 1");
    if (cfg.refine.distill_batch < 1) throw ConfigError("refine.distill_batch must be >= 1");
}

}  // namespace surglab

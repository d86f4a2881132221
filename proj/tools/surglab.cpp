// Command-line front end: dataset generation, the four training stages,
// file-based evaluation, and arena aggregation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "surglab/arena.hpp"
#include "surglab/config.hpp"
#include "surglab/io.hpp"
#include "surglab/pipeline.hpp"
#include "surglab/rng.hpp"

namespace {

using namespace surglab;
using nlohmann::json;

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::string data_path;
    std::string init_checkpoint;
    bool seed_set = false;
    std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_data) {
    cmd->add_option("--config", opts.config_path, "JSON config file; flags override its values");
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "run seed")->each([&](const std::string&) {
        opts.seed_set = true;
    });
    if (with_data) {
        cmd->add_option("--data", opts.data_path, "dataset JSONL (generated from config if absent)");
        cmd->add_option("--init", opts.init_checkpoint, "starting checkpoint");
    }
}

RunConfig resolve_config(const CommonOpts& opts) {
    RunConfig cfg = opts.config_path.empty() ? default_config() : load_config(opts.config_path);
    if (opts.seed_set) cfg.seed = opts.seed;
    if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
    return cfg;
}

std::vector<TaskInstance> resolve_dataset(const CommonOpts& opts, const RunConfig& cfg) {
    if (!opts.data_path.empty()) return load_dataset(opts.data_path);
    return gen_dataset(cfg.dataset.seed, cfg.dataset.kind, cfg.dataset.n);
}

PolicyParams resolve_policy(const CommonOpts& opts, const RunConfig& cfg) {
    if (!opts.init_checkpoint.empty()) return load_checkpoint(opts.init_checkpoint);
    return init_policy(shared_vocab(), eos_token(), kContextDim, cfg.policy.embed_dim,
                       cfg.policy.hidden_dim, cfg.policy.max_output_len, cfg.seed,
                       cfg.policy.init_scale);
}

HeaderMeta run_meta(const RunConfig& cfg) {
    return {{"seed", std::to_string(cfg.seed)}, {"config_hash", config_hash(cfg)}};
}

void write_curve_file(const std::vector<double>& losses, const std::string& path,
                      const HeaderMeta& meta) {
    std::ofstream out(path);
    if (!out) throw StageError("cannot write " + path);
    json h{{"format_version", 1}, {"schema", "loss_curve"}};
    for (const auto& [k, v] : meta) h[k] = v;
    out << h.dump() << "\n";
    for (std::size_t i = 0; i < losses.size(); ++i)
        out << json{{"step", i}, {"loss", losses[i]}}.dump() << "\n";
}

int cmd_gen(const std::string& kind_name, int n, std::uint64_t seed, const std::string& out_path,
            const std::string& teacher_path) {
    const TaskKind kind = task_kind_from_string(kind_name);
    const auto dataset = gen_dataset(seed, kind, n);
    save_dataset(dataset, out_path, {{"seed", std::to_string(seed)}});
    std::printf("wrote %zu instances to %s\n", dataset.size(), out_path.c_str());
    if (!teacher_path.empty()) {
        const auto& bundle = bundle_for(kind);
        std::vector<std::pair<std::string, std::string>> traces;
        for (const auto& inst : dataset) traces.push_back({inst.id, scripted_teacher(inst, bundle)});
        save_traces(traces, teacher_path, {{"seed", std::to_string(seed)}});
        std::printf("wrote %zu teacher traces to %s\n", traces.size(), teacher_path.c_str());
    }
    return 0;
}

int cmd_train_stage(const CommonOpts& opts, RunConfig cfg, const std::string& stage) {
    validate_config(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    const auto dataset = resolve_dataset(opts, cfg);
    PolicyParams policy = resolve_policy(opts, cfg);
    const auto meta = run_meta(cfg);
    const std::map<std::string, std::string> ckpt_meta(meta.begin(), meta.end());

    if (stage == "sft" || stage == "cot") {
        std::vector<double> losses;
        const SftSpec& spec = stage == "sft" ? cfg.sft : cfg.cot;
        policy = stage == "sft"
                     ? stage_sft_answers(policy, dataset, spec, &losses)
                     : stage_sft_cot(policy, dataset, bundle_for(dataset.front().kind), spec,
                                     &losses);
        write_curve_file(losses, cfg.out_dir + "/" + stage + "_curve.jsonl", meta);
        std::printf("%s: %d steps, final loss %.6f\n", stage.c_str(), spec.steps,
                    losses.empty() ? 0.0 : losses.back());
    } else if (stage == "grpo") {
        std::vector<RewardCurveEntry> curve;
        policy = stage_grpo(policy, dataset, cfg.grpo, cfg.grpo_stage, cfg.reward,
                            hash_combine(cfg.seed, fnv1a("grpo")), &curve);
        std::ofstream out(cfg.out_dir + "/reward_curve.jsonl");
        json h{{"format_version", 1}, {"schema", "reward_curve"}};
        for (const auto& [k, v] : meta) h[k] = v;
        out << h.dump() << "\n";
        for (const auto& e : curve)
            out << json{{"step", e.step},
                        {"mean_reward", e.mean_reward},
                        {"frac_format", e.frac_format},
                        {"frac_answer", e.frac_answer},
                        {"frac_level1_ind", e.frac_level1_ind},
                        {"frac_level1_text", e.frac_level1_text},
                        {"mean_objective", e.mean_objective}}
                       .dump()
                << "\n";
        std::printf("grpo: %d steps, mean reward %.4f -> %.4f\n", cfg.grpo_stage.steps,
                    curve.front().mean_reward, curve.back().mean_reward);
    } else if (stage == "refine") {
        const auto& bundle = bundle_for(dataset.front().kind);
        RefinementResult refined =
            run_refinement(policy, dataset, scripted_teacher_fn(bundle), cfg.refine.iterations,
                           cfg.refine, hash_combine(cfg.seed, fnv1a("refine")));
        policy = refined.policy;
        save_pseudo_labels(refined.corpus, cfg.out_dir + "/pseudo_labels.jsonl", meta);
        json reports = json::array();
        for (const auto& r : refined.reports)
            reports.push_back(json{{"iteration", r.iteration},
                                   {"total", r.total},
                                   {"hard", r.hard},
                                   {"retagged", r.retagged},
                                   {"predicted_pseudo", r.predicted_pseudo},
                                   {"generated_pseudo", r.generated_pseudo},
                                   {"teacher_failures", r.teacher_failures},
                                   {"eval_accuracy_before", r.eval_accuracy_before},
                                   {"eval_accuracy_after", r.eval_accuracy_after},
                                   {"seed", r.seed}});
        std::ofstream out(cfg.out_dir + "/refine_reports.json");
        out << json{{"format_version", 1},
                    {"seed", std::to_string(cfg.seed)},
                    {"config_hash", config_hash(cfg)},
                    {"iterations", reports}}
                   .dump(2)
            << "\n";
        for (const auto& r : refined.reports)
            std::printf("iteration %d: hard %d, predicted %d, generated %d, acc %.4f -> %.4f\n",
                        r.iteration, r.hard, r.predicted_pseudo, r.generated_pseudo,
                        r.eval_accuracy_before, r.eval_accuracy_after);
    }

    save_checkpoint(policy, cfg.out_dir + "/checkpoint.txt", ckpt_meta);
    std::printf("checkpoint written to %s/checkpoint.txt\n", cfg.out_dir.c_str());
    return 0;
}

int cmd_eval(const std::string& task, const std::string& pred_path,
             const std::string& truth_path, const std::string& out_path,
             const std::string& cvs_overall) {
    MetricReport report;
    if (task == "triplet") {
        report = triplet_metrics(load_triplet_records(pred_path, truth_path));
    } else if (task == "cvs") {
        const auto mode = cvs_overall == "frame" ? CvsOverallMode::kAllThreePerFrame
                                                 : CvsOverallMode::kJointPool;
        report = cvs_scores(load_cvs_records(pred_path, truth_path), mode);
    } else if (task == "loc") {
        report = localization_metrics(load_box_records(pred_path, truth_path));
    } else {
        const TaskKind kind = task_kind_from_string(task);
        const auto records = load_label_records(pred_path, truth_path);
        auto class_list = label_vocabulary(kind);
        // Model answers outside the class list arrive canonicalized as
        // "invalid" by the pipeline; accept them here as well.
        class_list.push_back("invalid");
        report = classification_metrics(records, class_list);
        report.task = task;
    }
    json metrics = json::object();
    for (const auto& [name, value] : report.metrics) metrics[name] = value;
    const json j{{"format_version", 1}, {"task", report.task}, {"metrics", metrics}};
    std::cout << j.dump(2) << "\n";
    if (!out_path.empty()) save_metric_report(report, out_path);
    return 0;
}

int cmd_arena(const std::string& table_path, const std::string& model) {
    const ArenaTable table = load_arena_table(table_path);
    auto print_one = [&](const std::string& name) {
        const double score = arena_score(table, name);
        // Full precision in machine output; the paper-style display rounds
        // to one decimal.
        std::printf("%s\t%.4f\t(%.1f)\n", name.c_str(), score, score);
    };
    if (!model.empty()) {
        print_one(model);
    } else {
        for (const auto& [name, tasks] : table.scores) print_one(name);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale GRPO training lab and surgical-metrics harness"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    std::string gen_kind = "phase";
    int gen_n = 1000;
    std::uint64_t gen_seed = 7;
    std::string gen_out = "dataset.jsonl";
    std::string gen_teacher;
    gen->add_option("--kind", gen_kind, "phase | triplet | action | cvs_criterion");
    gen->add_option("--n", gen_n, "number of instances")->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "dataset seed");
    gen->add_option("--out", gen_out, "output JSONL path");
    gen->add_option("--teacher", gen_teacher, "also write teacher traces to this path");

    // training stages + demo share a config/override block
    CommonOpts sft_opts, cot_opts, grpo_opts, refine_opts, demo_opts;
    auto* train_sft = app.add_subcommand("train-sft", "stage 1: SFT on bare answers");
    auto* train_cot = app.add_subcommand("train-cot", "stage 2: SFT on teacher CoT traces");
    auto* train_grpo = app.add_subcommand("train-grpo", "stage 3: GRPO refinement");
    auto* refine = app.add_subcommand("refine", "stage 4: iterative refinement");
    auto* demo = app.add_subcommand("demo", "run the full four-stage pipeline");
    add_common(train_sft, sft_opts, true);
    add_common(train_cot, cot_opts, true);
    add_common(train_grpo, grpo_opts, true);
    add_common(refine, refine_opts, true);
    add_common(demo, demo_opts, false);

    // grpo/reward overrides (exposed on train-grpo and demo)
    struct GrpoFlags {
        int group_size = -1;
        double tau = -1, epsilon = -1, lr = -1;
        double lambda_f = -1, lambda_a = -1, lambda_s = -1;
        long long cutoff = -1;
        int steps = -1;
        std::string entropy_focus;
        int k_rollouts = -1, iterations = -1;
    } gflags, dflags;
    auto add_grpo_flags = [](CLI::App* cmd, GrpoFlags& f) {
        cmd->add_option("--group-size", f.group_size, "rollouts per group (G)");
        cmd->add_option("--tau", f.tau, "entropy-weight temperature");
        cmd->add_option("--epsilon", f.epsilon, "advantage normalization epsilon");
        cmd->add_option("--lr", f.lr, "GRPO learning rate");
        cmd->add_option("--lambda-f", f.lambda_f, "format reward weight");
        cmd->add_option("--lambda-a", f.lambda_a, "answer reward weight");
        cmd->add_option("--lambda-s", f.lambda_s, "structure reward weight");
        cmd->add_option("--structure-cutoff", f.cutoff, "step at which lambda_s turns off");
        cmd->add_option("--steps", f.steps, "GRPO training steps");
        cmd->add_option("--entropy-focus", f.entropy_focus, "on | off")
            ->check(CLI::IsMember({"on", "off"}));
        cmd->add_option("--k-rollouts", f.k_rollouts, "hard-sample rollouts (K)");
        cmd->add_option("--iterations", f.iterations, "refinement iterations (N)");
    };
    add_grpo_flags(train_grpo, gflags);
    add_grpo_flags(refine, gflags);
    add_grpo_flags(demo, dflags);

    auto apply_flags = [](RunConfig& cfg, const GrpoFlags& f) {
        if (f.group_size > 0) cfg.grpo.group_size = f.group_size;
        if (f.tau > 0) cfg.grpo.tau = f.tau;
        if (f.epsilon > 0) cfg.grpo.epsilon = f.epsilon;
        if (f.lr > 0) cfg.grpo.learning_rate = f.lr;
        if (f.lambda_f >= 0) cfg.reward.lambda_f = f.lambda_f;
        if (f.lambda_a >= 0) cfg.reward.lambda_a = f.lambda_a;
        if (f.lambda_s >= 0) cfg.reward.lambda_s = f.lambda_s;
        if (f.cutoff >= 0) cfg.reward.structure_cutoff_step = f.cutoff;
        if (f.steps > 0) cfg.grpo_stage.steps = f.steps;
        if (f.entropy_focus == "on") cfg.grpo.entropy_focus = true;
        if (f.entropy_focus == "off") cfg.grpo.entropy_focus = false;
        if (f.k_rollouts > 0) cfg.refine.k_rollouts = f.k_rollouts;
        if (f.iterations > 0) cfg.refine.iterations = f.iterations;
    };

    // eval
    auto* eval = app.add_subcommand("eval", "score a prediction file");
    std::string eval_task, eval_pred, eval_truth, eval_out, eval_cvs_overall = "joint";
    eval->add_option("--task", eval_task, "phase | triplet | action | cvs | loc")->required();
    eval->add_option("--pred", eval_pred, "prediction JSONL")->required();
    eval->add_option("--truth", eval_truth, "separate truth JSONL keyed by id");
    eval->add_option("--out", eval_out, "also write the report here");
    eval->add_option("--cvs-overall", eval_cvs_overall, "joint | frame")
        ->check(CLI::IsMember({"joint", "frame"}));

    // arena
    auto* arena = app.add_subcommand("arena", "aggregate arena scores from a table");
    std::string arena_table_path, arena_model;
    arena->add_option("--table", arena_table_path, "arena table JSON")->required();
    arena->add_option("--model", arena_model, "single model to score");

    try {
        app.parse(argc, argv);

        if (gen->parsed()) return cmd_gen(gen_kind, gen_n, gen_seed, gen_out, gen_teacher);
        if (train_sft->parsed()) return cmd_train_stage(sft_opts, resolve_config(sft_opts), "sft");
        if (train_cot->parsed()) return cmd_train_stage(cot_opts, resolve_config(cot_opts), "cot");
        if (train_grpo->parsed()) {
            RunConfig cfg = resolve_config(grpo_opts);
            apply_flags(cfg, gflags);
            return cmd_train_stage(grpo_opts, cfg, "grpo");
        }
        if (refine->parsed()) {
            RunConfig cfg = resolve_config(refine_opts);
            apply_flags(cfg, gflags);
            return cmd_train_stage(refine_opts, cfg, "refine");
        }
        if (demo->parsed()) {
            RunConfig cfg = resolve_config(demo_opts);
            apply_flags(cfg, dflags);
            const PipelineResult result = run_stage_pipeline(cfg);
            if (!result.any_stage_ran) {
                std::printf("all stages disabled; config echo written to %s/config.json\n",
                            result.out_dir.c_str());
                return 0;
            }
            std::printf("demo complete: holdout answer accuracy %.4f, arena %.2f\n",
                        result.holdout_accuracy, result.arena);
            std::printf("artifacts in %s (config hash %s)\n", result.out_dir.c_str(),
                        result.hash.c_str());
            return 0;
        }
        if (eval->parsed())
            return cmd_eval(eval_task, eval_pred, eval_truth, eval_out, eval_cvs_overall);
        if (arena->parsed()) return cmd_arena(arena_table_path, arena_model);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const surglab::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}

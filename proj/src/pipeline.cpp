#include "surglab/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "surglab/arena.hpp"
#include "surglab/cot_format.hpp"
#include "surglab/io.hpp"
#include "surglab/rng.hpp"

namespace surglab {

namespace {

using nlohmann::json;

PolicyParams run_sft(const PolicyParams& policy, const std::vector<TrainingExample>& examples,
                     const SftSpec& spec, std::vector<double>* loss_curve) {
    if (examples.empty()) throw StageError("sft: no training examples");
    PolicyParams current = policy;
    const std::size_t n = examples.size();
    for (int step = 0; step < spec.steps; ++step) {
        std::vector<TrainingExample> batch;
        batch.reserve(spec.batch_size);
        for (int j = 0; j < spec.batch_size; ++j)
            batch.push_back(examples[(static_cast<std::size_t>(step) * spec.batch_size + j) % n]);
        const auto [loss, grad] = ce_loss_grad(current, batch);
        if (loss_curve != nullptr) loss_curve->push_back(loss);
        current = apply_gradient(current, grad, spec.learning_rate, GradDirection::kDescend);
    }
    return current;
}

struct GroupStats {
    double reward_sum = 0.0;
    int format = 0;
    int answer = 0;
    int level1_ind = 0;
    int level1_text = 0;
    int count = 0;
};

void score_group(RolloutGroup& group, const std::string& label, const RewardConfig& reward_cfg,
                 long long step, GroupStats& stats) {
    group.rewards.clear();
    group.rewards.reserve(group.outputs.size());
    for (const auto& out : group.outputs) {
        const std::string text = detokenize(out.tokens);
        const CotTrace trace = parse_output(text);
        const RewardBreakdown r = composite_reward(trace, label, reward_cfg, step);
        group.rewards.push_back(r.total);
        stats.reward_sum += r.total;
        stats.format += r.format_ind ? 1 : 0;
        stats.answer += r.answer_ind ? 1 : 0;
        stats.level1_ind += r.structure_ind ? 1 : 0;
        stats.level1_text += text.find("Level 1") != std::string::npos ? 1 : 0;
        ++stats.count;
    }
}

RewardCurveEntry curve_entry(int step, const GroupStats& stats, double mean_objective) {
    RewardCurveEntry e;
    e.step = step;
    const double n = static_cast<double>(stats.count);
    e.mean_reward = stats.reward_sum / n;
    e.frac_format = stats.format / n;
    e.frac_answer = stats.answer / n;
    e.frac_level1_ind = stats.level1_ind / n;
    e.frac_level1_text = stats.level1_text / n;
    e.mean_objective = mean_objective;
    return e;
}

std::string canonical_label(const std::string& answer, const std::vector<std::string>& labels) {
    const std::string norm = normalize_answer(answer);
    for (const auto& label : labels)
        if (normalize_answer(label) == norm) return label;
    return "invalid";
}

void write_loss_curve(const std::vector<double>& losses, const std::string& path,
                      const HeaderMeta& meta) {
    std::ofstream out(path);
    if (!out) throw StageError("cannot write curve: " + path);
    json h{{"format_version", 1}, {"schema", "loss_curve"}};
    for (const auto& [k, v] : meta) h[k] = v;
    out << h.dump() << "\n";
    for (std::size_t i = 0; i < losses.size(); ++i)
        out << json{{"step", i}, {"loss", losses[i]}}.dump() << "\n";
}

void write_reward_curve(const std::vector<RewardCurveEntry>& curve, const std::string& path,
                        const HeaderMeta& meta) {
    std::ofstream out(path);
    if (!out) throw StageError("cannot write curve: " + path);
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
}

json report_to_json(const IterationReport& r) {
    return json{{"iteration", r.iteration},
                {"total", r.total},
                {"hard", r.hard},
                {"retagged", r.retagged},
                {"predicted_pseudo", r.predicted_pseudo},
                {"generated_pseudo", r.generated_pseudo},
                {"teacher_failures", r.teacher_failures},
                {"eval_accuracy_before", r.eval_accuracy_before},
                {"eval_accuracy_after", r.eval_accuracy_after},
                {"seed", r.seed}};
}

}  // namespace

PolicyParams stage_sft_answers(const PolicyParams& policy,
                               const std::vector<TaskInstance>& dataset, const SftSpec& spec,
                               std::vector<double>* loss_curve) {
    std::vector<TrainingExample> examples;
    examples.reserve(dataset.size());
    for (const auto& inst : dataset) {
        TrainingExample ex;
        ex.context = inst.context;
        ex.target_tokens = tokenize(inst.label);
        ex.target_tokens.push_back(eos_token_id());
        examples.push_back(std::move(ex));
    }
    return run_sft(policy, examples, spec, loss_curve);
}

PolicyParams stage_sft_cot(const PolicyParams& policy, const std::vector<TaskInstance>& dataset,
                           const ConstraintBundle& bundle, const SftSpec& spec,
                           std::vector<double>* loss_curve) {
    std::vector<TrainingExample> examples;
    examples.reserve(dataset.size());
    for (const auto& inst : dataset) {
        TrainingExample ex;
        ex.context = inst.context;
        ex.target_tokens = teacher_tokens(inst, bundle);
        examples.push_back(std::move(ex));
    }
    return run_sft(policy, examples, spec, loss_curve);
}

PolicyParams stage_grpo(const PolicyParams& policy, const std::vector<TaskInstance>& dataset,
                        const GrpoConfig& grpo_cfg, const GrpoStageSpec& spec,
                        const RewardConfig& reward_cfg, std::uint64_t seed,
                        std::vector<RewardCurveEntry>* curve) {
    if (dataset.empty()) throw StageError("grpo: empty dataset");
    PolicyParams current = policy;
    const std::size_t n = dataset.size();
    const int batch = spec.batch_instances;

    for (int step = 0; step <= spec.steps; ++step) {
        const bool measure_only = step == spec.steps;
        GroupStats stats;
        PolicyGrad grad = zero_grad_like(current);
        double objective = 0.0;
        for (int j = 0; j < batch; ++j) {
            const auto& inst = dataset[(static_cast<std::size_t>(step) * batch + j) % n];
            const std::uint64_t group_seed =
                hash_combine(hash_combine(seed, static_cast<std::uint64_t>(step)),
                             static_cast<std::uint64_t>(j));
            RolloutGroup group = sample_group(current, inst, grpo_cfg, group_seed);
            score_group(group, inst.label, reward_cfg, step, stats);
            finalize_group(group, grpo_cfg);
            if (!measure_only) {
                objective += grpo_objective(current, group);
                const PolicyGrad g = grpo_gradient(current, group);
                grad.axpy(1.0 / batch, g);
            }
        }
        if (curve != nullptr) curve->push_back(curve_entry(step, stats, objective / batch));
        if (measure_only) break;
        if (!grad.all_finite())
            throw StageError("grpo: non-finite gradient at step " + std::to_string(step));
        current = apply_gradient(current, grad, grpo_cfg.learning_rate, GradDirection::kAscend);
    }
    return current;
}

std::vector<LabelRecord> holdout_predictions(const PolicyParams& policy,
                                             const std::vector<TaskInstance>& holdout) {
    if (holdout.empty()) throw StageError("evaluate: empty holdout set");
    const auto& labels = label_vocabulary(holdout.front().kind);
    std::vector<LabelRecord> records;
    records.reserve(holdout.size());
    for (const auto& inst : holdout) {
        const std::string text = detokenize(greedy_decode(policy, inst.context));
        const auto answer = extract_answer(text);
        const std::string pred =
            answer ? canonical_label(*answer, labels) : std::string("invalid");
        records.push_back({inst.id, pred, inst.label});
    }
    return records;
}

MetricReport evaluate_holdout(const PolicyParams& policy,
                              const std::vector<TaskInstance>& holdout, TaskKind kind) {
    const auto records = holdout_predictions(policy, holdout);
    if (kind == TaskKind::kTriplet) {
        std::vector<TripletRecord> triplets;
        triplets.reserve(records.size());
        for (const auto& r : records) {
            TripletRecord t;
            t.id = r.id;
            std::istringstream in(r.pred);
            std::string a, b, c, extra;
            if ((in >> a >> b >> c) && !(in >> extra)) t.pred = {r.pred};
            t.truth = {r.truth};
            triplets.push_back(std::move(t));
        }
        return triplet_metrics(triplets);
    }
    auto class_list = label_vocabulary(kind);
    class_list.push_back("invalid");
    MetricReport report = classification_metrics(records, class_list);
    report.task = to_string(kind);
    return report;
}

std::string primary_metric_name(TaskKind kind) {
    return kind == TaskKind::kTriplet ? "triplet_accuracy" : "accuracy";
}

PipelineResult run_stage_pipeline(const RunConfig& cfg) {
    validate_config(cfg);
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const std::string hash = config_hash(cfg);
    const HeaderMeta meta{{"seed", std::to_string(cfg.seed)}, {"config_hash", hash}};
    const auto path = [&](const std::string& name) { return cfg.out_dir + "/" + name; };

    save_config(cfg, path("config.json"));

    PipelineResult result;
    result.out_dir = cfg.out_dir;
    result.hash = hash;
    result.any_stage_ran =
        cfg.stages.sft || cfg.stages.cot || cfg.stages.grpo || cfg.stages.refine;
    if (!result.any_stage_ran) return result;

    try {
        const auto train = gen_dataset(cfg.dataset.seed, cfg.dataset.kind, cfg.dataset.n);
        const auto holdout =
            cfg.dataset.holdout > 0
                ? gen_dataset(hash_combine(cfg.dataset.seed, fnv1a("holdout")),
                              cfg.dataset.kind, cfg.dataset.holdout)
                : std::vector<TaskInstance>{};
        save_dataset(train, path("dataset_train.jsonl"), meta);
        if (!holdout.empty()) save_dataset(holdout, path("dataset_holdout.jsonl"), meta);

        const auto& bundle = bundle_for(cfg.dataset.kind);
        std::vector<std::pair<std::string, std::string>> traces;
        traces.reserve(train.size());
        for (const auto& inst : train) traces.push_back({inst.id, scripted_teacher(inst, bundle)});
        save_traces(traces, path("teacher_traces.jsonl"), meta);

        const std::map<std::string, std::string> ckpt_meta{
            {"seed", std::to_string(cfg.seed)}, {"config_hash", hash}};
        PolicyParams policy = init_policy(shared_vocab(), eos_token(), kContextDim,
                                          cfg.policy.embed_dim, cfg.policy.hidden_dim,
                                          cfg.policy.max_output_len, cfg.seed,
                                          cfg.policy.init_scale);

        if (cfg.stages.sft) {
            std::vector<double> losses;
            policy = stage_sft_answers(policy, train, cfg.sft, &losses);
            write_loss_curve(losses, path("sft_curve.jsonl"), meta);
            save_checkpoint(policy, path("checkpoint_stage1.txt"), ckpt_meta);
        }
        if (cfg.stages.cot) {
            std::vector<double> losses;
            policy = stage_sft_cot(policy, train, bundle, cfg.cot, &losses);
            write_loss_curve(losses, path("cot_curve.jsonl"), meta);
            save_checkpoint(policy, path("checkpoint_stage2.txt"), ckpt_meta);
        }
        if (cfg.stages.grpo) {
            std::vector<RewardCurveEntry> curve;
            policy = stage_grpo(policy, train, cfg.grpo, cfg.grpo_stage, cfg.reward,
                                hash_combine(cfg.seed, fnv1a("grpo")), &curve);
            write_reward_curve(curve, path("reward_curve.jsonl"), meta);
            save_checkpoint(policy, path("checkpoint_stage3.txt"), ckpt_meta);
        }
        if (cfg.stages.refine) {
            std::vector<PseudoLabel> seed_corpus;
            if (cfg.refine_include_cot_traces)
                for (const auto& [id, trace] : traces)
                    seed_corpus.push_back({id, Pathway::kGenerated, trace,
                                           parse_output(trace).answer_segment
                                               ? trim(*parse_output(trace).answer_segment)
                                               : ""});
            RefinementResult refined = run_refinement(
                policy, train, scripted_teacher_fn(bundle), cfg.refine.iterations, cfg.refine,
                hash_combine(cfg.seed, fnv1a("refine")), std::move(seed_corpus));
            policy = refined.policy;
            save_pseudo_labels(refined.corpus, path("pseudo_labels.jsonl"), meta);
            json reports = json::array();
            for (const auto& r : refined.reports) reports.push_back(report_to_json(r));
            std::ofstream out(path("refine_reports.json"));
            out << json{{"format_version", 1},
                        {"seed", std::to_string(cfg.seed)},
                        {"config_hash", hash},
                        {"iterations", reports}}
                       .dump(2)
                << "\n";
        }
        save_checkpoint(policy, path("checkpoint_final.txt"), ckpt_meta);

        if (!holdout.empty()) {
            const auto records = holdout_predictions(policy, holdout);
            save_label_predictions(records, to_string(cfg.dataset.kind),
                                   path("predictions.jsonl"), meta);
            const MetricReport report = evaluate_holdout(policy, holdout, cfg.dataset.kind);
            save_metric_report(report, path("metrics.json"), meta);

            ArenaTable table;
            const std::string task_id = to_string(cfg.dataset.kind) + "-holdout";
            table.scores["toy-policy"][task_id] =
                report.metrics.at(primary_metric_name(cfg.dataset.kind));
            save_arena_table(table, path("arena.json"));
            result.arena = arena_score(table, "toy-policy");
            result.holdout_accuracy = answer_accuracy(policy, holdout);
        }

        std::ofstream summary(path("summary.json"));
        summary << json{{"format_version", 1},
                        {"seed", std::to_string(cfg.seed)},
                        {"config_hash", hash},
                        {"holdout_answer_accuracy", result.holdout_accuracy},
                        {"arena_score", result.arena}}
                       .dump(2)
                << "\n";
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(e.what());
    }
    return result;
}

}  // namespace surglab

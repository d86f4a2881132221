#include "surglab/refine.hpp"

#include <map>
#include <set>
#include <stdexcept>

#include "surglab/cot_format.hpp"
#include "surglab/reward.hpp"
#include "surglab/rng.hpp"

namespace surglab {

namespace {

std::string sample_trace(const PolicyParams& policy, const TaskInstance& instance,
                         std::uint64_t seed) {
    Rng rng(seed);
    const SampledSequence seq = sample_sequence(policy, instance.context, rng);
    return detokenize(seq.tokens);
}

bool trace_answers_label(const std::string& trace, const std::string& label) {
    return answer_indicator(parse_output(trace), label);
}

}  // namespace

std::string to_string(Pathway p) {
    return p == Pathway::kPredicted ? "Predicted" : "Generated";
}

TeacherFn scripted_teacher_fn(const ConstraintBundle& bundle) {
    return [&bundle](const TaskInstance& instance) {
        return scripted_teacher(instance, bundle);
    };
}

std::uint64_t rollout_seed(std::uint64_t seed, const std::string& instance_id, int k) {
    return hash_combine(hash_combine(seed, fnv1a(instance_id)), static_cast<std::uint64_t>(k));
}

bool identify_hard(const PolicyParams& policy, const TaskInstance& instance, int k_rollouts,
                   std::uint64_t seed) {
    if (k_rollouts < 1) throw std::invalid_argument("identify_hard: k_rollouts must be >= 1");
    for (int k = 0; k < k_rollouts; ++k) {
        const std::string trace =
            sample_trace(policy, instance, rollout_seed(seed, instance.id, k));
        if (trace_answers_label(trace, instance.label)) return false;
    }
    return true;
}

PseudoLabelBatch build_pseudo_labels(const PolicyParams& policy,
                                     const std::vector<TaskInstance>& dataset,
                                     const TeacherFn& teacher, int k_rollouts,
                                     std::uint64_t seed) {
    if (dataset.empty()) throw std::invalid_argument("build_pseudo_labels: empty dataset");

    PseudoLabelBatch out;
    out.report.total = static_cast<int>(dataset.size());
    out.report.seed = seed;

    for (const auto& instance : dataset) {
        bool hard = identify_hard(policy, instance, k_rollouts, seed);
        if (!hard) {
            // Fresh rollout, one slot past the K identification rollouts.
            const std::string trace =
                sample_trace(policy, instance, rollout_seed(seed, instance.id, k_rollouts));
            if (trace_answers_label(trace, instance.label)) {
                out.labels.push_back(
                    {instance.id, Pathway::kPredicted, trace, instance.label});
                ++out.report.predicted_pseudo;
            } else {
                hard = true;
                ++out.report.retagged;
            }
        }
        if (hard) {
            ++out.report.hard;
            try {
                const std::string trace = teacher(instance);
                if (!trace_answers_label(trace, instance.label))
                    throw std::runtime_error("teacher trace does not answer the label");
                out.labels.push_back(
                    {instance.id, Pathway::kGenerated, trace, instance.label});
                ++out.report.generated_pseudo;
            } catch (const std::exception&) {
                ++out.report.teacher_failures;
            }
        }
    }
    return out;
}

PolicyParams distill_iteration(const PolicyParams& policy,
                               const std::vector<PseudoLabel>& pseudo_labels,
                               const std::vector<TaskInstance>& dataset, int sft_steps,
                               int batch_size, double learning_rate) {
    if (pseudo_labels.empty())
        throw std::invalid_argument("distill_iteration: empty pseudo-label list");
    if (batch_size < 1) throw std::invalid_argument("distill_iteration: batch_size must be >= 1");

    std::map<std::string, const Vector*> contexts;
    for (const auto& inst : dataset) contexts[inst.id] = &inst.context;

    std::vector<TrainingExample> examples;
    examples.reserve(pseudo_labels.size());
    for (const auto& pl : pseudo_labels) {
        const auto it = contexts.find(pl.instance_id);
        if (it == contexts.end())
            throw std::invalid_argument("distill_iteration: unknown instance id " +
                                        pl.instance_id);
        TrainingExample ex;
        ex.context = *it->second;
        ex.target_tokens = tokenize(pl.trace);
        ex.target_tokens.push_back(eos_token_id());
        examples.push_back(std::move(ex));
    }

    PolicyParams current = policy;
    const std::size_t n = examples.size();
    for (int step = 0; step < sft_steps; ++step) {
        std::vector<TrainingExample> batch;
        batch.reserve(batch_size);
        for (int j = 0; j < batch_size; ++j)
            batch.push_back(examples[(static_cast<std::size_t>(step) * batch_size + j) % n]);
        const auto [loss, grad] = ce_loss_grad(current, batch);
        current = apply_gradient(current, grad, learning_rate, GradDirection::kDescend);
    }
    return current;
}

double answer_accuracy(const PolicyParams& policy, const std::vector<TaskInstance>& dataset) {
    if (dataset.empty()) throw std::invalid_argument("answer_accuracy: empty dataset");
    std::size_t correct = 0;
    for (const auto& inst : dataset) {
        const std::string text = detokenize(greedy_decode(policy, inst.context));
        correct += trace_answers_label(text, inst.label) ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

RefinementResult run_refinement(const PolicyParams& policy,
                                const std::vector<TaskInstance>& dataset,
                                const TeacherFn& teacher, int n_iterations,
                                const RefineConfig& cfg, std::uint64_t seed,
                                std::vector<PseudoLabel> seed_corpus) {
    if (n_iterations < 1) throw std::invalid_argument("run_refinement: need at least 1 iteration");

    RefinementResult result;
    result.policy = policy;
    result.corpus = std::move(seed_corpus);

    std::set<std::string> seen;
    for (const auto& pl : result.corpus) seen.insert(pl.instance_id + "\x1f" + pl.trace);

    for (int iter = 0; iter < n_iterations; ++iter) {
        const std::uint64_t iter_seed = hash_combine(seed, static_cast<std::uint64_t>(iter));
        PseudoLabelBatch batch =
            build_pseudo_labels(result.policy, dataset, teacher, cfg.k_rollouts, iter_seed);
        batch.report.iteration = iter + 1;
        batch.report.eval_accuracy_before = answer_accuracy(result.policy, dataset);

        for (auto& pl : batch.labels) {
            const std::string key = pl.instance_id + "\x1f" + pl.trace;
            if (seen.insert(key).second) result.corpus.push_back(std::move(pl));
        }

        result.policy = distill_iteration(result.policy, result.corpus, dataset,
                                          cfg.distill_steps, cfg.distill_batch, cfg.distill_lr);
        if (!result.policy.w.all_finite())
            throw std::runtime_error("run_refinement: non-finite parameters after iteration " +
                                     std::to_string(iter + 1));
        batch.report.eval_accuracy_after = answer_accuracy(result.policy, dataset);
        result.reports.push_back(batch.report);
    }
    return result;
}

}  // namespace surglab

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "surglab/policy.hpp"
#include "surglab/synth_env.hpp"

namespace surglab {

enum class Pathway { kPredicted, kGenerated };

std::string to_string(Pathway p);

// A verified trace for distillation. The extracted answer of the trace always
// equals the label (both pathways); unverified traces are never stored.
struct PseudoLabel {
    std::string instance_id;
    Pathway pathway = Pathway::kPredicted;
    std::string trace;
    std::string label;
};

struct IterationReport {
    int iteration = 0;
    int total = 0;
    int hard = 0;      // final hard count, including re-tagged samples
    int retagged = 0;  // non-hard samples whose fresh rollout missed the label
    int predicted_pseudo = 0;
    int generated_pseudo = 0;
    int teacher_failures = 0;
    double eval_accuracy_before = 0.0;
    double eval_accuracy_after = 0.0;
    std::uint64_t seed = 0;
};

struct RefineConfig {
    int k_rollouts = 3;
    int iterations = 3;
    int distill_steps = 300;
    int distill_batch = 32;
    double distill_lr = 0.1;
};

// Teacher hook; the scripted teacher fills this role here, real clients can
// plug in the same way. Throws to signal failure on a sample.
using TeacherFn = std::function<std::string(const TaskInstance&)>;

TeacherFn scripted_teacher_fn(const ConstraintBundle& bundle);

// Rollout seed for instance/k pairs; reproducible and independent of dataset
// order.
std::uint64_t rollout_seed(std::uint64_t seed, const std::string& instance_id, int k);

// True iff the extracted answers of all K seeded rollouts fail to match the
// instance label.
bool identify_hard(const PolicyParams& policy, const TaskInstance& instance, int k_rollouts,
                   std::uint64_t seed);

struct PseudoLabelBatch {
    std::vector<PseudoLabel> labels;
    IterationReport report;  // eval accuracies left to the caller
};

// Step 1 + Step 2: partition into hard and non-hard, verify one fresh rollout
// for the non-hard ones (accepted as Predicted or re-tagged hard), and send
// every hard sample to the teacher for a Generated pseudo-label. Teacher
// failures are counted and skipped.
PseudoLabelBatch build_pseudo_labels(const PolicyParams& policy,
                                     const std::vector<TaskInstance>& dataset,
                                     const TeacherFn& teacher, int k_rollouts,
                                     std::uint64_t seed);

// Step 3: supervised fine-tuning on the pseudo-label traces. The dataset
// supplies the context vector for each instance id.
PolicyParams distill_iteration(const PolicyParams& policy,
                               const std::vector<PseudoLabel>& pseudo_labels,
                               const std::vector<TaskInstance>& dataset, int sft_steps,
                               int batch_size, double learning_rate);

// Greedy-decode answer accuracy against instance labels.
double answer_accuracy(const PolicyParams& policy, const std::vector<TaskInstance>& dataset);

struct RefinementResult {
    PolicyParams policy;
    std::vector<IterationReport> reports;
    std::vector<PseudoLabel> corpus;  // cumulative, exact-trace deduplicated
};

// Runs N iterations of Steps 1-3, distilling on the cumulative corpus
// (seed_corpus plus everything collected so far).
RefinementResult run_refinement(const PolicyParams& policy,
                                const std::vector<TaskInstance>& dataset,
                                const TeacherFn& teacher, int n_iterations,
                                const RefineConfig& cfg, std::uint64_t seed,
                                std::vector<PseudoLabel> seed_corpus = {});

}  // namespace surglab

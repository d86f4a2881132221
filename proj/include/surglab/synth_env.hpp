#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "surglab/matrix.hpp"

namespace surglab {

enum class TaskKind { kPhase, kTriplet, kAction, kCvsCriterion };

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& name);

// One synthetic scene. The context vector is an 8-dimensional noisy codeword
// for the label followed by 16 distractor dimensions; it is a pure function
// of (dataset seed, id).
struct TaskInstance {
    std::string id;
    TaskKind kind = TaskKind::kPhase;
    Vector context;
    std::string label;
};

inline constexpr int kContextDim = 24;
inline constexpr int kInformativeDims = 8;
inline constexpr double kContextNoiseSigma = 0.1;
inline constexpr double kDistractorSigma = 0.3;

struct Descriptor {
    std::string name;
    std::string traits;  // space separated trait words
};

// Generation constraints for one task kind: descriptor lists, the closed
// label vocabulary, and (for triplets) the allowed instrument-verb-target
// combinations.
struct ConstraintBundle {
    TaskKind kind = TaskKind::kPhase;
    std::vector<Descriptor> tools;
    std::vector<Descriptor> tissues;
    std::vector<std::string> labels;
    std::vector<std::array<std::string, 3>> cooccurrence;
};

const ConstraintBundle& bundle_for(TaskKind kind);
const std::vector<std::string>& label_vocabulary(TaskKind kind);

// Deterministic in (seed, kind, n); labels are assigned near-uniformly.
std::vector<TaskInstance> gen_dataset(std::uint64_t seed, TaskKind kind, int n);

// Well-formed three-level trace ending in <answer>label</answer>. Throws when
// the instance label is outside the bundle vocabulary.
std::string scripted_teacher(const TaskInstance& instance, const ConstraintBundle& bundle);

// Token ids of the teacher trace including the trailing eos token.
std::vector<int> teacher_tokens(const TaskInstance& instance, const ConstraintBundle& bundle);

// Shared whitespace-token vocabulary covering tags, level markers, every task
// label, and every teacher template word. Size stays within the 128-token
// policy budget.
const std::vector<std::string>& shared_vocab();
const std::string& eos_token();
int eos_token_id();

// Splits on whitespace; every word must be a known token.
std::vector<int> tokenize(const std::string& text);

// Joins tokens with single spaces. Drops eos unless keep_eos is set.
std::string detokenize(const std::vector<int>& ids, bool keep_eos = false);

}  // namespace surglab

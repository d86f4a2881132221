#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "surglab/policy.hpp"
#include "surglab/synth_env.hpp"

namespace surglab {

struct GrpoConfig {
    int group_size = 8;
    double epsilon = 1e-4;
    double tau = 1.0;
    bool entropy_focus = true;
    double learning_rate = 0.05;
    int max_output_len = 64;
};

// G sibling rollouts for one instance. weights holds the per-token
// entropy-based factors; an empty weights list means the unweighted
// objective (all factors one), which is what finalize_group leaves behind
// when entropy focusing is off.
struct RolloutGroup {
    std::string instance_id;
    Vector context;
    std::vector<SampledSequence> outputs;
    std::vector<double> rewards;
    std::vector<double> advantages;
    std::vector<std::vector<double>> weights;
};

// (r_i - mean) / (population std + epsilon). Rejects groups smaller than 2.
std::vector<double> normalize_advantages(const std::vector<double>& rewards, double epsilon);

// -sum p ln p with 0 ln 0 = 0. Rejects vectors that are not a probability
// distribution within 1e-9.
double token_entropy(const Vector& dist);

// w_t = exp(H_t/tau) / mean_j exp(H_j/tau), computed with a max shift. The
// weights average to one over the sequence.
std::vector<double> entropy_weights(const std::vector<double>& entropies, double tau);

// G ancestral-sampling rollouts at temperature 1 with recorded per-token
// log-probs and entropies. Deterministic in (rng_seed, policy, instance).
// Rewards, advantages, and weights are left for the caller.
RolloutGroup sample_group(const PolicyParams& policy, const TaskInstance& instance,
                          const GrpoConfig& cfg, std::uint64_t rng_seed);

// Fills advantages from rewards and, when entropy focusing is on, the
// per-token weights; otherwise clears weights to select the unweighted path.
void finalize_group(RolloutGroup& group, const GrpoConfig& cfg);

// (1/G) sum_i A_i sum_t w_t log pi(o_{i,t} | o_{i,<t}, x) under the given
// parameters, with tokens, advantages, and weights held fixed.
double grpo_objective(const PolicyParams& policy, const RolloutGroup& group);

PolicyGrad grpo_gradient(const PolicyParams& policy, const RolloutGroup& group);

// One plain gradient-ascent step on the objective. Returns the updated
// parameters and the objective value before the step. Advantages and weights
// are treated as constants. Throws (naming the instance) on a non-finite
// gradient.
std::pair<PolicyParams, double> grpo_gradient_step(const PolicyParams& policy,
                                                   const RolloutGroup& group,
                                                   const GrpoConfig& cfg);

}  // namespace surglab

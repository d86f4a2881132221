#include "surglab/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "surglab/rng.hpp"

namespace surglab {

namespace {

// Per-position coefficients A_i/G * w_t for one output; empty group weights
// mean w_t = 1.
Vector position_coeffs(const RolloutGroup& group, std::size_t i) {
    const double adv_scale =
        group.advantages.at(i) / static_cast<double>(group.outputs.size());
    const auto& tokens = group.outputs[i].tokens;
    Vector coeffs(tokens.size(), adv_scale);
    if (!group.weights.empty()) {
        const auto& w = group.weights.at(i);
        if (w.size() != tokens.size())
            throw std::invalid_argument("grpo: weights length does not match output length");
        for (std::size_t t = 0; t < coeffs.size(); ++t) coeffs[t] = adv_scale * w[t];
    }
    return coeffs;
}

void check_group(const RolloutGroup& group) {
    const std::size_t g = group.outputs.size();
    if (g < 2) throw std::invalid_argument("grpo: group size must be >= 2");
    if (group.advantages.size() != g)
        throw std::invalid_argument("grpo: advantages not computed for group");
    if (!group.weights.empty() && group.weights.size() != g)
        throw std::invalid_argument("grpo: weights size does not match group");
}

}  // namespace

std::vector<double> normalize_advantages(const std::vector<double>& rewards, double epsilon) {
    const std::size_t g = rewards.size();
    if (g < 2) throw std::invalid_argument("normalize_advantages: group size must be >= 2");
    if (!(epsilon > 0.0)) throw std::invalid_argument("normalize_advantages: epsilon must be > 0");

    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(g);

    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(g);
    const double denom = std::sqrt(var) + epsilon;

    std::vector<double> adv(g);
    for (std::size_t i = 0; i < g; ++i) adv[i] = (rewards[i] - mean) / denom;
    return adv;
}

double token_entropy(const Vector& dist) {
    double sum = 0.0;
    for (double p : dist) {
        if (p < 0.0) throw std::invalid_argument("token_entropy: negative probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("token_entropy: probabilities sum to " + std::to_string(sum));
    double h = 0.0;
    for (double p : dist)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

std::vector<double> entropy_weights(const std::vector<double>& entropies, double tau) {
    if (entropies.empty()) throw std::invalid_argument("entropy_weights: empty sequence");
    if (!(tau > 0.0)) throw std::invalid_argument("entropy_weights: tau must be > 0");

    const double m = *std::max_element(entropies.begin(), entropies.end());
    const std::size_t l = entropies.size();
    std::vector<double> e(l);
    double sum = 0.0;
    for (std::size_t t = 0; t < l; ++t) {
        e[t] = std::exp((entropies[t] - m) / tau);
        sum += e[t];
    }
    const double mean = sum / static_cast<double>(l);
    for (auto& w : e) w /= mean;
    return e;
}

RolloutGroup sample_group(const PolicyParams& policy, const TaskInstance& instance,
                          const GrpoConfig& cfg, std::uint64_t rng_seed) {
    if (cfg.group_size < 2) throw std::invalid_argument("sample_group: group size must be >= 2");
    if (cfg.max_output_len < 1)
        throw std::invalid_argument("sample_group: max_output_len must be >= 1");

    RolloutGroup group;
    group.instance_id = instance.id;
    group.context = instance.context;
    group.outputs.reserve(cfg.group_size);
    Rng rng(hash_combine(rng_seed, fnv1a(instance.id)));
    const int cap = std::min(cfg.max_output_len, policy.max_output_len);
    for (int i = 0; i < cfg.group_size; ++i)
        group.outputs.push_back(sample_sequence(policy, instance.context, rng, cap));
    return group;
}

void finalize_group(RolloutGroup& group, const GrpoConfig& cfg) {
    if (group.rewards.size() != group.outputs.size())
        throw std::invalid_argument("finalize_group: rewards not filled");
    group.advantages = normalize_advantages(group.rewards, cfg.epsilon);
    group.weights.clear();
    if (cfg.entropy_focus) {
        group.weights.reserve(group.outputs.size());
        for (const auto& out : group.outputs)
            group.weights.push_back(entropy_weights(out.entropies, cfg.tau));
    }
}

double grpo_objective(const PolicyParams& policy, const RolloutGroup& group) {
    check_group(group);
    double total = 0.0;
    for (std::size_t i = 0; i < group.outputs.size(); ++i) {
        const Vector coeffs = position_coeffs(group, i);
        total += weighted_sequence_logprob(policy, group.context, group.outputs[i].tokens,
                                           coeffs, nullptr);
    }
    return total;
}

PolicyGrad grpo_gradient(const PolicyParams& policy, const RolloutGroup& group) {
    check_group(group);
    PolicyGrad grad = zero_grad_like(policy);
    for (std::size_t i = 0; i < group.outputs.size(); ++i) {
        const Vector coeffs = position_coeffs(group, i);
        weighted_sequence_logprob(policy, group.context, group.outputs[i].tokens, coeffs, &grad);
    }
    return grad;
}

std::pair<PolicyParams, double> grpo_gradient_step(const PolicyParams& policy,
                                                   const RolloutGroup& group,
                                                   const GrpoConfig& cfg) {
    check_group(group);
    double objective = 0.0;
    PolicyGrad grad = zero_grad_like(policy);
    for (std::size_t i = 0; i < group.outputs.size(); ++i) {
        const Vector coeffs = position_coeffs(group, i);
        objective += weighted_sequence_logprob(policy, group.context, group.outputs[i].tokens,
                                               coeffs, &grad);
    }
    if (!std::isfinite(objective) || !grad.all_finite())
        throw std::runtime_error("grpo_gradient_step: non-finite gradient for instance " +
                                 group.instance_id);
    return {apply_gradient(policy, grad, cfg.learning_rate, GradDirection::kAscend), objective};
}

}  // namespace surglab

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "surglab/matrix.hpp"
#include "surglab/rng.hpp"

namespace surglab {

enum class GradDirection { kAscend, kDescend };

// Parameter blocks shared by the policy and its gradients.
struct ParamBlock {
    Matrix embed;         // |V| x d token embeddings
    Matrix context_proj;  // c x d
    Matrix hidden_w;      // d x h
    Vector hidden_b;      // h
    Matrix out_w;         // h x |V|
    Vector out_b;         // |V|

    void zero();
    void axpy(double scale, const ParamBlock& other);  // this += scale * other
    bool same_shape(const ParamBlock& other) const;
    bool all_finite() const;
    std::size_t param_count() const;
};

// Small autoregressive token policy.
//
// Per step: cond = context^T * context_proj + mean(embed[prefix]),
// hid = tanh(cond * hidden_w + hidden_b), logits = hid * out_w + out_b,
// next-token distribution = softmax(logits). Generation stops at eos_id or
// max_output_len. Parameters are immutable snapshots; updates return new
// values.
struct PolicyParams {
    std::vector<std::string> vocab;
    int context_dim = 0;
    int embed_dim = 0;
    int hidden_dim = 0;
    int max_output_len = 0;
    int eos_id = -1;
    std::uint64_t init_seed = 0;
    ParamBlock w;

    int vocab_size() const { return static_cast<int>(vocab.size()); }
};

using PolicyGrad = ParamBlock;

struct TrainingExample {
    Vector context;
    std::vector<int> target_tokens;
};

struct SampledSequence {
    std::vector<int> tokens;
    std::vector<double> logprobs;   // log pi(token_t | prefix, context)
    std::vector<double> entropies;  // entropy of the full step distribution
};

// Embeddings and projections drawn from uniform(-init_scale, init_scale),
// biases zero. eos token must be present in vocab.
PolicyParams init_policy(std::vector<std::string> vocab, const std::string& eos_token,
                         int context_dim, int embed_dim, int hidden_dim,
                         int max_output_len, std::uint64_t seed, double init_scale = 0.1);

PolicyGrad zero_grad_like(const PolicyParams& policy);

// Softmax next-token distribution given context and prefix. Throws on shape
// mismatch or out-of-range token ids.
Vector forward_distribution(const PolicyParams& policy, const Vector& context,
                            const std::vector<int>& prefix);

// Sum over positions of log p(token_t | tokens_{<t}, context); 0 for empty.
double sequence_logprob(const PolicyParams& policy, const Vector& context,
                        const std::vector<int>& tokens);

// Evaluates sum_t coeffs[t] * log p(tokens[t] | prefix, context) and, when
// grad is non-null, accumulates the matching coefficient-weighted gradient.
// Coefficients are treated as constants. This single routine backs both the
// cross-entropy loss and the policy-gradient objective.
double weighted_sequence_logprob(const PolicyParams& policy, const Vector& context,
                                 const std::vector<int>& tokens, const Vector& coeffs,
                                 PolicyGrad* grad);

// Mean token-level cross-entropy over the batch plus its analytic gradient.
// Throws (naming the batch index) when the loss turns non-finite.
std::pair<double, PolicyGrad> ce_loss_grad(const PolicyParams& policy,
                                           const std::vector<TrainingExample>& batch);

double ce_loss(const PolicyParams& policy, const std::vector<TrainingExample>& batch);

PolicyParams apply_gradient(const PolicyParams& policy, const PolicyGrad& grad,
                            double learning_rate, GradDirection direction);

// Ancestral sampling at temperature 1, recording per-token log-probs and
// entropies. The eos token, when drawn, is kept as the final position.
// max_len <= 0 means the policy's own max_output_len.
SampledSequence sample_sequence(const PolicyParams& policy, const Vector& context, Rng& rng,
                                int max_len = 0);

std::vector<int> greedy_decode(const PolicyParams& policy, const Vector& context,
                               int max_len = 0);

// Flat text checkpoint: header, meta key/value lines, then one field per
// block as "name rows cols" followed by row-major decimal values. Doubles are
// printed with enough digits to round-trip exactly.
void save_checkpoint(const PolicyParams& policy, const std::string& path,
                     const std::map<std::string, std::string>& meta = {});
PolicyParams load_checkpoint(const std::string& path,
                             std::map<std::string, std::string>* meta = nullptr);

}  // namespace surglab

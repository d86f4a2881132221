#include "surglab/policy.hpp"

#include "surglab/cot_format.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace surglab {

namespace {

void check_shapes(const PolicyParams& p, const Vector& context) {
    if (static_cast<int>(context.size()) != p.context_dim)
        throw std::invalid_argument("context length " + std::to_string(context.size()) +
                                    " does not match context_dim " +
                                    std::to_string(p.context_dim));
}

void check_tokens(const PolicyParams& p, const std::vector<int>& tokens) {
    for (int t : tokens)
        if (t < 0 || t >= p.vocab_size())
            throw std::invalid_argument("token id " + std::to_string(t) + " out of range");
}

struct StepForward {
    Vector cond;    // d
    Vector hid;     // h
    Vector probs;   // |V|
};

// prefix_sum holds the running sum of prefix embeddings (length d).
StepForward step_forward(const PolicyParams& p, const Vector& context,
                         const Vector& prefix_sum, int prefix_len) {
    const int d = p.embed_dim;
    const int h = p.hidden_dim;
    const int v = p.vocab_size();

    StepForward s;
    s.cond.assign(d, 0.0);
    for (int k = 0; k < p.context_dim; ++k) {
        const double ck = context[k];
        if (ck == 0.0) continue;
        const double* row = p.w.context_proj.row(k);
        for (int j = 0; j < d; ++j) s.cond[j] += ck * row[j];
    }
    if (prefix_len > 0) {
        const double inv = 1.0 / prefix_len;
        for (int j = 0; j < d; ++j) s.cond[j] += inv * prefix_sum[j];
    }

    s.hid.assign(h, 0.0);
    for (int j = 0; j < d; ++j) {
        const double cj = s.cond[j];
        const double* row = p.w.hidden_w.row(j);
        for (int k = 0; k < h; ++k) s.hid[k] += cj * row[k];
    }
    for (int k = 0; k < h; ++k) s.hid[k] = std::tanh(s.hid[k] + p.w.hidden_b[k]);

    Vector logits(p.w.out_b);
    for (int k = 0; k < h; ++k) {
        const double hk = s.hid[k];
        const double* row = p.w.out_w.row(k);
        for (int i = 0; i < v; ++i) logits[i] += hk * row[i];
    }

    double mx = logits[0];
    for (int i = 1; i < v; ++i) mx = std::max(mx, logits[i]);
    double z = 0.0;
    s.probs.assign(v, 0.0);
    for (int i = 0; i < v; ++i) {
        s.probs[i] = std::exp(logits[i] - mx);
        z += s.probs[i];
    }
    const double inv_z = 1.0 / z;
    for (int i = 0; i < v; ++i) s.probs[i] *= inv_z;
    return s;
}

double entropy_of(const Vector& probs) {
    double h = 0.0;
    for (double p : probs)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

}  // namespace

void ParamBlock::zero() {
    std::fill(embed.a.begin(), embed.a.end(), 0.0);
    std::fill(context_proj.a.begin(), context_proj.a.end(), 0.0);
    std::fill(hidden_w.a.begin(), hidden_w.a.end(), 0.0);
    std::fill(hidden_b.begin(), hidden_b.end(), 0.0);
    std::fill(out_w.a.begin(), out_w.a.end(), 0.0);
    std::fill(out_b.begin(), out_b.end(), 0.0);
}

void ParamBlock::axpy(double scale, const ParamBlock& other) {
    auto acc = [scale](std::vector<double>& dst, const std::vector<double>& src) {
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
    };
    acc(embed.a, other.embed.a);
    acc(context_proj.a, other.context_proj.a);
    acc(hidden_w.a, other.hidden_w.a);
    acc(hidden_b, other.hidden_b);
    acc(out_w.a, other.out_w.a);
    acc(out_b, other.out_b);
}

bool ParamBlock::same_shape(const ParamBlock& o) const {
    return embed.same_shape(o.embed) && context_proj.same_shape(o.context_proj) &&
           hidden_w.same_shape(o.hidden_w) && hidden_b.size() == o.hidden_b.size() &&
           out_w.same_shape(o.out_w) && out_b.size() == o.out_b.size();
}

bool ParamBlock::all_finite() const {
    auto ok = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    return ok(embed.a) && ok(context_proj.a) && ok(hidden_w.a) && ok(hidden_b) &&
           ok(out_w.a) && ok(out_b);
}

std::size_t ParamBlock::param_count() const {
    return embed.size() + context_proj.size() + hidden_w.size() + hidden_b.size() +
           out_w.size() + out_b.size();
}

PolicyParams init_policy(std::vector<std::string> vocab, const std::string& eos_token,
                         int context_dim, int embed_dim, int hidden_dim,
                         int max_output_len, std::uint64_t seed, double init_scale) {
    if (vocab.empty() || vocab.size() > 128)
        throw std::invalid_argument("vocab size must be in [1, 128]");
    if (embed_dim <= 0 || embed_dim > 32) throw std::invalid_argument("embed_dim must be in [1, 32]");
    if (hidden_dim <= 0 || hidden_dim > 64) throw std::invalid_argument("hidden_dim must be in [1, 64]");
    if (context_dim <= 0 || max_output_len <= 0)
        throw std::invalid_argument("context_dim and max_output_len must be positive");

    PolicyParams p;
    p.vocab = std::move(vocab);
    p.context_dim = context_dim;
    p.embed_dim = embed_dim;
    p.hidden_dim = hidden_dim;
    p.max_output_len = max_output_len;
    p.init_seed = seed;

    const auto it = std::find(p.vocab.begin(), p.vocab.end(), eos_token);
    if (it == p.vocab.end()) throw std::invalid_argument("eos token not in vocab");
    p.eos_id = static_cast<int>(it - p.vocab.begin());

    const int v = p.vocab_size();
    p.w.embed = Matrix(v, embed_dim);
    p.w.context_proj = Matrix(context_dim, embed_dim);
    p.w.hidden_w = Matrix(embed_dim, hidden_dim);
    p.w.hidden_b.assign(hidden_dim, 0.0);
    p.w.out_w = Matrix(hidden_dim, v);
    p.w.out_b.assign(v, 0.0);

    Rng rng(hash_combine(seed, 0x70a1c7ULL));
    for (auto& x : p.w.embed.a) x = rng.uniform(-init_scale, init_scale);
    for (auto& x : p.w.context_proj.a) x = rng.uniform(-init_scale, init_scale);
    for (auto& x : p.w.hidden_w.a) x = rng.uniform(-init_scale, init_scale);
    for (auto& x : p.w.out_w.a) x = rng.uniform(-init_scale, init_scale);
    return p;
}

PolicyGrad zero_grad_like(const PolicyParams& policy) {
    PolicyGrad g = policy.w;
    g.zero();
    return g;
}

Vector forward_distribution(const PolicyParams& policy, const Vector& context,
                            const std::vector<int>& prefix) {
    check_shapes(policy, context);
    check_tokens(policy, prefix);
    Vector prefix_sum(policy.embed_dim, 0.0);
    for (int t : prefix) {
        const double* e = policy.w.embed.row(t);
        for (int j = 0; j < policy.embed_dim; ++j) prefix_sum[j] += e[j];
    }
    return step_forward(policy, context, prefix_sum, static_cast<int>(prefix.size())).probs;
}

double sequence_logprob(const PolicyParams& policy, const Vector& context,
                        const std::vector<int>& tokens) {
    Vector coeffs(tokens.size(), 1.0);
    return weighted_sequence_logprob(policy, context, tokens, coeffs, nullptr);
}

double weighted_sequence_logprob(const PolicyParams& policy, const Vector& context,
                                 const std::vector<int>& tokens, const Vector& coeffs,
                                 PolicyGrad* grad) {
    check_shapes(policy, context);
    check_tokens(policy, tokens);
    if (coeffs.size() != tokens.size())
        throw std::invalid_argument("coeffs length must match tokens length");

    const int d = policy.embed_dim;
    const int h = policy.hidden_dim;
    const int v = policy.vocab_size();

    double total = 0.0;
    Vector prefix_sum(d, 0.0);
    Vector dlogits(v), dhid(h), dpre(h), dcond(d);

    for (std::size_t t = 0; t < tokens.size(); ++t) {
        const int y = tokens[t];
        const double coeff = coeffs[t];
        if (coeff == 0.0) {
            // Zero-coefficient positions contribute nothing to the value or
            // the gradient; skip the forward pass but keep the prefix state.
            const double* e0 = policy.w.embed.row(y);
            for (int j = 0; j < policy.embed_dim; ++j) prefix_sum[j] += e0[j];
            continue;
        }
        const int prefix_len = static_cast<int>(t);
        const StepForward s = step_forward(policy, context, prefix_sum, prefix_len);
        total += coeff * std::log(s.probs[y]);

        if (grad != nullptr && coeff != 0.0) {
            // d log p(y) / d logits = onehot(y) - probs
            for (int i = 0; i < v; ++i) dlogits[i] = coeff * ((i == y ? 1.0 : 0.0) - s.probs[i]);

            for (int k = 0; k < h; ++k) {
                const double hk = s.hid[k];
                double* gw = grad->out_w.row(k);
                double acc = 0.0;
                const double* ow = policy.w.out_w.row(k);
                for (int i = 0; i < v; ++i) {
                    gw[i] += hk * dlogits[i];
                    acc += ow[i] * dlogits[i];
                }
                dhid[k] = acc;
            }
            for (int i = 0; i < v; ++i) grad->out_b[i] += dlogits[i];

            for (int k = 0; k < h; ++k) dpre[k] = dhid[k] * (1.0 - s.hid[k] * s.hid[k]);
            for (int k = 0; k < h; ++k) grad->hidden_b[k] += dpre[k];

            for (int j = 0; j < d; ++j) {
                const double cj = s.cond[j];
                double* gw = grad->hidden_w.row(j);
                double acc = 0.0;
                const double* hw = policy.w.hidden_w.row(j);
                for (int k = 0; k < h; ++k) {
                    gw[k] += cj * dpre[k];
                    acc += hw[k] * dpre[k];
                }
                dcond[j] = acc;
            }

            for (int k = 0; k < policy.context_dim; ++k) {
                const double ck = context[k];
                if (ck == 0.0) continue;
                double* gp = grad->context_proj.row(k);
                for (int j = 0; j < d; ++j) gp[j] += ck * dcond[j];
            }

            if (prefix_len > 0) {
                const double inv = 1.0 / prefix_len;
                for (std::size_t u = 0; u < t; ++u) {
                    double* ge = grad->embed.row(tokens[u]);
                    for (int j = 0; j < d; ++j) ge[j] += inv * dcond[j];
                }
            }
        }

        const double* e = policy.w.embed.row(y);
        for (int j = 0; j < d; ++j) prefix_sum[j] += e[j];
    }
    return total;
}

std::pair<double, PolicyGrad> ce_loss_grad(const PolicyParams& policy,
                                           const std::vector<TrainingExample>& batch) {
    if (batch.empty()) throw std::invalid_argument("ce_loss_grad: empty batch");
    std::size_t n_tokens = 0;
    for (const auto& ex : batch) n_tokens += ex.target_tokens.size();
    if (n_tokens == 0) throw std::invalid_argument("ce_loss_grad: batch has no target tokens");

    const double coeff = -1.0 / static_cast<double>(n_tokens);
    PolicyGrad grad = zero_grad_like(policy);
    double loss = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& ex = batch[b];
        Vector coeffs(ex.target_tokens.size(), coeff);
        loss += weighted_sequence_logprob(policy, ex.context, ex.target_tokens, coeffs, &grad);
        if (!std::isfinite(loss))
            throw std::runtime_error("ce_loss_grad: non-finite loss at batch index " +
                                     std::to_string(b));
    }
    return {loss, std::move(grad)};
}

double ce_loss(const PolicyParams& policy, const std::vector<TrainingExample>& batch) {
    if (batch.empty()) throw std::invalid_argument("ce_loss: empty batch");
    std::size_t n_tokens = 0;
    for (const auto& ex : batch) n_tokens += ex.target_tokens.size();
    if (n_tokens == 0) throw std::invalid_argument("ce_loss: batch has no target tokens");
    const double coeff = -1.0 / static_cast<double>(n_tokens);
    double loss = 0.0;
    for (const auto& ex : batch) {
        Vector coeffs(ex.target_tokens.size(), coeff);
        loss += weighted_sequence_logprob(policy, ex.context, ex.target_tokens, coeffs, nullptr);
    }
    return loss;
}

PolicyParams apply_gradient(const PolicyParams& policy, const PolicyGrad& grad,
                            double learning_rate, GradDirection direction) {
    if (!policy.w.same_shape(grad)) throw std::invalid_argument("gradient shape mismatch");
    PolicyParams next = policy;
    const double scale =
        direction == GradDirection::kAscend ? learning_rate : -learning_rate;
    next.w.axpy(scale, grad);
    return next;
}

SampledSequence sample_sequence(const PolicyParams& policy, const Vector& context, Rng& rng,
                                int max_len) {
    check_shapes(policy, context);
    if (max_len <= 0) max_len = policy.max_output_len;
    SampledSequence seq;
    Vector prefix_sum(policy.embed_dim, 0.0);
    for (int t = 0; t < max_len; ++t) {
        const StepForward s = step_forward(policy, context, prefix_sum, t);
        const double u = rng.uniform();
        double cum = 0.0;
        int pick = policy.vocab_size() - 1;
        for (int i = 0; i < policy.vocab_size(); ++i) {
            cum += s.probs[i];
            if (u < cum) {
                pick = i;
                break;
            }
        }
        seq.tokens.push_back(pick);
        seq.logprobs.push_back(std::log(s.probs[pick]));
        seq.entropies.push_back(entropy_of(s.probs));
        if (pick == policy.eos_id) break;
        const double* e = policy.w.embed.row(pick);
        for (int j = 0; j < policy.embed_dim; ++j) prefix_sum[j] += e[j];
    }
    return seq;
}

std::vector<int> greedy_decode(const PolicyParams& policy, const Vector& context, int max_len) {
    check_shapes(policy, context);
    if (max_len <= 0) max_len = policy.max_output_len;
    std::vector<int> tokens;
    Vector prefix_sum(policy.embed_dim, 0.0);
    for (int t = 0; t < max_len; ++t) {
        const StepForward s = step_forward(policy, context, prefix_sum, t);
        int pick = 0;
        for (int i = 1; i < policy.vocab_size(); ++i)
            if (s.probs[i] > s.probs[pick]) pick = i;
        tokens.push_back(pick);
        if (pick == policy.eos_id) break;
        const double* e = policy.w.embed.row(pick);
        for (int j = 0; j < policy.embed_dim; ++j) prefix_sum[j] += e[j];
    }
    return tokens;
}

namespace {

void write_values(std::FILE* f, const char* name, int rows, int cols,
                  const std::vector<double>& vals) {
    std::fprintf(f, "%s %d %d\n", name, rows, cols);
    std::size_t i = 0;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            std::fprintf(f, c == 0 ? "%.17g" : " %.17g", vals[i++]);
        }
        std::fprintf(f, "\n");
    }
}

std::vector<double> read_values(std::istream& in, const std::string& expect_name, int& rows,
                                int& cols) {
    std::string name;
    if (!(in >> name >> rows >> cols) || name != expect_name)
        throw std::runtime_error("checkpoint: expected field " + expect_name);
    std::vector<double> vals(static_cast<std::size_t>(rows) * cols);
    for (auto& v : vals)
        if (!(in >> v)) throw std::runtime_error("checkpoint: truncated field " + expect_name);
    return vals;
}

}  // namespace

void save_checkpoint(const PolicyParams& policy, const std::string& path,
                     const std::map<std::string, std::string>& meta) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    std::fprintf(f, "toy_policy_checkpoint v1\n");
    for (const auto& [k, v] : meta) std::fprintf(f, "meta %s %s\n", k.c_str(), v.c_str());
    std::fprintf(f, "dims context %d embed %d hidden %d max_len %d eos %d seed %llu\n",
                 policy.context_dim, policy.embed_dim, policy.hidden_dim,
                 policy.max_output_len, policy.eos_id,
                 static_cast<unsigned long long>(policy.init_seed));
    std::fprintf(f, "vocab %d\n", policy.vocab_size());
    for (const auto& tok : policy.vocab) std::fprintf(f, "%s\n", tok.c_str());
    write_values(f, "embed", policy.w.embed.rows, policy.w.embed.cols, policy.w.embed.a);
    write_values(f, "context_proj", policy.w.context_proj.rows, policy.w.context_proj.cols,
                 policy.w.context_proj.a);
    write_values(f, "hidden_w", policy.w.hidden_w.rows, policy.w.hidden_w.cols,
                 policy.w.hidden_w.a);
    write_values(f, "hidden_b", 1, static_cast<int>(policy.w.hidden_b.size()), policy.w.hidden_b);
    write_values(f, "out_w", policy.w.out_w.rows, policy.w.out_w.cols, policy.w.out_w.a);
    write_values(f, "out_b", 1, static_cast<int>(policy.w.out_b.size()), policy.w.out_b);
    std::fclose(f);
}

PolicyParams load_checkpoint(const std::string& path,
                             std::map<std::string, std::string>* meta) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "toy_policy_checkpoint v1")
        throw std::runtime_error("checkpoint: bad header in " + path);

    PolicyParams p;
    while (true) {
        const auto pos = in.tellg();
        if (!std::getline(in, line)) throw std::runtime_error("checkpoint: truncated " + path);
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "meta") {
            std::string key;
            ls >> key;
            std::string value;
            std::getline(ls, value);
            if (meta != nullptr) (*meta)[key] = trim(value);
        } else if (tag == "dims") {
            std::string k;
            unsigned long long seed = 0;
            ls >> k >> p.context_dim >> k >> p.embed_dim >> k >> p.hidden_dim >> k >>
                p.max_output_len >> k >> p.eos_id >> k >> seed;
            p.init_seed = seed;
        } else if (tag == "vocab") {
            int n = 0;
            ls >> n;
            p.vocab.resize(n);
            for (auto& tok : p.vocab)
                if (!std::getline(in, tok)) throw std::runtime_error("checkpoint: truncated vocab");
            break;
        } else {
            in.seekg(pos);
            throw std::runtime_error("checkpoint: unexpected line: " + line);
        }
    }

    int r = 0, c = 0;
    p.w.embed.a = read_values(in, "embed", r, c);
    p.w.embed.rows = r;
    p.w.embed.cols = c;
    p.w.context_proj.a = read_values(in, "context_proj", r, c);
    p.w.context_proj.rows = r;
    p.w.context_proj.cols = c;
    p.w.hidden_w.a = read_values(in, "hidden_w", r, c);
    p.w.hidden_w.rows = r;
    p.w.hidden_w.cols = c;
    p.w.hidden_b = read_values(in, "hidden_b", r, c);
    p.w.out_w.a = read_values(in, "out_w", r, c);
    p.w.out_w.rows = r;
    p.w.out_w.cols = c;
    p.w.out_b = read_values(in, "out_b", r, c);

    if (p.w.embed.rows != static_cast<int>(p.vocab.size()))
        throw std::runtime_error("checkpoint: embed rows do not match vocab size");
    return p;
}

}  // namespace surglab

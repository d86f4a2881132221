#pragma once

#include <string>
#include <string_view>

#include "surglab/cot_format.hpp"

namespace surglab {

// Three-component outcome reward:
//   r(o) = lambda_f * format + lambda_a * answer + lambda_s_eff * structure
// where the structure weight is active only for steps below
// structure_cutoff_step and zero afterwards.
struct RewardConfig {
    double lambda_f = 1.0;
    double lambda_a = 1.0;
    double lambda_s = 1.0;
    long long structure_cutoff_step = 150;

    double effective_lambda_s(long long step) const {
        return step < structure_cutoff_step ? lambda_s : 0.0;
    }
};

struct RewardBreakdown {
    bool format_ind = false;
    bool answer_ind = false;
    bool structure_ind = false;
    double total = 0.0;
};

// Canonical form for answer matching: trim, ASCII case-fold, collapse internal
// whitespace runs to single spaces.
std::string normalize_answer(std::string_view s);

bool format_indicator(const CotTrace& trace);

// True iff an answer segment was recoverable and its canonical form equals the
// canonical form of the label.
bool answer_indicator(const CotTrace& trace, std::string_view label);

RewardBreakdown composite_reward(const CotTrace& trace, std::string_view label,
                                 const RewardConfig& cfg, long long step);

}  // namespace surglab

#include "surglab/reward.hpp"

#include <cctype>

namespace surglab {

std::string normalize_answer(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char raw : s) {
        const unsigned char c = static_cast<unsigned char>(raw);
        if (std::isspace(c)) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

bool format_indicator(const CotTrace& trace) { return trace.well_formed; }

bool answer_indicator(const CotTrace& trace, std::string_view label) {
    if (!trace.answer_segment) return false;
    return normalize_answer(*trace.answer_segment) == normalize_answer(label);
}

RewardBreakdown composite_reward(const CotTrace& trace, std::string_view label,
                                 const RewardConfig& cfg, long long step) {
    RewardBreakdown out;
    out.format_ind = format_indicator(trace);
    out.answer_ind = answer_indicator(trace, label);
    out.structure_ind = trace.has_level1;
    out.total = cfg.lambda_f * (out.format_ind ? 1.0 : 0.0) +
                cfg.lambda_a * (out.answer_ind ? 1.0 : 0.0) +
                cfg.effective_lambda_s(step) * (out.structure_ind ? 1.0 : 0.0);
    return out;
}

}  // namespace surglab

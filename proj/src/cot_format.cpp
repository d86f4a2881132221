#include "surglab/cot_format.hpp"

#include <cctype>

namespace surglab {

namespace {

struct TagScan {
    std::size_t count = 0;
    std::size_t first = std::string_view::npos;
};

TagScan scan_tag(std::string_view raw, std::string_view tag) {
    TagScan out;
    std::size_t pos = 0;
    while ((pos = raw.find(tag, pos)) != std::string_view::npos) {
        if (out.count == 0) out.first = pos;
        ++out.count;
        pos += tag.size();
    }
    return out;
}

// Content strictly between open and close, or nullopt when not recoverable.
std::optional<std::string> segment_between(std::string_view raw, const TagScan& open,
                                           const TagScan& close, std::size_t open_len) {
    if (open.count != 1 || close.count != 1) return std::nullopt;
    if (open.first + open_len > close.first) return std::nullopt;
    const std::size_t begin = open.first + open_len;
    return std::string(raw.substr(begin, close.first - begin));
}

bool contains(const std::optional<std::string>& s, std::string_view needle) {
    return s && s->find(needle) != std::string::npos;
}

}  // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

CotTrace parse_output(std::string_view raw) {
    constexpr std::string_view kThinkOpen = "<think>";
    constexpr std::string_view kThinkClose = "</think>";
    constexpr std::string_view kAnswerOpen = "<answer>";
    constexpr std::string_view kAnswerClose = "</answer>";

    CotTrace trace;
    trace.raw.assign(raw);

    // "<think>" never occurs inside "</think>", so the four scans are independent.
    const TagScan think_open = scan_tag(raw, kThinkOpen);
    const TagScan think_close = scan_tag(raw, kThinkClose);
    const TagScan answer_open = scan_tag(raw, kAnswerOpen);
    const TagScan answer_close = scan_tag(raw, kAnswerClose);

    trace.think_segment = segment_between(raw, think_open, think_close, kThinkOpen.size());
    trace.answer_segment = segment_between(raw, answer_open, answer_close, kAnswerOpen.size());

    trace.has_level1 = contains(trace.think_segment, "Level 1");
    trace.has_level2 = contains(trace.think_segment, "Level 2");
    trace.has_level3 = contains(trace.think_segment, "Level 3");

    const bool no_duplicates = think_open.count == 1 && think_close.count == 1 &&
                               answer_open.count == 1 && answer_close.count == 1;
    const bool ordered = no_duplicates &&
                         think_close.first + kThinkClose.size() <= answer_open.first;
    trace.well_formed =
        trace.think_segment.has_value() && trace.answer_segment.has_value() && ordered;
    return trace;
}

std::optional<std::string> extract_answer(std::string_view raw) {
    const CotTrace trace = parse_output(raw);
    if (!trace.answer_segment) return std::nullopt;
    return trim(*trace.answer_segment);
}

}  // namespace surglab

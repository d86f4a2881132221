#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace surglab {

// Parsed hierarchical chain-of-thought output.
//
// The expected shape is
//   <think> Level 1 ... Level 2 ... Level 3 ... </think> <answer> ... </answer>
// A segment is recoverable only when its open and close tags each appear
// exactly once and in order. well_formed additionally requires that the think
// block ends before the answer block starts and that no tag appears twice
// anywhere in the raw text. Text outside the two blocks is ignored.
struct CotTrace {
    std::string raw;
    std::optional<std::string> think_segment;
    std::optional<std::string> answer_segment;
    bool has_level1 = false;
    bool has_level2 = false;
    bool has_level3 = false;
    bool well_formed = false;
};

// Total over arbitrary byte sequences; never throws.
CotTrace parse_output(std::string_view raw);

// Trimmed answer segment if recoverable, otherwise nullopt. Trims leading and
// trailing whitespace only; no case folding.
std::optional<std::string> extract_answer(std::string_view raw);

std::string trim(std::string_view s);

}  // namespace surglab

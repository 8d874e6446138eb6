#pragma once

#include <string>
#include <string_view>

namespace solar {

// Normalizes a raw answer string into the form used for all equality checks:
// trimmed, lowercased, trailing '.'/',' and surrounding '$' stripped,
// whitespace collapsed, and plain numerics re-rendered (no leading '+', no
// thousands separators, no trailing zero fraction). Idempotent.
std::string canonicalize_answer(std::string_view raw);

// Pulls the final answer out of a model response, in priority order:
//   1. content after the last "#### " marker (to end of line),
//   2. content after the last case-insensitive "final answer:" (to end of line),
//   3. the last numeric token anywhere in the text,
//   4. empty string (treated as incorrect downstream).
// The result is always canonicalized.
std::string extract_final_answer(std::string_view text);

}  // namespace solar

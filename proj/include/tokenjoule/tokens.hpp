// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>
#include <vector>

namespace tokenjoule {

/// Local token counting, used only when an endpoint response omits usage
/// fields. `tokenizer_spec` selects one of the bundled counters:
///   "whitespace"  - ceil(word_count * 4/3), the documented approximation
///   "mini-vocab"  - greedy longest-match over a small bundled vocabulary
/// Unknown specs raise ConfigError.
long count_tokens(std::string_view text, std::string_view tokenizer_spec = "whitespace");

/// Names of the available tokenizer specs.
std::vector<std::string_view> tokenizer_specs();

}  // namespace tokenjoule

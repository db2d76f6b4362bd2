// SPDX-License-Identifier: Apache-2.0

#include "tokenjoule/tokens.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <string>

#include "tokenjoule/errors.hpp"

namespace tokenjoule {

namespace {

long count_whitespace(std::string_view text) {
    long words = 0;
    bool in_word = false;
    for (unsigned char ch : text) {
        const bool space = std::isspace(ch) != 0;
        if (!space && !in_word) ++words;
        in_word = !space;
    }
    // ceil(words * 4 / 3): the documented words-to-tokens approximation.
    return (words * 4 + 2) / 3;
}

// Small bundled subword vocabulary for the greedy longest-match counter.
// Entries are lowercase; matching is case-insensitive and any unmatched
// byte counts as one token.
constexpr std::array<std::string_view, 96> kMiniVocab = {
    "the",   "of",    "and",   "to",   "in",    "is",    "that",  "for",   "it",    "with",
    "as",    "was",   "on",    "are",  "this",  "be",    "by",    "an",    "at",    "from",
    "or",    "have",  "not",   "but",  "what",  "all",   "can",   "how",   "when",  "which",
    "their", "will",  "would", "were", "about", "there", "into",  "more",  "other", "some",
    "them",  "than",  "then",  "its",  "also",  "these", "two",   "may",   "one",   "time",
    "ing",   "tion",  "ment",  "ness", "able",  "ible",  "ance",  "ence",  "ould",  "ight",
    "ous",   "ive",   "ed",    "er",   "est",   "ly",    "al",    "ic",    "ity",   "ate",
    "ize",   "ify",   "pre",   "pro",  "con",   "com",   "dis",   "over",  "under", "out",
    "up",    "ex",    "re",    "un",   "en",    "de",    "explain", "describe", "write",
    "story", "plan",  "guide", "model", "data", "work",  "test",
};

long count_mini_vocab(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    long tokens = 0;
    std::size_t pos = 0;
    while (pos < lower.size()) {
        if (std::isspace(static_cast<unsigned char>(lower[pos]))) {
            ++pos;  // whitespace separates tokens but costs nothing itself
            continue;
        }
        std::size_t best = 0;
        for (std::string_view entry : kMiniVocab) {
            if (entry.size() > best && lower.compare(pos, entry.size(), entry) == 0)
                best = entry.size();
        }
        pos += best > 0 ? best : 1;
        ++tokens;
    }
    return tokens;
}

}  // namespace

long count_tokens(std::string_view text, std::string_view tokenizer_spec) {
    if (text.empty()) return 0;
    if (tokenizer_spec == "whitespace") return count_whitespace(text);
    if (tokenizer_spec == "mini-vocab") return count_mini_vocab(text);
    throw ConfigError("unknown tokenizer spec: " + std::string(tokenizer_spec));
}

std::vector<std::string_view> tokenizer_specs() {
    return {"whitespace", "mini-vocab"};
}

}  // namespace tokenjoule

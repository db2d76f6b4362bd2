// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tokenjoule {

enum class Category { technical, creative, educational, business };
enum class LengthClass { kShort, kLong };

constexpr int kShortTargetTokens = 2048;
constexpr int kLongTargetTokens = 8192;
constexpr int kDefaultSuiteSize = 100;

std::string_view to_string(Category c);
std::string_view to_string(LengthClass lc);
Category category_from_string(std::string_view s);
LengthClass length_class_from_string(std::string_view s);

/// One benchmark prompt. `target_tokens` is the output-length budget passed
/// to the endpoint as its max-token parameter (2048 short, 8192 long).
struct PromptSpec {
    int id = 0;
    Category category = Category::technical;
    LengthClass length_class = LengthClass::kShort;
    int target_tokens = kShortTargetTokens;
    std::string text;
};

/// The fixed, ordered benchmark workload. Immutable after construction.
struct BenchmarkSuite {
    std::string version;
    std::uint64_t generation_seed = 0;
    std::vector<PromptSpec> prompts;
    std::string checksum;  // sha256 of the canonical prompt serialization
};

/// Prompt templates and injectable topics, one list per category.
struct TemplateConfig {
    std::map<Category, std::vector<std::string>> templates;
    std::map<Category, std::vector<std::string>> topics;
};

/// The shipped template corpus (four task categories, topic injection).
TemplateConfig default_templates();

/// Replaces every "{topic}" placeholder in `tpl` with `topic`.
std::string render_template(std::string_view tpl, std::string_view topic);

/// Deterministically generates `count` prompts: categories round-robin,
/// length classes interleaved so the short/long split is balanced, template
/// and topic choice driven by `seed`.
BenchmarkSuite generate_suite(const TemplateConfig& config, std::uint64_t seed, int count);

/// Canonical serialization of the prompt list: sorted-key JSON records,
/// UTF-8, one per line. The suite checksum is the SHA-256 of these bytes.
std::string canonical_prompt_lines(std::span<const PromptSpec> prompts);

/// Suite file: one header record (version, generation_seed, checksum)
/// followed by one prompt record per line.
std::string serialize_suite(const BenchmarkSuite& suite);
void save_suite(const BenchmarkSuite& suite, const std::filesystem::path& path);

/// Parses, validates invariants and re-verifies the checksum.
BenchmarkSuite load_suite(std::istream& in);
BenchmarkSuite load_suite_file(const std::filesystem::path& path);

/// Checks all suite invariants (contiguous unique ids, category/length
/// coverage, token budgets, non-empty text). Throws ParseError on violation.
void validate_suite(const BenchmarkSuite& suite);

}  // namespace tokenjoule

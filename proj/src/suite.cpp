// SPDX-License-Identifier: Apache-2.0

#include "tokenjoule/suite.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tokenjoule/errors.hpp"
#include "tokenjoule/hash.hpp"

namespace tokenjoule {

namespace {

constexpr const char* kSuiteFormatVersion = "1";

const std::vector<Category> kCategories = {Category::technical, Category::creative,
                                           Category::educational, Category::business};

nlohmann::json prompt_to_json(const PromptSpec& p) {
    // nlohmann objects serialize with sorted keys, which makes dump()
    // canonical for checksum purposes.
    return nlohmann::json{{"id", p.id},
                          {"category", std::string(to_string(p.category))},
                          {"length_class", std::string(to_string(p.length_class))},
                          {"target_tokens", p.target_tokens},
                          {"text", p.text}};
}

PromptSpec prompt_from_json(const nlohmann::json& j, std::size_t line) {
    try {
        PromptSpec p;
        p.id = j.at("id").get<int>();
        p.category = category_from_string(j.at("category").get<std::string>());
        p.length_class = length_class_from_string(j.at("length_class").get<std::string>());
        p.target_tokens = j.at("target_tokens").get<int>();
        p.text = j.at("text").get<std::string>();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad prompt record: ") + e.what(), line);
    }
}

}  // namespace

std::string_view to_string(Category c) {
    switch (c) {
        case Category::technical: return "technical";
        case Category::creative: return "creative";
        case Category::educational: return "educational";
        case Category::business: return "business";
    }
    throw DomainError("unknown category");
}

std::string_view to_string(LengthClass lc) {
    return lc == LengthClass::kShort ? "short" : "long";
}

Category category_from_string(std::string_view s) {
    for (Category c : kCategories) {
        if (to_string(c) == s) return c;
    }
    throw ParseError("unknown category: " + std::string(s));
}

LengthClass length_class_from_string(std::string_view s) {
    if (s == "short") return LengthClass::kShort;
    if (s == "long") return LengthClass::kLong;
    throw ParseError("unknown length class: " + std::string(s));
}

TemplateConfig default_templates() {
    TemplateConfig cfg;
    cfg.templates[Category::technical] = {
        "Explain how {topic} works and when you would use it.",
        "Describe the main design trade-offs involved in {topic}.",
        "Write a detailed troubleshooting guide for problems with {topic}.",
        "Compare the common approaches to {topic} and discuss their limitations.",
    };
    cfg.topics[Category::technical] = {
        "distributed caching",   "load balancing strategies", "database indexing",
        "memory management",     "network congestion control", "container orchestration",
        "public key cryptography", "stream processing pipelines",
    };
    cfg.templates[Category::creative] = {
        "Write a short story about {topic}.",
        "Compose a poem inspired by {topic}.",
        "Describe a film scene centered on {topic}.",
        "Invent a dialogue between two strangers discussing {topic}.",
    };
    cfg.topics[Category::creative] = {
        "a lighthouse keeper's last night", "a city that never sleeps",
        "an abandoned observatory",         "a letter that arrived fifty years late",
        "the sound of a distant train",     "a garden growing on a rooftop",
        "two rivers meeting",               "the first snowfall of the year",
    };
    cfg.templates[Category::educational] = {
        "Provide a thorough explanation of {topic}",
        "Summarize the key concepts of {topic} for a beginner.",
        "Create a study guide covering {topic}.",
        "Explain {topic} using three concrete examples.",
    };
    cfg.topics[Category::educational] = {
        "advanced mathematics",    "photosynthesis",          "the water cycle",
        "classical mechanics",     "the French Revolution",   "plate tectonics",
        "supply and demand",       "cellular respiration",
    };
    cfg.templates[Category::business] = {
        "Draft a business plan for {topic}.",
        "Write a market analysis of {topic}.",
        "Outline a go-to-market strategy for {topic}.",
        "Prepare an executive summary about {topic}.",
    };
    cfg.topics[Category::business] = {
        "a regional food delivery service", "an online language school",
        "a bicycle repair franchise",       "a renewable energy startup",
        "a second-hand bookstore chain",    "a telehealth platform",
        "a co-working space provider",      "an artisan coffee roastery",
    };
    return cfg;
}

std::string render_template(std::string_view tpl, std::string_view topic) {
    static constexpr std::string_view kPlaceholder = "{topic}";
    std::string out;
    out.reserve(tpl.size() + topic.size());
    std::size_t pos = 0;
    while (pos < tpl.size()) {
        const std::size_t hit = tpl.find(kPlaceholder, pos);
        if (hit == std::string_view::npos) {
            out.append(tpl.substr(pos));
            break;
        }
        out.append(tpl.substr(pos, hit - pos));
        out.append(topic);
        pos = hit + kPlaceholder.size();
    }
    return out;
}

BenchmarkSuite generate_suite(const TemplateConfig& config, std::uint64_t seed, int count) {
    if (count < 4) throw ConfigError("suite size must be at least 4");
    for (Category c : kCategories) {
        const auto t = config.templates.find(c);
        if (t == config.templates.end() || t->second.empty())
            throw ConfigError("no templates for category " + std::string(to_string(c)));
        const auto topics = config.topics.find(c);
        if (topics == config.topics.end() || topics->second.empty())
            throw ConfigError("no topics for category " + std::string(to_string(c)));
    }

    std::mt19937_64 rng(seed);
    BenchmarkSuite suite;
    suite.version = kSuiteFormatVersion;
    suite.generation_seed = seed;
    suite.prompts.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        PromptSpec p;
        p.id = i;
        p.category = kCategories[static_cast<std::size_t>(i % 4)];
        // Checkerboard over (category slot, group of four): keeps the
        // short/long split exactly balanced for multiples of 8 and covers
        // all eight category x length combinations from count >= 8.
        const bool short_form = ((i % 4) + (i / 4)) % 2 == 0;
        p.length_class = short_form ? LengthClass::kShort : LengthClass::kLong;
        p.target_tokens = short_form ? kShortTargetTokens : kLongTargetTokens;
        const auto& templates = config.templates.at(p.category);
        const auto& topics = config.topics.at(p.category);
        const auto& tpl = templates[rng() % templates.size()];
        const auto& topic = topics[rng() % topics.size()];
        p.text = render_template(tpl, topic);
        suite.prompts.push_back(std::move(p));
    }
    suite.checksum = sha256_hex(canonical_prompt_lines(suite.prompts));
    validate_suite(suite);
    return suite;
}

std::string canonical_prompt_lines(std::span<const PromptSpec> prompts) {
    std::string out;
    for (const PromptSpec& p : prompts) {
        out += prompt_to_json(p).dump();
        out += '\n';
    }
    return out;
}

std::string serialize_suite(const BenchmarkSuite& suite) {
    nlohmann::json header{{"version", suite.version},
                          {"generation_seed", suite.generation_seed},
                          {"checksum", suite.checksum}};
    return header.dump() + "\n" + canonical_prompt_lines(suite.prompts);
}

void save_suite(const BenchmarkSuite& suite, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write suite file: " + path.string());
    out << serialize_suite(suite);
}

BenchmarkSuite load_suite(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError("empty suite file", 1);
    ++lineno;

    BenchmarkSuite suite;
    try {
        const auto header = nlohmann::json::parse(line);
        suite.version = header.at("version").get<std::string>();
        suite.generation_seed = header.at("generation_seed").get<std::uint64_t>();
        suite.checksum = header.at("checksum").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad suite header: ") + e.what(), lineno);
    }

    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad prompt record: ") + e.what(), lineno);
        }
        suite.prompts.push_back(prompt_from_json(j, lineno));
    }

    validate_suite(suite);
    const std::string recomputed = sha256_hex(canonical_prompt_lines(suite.prompts));
    if (recomputed != suite.checksum)
        throw IntegrityError("suite checksum mismatch: stored " + suite.checksum + ", computed " +
                             recomputed);
    return suite;
}

BenchmarkSuite load_suite_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read suite file: " + path.string());
    return load_suite(in);
}

void validate_suite(const BenchmarkSuite& suite) {
    if (suite.prompts.empty()) throw ParseError("suite has no prompts");
    std::set<int> ids;
    std::set<Category> categories;
    std::set<LengthClass> lengths;
    for (std::size_t i = 0; i < suite.prompts.size(); ++i) {
        const PromptSpec& p = suite.prompts[i];
        if (!ids.insert(p.id).second)
            throw ParseError("duplicate prompt id " + std::to_string(p.id));
        if (p.text.empty()) throw ParseError("empty prompt text for id " + std::to_string(p.id));
        const int expected =
            p.length_class == LengthClass::kShort ? kShortTargetTokens : kLongTargetTokens;
        if (p.target_tokens != expected)
            throw ParseError("prompt " + std::to_string(p.id) + " has target_tokens " +
                             std::to_string(p.target_tokens) + ", expected " +
                             std::to_string(expected));
        categories.insert(p.category);
        lengths.insert(p.length_class);
    }
    // ids must form the contiguous range 0..N-1 in order.
    for (std::size_t i = 0; i < suite.prompts.size(); ++i) {
        if (suite.prompts[i].id != static_cast<int>(i))
            throw ParseError("prompt ids are not a contiguous ordered 0..N-1 range");
    }
    if (categories.size() != 4) throw ParseError("suite does not cover all four categories");
    if (lengths.size() != 2) throw ParseError("suite does not cover both length classes");
}

}  // namespace tokenjoule

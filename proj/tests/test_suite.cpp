// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "tokenjoule/errors.hpp"
#include "tokenjoule/suite.hpp"

#include "helpers.hpp"

using namespace tokenjoule;

TEST_CASE("generate_suite is deterministic for fixed arguments") {
    const BenchmarkSuite a = generate_suite(default_templates(), 7, 100);
    const BenchmarkSuite b = generate_suite(default_templates(), 7, 100);
    CHECK(a.checksum == b.checksum);
    REQUIRE(a.prompts.size() == b.prompts.size());
    for (std::size_t i = 0; i < a.prompts.size(); ++i) CHECK(a.prompts[i].text == b.prompts[i].text);

    const BenchmarkSuite c = generate_suite(default_templates(), 8, 100);
    CHECK(a.checksum != c.checksum);
}

TEST_CASE("template instantiation: educational example") {
    CHECK(render_template("Provide a thorough explanation of {topic}", "advanced mathematics") ==
          "Provide a thorough explanation of advanced mathematics");

    const TemplateConfig config = default_templates();
    const auto& edu_templates = config.templates.at(Category::educational);
    CHECK(std::find(edu_templates.begin(), edu_templates.end(),
                    "Provide a thorough explanation of {topic}") != edu_templates.end());
    const auto& edu_topics = config.topics.at(Category::educational);
    CHECK(std::find(edu_topics.begin(), edu_topics.end(), "advanced mathematics") !=
          edu_topics.end());
}

TEST_CASE("default suite: 25 prompts per category, 50 per length class") {
    const BenchmarkSuite suite = generate_suite(default_templates(), 7, 100);
    std::map<Category, int> by_category;
    std::map<LengthClass, int> by_length;
    for (const PromptSpec& p : suite.prompts) {
        ++by_category[p.category];
        ++by_length[p.length_class];
    }
    CHECK(by_category[Category::technical] == 25);
    CHECK(by_category[Category::creative] == 25);
    CHECK(by_category[Category::educational] == 25);
    CHECK(by_category[Category::business] == 25);
    CHECK(by_length[LengthClass::kShort] == 50);
    CHECK(by_length[LengthClass::kLong] == 50);
}

TEST_CASE("token budgets follow the length class") {
    const BenchmarkSuite suite = generate_suite(default_templates(), 11, 64);
    for (const PromptSpec& p : suite.prompts) {
        CHECK(p.target_tokens ==
              (p.length_class == LengthClass::kShort ? kShortTargetTokens : kLongTargetTokens));
        CHECK_FALSE(p.text.empty());
    }
}

TEST_CASE("coverage: every suite with count >= 8 holds all 8 category x length combos") {
    for (int count : {8, 9, 12, 25, 100}) {
        for (std::uint64_t seed : {1ull, 42ull, 999ull}) {
            const BenchmarkSuite suite = generate_suite(default_templates(), seed, count);
            std::set<std::pair<Category, LengthClass>> combos;
            for (const PromptSpec& p : suite.prompts) combos.insert({p.category, p.length_class});
            CHECK(combos.size() == 8);
        }
    }
}

TEST_CASE("round trip: serialize then load yields an identical suite") {
    const BenchmarkSuite suite = generate_suite(default_templates(), 7, 100);
    std::istringstream in(serialize_suite(suite));
    const BenchmarkSuite loaded = load_suite(in);
    CHECK(loaded.checksum == suite.checksum);
    CHECK(loaded.generation_seed == suite.generation_seed);
    CHECK(loaded.version == suite.version);
    REQUIRE(loaded.prompts.size() == suite.prompts.size());
    for (std::size_t i = 0; i < suite.prompts.size(); ++i) {
        CHECK(loaded.prompts[i].id == suite.prompts[i].id);
        CHECK(loaded.prompts[i].text == suite.prompts[i].text);
        CHECK(loaded.prompts[i].category == suite.prompts[i].category);
        CHECK(loaded.prompts[i].length_class == suite.prompts[i].length_class);
    }
    // Serialization itself is stable.
    CHECK(serialize_suite(loaded) == serialize_suite(suite));
}

TEST_CASE("tampered prompt text fails the checksum") {
    const BenchmarkSuite suite = generate_suite(default_templates(), 7, 16);
    std::string file = serialize_suite(suite);
    const std::size_t pos = file.find("explanation");
    if (pos != std::string::npos) file.replace(pos, 11, "explanatioX");
    else file.replace(file.rfind("\"text\":\"") + 8, 1, "X");
    std::istringstream in(file);
    CHECK_THROWS_AS(load_suite(in), IntegrityError);
}

TEST_CASE("duplicate prompt id is a parse error") {
    BenchmarkSuite suite = generate_suite(default_templates(), 7, 16);
    suite.prompts[3].id = 2;
    suite.checksum = "irrelevant";
    std::istringstream in(serialize_suite(suite));
    CHECK_THROWS_AS(load_suite(in), ParseError);
}

TEST_CASE("malformed record reports its line number") {
    const BenchmarkSuite suite = generate_suite(default_templates(), 7, 8);
    std::string file = serialize_suite(suite);
    // Corrupt the record on line 4 (header + prompts 0..1 precede it).
    std::size_t line_start = 0;
    for (int i = 0; i < 3; ++i) line_start = file.find('\n', line_start) + 1;
    file.insert(line_start, "{not json");
    std::istringstream in(file);
    try {
        load_suite(in);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 4);
    }
}

TEST_CASE("generation preconditions") {
    CHECK_THROWS_AS(generate_suite(default_templates(), 7, 3), ConfigError);
    TemplateConfig no_creative = default_templates();
    no_creative.templates[Category::creative].clear();
    CHECK_THROWS_AS(generate_suite(no_creative, 7, 100), ConfigError);
}

TEST_CASE("suite file round trip through the filesystem") {
    tjtest::TempDir tmp;
    const BenchmarkSuite suite = generate_suite(default_templates(), 3, 24);
    const auto path = tmp / "suite.ndjson";
    save_suite(suite, path);
    const BenchmarkSuite loaded = load_suite_file(path);
    CHECK(loaded.checksum == suite.checksum);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <json.hpp>

#include "codestylo/features.hpp"

using namespace stylo;

TEST_CASE("canonical layout has 140 named features") {
    const auto& names = canonical_feature_names();
    REQUIRE(names.size() == 140);
    CHECK(names[0] == "avgFunctionLength");
    CHECK(names[26] == "whiteSpaceRatio");
    CHECK(names[27] == "keywordsDensity");
    int kw = 0, tf = 0, ad = 0;
    for (const auto& n : names) {
        if (n.size() > 8 && n.substr(n.size() - 8) == "_Density" && n != "keywordsDensity")
            ++kw;
        if (n.rfind("nttf_", 0) == 0) ++tf;
        if (n.rfind("ntad_", 0) == 0) ++ad;
    }
    CHECK(kw == 28);
    CHECK(tf == 42);
    CHECK(ad == 42);
}

TEST_CASE("extracted vectors match the frozen reference corpus") {
    std::ifstream in(std::string(DATA_DIR) + "/golden_features.json");
    REQUIRE(in.good());
    nlohmann::json golden = nlohmann::json::parse(in);
    auto names = golden.at("feature_names").get<std::vector<std::string>>();
    REQUIRE(names == canonical_feature_names());
    const auto& cases = golden.at("cases");
    REQUIRE(cases.size() == 25);
    for (const auto& c : cases) {
        INFO("case ", c.at("name").get<std::string>());
        FeatureVector fv = extract(c.at("source").get<std::string>());
        CHECK(fv.sloc == c.at("sloc").get<int>());
        auto want = c.at("values").get<std::vector<double>>();
        REQUIRE(fv.values.size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i) {
            INFO("feature ", names[i]);
            CHECK(std::fabs(fv.values[i] - want[i]) <= 1e-9);
        }
    }
}

TEST_CASE("calibration points on the reference snippets") {
    std::ifstream in(std::string(DATA_DIR) + "/golden_features.json");
    nlohmann::json golden = nlohmann::json::parse(in);
    std::map<std::string, std::string> sources;
    for (const auto& c : golden.at("cases"))
        sources[c.at("name").get<std::string>()] = c.at("source").get<std::string>();

    FeatureVector solve = extract(sources.at("g04_solve"));
    CHECK(solve.at("def_Density") == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(solve.at("ntad_Assign") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(solve.at("maxDecisionTokens") == 0.0);
    CHECK(std::fabs(solve.at("maintainabilityIndex") - 81.856) <= 0.5);

    FeatureVector helpers = extract(sources.at("g02_helpers_ai"));
    CHECK(helpers.at("avgParams") == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("extraction is deterministic") {
    std::string src = "def f(a, b=1):\n    return a + b\n\nprint(f(2))\n";
    FeatureVector a = extract(src);
    FeatureVector b = extract(src);
    CHECK(a.values == b.values);
    CHECK(a.sloc == b.sloc);
    CHECK(a.taxonomy_hash == b.taxonomy_hash);
}

TEST_CASE("per-sloc densities are invariant under self-concatenation") {
    std::string unit = "x = input()\ny = len(x) * 2\nif y:\n    print(y)\n";
    FeatureVector once = extract(unit);
    FeatureVector twice = extract(unit + unit);
    for (const char* name :
         {"numStatementsDensity", "numAssignmentStmtDensity",
          "keywordsDensity", "if_Density", "numFunctionCallsDensity",
          "numInputStmtsDensity", "numLiteralsDensity", "avgLineLength",
          "emptyLinesDensity"}) {
        INFO("feature ", name);
        CHECK(once.at(name) == doctest::Approx(twice.at(name)).epsilon(1e-12));
    }
}

TEST_CASE("halstead counts are internally consistent") {
    auto toks = tokenize("total = a + b * 2\nprint(total // 3, total % 7)\n");
    HalsteadCounts h = halstead(toks);
    CHECK(h.distinct_operators <= h.total_operators);
    CHECK(h.distinct_operands <= h.total_operands);
    CHECK(h.distinct_operators > 0);
    CHECK(h.volume() > 0.0);
}

TEST_CASE("maintainability index bounds and degenerate inputs") {
    CHECK(maintainability_index(0.0, 5, 10) == 100.0);
    CHECK(maintainability_index(100.0, 1, 0) == 100.0);
    double mi = maintainability_index(1e9, 500, 100000);
    CHECK(mi >= 0.0);
    CHECK(mi <= 100.0);
    CHECK(mi == 0.0);  // deeply negative raw score clamps
}

TEST_CASE("cyclomatic complexity counts decision points") {
    CHECK(cyclomatic_complexity(parse("x = 1\n")) == 1);
    CHECK(cyclomatic_complexity(parse("if a and b:\n    pass\n")) == 3);
    CHECK(cyclomatic_complexity(parse(
              "for i in range(3):\n    while i:\n        i -= 1\n")) == 3);
    CHECK(cyclomatic_complexity(parse("y = [i for i in x if i if i > 1]\n")) == 3);
}

TEST_CASE("ngram features refuse unsupported sizes") {
    auto toks = tokenize("x = 1\n");
    CHECK_THROWS_AS(ngram_features(toks, 4), Error);
    CHECK_THROWS_AS(ngram_features(toks, 1), Error);
}

TEST_CASE("ngram features abstract identifiers and literals") {
    auto a = ngram_features(tokenize("x = 1\n"), 2);
    auto b = ngram_features(tokenize("abc = 42\n"), 2);
    CHECK(a == b);  // identical shape once names and values are abstracted
    CHECK(!a.empty());
}

TEST_CASE("at() rejects unknown feature names") {
    FeatureVector fv = extract("x = 1\n");
    CHECK(fv.at("avgLineLength") > 0.0);
    CHECK_THROWS_AS(fv.at("noSuchFeature"), Error);
}

#include <doctest.h>

#include <random>

#include "docforge/metrics.hpp"
#include "docforge/reward.hpp"

using namespace docforge;
using reward::global_regularization;
using reward::KieSchema;
using reward::parse_kie_schema;
using reward::reward_formula;
using reward::reward_kie;
using reward::reward_table;
using reward::reward_text;
using reward::RewardReport;
using reward::tokenize_latex;
using reward::validate_json_strict;
using reward::validate_latex;
using reward::validate_tag_closure;

namespace {

double penalty_sum(const RewardReport& r) {
    double total = 0.0;
    for (const auto& [name, value] : r.penalties) total += value;
    return total;
}

bool gate(const RewardReport& r) {
    for (const auto& [name, ok] : r.validity) {
        if (!ok) return false;
    }
    return true;
}

std::string random_bytes(std::mt19937& rng, std::size_t max_len) {
    std::string s;
    const std::size_t n = rng() % (max_len + 1);
    for (std::size_t i = 0; i < n; ++i) s += static_cast<char>(rng() % 256);
    return s;
}

const char* kSchemaText = R"({"name":"string","total":"number"})";

}  // namespace

TEST_CASE("tag closure validation") {
    CHECK(validate_tag_closure("<table><tr><td>x</td></tr></table>").ok);

    const auto unclosed = validate_tag_closure("<table><tr><td>x</td></table>");
    CHECK_FALSE(unclosed.ok);
    REQUIRE(unclosed.errors.size() == 1);
    CHECK(unclosed.errors[0].kind == reward::TagClosureIssue::Kind::UnclosedTag);
    CHECK(unclosed.errors[0].tag == "tr");

    const auto stray = validate_tag_closure("</td>x");
    CHECK_FALSE(stray.ok);
    REQUIRE(stray.errors.size() == 1);
    CHECK(stray.errors[0].kind == reward::TagClosureIssue::Kind::CloseWithoutOpen);
    CHECK(stray.errors[0].tag == "td");

    // non-table markup is ignored by this check
    CHECK(validate_tag_closure("<b>free text").ok);
    // self-closing cells count as balanced
    CHECK(validate_tag_closure("<table><tr><td/></tr></table>").ok);
}

TEST_CASE("latex validation") {
    CHECK(validate_latex("\\frac{a}{b}").ok);

    const auto unbalanced = validate_latex("\\frac{a}{b");
    CHECK_FALSE(unbalanced.ok);
    REQUIRE(unbalanced.errors.size() == 1);
    CHECK(unbalanced.errors[0].kind == reward::LatexIssue::Kind::UnbalancedBrace);

    const auto mismatch = validate_latex("\\begin{matrix}a\\end{pmatrix}");
    CHECK_FALSE(mismatch.ok);
    REQUIRE(mismatch.errors.size() == 1);
    CHECK(mismatch.errors[0].kind == reward::LatexIssue::Kind::EnvMismatch);

    CHECK(validate_latex("\\left( \\frac{x}{2} \\right)").ok);
    CHECK_FALSE(validate_latex("\\left( x").ok);
    CHECK_FALSE(validate_latex("x \\right)").ok);
    CHECK(validate_latex("\\{ not a group \\}").ok);
    CHECK(validate_latex("\\begin{matrix}a\\\\b\\end{matrix}").ok);
}

TEST_CASE("strict json validation") {
    const KieSchema schema = parse_kie_schema(R"({"a":"number"})");

    CHECK(validate_json_strict(R"({"a":1})", schema).ok);

    const auto dup = validate_json_strict(R"({"a":1,"a":2})", schema);
    CHECK_FALSE(dup.ok);
    REQUIRE(dup.duplicates.size() == 1);
    CHECK(dup.duplicates[0] == "a");

    const auto cover = validate_json_strict(R"({"b":1})", schema);
    CHECK_FALSE(cover.ok);
    REQUIRE(cover.missing == std::vector<std::string>{"a"});
    REQUIRE(cover.extra == std::vector<std::string>{"b"});

    const auto broken = validate_json_strict("{oops", schema);
    CHECK_FALSE(broken.ok);
    CHECK(broken.parse_error.has_value());

    const auto wrong = validate_json_strict(R"({"a":"one"})", schema);
    CHECK_FALSE(wrong.ok);
    CHECK(wrong.wrong_type == std::vector<std::string>{"a"});
}

TEST_CASE("strict json validation reports nested paths") {
    const KieSchema schema =
        parse_kie_schema(R"({"vendor":{"name":"string"},"items":[{"qty":"number"}]})");
    const auto report = validate_json_strict(
        R"({"vendor":{"name":"A","name":"B"},"items":[{"qty":1},{"qty":"x","note":1}]})",
        schema);
    CHECK_FALSE(report.ok);
    CHECK(report.duplicates == std::vector<std::string>{"vendor.name"});
    CHECK(report.wrong_type == std::vector<std::string>{"items.1.qty"});
    CHECK(report.extra == std::vector<std::string>{"items.1.note"});
    CHECK(report.missing.empty());
}

TEST_CASE("optional schema fields do not count as missing") {
    const KieSchema schema = parse_kie_schema(R"({"a":"string","b?":"string"})");
    const auto report = validate_json_strict(R"({"a":"x"})", schema);
    CHECK(report.ok);
}

TEST_CASE("schema parsing rejects malformed declarations") {
    CHECK_THROWS_AS(parse_kie_schema("{}"), reward::SchemaParseError);
    CHECK_THROWS_AS(parse_kie_schema(R"({"a":"bool"})"), reward::SchemaParseError);
    CHECK_THROWS_AS(parse_kie_schema(R"({"a":["string","number"]})"),
                    reward::SchemaParseError);
    CHECK_THROWS_AS(parse_kie_schema("[1]"), reward::SchemaParseError);
}

TEST_CASE("latex tokenizer canonicalizes whitespace and commands") {
    CHECK(tokenize_latex("a+b") == tokenize_latex("a + b"));
    const auto tokens = tokenize_latex("\\frac{a}{b}");
    CHECK(tokens == std::vector<std::string>{"\\frac", "{", "a", "}", "{", "b", "}"});
    CHECK(tokenize_latex("\\{x\\}") == std::vector<std::string>{"\\{", "x", "\\}"});
}

TEST_CASE("text reward") {
    const auto perfect = reward_text("same text", "same text");
    CHECK(perfect.reward == 1.0);
    CHECK(perfect.accuracy_term == 1.0);

    const auto close = reward_text("kitten", "sitting");
    CHECK(close.accuracy_term == doctest::Approx(1.0 - 3.0 / 7.0).epsilon(1e-12));
    CHECK(close.reward == doctest::Approx(close.accuracy_term).epsilon(1e-12));

    std::string noisy = "sitting ";
    for (int i = 0; i < 10; ++i) noisy += "x y ";
    const auto degenerate = reward_text(noisy, "sitting");
    CHECK(degenerate.reward < perfect.reward);
    CHECK(degenerate.penalties.at("repetition") > 0.0);
}

TEST_CASE("text reward is monotone in edit distance at equal repetition") {
    std::mt19937 rng(41);
    const std::string gold = "the quick brown fox jumps";
    for (int trial = 0; trial < 100; ++trial) {
        std::string p1 = gold;
        std::string p2 = gold;
        for (std::size_t i = 0; i < p1.size(); ++i) {
            if (rng() % 8 == 0) p1[i] = 'z';
        }
        for (std::size_t i = 0; i < p2.size(); ++i) {
            if (rng() % 4 == 0) p2[i] = 'z';
        }
        if (metrics::repetition_ratio(p1) != metrics::repetition_ratio(p2)) continue;
        const double d1 = metrics::normalized_edit_distance(p1, gold);
        const double d2 = metrics::normalized_edit_distance(p2, gold);
        const auto r1 = reward_text(p1, gold);
        const auto r2 = reward_text(p2, gold);
        if (d2 >= d1) {
            CHECK(r2.reward <= r1.reward + 1e-12);
        } else {
            CHECK(r1.reward <= r2.reward + 1e-12);
        }
    }
}

TEST_CASE("formula reward") {
    CHECK(reward_formula("\\frac{a}{b}", "\\frac{a}{b}").reward == 1.0);

    const auto gated = reward_formula("\\frac{a}{b", "\\frac{a}{b}");
    CHECK(gated.reward == 0.0);
    CHECK_FALSE(gated.validity.at("latex_structure"));
    CHECK(gated.penalties.at("malformed") == doctest::Approx(0.2));

    CHECK(reward_formula("a+b", "a + b").reward == 1.0);
}

TEST_CASE("table reward") {
    const char* gold = "<table><tr><td>b</td></tr></table>";
    CHECK(reward_table(gold, gold).reward == 1.0);

    const auto gated = reward_table("<table><tr><td>b</td></tr>", gold);
    CHECK(gated.reward == 0.0);
    CHECK_FALSE(gated.validity.at("tag_closure"));

    const auto near = reward_table("<table><tr><td>c</td></tr></table>", gold);
    CHECK(near.reward == doctest::Approx(0.75).epsilon(1e-9));

    CHECK_THROWS_AS(reward_table(gold, "<table><tr>"), metrics::GoldParseError);
}

TEST_CASE("kie reward") {
    const KieSchema schema = parse_kie_schema(kSchemaText);
    const char* gold = R"({"name":"A","total":5})";

    CHECK(reward_kie(gold, gold, schema).reward == 1.0);

    const auto half =
        reward_kie(R"({"name":"A","total":6})", gold, schema);
    CHECK(half.accuracy_term == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(half.reward == doctest::Approx(0.5).epsilon(1e-12));

    const auto dup = reward_kie(R"({"name":"A","total":5,"total":5})", gold, schema);
    CHECK(dup.accuracy_term == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dup.reward == doctest::Approx(0.95).epsilon(1e-12));

    const auto broken = reward_kie("{nope", gold, schema);
    CHECK(broken.reward == 0.0);
    CHECK_FALSE(broken.validity.at("json_parse"));

    CHECK_THROWS_AS(reward_kie(gold, R"({"name":"A"})", schema),
                    reward::GoldInvalidError);
}

TEST_CASE("kie penalties are capped") {
    // 12 required fields, all missing: raw penalty 0.6 caps at 0.5
    std::string schema_text = "{";
    std::string gold_text = "{";
    for (int i = 0; i < 12; ++i) {
        if (i) {
            schema_text += ",";
            gold_text += ",";
        }
        schema_text += "\"f" + std::to_string(i) + "\":\"string\"";
        gold_text += "\"f" + std::to_string(i) + "\":\"v\"";
    }
    schema_text += "}";
    gold_text += "}";
    const KieSchema schema = parse_kie_schema(schema_text);
    const auto report = reward_kie("{}", gold_text, schema);
    CHECK(penalty_sum(report) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(report.reward == 0.0);
}

TEST_CASE("global regularization values") {
    const auto clean = global_regularization("short text", true);
    CHECK(clean.at("repetition") == 0.0);
    CHECK(clean.at("malformed") == 0.0);

    const auto repetitive = global_regularization("abcabcabc", true);
    CHECK(repetitive.at("repetition") == doctest::Approx(0.7).epsilon(1e-12));

    const auto malformed = global_regularization("x", false);
    CHECK(malformed.at("malformed") == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("rewards stay in range on arbitrary bytes") {
    std::mt19937 rng(47);
    const KieSchema schema = parse_kie_schema(kSchemaText);
    const char* table_gold = "<table><tr><td>b</td></tr></table>";
    const char* kie_gold = R"({"name":"A","total":5})";

    for (int trial = 0; trial < 2000; ++trial) {
        const std::string pred = random_bytes(rng, 48);
        const std::string gold = random_bytes(rng, 48);

        for (const RewardReport& r :
             {reward_text(pred, gold), reward_formula(pred, gold),
              reward_table(pred, table_gold), reward_kie(pred, kie_gold, schema)}) {
            CHECK(r.reward >= 0.0);
            CHECK(r.reward <= 1.0);
            // the report's own invariant: reward recomputes from its parts
            const double expect =
                std::clamp(r.accuracy_term * (gate(r) ? 1.0 : 0.0) - penalty_sum(r),
                           0.0, 1.0);
            CHECK(r.reward == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("validity failure gates any accuracy") {
    // identical content, broken structure: the gate wins
    const auto formula = reward_formula("{a+b", "{a+b");
    CHECK(formula.accuracy_term == 1.0);
    CHECK(formula.reward == 0.0);

    const char* gold = "<table><tr><td>x</td></tr></table>";
    const auto table = reward_table("<table><tr><td>x</td></tr>", gold);
    CHECK(table.reward == 0.0);
}

#include <doctest.h>

#include <random>

#include "docforge/doc_model.hpp"

using namespace docforge;

namespace {

Page minimal_page() {
    Page p;
    p.page_id = "p1";
    p.width = 100;
    p.height = 100;
    p.regions.push_back({"r1", {0, 0, 10, 10}, Category::Text, std::nullopt, std::nullopt});
    return p;
}

}  // namespace

TEST_CASE("well-formed minimal set has no violations") {
    PageSet ps;
    ps.pages.push_back(minimal_page());
    CHECK(validate_page_set(ps).empty());
}

TEST_CASE("degenerate bbox is flagged") {
    PageSet ps;
    ps.pages.push_back(minimal_page());
    ps.pages[0].regions[0].bbox = {10, 10, 10, 40};  // x0 == x1
    const auto violations = validate_page_set(ps);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].kind == ViolationKind::DegenerateBox);
    CHECK(violations[0].region_id == "r1");
}

TEST_CASE("duplicate region ids are flagged once per duplicate") {
    PageSet ps;
    ps.pages.push_back(minimal_page());
    ps.pages[0].regions.push_back(
        {"r1", {20, 20, 30, 30}, Category::Text, std::nullopt, std::nullopt});
    const auto violations = validate_page_set(ps);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].kind == ViolationKind::DuplicateRegionId);
}

TEST_CASE("page-level violations") {
    PageSet ps;
    ps.pages.push_back(minimal_page());
    ps.pages.push_back(minimal_page());  // duplicate page_id
    ps.pages[1].width = 0;               // bad size
    const auto violations = validate_page_set(ps);
    REQUIRE(violations.size() == 2);
    CHECK(violations[0].kind == ViolationKind::DuplicatePageId);
    CHECK(violations[1].kind == ViolationKind::BadPageSize);
}

TEST_CASE("out-of-bounds and negative order") {
    PageSet ps;
    ps.pages.push_back(minimal_page());
    ps.pages[0].regions[0].bbox = {90, 90, 120, 95};
    ps.pages[0].regions[0].order = -1;
    const auto violations = validate_page_set(ps);
    REQUIRE(violations.size() == 2);
    CHECK(violations[0].kind == ViolationKind::OutOfBounds);
    CHECK(violations[1].kind == ViolationKind::NegativeOrder);
}

TEST_CASE("validation is pure and idempotent") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        PageSet ps;
        const int pages = 1 + static_cast<int>(rng() % 3);
        for (int p = 0; p < pages; ++p) {
            Page page;
            page.page_id = "p" + std::to_string(static_cast<int>(rng() % 4));
            page.width = static_cast<int>(rng() % 120);
            page.height = static_cast<int>(rng() % 120);
            const int regions = static_cast<int>(rng() % 5);
            for (int r = 0; r < regions; ++r) {
                Region reg;
                reg.id = "r" + std::to_string(static_cast<int>(rng() % 4));
                reg.bbox = {static_cast<int>(rng() % 100), static_cast<int>(rng() % 100),
                            static_cast<int>(rng() % 100), static_cast<int>(rng() % 100)};
                if (rng() % 2) reg.order = static_cast<int>(rng() % 5) - 1;
                page.regions.push_back(reg);
            }
            ps.pages.push_back(page);
        }
        const auto first = validate_page_set(ps);
        const auto second = validate_page_set(ps);
        REQUIRE(first.size() == second.size());
        for (std::size_t i = 0; i < first.size(); ++i) {
            CHECK(first[i].kind == second[i].kind);
            CHECK(first[i].page_id == second[i].page_id);
            CHECK(first[i].region_id == second[i].region_id);
        }
    }
}

TEST_CASE("category and format mappings") {
    CHECK(format_for_category(Category::Table) == ContentFormat::HtmlTable);
    CHECK(format_for_category(Category::Formula) == ContentFormat::LatexFormula);
    CHECK(format_for_category(Category::Text) == ContentFormat::Markdown);
    CHECK(format_for_category(Category::Title) == ContentFormat::Markdown);
    CHECK(format_for_category(Category::Figure) == ContentFormat::Plain);

    for (Category c : {Category::Text, Category::Title, Category::Table,
                       Category::Formula, Category::Figure, Category::Code,
                       Category::Seal, Category::Other}) {
        const auto back = category_from_string(to_string(c));
        REQUIRE(back.has_value());
        CHECK(*back == c);
    }
    CHECK_FALSE(category_from_string("paragraph").has_value());
}

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace docforge {

// Region categories produced by the layout detector. Unknown manifest
// categories are mapped to Other at parse time.
enum class Category {
    Text,
    Title,
    Table,
    Formula,
    Figure,
    Code,
    Seal,
    Other,
};

std::string_view to_string(Category c);
std::optional<Category> category_from_string(std::string_view s);

// Output format of a recognized region, fixed per category.
enum class ContentFormat {
    Plain,
    Markdown,
    LatexFormula,
    HtmlTable,
    Json,
};

std::string_view to_string(ContentFormat f);
std::optional<ContentFormat> content_format_from_string(std::string_view s);

ContentFormat format_for_category(Category c);

// Pixel box, origin top-left, y grows downward. Half-open semantics are not
// assumed; validity only requires x0 < x1 and y0 < y1.
struct BBox {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    bool degenerate() const { return x0 >= x1 || y0 >= y1; }

    friend bool operator==(const BBox&, const BBox&) = default;
};

struct Region {
    std::string id;
    BBox bbox;
    Category category = Category::Other;
    std::optional<std::string> image_ref;
    std::optional<int> order;  // detector-provided reading rank

    friend bool operator==(const Region&, const Region&) = default;
};

struct Page {
    std::string page_id;
    int width = 0;
    int height = 0;
    std::vector<Region> regions;

    friend bool operator==(const Page&, const Page&) = default;
};

struct PageSet {
    std::vector<Page> pages;
    std::optional<std::string> source;

    friend bool operator==(const PageSet&, const PageSet&) = default;
};

enum class ViolationKind {
    DegenerateBox,
    OutOfBounds,
    DuplicateRegionId,
    DuplicatePageId,
    BadPageSize,
    NegativeOrder,
};

std::string_view to_string(ViolationKind k);

struct Violation {
    std::string page_id;
    std::string region_id;  // empty for page-level violations
    ViolationKind kind = ViolationKind::DegenerateBox;
    std::string detail;
};

// Pure invariant check; violations are data, not failures.
std::vector<Violation> validate_page_set(const PageSet& ps);

struct RecognitionStatus {
    enum class Kind { Ok, BackendError, Skipped };

    Kind kind = Kind::Ok;
    std::string detail;

    static RecognitionStatus ok() { return {Kind::Ok, {}}; }
    static RecognitionStatus backend_error(std::string message) {
        return {Kind::BackendError, std::move(message)};
    }
    static RecognitionStatus skipped(std::string reason) {
        return {Kind::Skipped, std::move(reason)};
    }

    bool is_ok() const { return kind == Kind::Ok; }

    friend bool operator==(const RecognitionStatus&, const RecognitionStatus&) = default;
};

std::string_view to_string(RecognitionStatus::Kind k);
std::optional<RecognitionStatus::Kind> status_kind_from_string(std::string_view s);

// Raw backend output for one region, the unit of assembly.
struct RecognizedRegion {
    std::string region_id;
    Category category = Category::Other;
    std::string content;
    ContentFormat format = ContentFormat::Plain;
    RecognitionStatus status;

    friend bool operator==(const RecognizedRegion&, const RecognizedRegion&) = default;
};

}  // namespace docforge

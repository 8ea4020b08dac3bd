#include "docforge/doc_model.hpp"

#include <unordered_set>

namespace docforge {

std::string_view to_string(Category c) {
    switch (c) {
        case Category::Text: return "text";
        case Category::Title: return "title";
        case Category::Table: return "table";
        case Category::Formula: return "formula";
        case Category::Figure: return "figure";
        case Category::Code: return "code";
        case Category::Seal: return "seal";
        case Category::Other: return "other";
    }
    return "other";
}

std::optional<Category> category_from_string(std::string_view s) {
    if (s == "text") return Category::Text;
    if (s == "title") return Category::Title;
    if (s == "table") return Category::Table;
    if (s == "formula") return Category::Formula;
    if (s == "figure") return Category::Figure;
    if (s == "code") return Category::Code;
    if (s == "seal") return Category::Seal;
    if (s == "other") return Category::Other;
    return std::nullopt;
}

std::string_view to_string(ContentFormat f) {
    switch (f) {
        case ContentFormat::Plain: return "plain";
        case ContentFormat::Markdown: return "markdown";
        case ContentFormat::LatexFormula: return "latex_formula";
        case ContentFormat::HtmlTable: return "html_table";
        case ContentFormat::Json: return "json";
    }
    return "plain";
}

std::optional<ContentFormat> content_format_from_string(std::string_view s) {
    if (s == "plain") return ContentFormat::Plain;
    if (s == "markdown") return ContentFormat::Markdown;
    if (s == "latex_formula") return ContentFormat::LatexFormula;
    if (s == "html_table") return ContentFormat::HtmlTable;
    if (s == "json") return ContentFormat::Json;
    return std::nullopt;
}

ContentFormat format_for_category(Category c) {
    switch (c) {
        case Category::Table: return ContentFormat::HtmlTable;
        case Category::Formula: return ContentFormat::LatexFormula;
        case Category::Text:
        case Category::Title: return ContentFormat::Markdown;
        case Category::Figure:
        case Category::Code:
        case Category::Seal:
        case Category::Other: return ContentFormat::Plain;
    }
    return ContentFormat::Plain;
}

std::string_view to_string(ViolationKind k) {
    switch (k) {
        case ViolationKind::DegenerateBox: return "degenerate_box";
        case ViolationKind::OutOfBounds: return "out_of_bounds";
        case ViolationKind::DuplicateRegionId: return "duplicate_region_id";
        case ViolationKind::DuplicatePageId: return "duplicate_page_id";
        case ViolationKind::BadPageSize: return "bad_page_size";
        case ViolationKind::NegativeOrder: return "negative_order";
    }
    return "degenerate_box";
}

std::string_view to_string(RecognitionStatus::Kind k) {
    switch (k) {
        case RecognitionStatus::Kind::Ok: return "ok";
        case RecognitionStatus::Kind::BackendError: return "backend_error";
        case RecognitionStatus::Kind::Skipped: return "skipped";
    }
    return "ok";
}

std::optional<RecognitionStatus::Kind> status_kind_from_string(std::string_view s) {
    if (s == "ok") return RecognitionStatus::Kind::Ok;
    if (s == "backend_error") return RecognitionStatus::Kind::BackendError;
    if (s == "skipped") return RecognitionStatus::Kind::Skipped;
    return std::nullopt;
}

std::vector<Violation> validate_page_set(const PageSet& ps) {
    std::vector<Violation> out;
    std::unordered_set<std::string> page_ids;

    for (const Page& page : ps.pages) {
        if (!page_ids.insert(page.page_id).second) {
            out.push_back({page.page_id, "", ViolationKind::DuplicatePageId,
                           "page_id repeated in set"});
        }
        if (page.width <= 0 || page.height <= 0) {
            out.push_back({page.page_id, "", ViolationKind::BadPageSize,
                           "width and height must be positive"});
        }

        std::unordered_set<std::string> region_ids;
        for (const Region& r : page.regions) {
            if (!region_ids.insert(r.id).second) {
                out.push_back({page.page_id, r.id, ViolationKind::DuplicateRegionId,
                               "region id repeated in page"});
            }
            if (r.bbox.degenerate()) {
                out.push_back({page.page_id, r.id, ViolationKind::DegenerateBox,
                               "bbox requires x0 < x1 and y0 < y1"});
            } else if (page.width > 0 && page.height > 0 &&
                       (r.bbox.x0 < 0 || r.bbox.y0 < 0 || r.bbox.x1 > page.width ||
                        r.bbox.y1 > page.height)) {
                out.push_back({page.page_id, r.id, ViolationKind::OutOfBounds,
                               "bbox exceeds page bounds"});
            }
            if (r.order && *r.order < 0) {
                out.push_back({page.page_id, r.id, ViolationKind::NegativeOrder,
                               "order must be non-negative"});
            }
        }
    }
    return out;
}

}  // namespace docforge

#include "docforge/layout.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include <nlohmann/json.hpp>

#include "docforge/edit_distance.hpp"

namespace docforge::layout {

using nlohmann::json;

namespace {

std::string violation_summary(const std::vector<Violation>& vs) {
    std::string s = "manifest failed validation:";
    for (const Violation& v : vs) {
        s += " [" + std::string(to_string(v.kind)) + " page=" + v.page_id;
        if (!v.region_id.empty()) s += " region=" + v.region_id;
        s += "]";
    }
    return s;
}

void require_keys(const json& obj, const std::string& path,
                  std::initializer_list<std::string_view> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            throw ManifestSchemaError(path + "." + it.key(), "no such key");
        }
    }
}

const json& require_field(const json& obj, const std::string& path, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ManifestSchemaError(path + "." + key, "required field");
    }
    return *it;
}

int require_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ManifestSchemaError(path, "integer");
    return v.get<int>();
}

std::string require_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw ManifestSchemaError(path, "string");
    return v.get<std::string>();
}

Region parse_region(const json& jr, const std::string& path,
                    std::vector<std::string>& warnings) {
    if (!jr.is_object()) throw ManifestSchemaError(path, "object");
    require_keys(jr, path, {"id", "bbox", "category", "image", "order"});

    Region r;
    r.id = require_string(require_field(jr, path, "id"), path + ".id");

    const json& jb = require_field(jr, path, "bbox");
    if (!jb.is_array() || jb.size() != 4) {
        throw ManifestSchemaError(path + ".bbox", "array of 4 integers");
    }
    r.bbox.x0 = require_int(jb[0], path + ".bbox[0]");
    r.bbox.y0 = require_int(jb[1], path + ".bbox[1]");
    r.bbox.x1 = require_int(jb[2], path + ".bbox[2]");
    r.bbox.y1 = require_int(jb[3], path + ".bbox[3]");

    const std::string cat =
        require_string(require_field(jr, path, "category"), path + ".category");
    if (auto c = category_from_string(cat)) {
        r.category = *c;
    } else {
        r.category = Category::Other;
        warnings.push_back("unknown category \"" + cat + "\" at " + path +
                           " mapped to other");
    }

    if (auto it = jr.find("image"); it != jr.end()) {
        r.image_ref = require_string(*it, path + ".image");
    }
    if (auto it = jr.find("order"); it != jr.end()) {
        r.order = require_int(*it, path + ".order");
    }
    return r;
}

}  // namespace

ManifestValidationError::ManifestValidationError(std::vector<Violation> violations)
    : ManifestError(violation_summary(violations)), violations_(std::move(violations)) {}

ManifestParseResult parse_manifest(std::string_view text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ManifestSyntaxError(e.what(), e.byte);
    }

    if (!root.is_object()) throw ManifestSchemaError("$", "object");
    require_keys(root, "$", {"pages", "source"});

    ManifestParseResult result;
    if (auto it = root.find("source"); it != root.end()) {
        result.page_set.source = require_string(*it, "$.source");
    }

    const json& jpages = require_field(root, "$", "pages");
    if (!jpages.is_array()) throw ManifestSchemaError("$.pages", "array");

    for (std::size_t pi = 0; pi < jpages.size(); ++pi) {
        const std::string ppath = "pages[" + std::to_string(pi) + "]";
        const json& jp = jpages[pi];
        if (!jp.is_object()) throw ManifestSchemaError(ppath, "object");
        require_keys(jp, ppath, {"page_id", "width", "height", "regions"});

        Page page;
        page.page_id = require_string(require_field(jp, ppath, "page_id"), ppath + ".page_id");
        page.width = require_int(require_field(jp, ppath, "width"), ppath + ".width");
        page.height = require_int(require_field(jp, ppath, "height"), ppath + ".height");

        const json& jregions = require_field(jp, ppath, "regions");
        if (!jregions.is_array()) throw ManifestSchemaError(ppath + ".regions", "array");
        for (std::size_t ri = 0; ri < jregions.size(); ++ri) {
            page.regions.push_back(parse_region(
                jregions[ri], ppath + ".regions[" + std::to_string(ri) + "]",
                result.warnings));
        }
        result.page_set.pages.push_back(std::move(page));
    }

    auto violations = validate_page_set(result.page_set);
    if (!violations.empty()) throw ManifestValidationError(std::move(violations));
    return result;
}

std::string serialize_manifest(const PageSet& ps) {
    json root = json::object();
    if (ps.source) root["source"] = *ps.source;
    json jpages = json::array();
    for (const Page& page : ps.pages) {
        json jp = json::object();
        jp["page_id"] = page.page_id;
        jp["width"] = page.width;
        jp["height"] = page.height;
        json jregions = json::array();
        for (const Region& r : page.regions) {
            json jr = json::object();
            jr["id"] = r.id;
            jr["bbox"] = {r.bbox.x0, r.bbox.y0, r.bbox.x1, r.bbox.y1};
            jr["category"] = to_string(r.category);
            if (r.image_ref) jr["image"] = *r.image_ref;
            if (r.order) jr["order"] = *r.order;
            jregions.push_back(std::move(jr));
        }
        jp["regions"] = std::move(jregions);
        jpages.push_back(std::move(jp));
    }
    root["pages"] = std::move(jpages);
    return root.dump();
}

namespace {

struct GapResult {
    bool found = false;
    int position = 0;  // start of the widest empty band
};

// Widest empty band of at least `threshold` pixels strictly inside the
// projection of the boxes onto one axis. `lo`/`hi` select the interval.
GapResult widest_gap(const std::vector<const Region*>& boxes, int threshold,
                     int (*lo)(const Region&), int (*hi)(const Region&)) {
    std::vector<std::pair<int, int>> spans;
    spans.reserve(boxes.size());
    for (const Region* r : boxes) spans.emplace_back(lo(*r), hi(*r));
    std::sort(spans.begin(), spans.end());

    GapResult best;
    int best_width = 0;
    int covered_end = spans.front().second;
    for (std::size_t i = 1; i < spans.size(); ++i) {
        const int gap = spans[i].first - covered_end;
        if (gap >= threshold && gap > best_width) {
            best_width = gap;
            best.found = true;
            best.position = covered_end;
        }
        covered_end = std::max(covered_end, spans[i].second);
    }
    return best;
}

int y_lo(const Region& r) { return r.bbox.y0; }
int y_hi(const Region& r) { return r.bbox.y1; }
int x_lo(const Region& r) { return r.bbox.x0; }
int x_hi(const Region& r) { return r.bbox.x1; }

void xy_cut(std::vector<const Region*> boxes, int threshold,
            std::vector<std::string>& out) {
    if (boxes.empty()) return;
    if (boxes.size() == 1) {
        out.push_back(boxes.front()->id);
        return;
    }

    // Horizontal band first: top group, then bottom group.
    if (GapResult g = widest_gap(boxes, threshold, y_lo, y_hi); g.found) {
        std::vector<const Region*> top, bottom;
        for (const Region* r : boxes) {
            (r->bbox.y1 <= g.position ? top : bottom).push_back(r);
        }
        xy_cut(std::move(top), threshold, out);
        xy_cut(std::move(bottom), threshold, out);
        return;
    }

    // Then a vertical band: left group, then right group.
    if (GapResult g = widest_gap(boxes, threshold, x_lo, x_hi); g.found) {
        std::vector<const Region*> left, right;
        for (const Region* r : boxes) {
            (r->bbox.x1 <= g.position ? left : right).push_back(r);
        }
        xy_cut(std::move(left), threshold, out);
        xy_cut(std::move(right), threshold, out);
        return;
    }

    // No usable band on either axis.
    std::sort(boxes.begin(), boxes.end(), [](const Region* a, const Region* b) {
        return std::tie(a->bbox.y0, a->bbox.x0, a->id) <
               std::tie(b->bbox.y0, b->bbox.x0, b->id);
    });
    for (const Region* r : boxes) out.push_back(r->id);
}

}  // namespace

ReadingOrder infer_reading_order(const Page& page, int gap_threshold) {
    ReadingOrder order;
    order.page_id = page.page_id;

    const bool all_ranked =
        !page.regions.empty() &&
        std::all_of(page.regions.begin(), page.regions.end(),
                    [](const Region& r) { return r.order.has_value(); });

    if (all_ranked) {
        std::vector<const Region*> sorted;
        sorted.reserve(page.regions.size());
        for (const Region& r : page.regions) sorted.push_back(&r);
        std::sort(sorted.begin(), sorted.end(), [](const Region* a, const Region* b) {
            return std::tie(*a->order, a->id) < std::tie(*b->order, b->id);
        });
        for (const Region* r : sorted) order.ordered_region_ids.push_back(r->id);
        return order;
    }

    std::vector<const Region*> boxes;
    boxes.reserve(page.regions.size());
    for (const Region& r : page.regions) boxes.push_back(&r);
    xy_cut(std::move(boxes), gap_threshold, order.ordered_region_ids);
    return order;
}

double reading_order_edit(const ReadingOrder& pred, const ReadingOrder& gold) {
    std::set<std::string> pred_ids(pred.ordered_region_ids.begin(),
                                   pred.ordered_region_ids.end());
    std::set<std::string> gold_ids(gold.ordered_region_ids.begin(),
                                   gold.ordered_region_ids.end());
    if (pred_ids != gold_ids) {
        throw IdMismatchError("reading orders refer to different region id sets");
    }

    const std::size_t longest =
        std::max(pred.ordered_region_ids.size(), gold.ordered_region_ids.size());
    if (longest == 0) return 0.0;
    const std::size_t dist =
        sequence_edit_distance(pred.ordered_region_ids, gold.ordered_region_ids);
    return static_cast<double>(dist) / static_cast<double>(longest);
}

}  // namespace docforge::layout

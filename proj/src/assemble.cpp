#include "docforge/assemble.hpp"

#include <algorithm>
#include <map>

#include <nlohmann/json.hpp>

namespace docforge::assemble {

using nlohmann::json;

AssembledDocument merge(const Page& page, const layout::ReadingOrder& order,
                        const std::vector<RecognizedRegion>& recognized) {
    std::map<std::string, const RecognizedRegion*> by_id;
    for (const RecognizedRegion& r : recognized) by_id[r.region_id] = &r;
    if (by_id.size() != recognized.size() ||
        by_id.size() != order.ordered_region_ids.size()) {
        throw CoverageMismatchError("recognized regions do not match the reading order");
    }

    AssembledDocument doc;
    doc.page_id = page.page_id;
    doc.blocks.reserve(order.ordered_region_ids.size());
    for (const std::string& id : order.ordered_region_ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) {
            throw CoverageMismatchError("reading order id missing from results: " + id);
        }
        const RecognizedRegion& r = *it->second;
        Block b;
        b.region_id = r.region_id;
        b.category = r.category;
        b.format = r.format;
        b.status = r.status.kind;
        // failed regions become placeholders; content passes through verbatim
        b.content = r.status.is_ok() ? r.content : "";
        doc.blocks.push_back(std::move(b));
    }
    return doc;
}

namespace {

std::string render_block(const Block& b) {
    switch (b.category) {
        case Category::Title: return "# " + b.content;
        case Category::Text:
        case Category::Other: return b.content;
        case Category::Code: return "```\n" + b.content + "\n```";
        case Category::Formula: return "$$\n" + b.content + "\n$$";
        case Category::Table: return b.content;
        case Category::Seal: return "> [seal] " + b.content;
        case Category::Figure: {
            std::string s = "<!-- figure: " + b.region_id + " -->";
            if (!b.content.empty()) s += "\n" + b.content;
            return s;
        }
    }
    return b.content;
}

}  // namespace

std::string emit_markdown(const AssembledDocument& doc) {
    if (doc.blocks.empty()) return "";
    std::string out;
    for (std::size_t i = 0; i < doc.blocks.size(); ++i) {
        if (i > 0) out += "\n\n";
        out += render_block(doc.blocks[i]);
    }
    out += "\n";
    return out;
}

std::string emit_json(const AssembledDocument& doc) {
    json root = json::object();
    root["page_id"] = doc.page_id;
    json blocks = json::array();
    for (const Block& b : doc.blocks) {
        json jb = json::object();
        jb["id"] = b.region_id;
        jb["category"] = to_string(b.category);
        jb["format"] = to_string(b.format);
        jb["content"] = b.content;
        jb["status"] = to_string(b.status);
        blocks.push_back(std::move(jb));
    }
    root["blocks"] = std::move(blocks);
    return root.dump();
}

AssembledDocument parse_document_json(std::string_view text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DocumentParseError(std::string("invalid document JSON: ") + e.what());
    }
    AssembledDocument doc;
    try {
        doc.page_id = root.at("page_id").get<std::string>();
        for (const json& jb : root.at("blocks")) {
            Block b;
            b.region_id = jb.at("id").get<std::string>();
            const auto cat = category_from_string(jb.at("category").get<std::string>());
            const auto fmt =
                content_format_from_string(jb.at("format").get<std::string>());
            const auto status =
                status_kind_from_string(jb.at("status").get<std::string>());
            if (!cat || !fmt || !status) {
                throw DocumentParseError("unknown enum value in document JSON");
            }
            b.category = *cat;
            b.format = *fmt;
            b.status = *status;
            b.content = jb.at("content").get<std::string>();
            doc.blocks.push_back(std::move(b));
        }
    } catch (const json::exception& e) {
        throw DocumentParseError(std::string("document JSON schema: ") + e.what());
    }
    return doc;
}

}  // namespace docforge::assemble

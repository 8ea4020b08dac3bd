#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "docforge/doc_model.hpp"
#include "docforge/layout.hpp"

namespace docforge::assemble {

struct Block {
    std::string region_id;
    Category category = Category::Text;
    ContentFormat format = ContentFormat::Plain;
    std::string content;
    RecognitionStatus::Kind status = RecognitionStatus::Kind::Ok;

    friend bool operator==(const Block&, const Block&) = default;
};

// Blocks in reading order; markdown and JSON emission are pure functions of
// this value.
struct AssembledDocument {
    std::string page_id;
    std::vector<Block> blocks;

    friend bool operator==(const AssembledDocument&, const AssembledDocument&) = default;
};

class CoverageMismatchError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Fuses recognized regions into reading order. Skipped/BackendError regions
// become placeholder blocks with empty content and their status preserved.
// Throws CoverageMismatchError unless `recognized` covers exactly the ids in
// `order`.
AssembledDocument merge(const Page& page, const layout::ReadingOrder& order,
                        const std::vector<RecognizedRegion>& recognized);

// Deterministic markdown: one blank line between blocks, trailing newline.
//   Title -> "# " heading          Text/Other -> verbatim
//   Code  -> fenced block          Formula    -> $$ display math
//   Table -> raw HTML              Seal       -> "> [seal] " blockquote
//   Figure -> placeholder comment naming the region (plus any caption)
std::string emit_markdown(const AssembledDocument& doc);

// Canonical JSON bytes: sorted keys, UTF-8, no insignificant whitespace.
// Schema: {"blocks":[{"category","content","format","id","status"}],"page_id"}
std::string emit_json(const AssembledDocument& doc);

class DocumentParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Inverse of emit_json.
AssembledDocument parse_document_json(std::string_view text);

}  // namespace docforge::assemble

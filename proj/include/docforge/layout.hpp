#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "docforge/doc_model.hpp"

namespace docforge::layout {

// Minimum empty band width (pixels) for an XY-cut split.
inline constexpr int kDefaultGapThreshold = 2;

struct ReadingOrder {
    std::string page_id;
    std::vector<std::string> ordered_region_ids;

    friend bool operator==(const ReadingOrder&, const ReadingOrder&) = default;
};

class ManifestError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Input is not valid JSON.
class ManifestSyntaxError : public ManifestError {
  public:
    ManifestSyntaxError(std::string message, std::size_t position)
        : ManifestError(std::move(message)), position_(position) {}
    std::size_t position() const { return position_; }

  private:
    std::size_t position_;
};

// JSON is well formed but does not match the manifest schema.
class ManifestSchemaError : public ManifestError {
  public:
    ManifestSchemaError(std::string path, std::string expected)
        : ManifestError("schema error at " + path + ": expected " + expected),
          path_(std::move(path)),
          expected_(std::move(expected)) {}
    const std::string& path() const { return path_; }
    const std::string& expected() const { return expected_; }

  private:
    std::string path_;
    std::string expected_;
};

// Manifest parsed but the resulting PageSet breaks doc-model invariants.
class ManifestValidationError : public ManifestError {
  public:
    explicit ManifestValidationError(std::vector<Violation> violations);
    const std::vector<Violation>& violations() const { return violations_; }

  private:
    std::vector<Violation> violations_;
};

class IdMismatchError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct ManifestParseResult {
    PageSet page_set;
    // One entry per unknown category string mapped to Other.
    std::vector<std::string> warnings;
};

// Strict manifest parse: unknown keys rejected, required fields enforced,
// result validated against doc-model invariants.
ManifestParseResult parse_manifest(std::string_view text);

// Canonical serialization (sorted keys, no insignificant whitespace).
// serialize -> parse -> serialize is byte-identical for any valid PageSet.
std::string serialize_manifest(const PageSet& ps);

// Explicit detector ranks win; otherwise recursive XY-cut with the given
// minimum gap. Result is always a permutation of the page's region ids.
ReadingOrder infer_reading_order(const Page& page, int gap_threshold = kDefaultGapThreshold);

// Normalized Levenshtein distance between the two id sequences, in [0,1].
// Throws IdMismatchError when the id sets differ.
double reading_order_edit(const ReadingOrder& pred, const ReadingOrder& gold);

}  // namespace docforge::layout

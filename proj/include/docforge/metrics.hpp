#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace docforge::metrics {

// ---------------------------------------------------------------------------
// String edit distance
// ---------------------------------------------------------------------------

// Minimal insert/delete/substitute count over Unicode scalar values.
std::size_t levenshtein(std::string_view a, std::string_view b);

// levenshtein(a,b) / max(|a|,|b|); 0 when both empty.
double normalized_edit_distance(std::string_view a, std::string_view b);

// ---------------------------------------------------------------------------
// Table trees and TEDS
// ---------------------------------------------------------------------------

struct TableNode {
    std::string label;  // table, thead, tbody, tr, td, th
    std::string content;
    int colspan = 1;
    int rowspan = 1;
    std::vector<TableNode> children;

    bool is_cell() const { return label == "td" || label == "th"; }
    std::size_t subtree_size() const;
};

struct TableTree {
    TableNode root;

    // A default-constructed root with no label is the empty tree.
    bool empty() const {
        return root.label.empty() && root.content.empty() && root.children.empty();
    }
    std::size_t node_count() const { return empty() ? 0 : root.subtree_size(); }
};

class TableParseError : public std::runtime_error {
  public:
    enum class Kind { UnclosedTag, UnexpectedTag, EmptyInput };

    TableParseError(Kind kind, std::string tag, std::size_t position);
    Kind kind() const { return kind_; }
    const std::string& tag() const { return tag_; }
    std::size_t position() const { return position_; }

  private:
    Kind kind_;
    std::string tag_;
    std::size_t position_;
};

// Lenient in whitespace and cell-level inline markup, strict in structure.
// A bare <tr> sequence under <table> gains an implicit <tbody>.
TableTree parse_html_table(std::string_view html);

struct CostModel {
    double insert_cost = 1.0;
    double delete_cost = 1.0;
    std::function<double(const TableNode&, const TableNode&)> rename_cost;

    // Rename 1 when labels or spans differ; equal-label cells pay the
    // normalized edit distance of their contents.
    static CostModel content();
    // Content-blind: 0 iff labels and spans are equal.
    static CostModel structure_only();
};

// Zhang-Shasha ordered tree edit distance.
double tree_edit_distance(const TableTree& t1, const TableTree& t2, const CostModel& cm);

class GoldParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// 1 - TED/max(node counts), clamped to [0,1]. An unparseable prediction
// scores 0; an unparseable gold throws GoldParseError.
double teds(std::string_view pred_html, std::string_view gold_html);

// Structure-only variant (content-blind rename cost).
double teds_s(std::string_view pred_html, std::string_view gold_html);

// ---------------------------------------------------------------------------
// Field-level F1
// ---------------------------------------------------------------------------

struct F1Report {
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    struct FieldMatch {
        std::optional<std::string> pred;
        std::optional<std::string> gold;
        bool match = false;
    };
    std::map<std::string, FieldMatch> per_field;  // dot path -> values
};

// Flattens both documents to dot-path -> leaf maps (arrays indexed
// numerically) and scores matches on trimmed, NFC-normalized leaf values.
// An unparseable prediction yields zero TP with every gold path a FN.
F1Report field_f1(std::string_view pred_json, std::string_view gold_json);

// Flattened leaf map of a parsed JSON document; exposed for KIE validation.
std::map<std::string, std::string> flatten_json_leaves(std::string_view text);

// ---------------------------------------------------------------------------
// Repetition
// ---------------------------------------------------------------------------

// Fraction of the input covered by a trailing loop: the longest suffix made
// of >= 3 consecutive repeats of a period of at most 20 elements, over
// whitespace tokens (when the string has >= 6 of them) and over Unicode
// scalars, whichever detects more.
double repetition_ratio(std::string_view s);

}  // namespace docforge::metrics

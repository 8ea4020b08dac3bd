#include "docforge/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include <nlohmann/json.hpp>

#include "docforge/edit_distance.hpp"
#include "docforge/unicode.hpp"

namespace docforge::metrics {

using nlohmann::json;

// ---------------------------------------------------------------------------
// String edit distance
// ---------------------------------------------------------------------------

std::size_t levenshtein(std::string_view a, std::string_view b) {
    const std::u32string ua = decode_utf8_lossy(a);
    const std::u32string ub = decode_utf8_lossy(b);
    return sequence_edit_distance(ua, ub);
}

double normalized_edit_distance(std::string_view a, std::string_view b) {
    const std::u32string ua = decode_utf8_lossy(a);
    const std::u32string ub = decode_utf8_lossy(b);
    const std::size_t longest = std::max(ua.size(), ub.size());
    if (longest == 0) return 0.0;
    return static_cast<double>(sequence_edit_distance(ua, ub)) /
           static_cast<double>(longest);
}

// ---------------------------------------------------------------------------
// HTML table parsing
// ---------------------------------------------------------------------------

std::size_t TableNode::subtree_size() const {
    std::size_t n = 1;
    for (const TableNode& c : children) n += c.subtree_size();
    return n;
}

namespace {

std::string_view parse_error_prefix(TableParseError::Kind k) {
    switch (k) {
        case TableParseError::Kind::UnclosedTag: return "unclosed tag";
        case TableParseError::Kind::UnexpectedTag: return "unexpected tag";
        case TableParseError::Kind::EmptyInput: return "empty input";
    }
    return "parse error";
}

std::string parse_error_message(TableParseError::Kind k, const std::string& tag,
                                std::size_t position) {
    std::string m(parse_error_prefix(k));
    if (!tag.empty()) m += " <" + tag + ">";
    m += " at offset " + std::to_string(position);
    return m;
}

bool is_structural(std::string_view name) {
    return name == "table" || name == "thead" || name == "tbody" || name == "tr" ||
           name == "td" || name == "th";
}

struct Tag {
    std::string name;
    bool closing = false;
    bool self_closing = false;
    std::map<std::string, std::string> attrs;
    std::size_t pos = 0;  // offset of '<'
    std::size_t end = 0;  // offset past '>'
};

char ascii_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

void append_entity_decoded(std::string& out, std::string_view src, std::size_t& i) {
    // i points at '&'. Decodes the five named entities and numeric references;
    // anything else is kept literally.
    const std::size_t semi = src.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
        out += src[i++];
        return;
    }
    const std::string_view body = src.substr(i + 1, semi - i - 1);
    std::string decoded;
    if (body == "amp") decoded = "&";
    else if (body == "lt") decoded = "<";
    else if (body == "gt") decoded = ">";
    else if (body == "quot") decoded = "\"";
    else if (body == "apos") decoded = "'";
    else if (!body.empty() && body[0] == '#') {
        unsigned long cp = 0;
        bool ok = false;
        if (body.size() > 1 && (body[1] == 'x' || body[1] == 'X')) {
            auto [p, ec] = std::from_chars(body.data() + 2, body.data() + body.size(), cp, 16);
            ok = ec == std::errc() && p == body.data() + body.size();
        } else {
            auto [p, ec] = std::from_chars(body.data() + 1, body.data() + body.size(), cp, 10);
            ok = ec == std::errc() && p == body.data() + body.size();
        }
        if (ok && cp <= 0x10FFFF) {
            // Encode the code point as UTF-8.
            char32_t c = static_cast<char32_t>(cp);
            if (c < 0x80) {
                decoded += static_cast<char>(c);
            } else if (c < 0x800) {
                decoded += static_cast<char>(0xC0 | (c >> 6));
                decoded += static_cast<char>(0x80 | (c & 0x3F));
            } else if (c < 0x10000) {
                decoded += static_cast<char>(0xE0 | (c >> 12));
                decoded += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
                decoded += static_cast<char>(0x80 | (c & 0x3F));
            } else {
                decoded += static_cast<char>(0xF0 | (c >> 18));
                decoded += static_cast<char>(0x80 | ((c >> 12) & 0x3F));
                decoded += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
                decoded += static_cast<char>(0x80 | (c & 0x3F));
            }
        }
    }
    if (decoded.empty()) {
        out += src[i++];
    } else {
        out += decoded;
        i = semi + 1;
    }
}

class TableParser {
  public:
    explicit TableParser(std::string_view src) : src_(src) {}

    TableTree parse() {
        skip_ws();
        if (pos_ >= src_.size()) {
            throw TableParseError(TableParseError::Kind::EmptyInput, "", 0);
        }
        Tag t = read_tag();
        if (t.closing || t.name != "table") {
            throw TableParseError(TableParseError::Kind::UnexpectedTag, t.name, t.pos);
        }
        TableTree tree;
        tree.root.label = "table";
        parse_table_children(tree.root);
        skip_ws();
        if (pos_ < src_.size()) {
            report_stray();
        }
        return tree;
    }

  private:
    void skip_ws() {
        while (pos_ < src_.size() &&
               std::isspace(static_cast<unsigned char>(src_[pos_]))) {
            ++pos_;
        }
    }

    // Text or a tag where only markup is allowed.
    [[noreturn]] void report_stray() {
        if (src_[pos_] == '<') {
            Tag t = read_tag();
            throw TableParseError(TableParseError::Kind::UnexpectedTag, t.name, t.pos);
        }
        throw TableParseError(TableParseError::Kind::UnexpectedTag, "#text", pos_);
    }

    Tag read_tag() {
        Tag t;
        t.pos = pos_;
        ++pos_;  // consume '<'
        if (pos_ < src_.size() && src_[pos_] == '/') {
            t.closing = true;
            ++pos_;
        }
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])))) {
            t.name += ascii_lower(src_[pos_++]);
        }
        if (t.name.empty()) {
            throw TableParseError(TableParseError::Kind::UnexpectedTag, "<", t.pos);
        }
        // attributes
        while (true) {
            skip_ws();
            if (pos_ >= src_.size()) {
                throw TableParseError(TableParseError::Kind::UnclosedTag, t.name, t.pos);
            }
            if (src_[pos_] == '>') {
                ++pos_;
                break;
            }
            if (src_[pos_] == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
                t.self_closing = true;
                pos_ += 2;
                break;
            }
            std::string key;
            while (pos_ < src_.size() && src_[pos_] != '=' && src_[pos_] != '>' &&
                   src_[pos_] != '/' &&
                   !std::isspace(static_cast<unsigned char>(src_[pos_]))) {
                key += ascii_lower(src_[pos_++]);
            }
            if (key.empty()) {
                throw TableParseError(TableParseError::Kind::UnexpectedTag, t.name, pos_);
            }
            std::string value;
            skip_ws();
            if (pos_ < src_.size() && src_[pos_] == '=') {
                ++pos_;
                skip_ws();
                if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'')) {
                    const char quote = src_[pos_++];
                    while (pos_ < src_.size() && src_[pos_] != quote) value += src_[pos_++];
                    if (pos_ >= src_.size()) {
                        throw TableParseError(TableParseError::Kind::UnclosedTag, t.name,
                                              t.pos);
                    }
                    ++pos_;  // closing quote
                } else {
                    while (pos_ < src_.size() && src_[pos_] != '>' &&
                           !std::isspace(static_cast<unsigned char>(src_[pos_]))) {
                        value += src_[pos_++];
                    }
                }
            }
            t.attrs[key] = value;
        }
        return t;
    }

    void parse_table_children(TableNode& table) {
        bool implicit_run = false;  // trailing child is an implicit tbody
        while (true) {
            skip_ws();
            if (pos_ >= src_.size()) {
                throw TableParseError(TableParseError::Kind::UnclosedTag, "table", pos_);
            }
            if (src_[pos_] != '<') report_stray();
            Tag t = read_tag();
            if (t.closing) {
                if (t.name == "table") return;
                throw TableParseError(TableParseError::Kind::UnexpectedTag, t.name, t.pos);
            }
            if (t.name == "thead" || t.name == "tbody") {
                implicit_run = false;
                TableNode group;
                group.label = t.name;
                if (!t.self_closing) parse_row_group(group);
                table.children.push_back(std::move(group));
            } else if (t.name == "tr") {
                if (!implicit_run) {
                    TableNode group;
                    group.label = "tbody";
                    table.children.push_back(std::move(group));
                    implicit_run = true;
                }
                TableNode row;
                row.label = "tr";
                if (!t.self_closing) parse_row(row);
                table.children.back().children.push_back(std::move(row));
            } else {
                throw TableParseError(TableParseError::Kind::UnexpectedTag, t.name, t.pos);
            }
        }
    }

    void parse_row_group(TableNode& group) {
        while (true) {
            skip_ws();
            if (pos_ >= src_.size()) {
                throw TableParseError(TableParseError::Kind::UnclosedTag, group.label,
                                      pos_);
            }
            if (src_[pos_] != '<') report_stray();
            Tag t = read_tag();
            if (t.closing) {
                if (t.name == group.label) return;
                throw TableParseError(TableParseError::Kind::UnexpectedTag, t.name, t.pos);
            }
            if (t.name != "tr") {
                throw TableParseError(TableParseError::Kind::UnexpectedTag, t.name, t.pos);
            }
            TableNode row;
            row.label = "tr";
            if (!t.self_closing) parse_row(row);
            group.children.push_back(std::move(row));
        }
    }

    void parse_row(TableNode& row) {
        while (true) {
            skip_ws();
            if (pos_ >= src_.size()) {
                throw TableParseError(TableParseError::Kind::UnclosedTag, "tr", pos_);
            }
            if (src_[pos_] != '<') report_stray();
            Tag t = read_tag();
            if (t.closing) {
                if (t.name == "tr") return;
                throw TableParseError(TableParseError::Kind::UnexpectedTag, t.name, t.pos);
            }
            if (t.name != "td" && t.name != "th") {
                throw TableParseError(TableParseError::Kind::UnexpectedTag, t.name, t.pos);
            }
            TableNode cell;
            cell.label = t.name;
            cell.colspan = span_attr(t, "colspan");
            cell.rowspan = span_attr(t, "rowspan");
            if (!t.self_closing) cell.content = parse_cell_content(t.name);
            row.children.push_back(std::move(cell));
        }
    }

    static int span_attr(const Tag& t, const char* key) {
        auto it = t.attrs.find(key);
        if (it == t.attrs.end()) return 1;
        int v = 0;
        auto [p, ec] =
            std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
        if (ec != std::errc() || v < 1) return 1;
        return v;
    }

    // Raw text until the cell's close tag. Inline non-structural markup is
    // stripped to its text; a structural tag other than the matching close
    // means the cell was never closed.
    std::string parse_cell_content(const std::string& cell_tag) {
        std::string out;
        while (true) {
            if (pos_ >= src_.size()) {
                throw TableParseError(TableParseError::Kind::UnclosedTag, cell_tag, pos_);
            }
            const char c = src_[pos_];
            if (c == '<') {
                const std::size_t tag_pos = pos_;
                Tag t = read_tag();
                if (is_structural(t.name)) {
                    if (t.closing && t.name == cell_tag) break;
                    throw TableParseError(TableParseError::Kind::UnclosedTag, cell_tag,
                                          tag_pos);
                }
                continue;  // strip inline markup
            }
            if (c == '&') {
                append_entity_decoded(out, src_, pos_);
            } else {
                out += c;
                ++pos_;
            }
        }
        // trim surrounding whitespace
        const auto b = out.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        const auto e = out.find_last_not_of(" \t\r\n");
        return out.substr(b, e - b + 1);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

}  // namespace

TableParseError::TableParseError(Kind kind, std::string tag, std::size_t position)
    : std::runtime_error(parse_error_message(kind, tag, position)),
      kind_(kind),
      tag_(std::move(tag)),
      position_(position) {}

TableTree parse_html_table(std::string_view html) { return TableParser(html).parse(); }

// ---------------------------------------------------------------------------
// Tree edit distance (Zhang-Shasha)
// ---------------------------------------------------------------------------

CostModel CostModel::content() {
    CostModel cm;
    cm.rename_cost = [](const TableNode& a, const TableNode& b) -> double {
        if (a.label != b.label || a.colspan != b.colspan || a.rowspan != b.rowspan) {
            return 1.0;
        }
        if (a.is_cell()) return normalized_edit_distance(a.content, b.content);
        return 0.0;
    };
    return cm;
}

CostModel CostModel::structure_only() {
    CostModel cm;
    cm.rename_cost = [](const TableNode& a, const TableNode& b) -> double {
        return (a.label == b.label && a.colspan == b.colspan && a.rowspan == b.rowspan)
                   ? 0.0
                   : 1.0;
    };
    return cm;
}

namespace {

struct FlatTree {
    std::vector<const TableNode*> post;  // postorder
    std::vector<int> lml;                // leftmost leaf (postorder index)
    std::vector<int> keyroots;
};

int flatten_post(const TableNode& n, FlatTree& f) {
    int leftmost = -1;
    for (const TableNode& c : n.children) {
        const int child_lml = flatten_post(c, f);
        if (leftmost < 0) leftmost = child_lml;
    }
    f.post.push_back(&n);
    const int idx = static_cast<int>(f.post.size()) - 1;
    f.lml.push_back(leftmost < 0 ? idx : leftmost);
    return f.lml.back();
}

FlatTree flatten(const TableTree& t) {
    FlatTree f;
    flatten_post(t.root, f);
    // keyroots: for each distinct leftmost-leaf value, the highest node with it
    std::map<int, int> highest;
    for (int i = 0; i < static_cast<int>(f.post.size()); ++i) highest[f.lml[i]] = i;
    for (auto& [lml, idx] : highest) f.keyroots.push_back(idx);
    std::sort(f.keyroots.begin(), f.keyroots.end());
    return f;
}

}  // namespace

double tree_edit_distance(const TableTree& t1, const TableTree& t2, const CostModel& cm) {
    if (t1.empty() || t2.empty()) {
        return cm.delete_cost * static_cast<double>(t1.node_count()) +
               cm.insert_cost * static_cast<double>(t2.node_count());
    }
    const FlatTree f1 = flatten(t1);
    const FlatTree f2 = flatten(t2);
    const int n1 = static_cast<int>(f1.post.size());
    const int n2 = static_cast<int>(f2.post.size());

    std::vector<std::vector<double>> td(n1, std::vector<double>(n2, 0.0));
    std::vector<std::vector<double>> fd;

    for (const int i : f1.keyroots) {
        for (const int j : f2.keyroots) {
            const int li = f1.lml[i];
            const int lj = f2.lml[j];
            const int m = i - li + 2;
            const int n = j - lj + 2;
            fd.assign(m, std::vector<double>(n, 0.0));

            for (int x = 1; x < m; ++x) {
                fd[x][0] = fd[x - 1][0] + cm.delete_cost;
            }
            for (int y = 1; y < n; ++y) {
                fd[0][y] = fd[0][y - 1] + cm.insert_cost;
            }
            for (int x = 1; x < m; ++x) {
                const int a = li + x - 1;
                for (int y = 1; y < n; ++y) {
                    const int b = lj + y - 1;
                    if (f1.lml[a] == li && f2.lml[b] == lj) {
                        fd[x][y] = std::min(
                            {fd[x - 1][y] + cm.delete_cost, fd[x][y - 1] + cm.insert_cost,
                             fd[x - 1][y - 1] + cm.rename_cost(*f1.post[a], *f2.post[b])});
                        td[a][b] = fd[x][y];
                    } else {
                        const int xi = f1.lml[a] - li;
                        const int yj = f2.lml[b] - lj;
                        fd[x][y] = std::min({fd[x - 1][y] + cm.delete_cost,
                                             fd[x][y - 1] + cm.insert_cost,
                                             fd[xi][yj] + td[a][b]});
                    }
                }
            }
        }
    }
    return td[n1 - 1][n2 - 1];
}

namespace {

double teds_impl(std::string_view pred_html, std::string_view gold_html,
                 const CostModel& cm) {
    TableTree gold;
    try {
        gold = parse_html_table(gold_html);
    } catch (const TableParseError& e) {
        throw GoldParseError(std::string("gold table: ") + e.what());
    }
    TableTree pred;
    try {
        pred = parse_html_table(pred_html);
    } catch (const TableParseError&) {
        return 0.0;
    }
    const double dist = tree_edit_distance(pred, gold, cm);
    const double denom =
        static_cast<double>(std::max(pred.node_count(), gold.node_count()));
    return std::clamp(1.0 - dist / denom, 0.0, 1.0);
}

}  // namespace

double teds(std::string_view pred_html, std::string_view gold_html) {
    return teds_impl(pred_html, gold_html, CostModel::content());
}

double teds_s(std::string_view pred_html, std::string_view gold_html) {
    return teds_impl(pred_html, gold_html, CostModel::structure_only());
}

// ---------------------------------------------------------------------------
// Field-level F1
// ---------------------------------------------------------------------------

namespace {

std::string leaf_to_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

std::string normalize_leaf(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return to_nfc(std::string_view(s).substr(b, e - b + 1));
}

void flatten_rec(const json& v, const std::string& prefix,
                 std::map<std::string, std::string>& out) {
    if (v.is_object()) {
        for (auto it = v.begin(); it != v.end(); ++it) {
            flatten_rec(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(),
                        out);
        }
    } else if (v.is_array()) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string key = std::to_string(i);
            flatten_rec(v[i], prefix.empty() ? key : prefix + "." + key, out);
        }
    } else {
        out[prefix.empty() ? "$" : prefix] = leaf_to_string(v);
    }
}

}  // namespace

std::map<std::string, std::string> flatten_json_leaves(std::string_view text) {
    const json doc = json::parse(text);
    std::map<std::string, std::string> out;
    flatten_rec(doc, "", out);
    return out;
}

F1Report field_f1(std::string_view pred_json, std::string_view gold_json) {
    std::map<std::string, std::string> gold;
    try {
        gold = flatten_json_leaves(gold_json);
    } catch (const json::exception& e) {
        throw GoldParseError(std::string("gold json: ") + e.what());
    }

    F1Report report;
    std::map<std::string, std::string> pred;
    bool pred_ok = true;
    try {
        pred = flatten_json_leaves(pred_json);
    } catch (const json::exception&) {
        pred_ok = false;
    }

    if (!pred_ok) {
        for (const auto& [path, value] : gold) {
            report.per_field[path] = {std::nullopt, value, false};
            ++report.false_negatives;
        }
        return report;  // zeros throughout
    }

    for (const auto& [path, value] : pred) {
        auto git = gold.find(path);
        F1Report::FieldMatch fm;
        fm.pred = value;
        if (git != gold.end()) {
            fm.gold = git->second;
            fm.match = normalize_leaf(value) == normalize_leaf(git->second);
        }
        if (fm.match) {
            ++report.true_positives;
        } else {
            ++report.false_positives;           // pred-only or value mismatch
            if (git != gold.end()) ++report.false_negatives;  // mismatch also misses gold
        }
        report.per_field[path] = std::move(fm);
    }
    for (const auto& [path, value] : gold) {
        if (pred.find(path) == pred.end()) {
            report.per_field[path] = {std::nullopt, value, false};
            ++report.false_negatives;
        }
    }

    const double tp = static_cast<double>(report.true_positives);
    const double fp = static_cast<double>(report.false_positives);
    const double fn = static_cast<double>(report.false_negatives);
    report.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    report.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    report.f1 = report.precision + report.recall > 0
                    ? 2.0 * report.precision * report.recall /
                          (report.precision + report.recall)
                    : 0.0;
    return report;
}

// ---------------------------------------------------------------------------
// Repetition
// ---------------------------------------------------------------------------

namespace {

template <typename Seq>
double trailing_loop_fraction(const Seq& seq) {
    const std::size_t n = seq.size();
    if (n < 3) return 0.0;
    std::size_t best = 0;
    const std::size_t max_period = std::min<std::size_t>(20, n / 3);
    for (std::size_t p = 1; p <= max_period; ++p) {
        // longest trailing run where seq[i] == seq[i+p]
        std::size_t run = 0;
        for (std::size_t i = n - p; i-- > 0;) {
            if (seq[i] == seq[i + p]) {
                ++run;
            } else {
                break;
            }
        }
        const std::size_t repeats = 1 + run / p;  // whole trailing blocks
        if (repeats >= 3) best = std::max(best, repeats * p);
    }
    return static_cast<double>(best) / static_cast<double>(n);
}

std::vector<std::string> whitespace_tokens(std::string_view s) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t start = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i > start) tokens.emplace_back(s.substr(start, i - start));
    }
    return tokens;
}

}  // namespace

double repetition_ratio(std::string_view s) {
    const std::u32string chars = decode_utf8_lossy(s);
    double ratio = trailing_loop_fraction(chars);
    const std::vector<std::string> tokens = whitespace_tokens(s);
    if (tokens.size() >= 6) {
        ratio = std::max(ratio, trailing_loop_fraction(tokens));
    }
    return ratio;
}

}  // namespace docforge::metrics

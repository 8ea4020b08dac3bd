#include "docforge/reward.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <nlohmann/json.hpp>

#include "docforge/edit_distance.hpp"
#include "docforge/metrics.hpp"
#include "docforge/unicode.hpp"

namespace docforge::reward {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Tag closure
// ---------------------------------------------------------------------------

namespace {

bool is_table_tag(std::string_view name) {
    return name == "table" || name == "thead" || name == "tbody" || name == "tr" ||
           name == "td" || name == "th";
}

char ascii_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

}  // namespace

TagClosureReport validate_tag_closure(std::string_view s) {
    TagClosureReport report;
    std::vector<std::pair<std::string, std::size_t>> stack;  // tag, open position

    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] != '<') {
            ++i;
            continue;
        }
        const std::size_t tag_pos = i;
        ++i;
        bool closing = false;
        if (i < s.size() && s[i] == '/') {
            closing = true;
            ++i;
        }
        std::string name;
        while (i < s.size() && std::isalnum(static_cast<unsigned char>(s[i]))) {
            name += ascii_lower(s[i++]);
        }
        // skip to the end of the tag
        bool self_closing = false;
        while (i < s.size() && s[i] != '>') {
            if (s[i] == '/' && i + 1 < s.size() && s[i + 1] == '>') self_closing = true;
            ++i;
        }
        if (i < s.size()) ++i;  // consume '>'

        if (!is_table_tag(name)) continue;

        if (!closing) {
            if (!self_closing) stack.emplace_back(name, tag_pos);
            continue;
        }
        // closing tag: match against the stack
        auto match = std::find_if(stack.rbegin(), stack.rend(),
                                  [&](const auto& e) { return e.first == name; });
        if (match == stack.rend()) {
            report.errors.push_back(
                {TagClosureIssue::Kind::CloseWithoutOpen, name, tag_pos});
            continue;
        }
        // anything opened above the match never closed
        while (stack.back().first != name) {
            report.errors.push_back({TagClosureIssue::Kind::UnclosedTag,
                                     stack.back().first, stack.back().second});
            stack.pop_back();
        }
        stack.pop_back();
    }
    for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
        report.errors.push_back(
            {TagClosureIssue::Kind::UnclosedTag, it->first, it->second});
    }
    report.ok = report.errors.empty();
    return report;
}

// ---------------------------------------------------------------------------
// LaTeX structure
// ---------------------------------------------------------------------------

namespace {

// Reads "{name}" after \begin or \end; returns nullopt when absent.
std::optional<std::string> read_env_name(std::string_view s, std::size_t& i) {
    std::size_t j = i;
    while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j >= s.size() || s[j] != '{') return std::nullopt;
    ++j;
    std::string name;
    while (j < s.size() && s[j] != '}') name += s[j++];
    if (j >= s.size()) return std::nullopt;
    i = j + 1;
    return name;
}

}  // namespace

LatexReport validate_latex(std::string_view s) {
    LatexReport report;
    std::vector<std::size_t> brace_stack;
    std::vector<std::size_t> left_stack;
    std::vector<std::pair<std::string, std::size_t>> env_stack;

    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (c == '\\') {
            const std::size_t cmd_pos = i;
            ++i;
            if (i >= s.size()) break;
            if (!std::isalpha(static_cast<unsigned char>(s[i]))) {
                ++i;  // escaped symbol such as \{ or a double backslash
                continue;
            }
            std::string cmd;
            while (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) {
                cmd += s[i++];
            }
            if (cmd == "left") {
                left_stack.push_back(cmd_pos);
            } else if (cmd == "right") {
                if (left_stack.empty()) {
                    report.errors.push_back({LatexIssue::Kind::UnmatchedLeftRight,
                                             "\\right without \\left", cmd_pos});
                } else {
                    left_stack.pop_back();
                }
            } else if (cmd == "begin") {
                if (auto env = read_env_name(s, i)) {
                    env_stack.emplace_back(*env, cmd_pos);
                } else {
                    report.errors.push_back({LatexIssue::Kind::UnclosedEnv,
                                             "\\begin without environment name",
                                             cmd_pos});
                }
            } else if (cmd == "end") {
                auto env = read_env_name(s, i);
                const std::string name = env.value_or("");
                if (env_stack.empty()) {
                    report.errors.push_back({LatexIssue::Kind::UnmatchedEnd,
                                             "\\end{" + name + "} without \\begin",
                                             cmd_pos});
                } else if (env_stack.back().first != name) {
                    report.errors.push_back(
                        {LatexIssue::Kind::EnvMismatch,
                         "\\begin{" + env_stack.back().first + "} closed by \\end{" +
                             name + "}",
                         cmd_pos});
                    env_stack.pop_back();
                } else {
                    env_stack.pop_back();
                }
            }
            continue;
        }
        if (c == '{') {
            brace_stack.push_back(i);
        } else if (c == '}') {
            if (brace_stack.empty()) {
                report.errors.push_back(
                    {LatexIssue::Kind::UnbalancedBrace, "} without {", i});
            } else {
                brace_stack.pop_back();
            }
        }
        ++i;
    }

    for (std::size_t pos : brace_stack) {
        report.errors.push_back({LatexIssue::Kind::UnbalancedBrace, "{ never closed", pos});
    }
    for (std::size_t pos : left_stack) {
        report.errors.push_back(
            {LatexIssue::Kind::UnmatchedLeftRight, "\\left without \\right", pos});
    }
    for (const auto& [name, pos] : env_stack) {
        report.errors.push_back(
            {LatexIssue::Kind::UnclosedEnv, "\\begin{" + name + "} never ended", pos});
    }
    report.ok = report.errors.empty();
    return report;
}

// ---------------------------------------------------------------------------
// Strict JSON validation
// ---------------------------------------------------------------------------

namespace {

// SAX scan that records duplicate object keys with their dot paths.
class DuplicateKeyScanner : public nlohmann::json_sax<json> {
  public:
    std::vector<std::string> duplicates;
    std::string error;
    bool failed = false;

    bool null() override { return true; }
    bool boolean(bool) override { return true; }
    bool number_integer(number_integer_t) override { return true; }
    bool number_unsigned(number_unsigned_t) override { return true; }
    bool number_float(number_float_t, const string_t&) override { return true; }
    bool string(string_t&) override { return true; }
    bool binary(binary_t&) override { return true; }

    bool start_object(std::size_t) override {
        frames_.push_back({true, {}, current_path(), {}, 0});
        return true;
    }
    bool key(string_t& k) override {
        Frame& f = frames_.back();
        f.pending_key = k;
        if (!f.seen.insert(k).second) {
            duplicates.push_back(f.prefix.empty() ? k : f.prefix + "." + k);
        }
        return true;
    }
    bool end_object() override {
        frames_.pop_back();
        bump_parent();
        return true;
    }
    bool start_array(std::size_t) override {
        frames_.push_back({false, {}, current_path(), {}, 0});
        return true;
    }
    bool end_array() override {
        frames_.pop_back();
        bump_parent();
        return true;
    }
    bool parse_error(std::size_t position, const std::string&,
                     const nlohmann::detail::exception& ex) override {
        failed = true;
        error = std::string(ex.what()) + " (byte " + std::to_string(position) + ")";
        return false;
    }

  private:
    struct Frame {
        bool is_object;
        std::set<std::string> seen;
        std::string prefix;
        std::string pending_key;
        std::size_t index = 0;
    };

    // Path of the value about to start in the innermost frame.
    std::string current_path() {
        if (frames_.empty()) return "";
        Frame& f = frames_.back();
        if (f.is_object) {
            return f.prefix.empty() ? f.pending_key : f.prefix + "." + f.pending_key;
        }
        const std::string idx = std::to_string(f.index);
        return f.prefix.empty() ? idx : f.prefix + "." + idx;
    }

    void bump_parent() {
        if (!frames_.empty() && !frames_.back().is_object) ++frames_.back().index;
    }

    std::vector<Frame> frames_;
};

void check_value(const json& v, const KieType& type, const std::string& path,
                 JsonStrictReport& report);

void check_object_fields(const json& obj, const std::vector<KieField>& fields,
                         const std::string& prefix, JsonStrictReport& report) {
    std::set<std::string> known;
    for (const KieField& f : fields) {
        known.insert(f.name);
        const std::string path = prefix.empty() ? f.name : prefix + "." + f.name;
        auto it = obj.find(f.name);
        if (it == obj.end()) {
            if (f.required) report.missing.push_back(path);
            continue;
        }
        check_value(*it, f.type, path, report);
    }
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!known.count(it.key())) {
            report.extra.push_back(prefix.empty() ? it.key() : prefix + "." + it.key());
        }
    }
}

void check_value(const json& v, const KieType& type, const std::string& path,
                 JsonStrictReport& report) {
    switch (type.kind) {
        case KieType::Kind::String:
            if (!v.is_string()) report.wrong_type.push_back(path);
            break;
        case KieType::Kind::Number:
            if (!v.is_number()) report.wrong_type.push_back(path);
            break;
        case KieType::Kind::Object:
            if (!v.is_object()) {
                report.wrong_type.push_back(path);
            } else {
                check_object_fields(v, type.fields, path, report);
            }
            break;
        case KieType::Kind::Array:
            if (!v.is_array()) {
                report.wrong_type.push_back(path);
            } else {
                for (std::size_t i = 0; i < v.size(); ++i) {
                    check_value(v[i], *type.element, path + "." + std::to_string(i),
                                report);
                }
            }
            break;
    }
}

}  // namespace

JsonStrictReport validate_json_strict(std::string_view bytes, const KieSchema& schema) {
    JsonStrictReport report;

    DuplicateKeyScanner scanner;
    json::sax_parse(bytes, &scanner);
    if (scanner.failed) {
        report.ok = false;
        report.parse_error = scanner.error;
        return report;
    }
    report.duplicates = std::move(scanner.duplicates);

    const json doc = json::parse(bytes);
    if (!doc.is_object()) {
        report.wrong_type.push_back("$");
        for (const KieField& f : schema.fields) {
            if (f.required) report.missing.push_back(f.name);
        }
    } else {
        check_object_fields(doc, schema.fields, "", report);
    }

    report.ok = report.duplicates.empty() && report.missing.empty() &&
                report.extra.empty() && report.wrong_type.empty();
    return report;
}

// ---------------------------------------------------------------------------
// Task rewards
// ---------------------------------------------------------------------------

std::string_view to_string(RewardTask t) {
    switch (t) {
        case RewardTask::Text: return "text";
        case RewardTask::Formula: return "formula";
        case RewardTask::Table: return "table";
        case RewardTask::Kie: return "kie";
    }
    return "text";
}

std::map<std::string, double> global_regularization(std::string_view pred,
                                                    bool structural_ok,
                                                    const RewardWeights& w) {
    std::map<std::string, double> penalties;
    const double ratio = metrics::repetition_ratio(pred);
    penalties["repetition"] = w.lambda_rep * std::max(0.0, ratio - w.repetition_threshold);
    penalties["malformed"] = structural_ok ? 0.0 : w.malformed_penalty;
    return penalties;
}

namespace {

double finalize_reward(RewardReport& report) {
    bool gate = true;
    for (const auto& [name, ok] : report.validity) gate = gate && ok;
    double total_penalty = 0.0;
    for (const auto& [name, value] : report.penalties) total_penalty += value;
    report.reward = std::clamp(
        report.accuracy_term * (gate ? 1.0 : 0.0) - total_penalty, 0.0, 1.0);
    return report.reward;
}

}  // namespace

std::vector<std::string> tokenize_latex(std::string_view s) {
    const std::u32string cps = decode_utf8_lossy(s);
    std::vector<std::string> tokens;
    std::size_t i = 0;
    const auto is_ws = [](char32_t c) {
        return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' ||
               c == U'\v';
    };
    const auto is_alpha = [](char32_t c) {
        return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z');
    };
    while (i < cps.size()) {
        const char32_t c = cps[i];
        if (is_ws(c)) {
            ++i;
            continue;
        }
        if (c == U'\\' && i + 1 < cps.size()) {
            std::string tok = "\\";
            ++i;
            if (is_alpha(cps[i])) {
                while (i < cps.size() && is_alpha(cps[i])) append_utf8(tok, cps[i++]);
            } else {
                append_utf8(tok, cps[i++]);
            }
            tokens.push_back(std::move(tok));
            continue;
        }
        std::string tok;
        append_utf8(tok, c);
        tokens.push_back(std::move(tok));
        ++i;
    }
    return tokens;
}

RewardReport reward_text(std::string_view pred, std::string_view gold,
                         const RewardWeights& w) {
    RewardReport report;
    report.task = RewardTask::Text;
    report.accuracy_term = 1.0 - metrics::normalized_edit_distance(pred, gold);
    report.penalties["repetition"] = global_regularization(pred, true, w)["repetition"];
    finalize_reward(report);
    return report;
}

RewardReport reward_formula(std::string_view pred, std::string_view gold,
                            const RewardWeights& w) {
    RewardReport report;
    report.task = RewardTask::Formula;

    const bool structural_ok = validate_latex(pred).ok;
    report.validity["latex_structure"] = structural_ok;

    const std::vector<std::string> tp = tokenize_latex(pred);
    const std::vector<std::string> tg = tokenize_latex(gold);
    const std::size_t longest = std::max(tp.size(), tg.size());
    const double token_ned =
        longest == 0 ? 0.0
                     : static_cast<double>(sequence_edit_distance(tp, tg)) /
                           static_cast<double>(longest);
    report.accuracy_term = 1.0 - token_ned;

    report.penalties = global_regularization(pred, structural_ok, w);
    finalize_reward(report);
    return report;
}

RewardReport reward_table(std::string_view pred, std::string_view gold,
                          const RewardWeights& w) {
    RewardReport report;
    report.task = RewardTask::Table;

    const bool structural_ok = validate_tag_closure(pred).ok;
    report.validity["tag_closure"] = structural_ok;
    report.accuracy_term = metrics::teds(pred, gold);  // GoldParseError propagates
    report.penalties["malformed"] =
        global_regularization(pred, structural_ok, w)["malformed"];
    finalize_reward(report);
    return report;
}

RewardReport reward_kie(std::string_view pred, std::string_view gold,
                        const KieSchema& schema, const RewardWeights& w) {
    const JsonStrictReport gold_check = validate_json_strict(gold, schema);
    if (!gold_check.ok) {
        throw GoldInvalidError("gold document does not satisfy the schema");
    }

    RewardReport report;
    report.task = RewardTask::Kie;

    const JsonStrictReport pred_check = validate_json_strict(pred, schema);
    const bool parsed = !pred_check.parse_error.has_value();
    report.validity["json_parse"] = parsed;

    report.accuracy_term = metrics::field_f1(pred, gold).f1;

    double missing_pen =
        w.per_field_penalty * static_cast<double>(pred_check.missing.size());
    double dup_pen =
        w.per_field_penalty * static_cast<double>(pred_check.duplicates.size());
    const double total = missing_pen + dup_pen;
    if (total > w.kie_penalty_cap && total > 0.0) {
        const double scale = w.kie_penalty_cap / total;
        missing_pen *= scale;
        dup_pen *= scale;
    }
    report.penalties["missing_fields"] = missing_pen;
    report.penalties["duplicate_keys"] = dup_pen;
    finalize_reward(report);
    return report;
}

}  // namespace docforge::reward

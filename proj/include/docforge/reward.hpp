#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "docforge/kie_schema.hpp"

namespace docforge::reward {

// ---------------------------------------------------------------------------
// Structural validators
// ---------------------------------------------------------------------------

struct TagClosureIssue {
    enum class Kind { UnclosedTag, CloseWithoutOpen };
    Kind kind;
    std::string tag;
    std::size_t position;
};

struct TagClosureReport {
    bool ok = true;
    std::vector<TagClosureIssue> errors;
};

// Stack scan over table/thead/tbody/tr/td/th tags; every unmatched open or
// close is reported with its position. Other markup is ignored.
TagClosureReport validate_tag_closure(std::string_view s);

struct LatexIssue {
    enum class Kind {
        UnbalancedBrace,
        UnmatchedLeftRight,
        EnvMismatch,
        UnmatchedEnd,
        UnclosedEnv,
    };
    Kind kind;
    std::string detail;
    std::size_t position;
};

struct LatexReport {
    bool ok = true;
    std::vector<LatexIssue> errors;
};

// Brace balance, \left/\right pairing, \begin{env}/\end{env} matching.
LatexReport validate_latex(std::string_view s);

struct JsonStrictReport {
    bool ok = true;
    std::vector<std::string> duplicates;   // paths of repeated keys
    std::vector<std::string> missing;      // required schema paths absent
    std::vector<std::string> extra;        // document paths outside the schema
    std::vector<std::string> wrong_type;   // present but of the wrong type
    std::optional<std::string> parse_error;
};

// Duplicate-key detection runs on a SAX scan of the raw bytes (DOM parsers
// collapse duplicates), then schema coverage on the parsed document.
JsonStrictReport validate_json_strict(std::string_view bytes, const KieSchema& schema);

// ---------------------------------------------------------------------------
// Task rewards
// ---------------------------------------------------------------------------

struct RewardWeights {
    double lambda_rep = 1.0;
    double repetition_threshold = 0.3;
    double per_field_penalty = 0.05;   // per missing required field / duplicate key
    double malformed_penalty = 0.2;
    double kie_penalty_cap = 0.5;
};

enum class RewardTask { Text, Formula, Table, Kie };

std::string_view to_string(RewardTask t);

struct RewardReport {
    RewardTask task = RewardTask::Text;
    double accuracy_term = 0.0;
    std::map<std::string, bool> validity;     // hard checks; any false gates to 0
    std::map<std::string, double> penalties;  // soft penalties, subtracted
    double reward = 0.0;
};

class GoldInvalidError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Repetition and malformed-structure penalties. `structural_ok` is the
// outcome of the task's structural validator (true for tasks without one).
std::map<std::string, double> global_regularization(std::string_view pred,
                                                    bool structural_ok,
                                                    const RewardWeights& w = {});

// Normalized edit distance accuracy with a repetition penalty.
RewardReport reward_text(std::string_view pred, std::string_view gold,
                         const RewardWeights& w = {});

// LaTeX structural gate; accuracy is the token-level edit-distance proxy
// over canonicalized LaTeX token streams.
RewardReport reward_formula(std::string_view pred, std::string_view gold,
                            const RewardWeights& w = {});

// Tag-closure gate; accuracy is TEDS. Throws metrics::GoldParseError when
// the gold table does not parse.
RewardReport reward_table(std::string_view pred, std::string_view gold,
                          const RewardWeights& w = {});

// JSON-parse gate; accuracy is field-level F1; missing/duplicate field
// penalties are capped. Throws GoldInvalidError when the gold document does
// not satisfy the schema.
RewardReport reward_kie(std::string_view pred, std::string_view gold,
                        const KieSchema& schema, const RewardWeights& w = {});

// LaTeX canonicalization used by the formula proxy: commands are single
// tokens, whitespace is dropped, braces are kept, everything else is one
// token per scalar value.
std::vector<std::string> tokenize_latex(std::string_view s);

}  // namespace docforge::reward

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace docforge::mtp {

using Token = std::string;
using TokenId = int;

class EmptyCorpusError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class EmptyInputError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class VocabMismatchError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Add-one-smoothed n-gram model over whitespace tokens, the stand-in for the
// decoder's next-token distribution. The vocabulary is the sorted corpus
// token set followed by the end and begin markers, so ids are deterministic
// and independent of corpus order.
class NGramModel {
  public:
    static constexpr std::string_view kBos = "<s>";
    static constexpr std::string_view kEos = "</s>";

    int order() const { return order_; }
    const std::vector<Token>& vocab() const { return vocab_; }
    TokenId eos_id() const { return eos_id_; }
    TokenId bos_id() const { return bos_id_; }
    // Prediction candidates are every vocab entry except the begin marker.
    int candidate_count() const { return bos_id_; }

    std::optional<TokenId> token_id(std::string_view token) const;
    const Token& token(TokenId id) const { return vocab_.at(static_cast<std::size_t>(id)); }

    // Smoothed conditional P(next | last order-1 context tokens); sums to 1
    // over the candidate set for any context.
    double probability(std::span<const TokenId> context, TokenId next) const;

    std::vector<TokenId> ids_of(const std::vector<Token>& tokens) const;
    std::vector<Token> tokens_of(std::span<const TokenId> ids) const;

  private:
    friend NGramModel train_ngram(const std::vector<std::vector<Token>>& corpus,
                                  int order);
    friend TokenId greedy_next(const NGramModel& model, std::span<const TokenId> context);

    std::vector<TokenId> context_key(std::span<const TokenId> context) const;

    int order_ = 1;
    std::vector<Token> vocab_;
    TokenId eos_id_ = 0;
    TokenId bos_id_ = 0;
    std::map<std::vector<TokenId>, std::map<TokenId, int>> counts_;
    std::map<std::vector<TokenId>, int> totals_;
};

// Counts all order-grams with begin/end padding. Throws EmptyCorpusError.
NGramModel train_ngram(const std::vector<std::vector<Token>>& corpus, int order);

// Argmax of the smoothed conditional; ties break to the lowest vocab index.
TokenId greedy_next(const NGramModel& model, std::span<const TokenId> context);

// Token-by-token greedy decoding until the end marker or max_len; the
// reference output for losslessness checks. A prompt already containing the
// end marker yields an empty continuation.
std::vector<TokenId> ar_decode(const NGramModel& model, std::span<const TokenId> prompt,
                               std::size_t max_len);

enum class DraftMode { Oracle, LowerOrder, Noisy };

std::string_view to_string(DraftMode m);

struct MtpConfig {
    int k = 10;                  // draft tokens per step
    std::size_t max_len = 256;
    DraftMode draft_mode = DraftMode::Oracle;
    double noise_accuracy = 1.0;  // Noisy: chance a draft offset matches the target
    std::uint64_t seed = 0;       // Noisy RNG seed
};

struct StepRecord {
    int accepted = 0;  // draft tokens verified and emitted, in [0, k]
    int emitted = 0;   // accepted plus the correction token, in [1, k+1]
};

struct DecodeTrace {
    std::vector<StepRecord> steps;
    std::size_t total_tokens = 0;
    double mean_tokens_per_step = 0.0;
};

struct MtpResult {
    std::vector<TokenId> tokens;
    DecodeTrace trace;
};

// Draft-and-verify decoding. One shared draft predictor self-feeds to
// propose k tokens; the target accepts the longest prefix matching its own
// greedy choices and contributes one correction token. Output is identical
// to ar_decode(target, prompt, max_len) for every draft mode.
// `draft` is consulted only in LowerOrder mode and must share the target's
// vocabulary.
MtpResult mtp_decode(const NGramModel& target, const NGramModel* draft,
                     const MtpConfig& cfg, std::span<const TokenId> prompt);

struct AcceptanceStats {
    int k = 0;
    std::size_t total_steps = 0;
    std::size_t total_tokens = 0;
    double mean_tokens_per_step = 0.0;
    std::map<int, std::size_t> accepted_histogram;  // acceptance length -> steps
};

// Aggregates traces; throws EmptyInputError when there are no steps.
AcceptanceStats acceptance_stats(std::span<const DecodeTrace> traces, int k);

// Throughput model: tokens per verify-equivalent step when one draft step
// costs `cost_ratio` of a verify step. With cost_ratio 0 this is the mean
// tokens per step.
double speedup_estimate(const AcceptanceStats& stats, double cost_ratio);

// Corpus file format: UTF-8 text, one document per line, whitespace tokens.
std::vector<std::vector<Token>> load_corpus(std::string_view text);
std::vector<std::vector<Token>> load_corpus_file(const std::string& path);

}  // namespace docforge::mtp

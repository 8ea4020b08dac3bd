#include "docforge/mtp_sim.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace docforge::mtp {

std::optional<TokenId> NGramModel::token_id(std::string_view token) const {
    // Corpus tokens are sorted; the two markers sit at the end.
    const auto begin = vocab_.begin();
    const auto end = vocab_.begin() + eos_id_;
    const auto it = std::lower_bound(begin, end, token);
    if (it != end && *it == token) return static_cast<TokenId>(it - begin);
    if (token == kEos) return eos_id_;
    if (token == kBos) return bos_id_;
    return std::nullopt;
}

std::vector<TokenId> NGramModel::context_key(std::span<const TokenId> context) const {
    const std::size_t want = static_cast<std::size_t>(order_ - 1);
    std::vector<TokenId> key;
    key.reserve(want);
    if (context.size() >= want) {
        key.assign(context.end() - static_cast<std::ptrdiff_t>(want), context.end());
    } else {
        key.assign(want - context.size(), bos_id_);
        key.insert(key.end(), context.begin(), context.end());
    }
    return key;
}

double NGramModel::probability(std::span<const TokenId> context, TokenId next) const {
    const std::vector<TokenId> key = context_key(context);
    int count = 0;
    int total = 0;
    if (auto it = counts_.find(key); it != counts_.end()) {
        if (auto jt = it->second.find(next); jt != it->second.end()) count = jt->second;
        total = totals_.at(key);
    }
    return (count + 1.0) / (total + static_cast<double>(candidate_count()));
}

std::vector<TokenId> NGramModel::ids_of(const std::vector<Token>& tokens) const {
    std::vector<TokenId> ids;
    ids.reserve(tokens.size());
    for (const Token& t : tokens) {
        const auto id = token_id(t);
        if (!id) throw std::out_of_range("token not in vocabulary: " + t);
        ids.push_back(*id);
    }
    return ids;
}

std::vector<Token> NGramModel::tokens_of(std::span<const TokenId> ids) const {
    std::vector<Token> tokens;
    tokens.reserve(ids.size());
    for (TokenId id : ids) tokens.push_back(token(id));
    return tokens;
}

NGramModel train_ngram(const std::vector<std::vector<Token>>& corpus, int order) {
    if (order < 1) throw std::invalid_argument("order must be >= 1");
    bool any_token = false;
    for (const auto& doc : corpus) any_token = any_token || !doc.empty();
    if (!any_token) throw EmptyCorpusError("corpus has no tokens");

    NGramModel model;
    model.order_ = order;

    std::set<Token> uniq;
    for (const auto& doc : corpus) {
        for (const Token& t : doc) {
            if (t != NGramModel::kBos && t != NGramModel::kEos) uniq.insert(t);
        }
    }
    model.vocab_.assign(uniq.begin(), uniq.end());
    model.eos_id_ = static_cast<TokenId>(model.vocab_.size());
    model.vocab_.emplace_back(NGramModel::kEos);
    model.bos_id_ = static_cast<TokenId>(model.vocab_.size());
    model.vocab_.emplace_back(NGramModel::kBos);

    for (const auto& doc : corpus) {
        if (doc.empty()) continue;
        std::vector<TokenId> seq(static_cast<std::size_t>(order - 1), model.bos_id_);
        for (const Token& t : doc) seq.push_back(*model.token_id(t));
        seq.push_back(model.eos_id_);
        for (std::size_t i = 0; i + static_cast<std::size_t>(order) <= seq.size(); ++i) {
            std::vector<TokenId> key(seq.begin() + static_cast<std::ptrdiff_t>(i),
                                     seq.begin() + static_cast<std::ptrdiff_t>(i) +
                                         (order - 1));
            const TokenId target = seq[i + static_cast<std::size_t>(order) - 1];
            ++model.counts_[key][target];
            ++model.totals_[key];
        }
    }
    return model;
}

TokenId greedy_next(const NGramModel& model, std::span<const TokenId> context) {
    const std::vector<TokenId> key = model.context_key(context);
    // Add-one smoothing is uniform, so the argmax is the highest raw count;
    // an unseen context falls to the lowest candidate id.
    TokenId best = 0;
    int best_count = 0;
    if (auto it = model.counts_.find(key); it != model.counts_.end()) {
        for (const auto& [token, count] : it->second) {
            if (count > best_count) {
                best_count = count;
                best = token;
            }
        }
    }
    return best;
}

std::vector<TokenId> ar_decode(const NGramModel& model, std::span<const TokenId> prompt,
                               std::size_t max_len) {
    std::vector<TokenId> out;
    if (std::find(prompt.begin(), prompt.end(), model.eos_id()) != prompt.end()) {
        return out;
    }
    std::vector<TokenId> context(prompt.begin(), prompt.end());
    while (out.size() < max_len) {
        const TokenId next = greedy_next(model, context);
        out.push_back(next);
        context.push_back(next);
        if (next == model.eos_id()) break;
    }
    return out;
}

std::string_view to_string(DraftMode m) {
    switch (m) {
        case DraftMode::Oracle: return "oracle";
        case DraftMode::LowerOrder: return "lower_order";
        case DraftMode::Noisy: return "noisy";
    }
    return "oracle";
}

MtpResult mtp_decode(const NGramModel& target, const NGramModel* draft,
                     const MtpConfig& cfg, std::span<const TokenId> prompt) {
    if (cfg.k < 1) throw std::invalid_argument("k must be >= 1");
    if (cfg.draft_mode == DraftMode::LowerOrder) {
        if (draft == nullptr || draft->vocab() != target.vocab()) {
            throw VocabMismatchError("draft model must share the target vocabulary");
        }
    }

    MtpResult result;
    if (std::find(prompt.begin(), prompt.end(), target.eos_id()) != prompt.end()) {
        return result;
    }

    std::mt19937_64 rng(cfg.seed);
    std::bernoulli_distribution match(std::clamp(cfg.noise_accuracy, 0.0, 1.0));

    std::vector<TokenId> context(prompt.begin(), prompt.end());

    const auto propose = [&](std::span<const TokenId> draft_context) -> TokenId {
        switch (cfg.draft_mode) {
            case DraftMode::Oracle: return greedy_next(target, draft_context);
            case DraftMode::LowerOrder: return greedy_next(*draft, draft_context);
            case DraftMode::Noisy: {
                const TokenId correct = greedy_next(target, draft_context);
                if (match(rng)) return correct;
                return static_cast<TokenId>((correct + 1) % target.candidate_count());
            }
        }
        return greedy_next(target, draft_context);
    };

    while (result.tokens.size() < cfg.max_len) {
        // draft self-feeds to propose d1..dk
        std::vector<TokenId> working = context;
        std::vector<TokenId> drafts;
        drafts.reserve(static_cast<std::size_t>(cfg.k));
        for (int j = 0; j < cfg.k; ++j) {
            const TokenId d = propose(working);
            drafts.push_back(d);
            working.push_back(d);
        }

        // accept the longest prefix matching the target's greedy choices
        std::vector<TokenId> step_tokens;
        int accepted = 0;
        bool hit_eos = false;
        for (int j = 0; j < cfg.k; ++j) {
            const TokenId expect = greedy_next(target, context);
            if (drafts[static_cast<std::size_t>(j)] != expect) break;
            ++accepted;
            step_tokens.push_back(expect);
            context.push_back(expect);
            if (expect == target.eos_id()) {
                hit_eos = true;
                break;
            }
        }
        if (!hit_eos) {
            // one correction token from the target closes the step
            const TokenId corr = greedy_next(target, context);
            step_tokens.push_back(corr);
            context.push_back(corr);
            if (corr == target.eos_id()) hit_eos = true;
        }

        // emit, honoring max_len truncation
        const std::size_t room = cfg.max_len - result.tokens.size();
        if (step_tokens.size() > room) {
            step_tokens.resize(room);
            accepted = std::min(accepted, static_cast<int>(room));
        }
        result.tokens.insert(result.tokens.end(), step_tokens.begin(), step_tokens.end());
        result.trace.steps.push_back({accepted, static_cast<int>(step_tokens.size())});
        if (hit_eos || result.tokens.size() >= cfg.max_len) break;
    }

    result.trace.total_tokens = result.tokens.size();
    result.trace.mean_tokens_per_step =
        result.trace.steps.empty()
            ? 0.0
            : static_cast<double>(result.trace.total_tokens) /
                  static_cast<double>(result.trace.steps.size());
    return result;
}

AcceptanceStats acceptance_stats(std::span<const DecodeTrace> traces, int k) {
    AcceptanceStats stats;
    stats.k = k;
    for (const DecodeTrace& t : traces) {
        for (const StepRecord& s : t.steps) {
            ++stats.total_steps;
            stats.total_tokens += static_cast<std::size_t>(s.emitted);
            ++stats.accepted_histogram[s.accepted];
        }
    }
    if (stats.total_steps == 0) {
        throw EmptyInputError("no decode steps to aggregate");
    }
    stats.mean_tokens_per_step = static_cast<double>(stats.total_tokens) /
                                 static_cast<double>(stats.total_steps);
    return stats;
}

double speedup_estimate(const AcceptanceStats& stats, double cost_ratio) {
    if (cost_ratio < 0) throw std::invalid_argument("cost_ratio must be >= 0");
    return stats.mean_tokens_per_step / (1.0 + static_cast<double>(stats.k) * cost_ratio);
}

std::vector<std::vector<Token>> load_corpus(std::string_view text) {
    std::vector<std::vector<Token>> docs;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        const std::string_view line = text.substr(start, nl - start);
        std::vector<Token> tokens;
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) {
                ++i;
            }
            const std::size_t begin = i;
            while (i < line.size() &&
                   !std::isspace(static_cast<unsigned char>(line[i]))) {
                ++i;
            }
            if (i > begin) tokens.emplace_back(line.substr(begin, i - begin));
        }
        if (!tokens.empty()) docs.push_back(std::move(tokens));
        if (nl == text.size()) break;
        start = nl + 1;
    }
    return docs;
}

std::vector<std::vector<Token>> load_corpus_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open corpus file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return load_corpus(buf.str());
}

}  // namespace docforge::mtp

#include <doctest.h>

#include <random>

#include "docforge/mtp_sim.hpp"
#include "oracles.hpp"

using namespace docforge;
using mtp::acceptance_stats;
using mtp::ar_decode;
using mtp::DecodeTrace;
using mtp::DraftMode;
using mtp::greedy_next;
using mtp::load_corpus;
using mtp::MtpConfig;
using mtp::mtp_decode;
using mtp::NGramModel;
using mtp::speedup_estimate;
using mtp::Token;
using mtp::TokenId;
using mtp::train_ngram;

namespace {

std::vector<std::vector<Token>> corpus_of(std::initializer_list<const char*> lines) {
    std::string text;
    for (const char* line : lines) {
        text += line;
        text += "\n";
    }
    return load_corpus(text);
}

std::vector<std::vector<Token>> table_tag_corpus(int lines) {
    std::vector<std::vector<Token>> corpus;
    for (int i = 0; i < lines; ++i) {
        std::vector<Token> doc;
        doc.push_back("<table>");
        for (int r = 0; r < 3; ++r) {
            doc.push_back("<tr>");
            for (int c = 0; c < 2; ++c) {
                doc.push_back("<td>");
                doc.push_back("cell" + std::to_string((i + r + c) % 4));
                doc.push_back("</td>");
            }
            doc.push_back("</tr>");
        }
        doc.push_back("</table>");
        corpus.push_back(std::move(doc));
    }
    return corpus;
}

std::vector<std::vector<Token>> random_corpus(int lines, int line_len, int vocab,
                                              std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::vector<Token>> corpus;
    for (int i = 0; i < lines; ++i) {
        std::vector<Token> doc;
        for (int j = 0; j < line_len; ++j) {
            doc.push_back("w" + std::to_string(rng() % static_cast<std::uint64_t>(vocab)));
        }
        corpus.push_back(std::move(doc));
    }
    return corpus;
}

std::vector<TokenId> ids(const NGramModel& m, std::initializer_list<const char*> toks) {
    std::vector<Token> tokens;
    for (const char* t : toks) tokens.emplace_back(t);
    return m.ids_of(tokens);
}

}  // namespace

TEST_CASE("training counts alternation") {
    const auto model = train_ngram(corpus_of({"a b a b a b"}), 2);
    const auto ctx_a = ids(model, {"a"});
    CHECK(model.probability(ctx_a, *model.token_id("b")) >
          model.probability(ctx_a, *model.token_id("a")));
    CHECK(greedy_next(model, ctx_a) == *model.token_id("b"));
}

TEST_CASE("uniform corpus yields a uniform unigram and vocab[0] ties") {
    const auto model = train_ngram(corpus_of({"a b", "b a"}), 1);
    const std::vector<TokenId> empty_ctx;
    CHECK(model.probability(empty_ctx, *model.token_id("a")) ==
          model.probability(empty_ctx, *model.token_id("b")));
    // unseen context: every candidate ties, lowest vocab index wins
    const auto fresh = train_ngram(corpus_of({"z q"}), 3);
    CHECK(greedy_next(fresh, ids(fresh, {"q", "z"})) == 0);
    CHECK(fresh.vocab()[0] == "q");
}

TEST_CASE("probabilities sum to one over the candidate set") {
    const auto model = train_ngram(table_tag_corpus(4), 3);
    std::mt19937 rng(71);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<TokenId> ctx;
        for (int j = 0; j < 2; ++j) {
            ctx.push_back(static_cast<TokenId>(rng() % model.candidate_count()));
        }
        double total = 0.0;
        for (TokenId t = 0; t < model.candidate_count(); ++t) {
            total += model.probability(ctx, t);
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("trigram fixture continues table tags") {
    const auto model = train_ngram(corpus_of({"<tr> <td> <tr> <td> <tr> <td>"}), 3);
    CHECK(model.token(greedy_next(model, ids(model, {"<tr>"}))) == "<td>");

    const auto table_model = train_ngram(table_tag_corpus(3), 3);
    CHECK(table_model.token(greedy_next(table_model,
                                        ids(table_model, {"<table>", "<tr>"}))) ==
          "<td>");
}

TEST_CASE("ar_decode basics") {
    const auto model = train_ngram(corpus_of({"a b a b a b"}), 2);
    CHECK(ar_decode(model, ids(model, {"a"}), 0).empty());
    CHECK(model.tokens_of(ar_decode(model, ids(model, {"a"}), 4)) ==
          std::vector<Token>{"b", "a", "b", "a"});

    std::vector<TokenId> with_eos = ids(model, {"a"});
    with_eos.push_back(model.eos_id());
    CHECK(ar_decode(model, with_eos, 10).empty());
}

TEST_CASE("oracle drafts accept k tokens per step") {
    const auto model = train_ngram(corpus_of({"a b a b a b"}), 2);
    MtpConfig cfg;
    cfg.k = 10;
    cfg.max_len = 110;
    cfg.draft_mode = DraftMode::Oracle;
    const auto result = mtp_decode(model, nullptr, cfg, ids(model, {"a"}));
    REQUIRE(result.trace.steps.size() == 10);
    for (const auto& step : result.trace.steps) {
        CHECK(step.accepted == 10);
        CHECK(step.emitted == 11);
    }
    CHECK(result.trace.mean_tokens_per_step == 11.0);
    CHECK(result.tokens == ar_decode(model, ids(model, {"a"}), cfg.max_len));
}

TEST_CASE("zero-accuracy noisy drafts emit one token per step") {
    const auto model = train_ngram(corpus_of({"a b a b a b"}), 2);
    MtpConfig cfg;
    cfg.k = 10;
    cfg.max_len = 40;
    cfg.draft_mode = DraftMode::Noisy;
    cfg.noise_accuracy = 0.0;
    const auto result = mtp_decode(model, nullptr, cfg, ids(model, {"a"}));
    CHECK(result.trace.mean_tokens_per_step == 1.0);
    for (const auto& step : result.trace.steps) {
        CHECK(step.accepted == 0);
        CHECK(step.emitted == 1);
    }
    CHECK(result.tokens == ar_decode(model, ids(model, {"a"}), cfg.max_len));
}

TEST_CASE("losslessness across modes, seeds, and corpora") {
    const auto table = table_tag_corpus(6);
    const auto random = random_corpus(6, 60, 12, 5);
    for (const auto& corpus : {table, random}) {
        const auto target = train_ngram(corpus, 4);
        const auto draft = train_ngram(corpus, 2);
        for (const DraftMode mode :
             {DraftMode::Oracle, DraftMode::LowerOrder, DraftMode::Noisy}) {
            for (std::uint64_t seed = 0; seed < 10; ++seed) {
                std::mt19937_64 rng(seed);
                const auto& doc = corpus[rng() % corpus.size()];
                const std::vector<Token> prompt_tokens(
                    doc.begin(), doc.begin() + std::min<std::size_t>(3, doc.size()));
                const auto prompt = target.ids_of(prompt_tokens);

                MtpConfig cfg;
                cfg.k = 5 + static_cast<int>(seed % 4);
                cfg.max_len = 64;
                cfg.draft_mode = mode;
                cfg.noise_accuracy = 0.6;
                cfg.seed = seed;

                const auto result = mtp_decode(
                    target, mode == DraftMode::LowerOrder ? &draft : nullptr, cfg,
                    prompt);
                const auto reference = ar_decode(target, prompt, cfg.max_len);
                CHECK(result.tokens == reference);

                // bounds on every step
                std::size_t total = 0;
                for (const auto& step : result.trace.steps) {
                    CHECK(step.emitted >= 1);
                    CHECK(step.emitted <= cfg.k + 1);
                    CHECK(step.accepted >= 0);
                    CHECK(step.accepted <= cfg.k);
                    total += static_cast<std::size_t>(step.emitted);
                }
                CHECK(total == result.trace.total_tokens);
            }
        }
    }
}

TEST_CASE("the trace agrees with an independent re-simulation") {
    const auto corpus = table_tag_corpus(5);
    const auto target = train_ngram(corpus, 4);
    const auto draft = train_ngram(corpus, 2);
    for (const DraftMode mode : {DraftMode::LowerOrder, DraftMode::Noisy}) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            MtpConfig cfg;
            cfg.k = 10;
            cfg.max_len = 80;
            cfg.draft_mode = mode;
            cfg.noise_accuracy = 0.5;
            cfg.seed = seed;
            const auto prompt = ids(target, {"<table>", "<tr>"});

            const auto result = mtp_decode(
                target, mode == DraftMode::LowerOrder ? &draft : nullptr, cfg, prompt);
            const auto resim = oracles::resimulate_mtp(
                target, mode == DraftMode::LowerOrder ? &draft : nullptr, cfg,
                prompt);

            CHECK(result.tokens == resim.tokens);
            REQUIRE(result.trace.steps.size() == resim.steps.size());
            for (std::size_t i = 0; i < resim.steps.size(); ++i) {
                CHECK(result.trace.steps[i].accepted == resim.steps[i].accepted);
                CHECK(result.trace.steps[i].emitted == resim.steps[i].emitted);
            }
        }
    }
}

TEST_CASE("identical seeds and configs produce identical traces") {
    const auto corpus = random_corpus(4, 40, 10, 9);
    const auto target = train_ngram(corpus, 3);
    MtpConfig cfg;
    cfg.k = 6;
    cfg.max_len = 50;
    cfg.draft_mode = DraftMode::Noisy;
    cfg.noise_accuracy = 0.4;
    cfg.seed = 1234;
    const auto prompt = target.ids_of({corpus[0][0], corpus[0][1]});
    const auto a = mtp_decode(target, nullptr, cfg, prompt);
    const auto b = mtp_decode(target, nullptr, cfg, prompt);
    CHECK(a.tokens == b.tokens);
    REQUIRE(a.trace.steps.size() == b.trace.steps.size());
    for (std::size_t i = 0; i < a.trace.steps.size(); ++i) {
        CHECK(a.trace.steps[i].accepted == b.trace.steps[i].accepted);
    }
}

TEST_CASE("vocabulary mismatch is rejected") {
    const auto target = train_ngram(corpus_of({"a b c"}), 3);
    const auto other = train_ngram(corpus_of({"a b d"}), 2);
    MtpConfig cfg;
    cfg.draft_mode = DraftMode::LowerOrder;
    CHECK_THROWS_AS(mtp_decode(target, &other, cfg, {}), mtp::VocabMismatchError);
    CHECK_THROWS_AS(mtp_decode(target, nullptr, cfg, {}), mtp::VocabMismatchError);
}

TEST_CASE("acceptance stats aggregate traces") {
    DecodeTrace t1;
    t1.steps = {{10, 11}, {10, 11}};
    const auto oracle_stats = acceptance_stats(std::vector<DecodeTrace>{t1}, 10);
    CHECK(oracle_stats.mean_tokens_per_step == 11.0);
    CHECK(oracle_stats.accepted_histogram.at(10) == 2);

    DecodeTrace t2;
    t2.steps = {{0, 1}, {0, 1}, {0, 1}};
    CHECK(acceptance_stats(std::vector<DecodeTrace>{t2}, 10).mean_tokens_per_step == 1.0);

    DecodeTrace t3;
    t3.steps = {{2, 3}, {0, 1}, {4, 5}};  // 9 tokens over 3 steps
    const auto mixed = acceptance_stats(std::vector<DecodeTrace>{t2, t3}, 10);
    CHECK(mixed.mean_tokens_per_step == doctest::Approx((3.0 + 9.0) / 6.0));

    CHECK_THROWS_AS(acceptance_stats(std::vector<DecodeTrace>{}, 10),
                    mtp::EmptyInputError);
}

TEST_CASE("speedup estimate") {
    mtp::AcceptanceStats stats;
    stats.k = 10;
    stats.mean_tokens_per_step = 5.2;
    CHECK(speedup_estimate(stats, 0.0) == doctest::Approx(5.2));

    stats.mean_tokens_per_step = 1.0;
    CHECK(speedup_estimate(stats, 0.0) <= 1.0);
    CHECK(speedup_estimate(stats, 0.3) <= 1.0);

    stats.mean_tokens_per_step = 6.0;
    CHECK(speedup_estimate(stats, 0.05) == doctest::Approx(4.0));
}

TEST_CASE("structured corpora accept more draft tokens than random ones") {
    const auto structured = table_tag_corpus(8);
    const auto random = random_corpus(8, 60, 30, 17);

    const auto run = [](const std::vector<std::vector<Token>>& corpus) {
        const auto target = train_ngram(corpus, 4);
        const auto draft = train_ngram(corpus, 2);
        std::vector<DecodeTrace> traces;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            MtpConfig cfg;
            cfg.k = 10;
            cfg.max_len = 120;
            cfg.draft_mode = DraftMode::LowerOrder;
            cfg.seed = seed;
            std::mt19937_64 rng(seed);
            const auto& doc = corpus[rng() % corpus.size()];
            const std::vector<Token> prompt_tokens(
                doc.begin(), doc.begin() + std::min<std::size_t>(2, doc.size()));
            traces.push_back(
                mtp_decode(target, &draft, cfg, target.ids_of(prompt_tokens)).trace);
        }
        return acceptance_stats(traces, 10).mean_tokens_per_step;
    };

    const double structured_mean = run(structured);
    const double random_mean = run(random);
    CHECK(structured_mean > random_mean);
}

TEST_CASE("corpus loading tokenizes by whitespace per line") {
    const auto docs = load_corpus("a b  c\n\n<tr>\t<td>\n");
    REQUIRE(docs.size() == 2);
    CHECK(docs[0] == std::vector<Token>{"a", "b", "c"});
    CHECK(docs[1] == std::vector<Token>{"<tr>", "<td>"});
}

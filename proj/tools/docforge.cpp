// docforge: layout-manifest parsing pipeline, structured-output metrics and
// rewards, and an MTP draft-and-verify decoding simulator.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "docforge/assemble.hpp"
#include "docforge/config.hpp"
#include "docforge/doc_model.hpp"
#include "docforge/edit_distance.hpp"
#include "docforge/layout.hpp"
#include "docforge/metrics.hpp"
#include "docforge/mtp_sim.hpp"
#include "docforge/recognize.hpp"
#include "docforge/reward.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace docforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 2;
constexpr int kExitBackendFailure = 3;
constexpr int kExitPropertyViolation = 4;

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void emit_report(const json& report) { std::cout << report.dump() << "\n"; }

int fail_input(const std::string& message) {
    std::cerr << "error: " << message << "\n";
    return kExitInputError;
}

struct ParseArgs {
    std::string manifest;
    std::string images_dir;
    std::string config_path;
    std::string backend_kind;
    std::string fixture;
    std::string endpoint;
    std::string model_name;
    std::string output_dir;
    int concurrency = 0;
    int gap_threshold = 0;
};

cli::RunConfig resolve_config(const ParseArgs& a) {
    cli::RunConfig cfg;
    std::string config_path = a.config_path;
    if (config_path.empty()) {
        if (const char* env = std::getenv("DOCFORGE_CONFIG")) config_path = env;
    }
    if (!config_path.empty()) cfg = cli::load_config_file(config_path, std::move(cfg));

    // flags override file values override defaults
    if (!a.backend_kind.empty()) {
        cfg.backend.kind = a.backend_kind == "remote" ? recognize::BackendKind::Remote
                                                      : recognize::BackendKind::Mock;
    }
    if (!a.fixture.empty()) cfg.backend.fixture_path = a.fixture;
    if (!a.endpoint.empty()) cfg.backend.endpoint = a.endpoint;
    if (!a.model_name.empty()) cfg.backend.model_name = a.model_name;
    if (!a.images_dir.empty()) cfg.backend.images_dir = a.images_dir;
    if (!a.output_dir.empty()) cfg.output_dir = a.output_dir;
    if (a.concurrency > 0) cfg.concurrency = a.concurrency;
    if (a.gap_threshold > 0) cfg.layout_gap_threshold = a.gap_threshold;
    return cfg;
}

int cmd_parse(const ParseArgs& args) {
    cli::RunConfig cfg;
    try {
        cfg = resolve_config(args);
    } catch (const cli::ConfigFileError& e) {
        return fail_input(e.what());
    }

    const auto text = read_file(args.manifest);
    if (!text) return fail_input("NotFound: manifest " + args.manifest);

    layout::ManifestParseResult parsed;
    try {
        parsed = layout::parse_manifest(*text);
    } catch (const layout::ManifestError& e) {
        return fail_input(e.what());
    }
    for (const std::string& w : parsed.warnings) std::cerr << "warning: " << w << "\n";

    std::unique_ptr<recognize::Backend> backend;
    try {
        backend = recognize::make_backend(cfg.backend);
    } catch (const recognize::ConfigError& e) {
        return fail_input(e.what());
    }

    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) return fail_input("cannot create output dir: " + cfg.output_dir);

    std::size_t total_regions = 0;
    std::size_t backend_errors = 0;
    std::size_t skipped = 0;
    json outputs = json::array();

    for (const Page& page : parsed.page_set.pages) {
        const layout::ReadingOrder order =
            layout::infer_reading_order(page, cfg.layout_gap_threshold);
        const auto recognized =
            recognize::recognize_page(*backend, page, order, cfg.concurrency,
                                      recognize::RetryPolicy::from(cfg.backend));
        for (const RecognizedRegion& r : recognized) {
            ++total_regions;
            if (r.status.kind == RecognitionStatus::Kind::BackendError) {
                ++backend_errors;
                std::cerr << "backend error: page " << page.page_id << " region "
                          << r.region_id << ": " << r.status.detail << "\n";
            } else if (r.status.kind == RecognitionStatus::Kind::Skipped) {
                ++skipped;
            }
        }

        const assemble::AssembledDocument doc = assemble::merge(page, order, recognized);
        const std::string stem = cfg.output_dir + "/" + page.page_id;
        {
            std::ofstream md(stem + ".md", std::ios::binary);
            md << assemble::emit_markdown(doc);
        }
        {
            std::ofstream js(stem + ".json", std::ios::binary);
            js << assemble::emit_json(doc);
        }
        outputs.push_back(stem + ".md");
        outputs.push_back(stem + ".json");
    }

    json report = json::object();
    report["backend_errors"] = backend_errors;
    report["outputs"] = outputs;
    report["pages"] = parsed.page_set.pages.size();
    report["regions"] = total_regions;
    report["skipped"] = skipped;
    emit_report(report);

    if (total_regions > 0 && backend_errors == total_regions) {
        std::cerr << "error: every region failed on the backend\n";
        return kExitBackendFailure;
    }
    return kExitOk;
}

layout::ReadingOrder order_from_text(const std::string& text) {
    layout::ReadingOrder order;
    std::istringstream in(text);
    std::string id;
    while (in >> id) order.ordered_region_ids.push_back(id);
    return order;
}

int cmd_eval(const std::string& task, const std::string& pred_path,
             const std::string& gold_path) {
    const auto pred = read_file(pred_path);
    if (!pred) return fail_input("NotFound: pred " + pred_path);
    const auto gold = read_file(gold_path);
    if (!gold) return fail_input("NotFound: gold " + gold_path);

    json report = json::object();
    report["task"] = task;
    try {
        if (task == "text") {
            report["edit_distance"] = metrics::levenshtein(*pred, *gold);
            report["score"] = metrics::normalized_edit_distance(*pred, *gold);
        } else if (task == "table") {
            report["score"] = metrics::teds(*pred, *gold);
            report["teds_s"] = metrics::teds_s(*pred, *gold);
        } else if (task == "formula") {
            const auto tp = reward::tokenize_latex(*pred);
            const auto tg = reward::tokenize_latex(*gold);
            const std::size_t longest = std::max(tp.size(), tg.size());
            const std::size_t dist = sequence_edit_distance(tp, tg);
            report["token_edit_distance"] = dist;
            report["latex_valid"] = reward::validate_latex(*pred).ok;
            report["score"] =
                longest == 0 ? 1.0
                             : 1.0 - static_cast<double>(dist) /
                                         static_cast<double>(longest);
        } else if (task == "order") {
            report["score"] =
                layout::reading_order_edit(order_from_text(*pred), order_from_text(*gold));
        } else if (task == "kie") {
            const metrics::F1Report f1 = metrics::field_f1(*pred, *gold);
            report["precision"] = f1.precision;
            report["recall"] = f1.recall;
            report["true_positives"] = f1.true_positives;
            report["false_positives"] = f1.false_positives;
            report["false_negatives"] = f1.false_negatives;
            report["score"] = f1.f1;
        } else {
            return fail_input("unknown eval task: " + task);
        }
    } catch (const metrics::GoldParseError& e) {
        return fail_input(e.what());
    } catch (const layout::IdMismatchError& e) {
        return fail_input(e.what());
    }
    emit_report(report);
    return kExitOk;
}

json reward_report_to_json(const reward::RewardReport& r) {
    json out = json::object();
    out["task"] = reward::to_string(r.task);
    out["accuracy_term"] = r.accuracy_term;
    out["validity"] = json::object();
    for (const auto& [name, ok] : r.validity) out["validity"][name] = ok;
    out["penalties"] = json::object();
    for (const auto& [name, value] : r.penalties) out["penalties"][name] = value;
    out["reward"] = r.reward;
    return out;
}

int cmd_reward(const std::string& task, const std::string& pred_path,
               const std::string& gold_path, const std::string& schema_path,
               const std::string& config_path) {
    reward::RewardWeights weights;
    try {
        cli::RunConfig cfg;
        std::string path = config_path;
        if (path.empty()) {
            if (const char* env = std::getenv("DOCFORGE_CONFIG")) path = env;
        }
        if (!path.empty()) cfg = cli::load_config_file(path, std::move(cfg));
        weights = cfg.reward_weights;
    } catch (const cli::ConfigFileError& e) {
        return fail_input(e.what());
    }

    const auto pred = read_file(pred_path);
    if (!pred) return fail_input("NotFound: pred " + pred_path);
    const auto gold = read_file(gold_path);
    if (!gold) return fail_input("NotFound: gold " + gold_path);

    reward::RewardReport report;
    try {
        if (task == "text") {
            report = reward::reward_text(*pred, *gold, weights);
        } else if (task == "formula") {
            report = reward::reward_formula(*pred, *gold, weights);
        } else if (task == "table") {
            report = reward::reward_table(*pred, *gold, weights);
        } else if (task == "kie") {
            if (schema_path.empty()) return fail_input("kie reward requires --schema");
            const auto schema_text = read_file(schema_path);
            if (!schema_text) return fail_input("NotFound: schema " + schema_path);
            const reward::KieSchema schema = reward::parse_kie_schema(*schema_text);
            report = reward::reward_kie(*pred, *gold, schema, weights);
        } else {
            return fail_input("unknown reward task: " + task);
        }
    } catch (const metrics::GoldParseError& e) {
        return fail_input(e.what());
    } catch (const reward::GoldInvalidError& e) {
        return fail_input(e.what());
    } catch (const reward::SchemaParseError& e) {
        return fail_input(e.what());
    }
    emit_report(reward_report_to_json(report));
    return kExitOk;
}

struct MtpBenchArgs {
    std::string corpus;
    int k = 10;
    int target_order = 4;
    int draft_order = 2;
    int seeds = 20;
    std::string draft_mode = "lower-order";
    double noise_p = 0.5;
    int max_len = 200;
};

int cmd_mtp_bench(const MtpBenchArgs& args) {
    if (args.seeds < 1) return fail_input("seeds must be >= 1");

    std::vector<std::vector<mtp::Token>> corpus;
    try {
        corpus = mtp::load_corpus_file(args.corpus);
    } catch (const std::exception& e) {
        return fail_input(e.what());
    }

    mtp::NGramModel target;
    mtp::NGramModel draft;
    mtp::MtpConfig cfg;
    cfg.k = args.k;
    cfg.max_len = static_cast<std::size_t>(args.max_len);
    cfg.noise_accuracy = args.noise_p;
    try {
        target = mtp::train_ngram(corpus, args.target_order);
        if (args.draft_mode == "oracle") {
            cfg.draft_mode = mtp::DraftMode::Oracle;
        } else if (args.draft_mode == "noisy") {
            cfg.draft_mode = mtp::DraftMode::Noisy;
        } else if (args.draft_mode == "lower-order") {
            cfg.draft_mode = mtp::DraftMode::LowerOrder;
            draft = mtp::train_ngram(corpus, args.draft_order);
        } else {
            return fail_input("unknown draft mode: " + args.draft_mode);
        }
    } catch (const mtp::EmptyCorpusError& e) {
        return fail_input(e.what());
    }

    std::vector<mtp::DecodeTrace> traces;
    std::size_t violations = 0;
    for (int run = 0; run < args.seeds; ++run) {
        // seeded prompt: a document start drawn by the run index
        std::mt19937_64 rng(static_cast<std::uint64_t>(run));
        const auto& doc = corpus[rng() % corpus.size()];
        std::vector<mtp::Token> prompt_tokens(
            doc.begin(), doc.begin() + std::min<std::size_t>(4, doc.size()));
        const std::vector<mtp::TokenId> prompt = target.ids_of(prompt_tokens);

        cfg.seed = static_cast<std::uint64_t>(run);
        const mtp::MtpResult result = mtp::mtp_decode(
            target, cfg.draft_mode == mtp::DraftMode::LowerOrder ? &draft : nullptr,
            cfg, prompt);
        const std::vector<mtp::TokenId> reference =
            mtp::ar_decode(target, prompt, cfg.max_len);
        if (result.tokens != reference) ++violations;
        traces.push_back(result.trace);
    }

    const mtp::AcceptanceStats stats = mtp::acceptance_stats(traces, cfg.k);
    json report = json::object();
    report["k"] = stats.k;
    report["draft_mode"] = mtp::to_string(cfg.draft_mode);
    report["runs"] = args.seeds;
    report["mean_tokens_per_step"] = stats.mean_tokens_per_step;
    report["losslessness_violations"] = violations;
    json hist = json::object();
    for (const auto& [accepted, count] : stats.accepted_histogram) {
        hist[std::to_string(accepted)] = count;
    }
    report["histogram"] = hist;
    json speedups = json::object();
    for (double r : {0.0, 0.02, 0.05, 0.1}) {
        std::ostringstream key;
        key << r;
        speedups[key.str()] = mtp::speedup_estimate(stats, r);
    }
    report["speedup_at_r"] = speedups;
    emit_report(report);

    if (violations > 0) {
        std::cerr << "error: " << violations << " losslessness violations\n";
        return kExitPropertyViolation;
    }
    return kExitOk;
}

struct BenchArgs {
    std::string manifest_dir;
    int latency_ms = 100;
    int concurrency = 4;
    std::string fixture;
};

int cmd_bench(const BenchArgs& args) {
    if (args.concurrency < 1) return fail_input("concurrency must be >= 1");

    std::vector<Page> pages;
    std::error_code ec;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(args.manifest_dir, ec)) {
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    if (ec) return fail_input("cannot read manifest dir: " + args.manifest_dir);
    std::sort(files.begin(), files.end());
    for (const fs::path& f : files) {
        const auto text = read_file(f.string());
        if (!text) return fail_input("NotFound: " + f.string());
        try {
            const auto parsed = layout::parse_manifest(*text);
            pages.insert(pages.end(), parsed.page_set.pages.begin(),
                         parsed.page_set.pages.end());
        } catch (const layout::ManifestError& e) {
            return fail_input(f.string() + ": " + e.what());
        }
    }
    if (pages.empty()) return fail_input("no pages to benchmark");

    std::map<std::string, std::string> fixture;
    if (!args.fixture.empty()) {
        int fixture_latency = 0;  // the --latency-ms flag wins
        try {
            fixture = recognize::load_mock_fixture(args.fixture, fixture_latency);
        } catch (const recognize::ConfigError& e) {
            return fail_input(e.what());
        }
    }
    recognize::MockBackend backend(fixture, args.latency_ms);

    // All regions across all pages share one bounded pool, so page-level
    // work overlaps exactly like region-level work.
    struct Item {
        const Page* page;
        const Region* region;
    };
    std::vector<Item> items;
    for (const Page& p : pages) {
        for (const Region& r : p.regions) items.push_back({&p, &r});
    }

    using clock = std::chrono::steady_clock;
    std::vector<clock::time_point> finished(items.size());
    const auto t0 = clock::now();

    std::atomic<std::size_t> next{0};
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(args.concurrency), items.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (std::size_t i = next.fetch_add(1); i < items.size();
                 i = next.fetch_add(1)) {
                const recognize::Prompt prompt =
                    recognize::prompt_for_category(items[i].region->category);
                backend.recognize(*items[i].region, *items[i].page, prompt);
                finished[i] = clock::now();
            }
        });
    }
    for (std::thread& t : pool) t.join();
    const auto t1 = clock::now();

    const double wall_seconds =
        std::chrono::duration_cast<std::chrono::duration<double>>(t1 - t0).count();

    json latencies = json::object();
    for (const Page& p : pages) {
        clock::time_point last = t0;
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (items[i].page == &p && finished[i] > last) last = finished[i];
        }
        latencies[p.page_id] =
            std::chrono::duration_cast<std::chrono::duration<double>>(last - t0).count();
    }

    json report = json::object();
    report["concurrency"] = args.concurrency;
    report["input_kind"] = "manifest";  // reserved for future pdf support
    report["latency_ms"] = args.latency_ms;
    report["pages_processed"] = pages.size();
    report["pages_per_second"] =
        wall_seconds > 0 ? static_cast<double>(pages.size()) / wall_seconds : 0.0;
    report["per_page_latency_s"] = latencies;
    report["wall_seconds"] = wall_seconds;
    emit_report(report);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"document parsing pipeline, metrics, rewards, and MTP simulator"};
    app.require_subcommand(1);

    ParseArgs parse_args;
    CLI::App* parse = app.add_subcommand("parse", "parse a layout manifest to md/json");
    parse->add_option("manifest", parse_args.manifest, "layout manifest JSON")->required();
    parse->add_option("--images", parse_args.images_dir, "directory of region images");
    parse->add_option("--config", parse_args.config_path, "config file (INI)");
    parse->add_option("--backend", parse_args.backend_kind, "mock | remote");
    parse->add_option("--fixture", parse_args.fixture, "mock fixture JSON");
    parse->add_option("--endpoint", parse_args.endpoint, "remote base URL");
    parse->add_option("--model", parse_args.model_name, "remote model name");
    parse->add_option("--output-dir", parse_args.output_dir, "output directory");
    parse->add_option("--concurrency", parse_args.concurrency, "worker pool size");
    parse->add_option("--gap-threshold", parse_args.gap_threshold,
                      "XY-cut minimum gap (pixels)");

    std::string eval_task, eval_pred, eval_gold;
    CLI::App* eval = app.add_subcommand("eval", "score a prediction against gold");
    eval->add_option("task", eval_task, "text | table | formula | order | kie")
        ->required();
    eval->add_option("pred", eval_pred, "prediction file")->required();
    eval->add_option("gold", eval_gold, "gold file")->required();

    std::string reward_task, reward_pred, reward_gold, reward_schema, reward_config;
    CLI::App* rew = app.add_subcommand("reward", "task-aware reward report");
    rew->add_option("task", reward_task, "text | formula | table | kie")->required();
    rew->add_option("pred", reward_pred, "prediction file")->required();
    rew->add_option("gold", reward_gold, "gold file")->required();
    rew->add_option("--schema", reward_schema, "KIE schema file");
    rew->add_option("--config", reward_config, "config file (INI)");

    MtpBenchArgs mtp_args;
    CLI::App* mtpb = app.add_subcommand("mtp-bench", "MTP decoding simulation");
    mtpb->add_option("corpus", mtp_args.corpus, "corpus file, one document per line")
        ->required();
    mtpb->add_option("--k", mtp_args.k, "draft tokens per step");
    mtpb->add_option("--target-order", mtp_args.target_order, "target n-gram order");
    mtpb->add_option("--draft-order", mtp_args.draft_order, "draft n-gram order");
    mtpb->add_option("--seeds", mtp_args.seeds, "number of seeded runs");
    mtpb->add_option("--draft-mode", mtp_args.draft_mode,
                     "oracle | lower-order | noisy");
    mtpb->add_option("--noise-p", mtp_args.noise_p, "noisy draft per-offset accuracy");
    mtpb->add_option("--max-len", mtp_args.max_len, "decode length cap");

    BenchArgs bench_args;
    CLI::App* bench = app.add_subcommand("bench", "mock-backend throughput benchmark");
    bench->add_option("manifest_dir", bench_args.manifest_dir,
                      "directory of manifest JSON files")
        ->required();
    bench->add_option("--latency-ms", bench_args.latency_ms, "injected mock latency");
    bench->add_option("--concurrency", bench_args.concurrency, "worker pool size");
    bench->add_option("--fixture", bench_args.fixture, "mock fixture JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (parse->parsed()) return cmd_parse(parse_args);
        if (eval->parsed()) return cmd_eval(eval_task, eval_pred, eval_gold);
        if (rew->parsed()) {
            return cmd_reward(reward_task, reward_pred, reward_gold, reward_schema,
                              reward_config);
        }
        if (mtpb->parsed()) return cmd_mtp_bench(mtp_args);
        if (bench->parsed()) return cmd_bench(bench_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitInputError;
}

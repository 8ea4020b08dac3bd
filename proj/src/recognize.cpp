#include "docforge/recognize.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace docforge::recognize {

using nlohmann::json;

RecognitionTask task_for_category(Category c) {
    switch (c) {
        case Category::Table: return RecognitionTask::Table;
        case Category::Formula: return RecognitionTask::Formula;
        default: return RecognitionTask::Text;
    }
}

Prompt prompt_for_task(RecognitionTask task,
                       const std::optional<reward::KieSchema>& schema) {
    switch (task) {
        case RecognitionTask::Text: return {"Text Recognition:", std::nullopt};
        case RecognitionTask::Table: return {"Table Recognition:", std::nullopt};
        case RecognitionTask::Formula: return {"Formula Recognition:", std::nullopt};
        case RecognitionTask::Kie: {
            if (!schema) {
                throw SchemaRequiredError("KIE prompt requires a schema");
            }
            const std::string serialized = serialize_kie_schema(*schema);
            Prompt p;
            p.text =
                "Key Information Extraction:\n"
                "Extract the requested fields and answer with strict JSON matching "
                "this schema:\n" +
                serialized;
            p.schema_json = serialized;
            return p;
        }
    }
    return {"Text Recognition:", std::nullopt};
}

Prompt prompt_for_category(Category c) { return prompt_for_task(task_for_category(c)); }

// ---------------------------------------------------------------------------
// Mock backend
// ---------------------------------------------------------------------------

std::map<std::string, std::string> load_mock_fixture(const std::string& path,
                                                     int& latency_ms) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open fixture file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    json doc;
    try {
        doc = json::parse(buf.str());
    } catch (const json::parse_error& e) {
        throw ConfigError("fixture is not valid JSON: " + std::string(e.what()));
    }
    if (!doc.is_object()) throw ConfigError("fixture must be a JSON object");

    std::map<std::string, std::string> fixture;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (it.key() == "__latency_ms") {
            latency_ms = it.value().get<int>();
            continue;
        }
        if (!it.value().is_string()) {
            throw ConfigError("fixture entry \"" + it.key() + "\" must be a string");
        }
        fixture[it.key()] = it.value().get<std::string>();
    }
    return fixture;
}

MockBackend::MockBackend(const BackendConfig& config) {
    fixture_ = load_mock_fixture(config.fixture_path, latency_ms_);
}

MockBackend::MockBackend(std::map<std::string, std::string> fixture, int latency_ms)
    : fixture_(std::move(fixture)), latency_ms_(latency_ms) {}

RecognizedRegion MockBackend::recognize(const Region& region, const Page&,
                                        const Prompt&) {
    const int now = in_flight_.fetch_add(1) + 1;
    int seen = max_in_flight_.load();
    while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
    }
    if (latency_ms_ > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(latency_ms_));
    }
    in_flight_.fetch_sub(1);

    RecognizedRegion out;
    out.region_id = region.id;
    out.category = region.category;
    out.format = format_for_category(region.category);
    auto it = fixture_.find(region.id);
    if (it == fixture_.end()) {
        out.status = RecognitionStatus::skipped("no fixture");
        return out;
    }
    out.content = it->second;
    out.status = RecognitionStatus::ok();
    return out;
}

// ---------------------------------------------------------------------------
// Remote backend
// ---------------------------------------------------------------------------

std::string base64_encode(std::string_view bytes) {
    static constexpr char kAlphabet[] =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 3 <= bytes.size()) {
        const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                           (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                           static_cast<unsigned char>(bytes[i + 2]);
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += kAlphabet[(v >> 6) & 63];
        out += kAlphabet[v & 63];
        i += 3;
    }
    const std::size_t rest = bytes.size() - i;
    if (rest == 1) {
        const unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += "==";
    } else if (rest == 2) {
        const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                           (static_cast<unsigned char>(bytes[i + 1]) << 8);
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += kAlphabet[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

RemoteBackend::RemoteBackend(const BackendConfig& config) : config_(config) {}

RecognizedRegion RemoteBackend::recognize(const Region& region, const Page&,
                                          const Prompt& prompt) {
    RecognizedRegion out;
    out.region_id = region.id;
    out.category = region.category;
    out.format = format_for_category(region.category);

    if (!region.image_ref) {
        out.status = RecognitionStatus::backend_error("region has no image_ref");
        return out;
    }
    std::string image_path = *region.image_ref;
    if (!config_.images_dir.empty()) {
        image_path = config_.images_dir + "/" + image_path;
    }
    std::ifstream img(image_path, std::ios::binary);
    if (!img) {
        out.status = RecognitionStatus::backend_error("image not found: " + image_path);
        return out;
    }
    std::stringstream img_buf;
    img_buf << img.rdbuf();

    json body;
    body["model"] = config_.model_name;
    body["messages"] = json::array({json{
        {"role", "user"},
        {"content",
         json::array(
             {json{{"type", "text"}, {"text", prompt.text}},
              json{{"type", "image_url"},
                   {"image_url",
                    json{{"url", "data:image/png;base64," +
                                     base64_encode(img_buf.str())}}}}})}}});

    httplib::Client client(config_.endpoint);
    client.set_connection_timeout(0, config_.timeout_ms * 1000);
    client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
    httplib::Headers headers;
    if (!config_.bearer_token.empty()) {
        headers.emplace("Authorization", "Bearer " + config_.bearer_token);
    }

    auto res = client.Post("/v1/chat/completions", headers, body.dump(),
                           "application/json");
    if (!res) {
        out.status = RecognitionStatus::backend_error(
            "transport error: " + httplib::to_string(res.error()));
        return out;
    }
    if (res->status != 200) {
        out.status = RecognitionStatus::backend_error(
            "http status " + std::to_string(res->status));
        return out;
    }
    try {
        const json reply = json::parse(res->body);
        out.content = reply.at("choices").at(0).at("message").at("content")
                          .get<std::string>();
    } catch (const json::exception& e) {
        out.status =
            RecognitionStatus::backend_error("malformed completion: " + std::string(e.what()));
        return out;
    }
    out.status = RecognitionStatus::ok();
    return out;
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
    switch (config.kind) {
        case BackendKind::Mock:
            if (config.fixture_path.empty()) {
                throw ConfigError("mock backend requires fixture_path");
            }
            return std::make_unique<MockBackend>(config);
        case BackendKind::Remote:
            if (config.endpoint.empty() || config.model_name.empty()) {
                throw ConfigError("remote backend requires endpoint and model_name");
            }
            return std::make_unique<RemoteBackend>(config);
    }
    throw ConfigError("unknown backend kind");
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

RecognizedRegion recognize_region(Backend& backend, const Region& region,
                                  const Page& page, const Prompt& prompt,
                                  const RetryPolicy& retry) {
    RecognizedRegion result;
    int backoff_ms = retry.backoff_base_ms;
    for (int attempt = 0; attempt <= retry.max_retries; ++attempt) {
        if (attempt > 0 && backoff_ms > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
        try {
            result = backend.recognize(region, page, prompt);
        } catch (const std::exception& e) {
            result.region_id = region.id;
            result.category = region.category;
            result.format = format_for_category(region.category);
            result.content.clear();
            result.status = RecognitionStatus::backend_error(e.what());
        }
        if (result.status.kind != RecognitionStatus::Kind::BackendError) break;
    }
    return result;
}

std::vector<RecognizedRegion> recognize_page(Backend& backend, const Page& page,
                                             const layout::ReadingOrder& order,
                                             int concurrency,
                                             const RetryPolicy& retry) {
    if (concurrency < 1) throw std::invalid_argument("concurrency must be >= 1");

    std::map<std::string, const Region*> by_id;
    for (const Region& r : page.regions) by_id[r.id] = &r;
    if (order.ordered_region_ids.size() != page.regions.size()) {
        throw OrderMismatchError("reading order does not cover the page");
    }

    struct Task {
        const Region* region;
        Prompt prompt;
    };
    std::vector<Task> tasks;
    tasks.reserve(order.ordered_region_ids.size());
    for (const std::string& id : order.ordered_region_ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) {
            throw OrderMismatchError("reading order names unknown region: " + id);
        }
        tasks.push_back({it->second, prompt_for_category(it->second->category)});
    }

    std::vector<RecognizedRegion> results(tasks.size());
    std::atomic<std::size_t> next{0};

    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(concurrency), tasks.size());
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (std::size_t i = next.fetch_add(1); i < tasks.size();
                 i = next.fetch_add(1)) {
                results[i] = recognize_region(backend, *tasks[i].region, page,
                                              tasks[i].prompt, retry);
            }
        });
    }
    for (std::thread& t : pool) t.join();
    return results;
}

}  // namespace docforge::recognize

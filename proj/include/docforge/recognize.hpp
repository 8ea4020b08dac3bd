#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "docforge/doc_model.hpp"
#include "docforge/kie_schema.hpp"
#include "docforge/layout.hpp"

namespace docforge::recognize {

enum class BackendKind { Mock, Remote };

struct BackendConfig {
    BackendKind kind = BackendKind::Mock;
    std::string endpoint;      // Remote: base URL, e.g. http://127.0.0.1:8080
    std::string model_name;    // Remote
    int timeout_ms = 30000;
    int max_retries = 2;
    std::string fixture_path;  // Mock: JSON object region id -> output
    std::string images_dir;    // Remote: directory image_ref resolves against
    std::string bearer_token;  // optional Authorization pass-through
    int backoff_base_ms = 200; // doubled per retry, no jitter
};

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Prompt {
    std::string text;
    std::optional<std::string> schema_json;  // KIE only
};

enum class RecognitionTask { Text, Table, Formula, Kie };

RecognitionTask task_for_category(Category c);

class SchemaRequiredError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Verbatim task prompts; the KIE prompt embeds the serialized schema after a
// fixed instruction line and requires one.
Prompt prompt_for_task(RecognitionTask task,
                       const std::optional<reward::KieSchema>& schema = std::nullopt);

Prompt prompt_for_category(Category c);

// Thread-safe recognition backend; one call per region.
class Backend {
  public:
    virtual ~Backend() = default;
    virtual RecognizedRegion recognize(const Region& region, const Page& page,
                                       const Prompt& prompt) = 0;
};

// Fixture file: JSON object mapping region ids to outputs. The reserved key
// "__latency_ms" injects uniform latency per call. Throws ConfigError.
std::map<std::string, std::string> load_mock_fixture(const std::string& path,
                                                     int& latency_ms);

// Fixture-driven backend. The fixture maps region ids to outputs; the
// reserved key "__latency_ms" injects uniform latency per call.
class MockBackend final : public Backend {
  public:
    explicit MockBackend(const BackendConfig& config);
    MockBackend(std::map<std::string, std::string> fixture, int latency_ms);

    RecognizedRegion recognize(const Region& region, const Page& page,
                               const Prompt& prompt) override;

    int max_in_flight() const { return max_in_flight_.load(); }
    int latency_ms() const { return latency_ms_; }

  private:
    std::map<std::string, std::string> fixture_;
    int latency_ms_ = 0;
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};
};

// OpenAI-chat-completions-compatible HTTP backend. The region image is
// read from images_dir/image_ref and sent base64-encoded.
class RemoteBackend final : public Backend {
  public:
    explicit RemoteBackend(const BackendConfig& config);

    RecognizedRegion recognize(const Region& region, const Page& page,
                               const Prompt& prompt) override;

  private:
    BackendConfig config_;
};

// Validates the config invariants (Remote needs endpoint+model_name, Mock
// needs fixture_path) and constructs the backend. Throws ConfigError.
std::unique_ptr<Backend> make_backend(const BackendConfig& config);

struct RetryPolicy {
    int max_retries = 2;
    int backoff_base_ms = 200;

    static RetryPolicy from(const BackendConfig& c) {
        return {c.max_retries, c.backoff_base_ms};
    }
};

// One region through the backend; BackendError results are retried with
// exponential backoff, at most 1 + max_retries attempts in total.
RecognizedRegion recognize_region(Backend& backend, const Region& region,
                                  const Page& page, const Prompt& prompt,
                                  const RetryPolicy& retry = {});

class OrderMismatchError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Bounded worker pool over the page's regions. Results come back in reading
// order regardless of completion order; one failed region never aborts the
// others. Throws OrderMismatchError when `order` is not a permutation of the
// page's region ids.
std::vector<RecognizedRegion> recognize_page(Backend& backend, const Page& page,
                                             const layout::ReadingOrder& order,
                                             int concurrency,
                                             const RetryPolicy& retry = {});

std::string base64_encode(std::string_view bytes);

}  // namespace docforge::recognize

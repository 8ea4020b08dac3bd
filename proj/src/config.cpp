#include "docforge/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace docforge::cli {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

int to_int(std::string_view v, const std::string& key) {
    int out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
        throw ConfigFileError("config key " + key + ": expected integer, got \"" +
                              std::string(v) + "\"");
    }
    return out;
}

double to_double(std::string_view v, const std::string& key) {
    try {
        std::size_t used = 0;
        const double out = std::stod(std::string(v), &used);
        if (used != v.size()) throw std::invalid_argument("trailing");
        return out;
    } catch (const std::exception&) {
        throw ConfigFileError("config key " + key + ": expected number, got \"" +
                              std::string(v) + "\"");
    }
}

void require_range(bool ok, const std::string& key, const char* range) {
    if (!ok) throw ConfigFileError("config key " + key + ": must be " + range);
}

}  // namespace

RunConfig parse_config(std::string_view text, RunConfig base) {
    RunConfig cfg = std::move(base);
    std::string section;

    std::size_t line_start = 0;
    int line_no = 0;
    while (line_start <= text.size()) {
        std::size_t nl = text.find('\n', line_start);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = trim(text.substr(line_start, nl - line_start));
        ++line_no;
        const std::size_t next = nl + 1;

        if (line.empty() || line.front() == '#' || line.front() == ';') {
            if (nl == text.size()) break;
            line_start = next;
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigFileError("config line " + std::to_string(line_no) +
                                      ": unterminated section header");
            }
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section != "backend" && section != "pipeline" && section != "layout" &&
                section != "reward") {
                throw ConfigFileError("config line " + std::to_string(line_no) +
                                      ": unknown section [" + section + "]");
            }
        } else {
            const std::size_t eq = line.find('=');
            if (eq == std::string_view::npos) {
                throw ConfigFileError("config line " + std::to_string(line_no) +
                                      ": expected key = value");
            }
            const std::string key = std::string(trim(line.substr(0, eq)));
            const std::string_view value = trim(line.substr(eq + 1));
            const std::string qual = section.empty() ? key : section + "." + key;

            if (section == "backend") {
                if (key == "kind") {
                    if (value == "mock") {
                        cfg.backend.kind = recognize::BackendKind::Mock;
                    } else if (value == "remote") {
                        cfg.backend.kind = recognize::BackendKind::Remote;
                    } else {
                        throw ConfigFileError("config key " + qual +
                                              ": expected mock or remote");
                    }
                } else if (key == "endpoint") {
                    cfg.backend.endpoint = std::string(value);
                } else if (key == "model_name") {
                    cfg.backend.model_name = std::string(value);
                } else if (key == "timeout_ms") {
                    cfg.backend.timeout_ms = to_int(value, qual);
                    require_range(cfg.backend.timeout_ms > 0, qual, "positive");
                } else if (key == "max_retries") {
                    cfg.backend.max_retries = to_int(value, qual);
                    require_range(cfg.backend.max_retries >= 0, qual, "non-negative");
                } else if (key == "fixture_path") {
                    cfg.backend.fixture_path = std::string(value);
                } else if (key == "images_dir") {
                    cfg.backend.images_dir = std::string(value);
                } else if (key == "bearer_token") {
                    cfg.backend.bearer_token = std::string(value);
                } else if (key == "backoff_base_ms") {
                    cfg.backend.backoff_base_ms = to_int(value, qual);
                    require_range(cfg.backend.backoff_base_ms >= 0, qual, "non-negative");
                } else {
                    throw ConfigFileError("unknown config key " + qual);
                }
            } else if (section == "pipeline") {
                if (key == "concurrency") {
                    cfg.concurrency = to_int(value, qual);
                    require_range(cfg.concurrency >= 1, qual, ">= 1");
                } else if (key == "output_dir") {
                    cfg.output_dir = std::string(value);
                } else {
                    throw ConfigFileError("unknown config key " + qual);
                }
            } else if (section == "layout") {
                if (key == "gap_threshold") {
                    cfg.layout_gap_threshold = to_int(value, qual);
                    require_range(cfg.layout_gap_threshold >= 1, qual, ">= 1");
                } else {
                    throw ConfigFileError("unknown config key " + qual);
                }
            } else if (section == "reward") {
                double* slot = nullptr;
                if (key == "lambda_rep") slot = &cfg.reward_weights.lambda_rep;
                else if (key == "repetition_threshold")
                    slot = &cfg.reward_weights.repetition_threshold;
                else if (key == "per_field_penalty")
                    slot = &cfg.reward_weights.per_field_penalty;
                else if (key == "malformed_penalty")
                    slot = &cfg.reward_weights.malformed_penalty;
                else if (key == "kie_penalty_cap")
                    slot = &cfg.reward_weights.kie_penalty_cap;
                else
                    throw ConfigFileError("unknown config key " + qual);
                *slot = to_double(value, qual);
                require_range(*slot >= 0.0, qual, "non-negative");
                if (key == "repetition_threshold") {
                    require_range(*slot <= 1.0, qual, "in [0,1]");
                }
            } else {
                throw ConfigFileError("config line " + std::to_string(line_no) +
                                      ": key outside any section");
            }
        }
        if (nl == text.size()) break;
        line_start = next;
    }
    return cfg;
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigFileError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), std::move(base));
}

}  // namespace docforge::cli

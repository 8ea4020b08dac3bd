#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "docforge/recognize.hpp"
#include "docforge/reward.hpp"

namespace docforge::cli {

class ConfigFileError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Everything the pipeline commands read from flags, the config file, and
// defaults, in that precedence.
struct RunConfig {
    recognize::BackendConfig backend;
    int concurrency = 4;
    std::string output_dir = ".";
    reward::RewardWeights reward_weights;
    int layout_gap_threshold = 2;
};

// INI-style file: [section] headers, key = value lines, # comments.
// Sections: [backend], [pipeline], [layout], [reward]. Unknown keys are
// rejected; out-of-range values throw ConfigFileError.
RunConfig parse_config(std::string_view text, RunConfig base = {});

RunConfig load_config_file(const std::string& path, RunConfig base = {});

}  // namespace docforge::cli

#pragma once

#include <string>

#include "lsplat/training/trainer.hpp"

namespace lsplat {

/// Top-level run configuration, read from JSON. Every field has a default;
/// unknown keys and out-of-range values are rejected with the offending key
/// in the error message.
struct RunConfig {
    std::string scene_dir;        // scene bundle directory
    std::string init_checkpoint;  // starting model; empty = scene init.ckpt
    std::string out_dir = "out";
    TrainOptions options;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

/// Fully-populated JSON (defaults applied), suitable for re-parsing.
std::string emit_effective_config(const RunConfig& cfg);

}  // namespace lsplat

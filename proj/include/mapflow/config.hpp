#pragma once

#include "mapflow/coarse.hpp"
#include "mapflow/enhancer.hpp"
#include "mapflow/pde.hpp"
#include "mapflow/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace mapflow {

struct ScenesConfig {
    int size = 256;
    int train_count = 8;
    int enhancement_count = 1;
    int test_count = 1;
    SceneStyle style;
};

struct BaselineConfig {
    Scheme scheme = Scheme::PeronaMalik;
    float dt = 0.2f;
    int steps = 40;
    EdgeStopParams edge; // lambda <= 0 selects the per-image percentile default
};

// The one JSON document every command runs from. Unknown keys are rejected;
// ranges are validated before any work starts.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    bool strict = true;
    ScenesConfig scenes;
    DegradationSpec degradation;
    CoarseProviderConfig coarse_provider;
    CoarseTrainConfig coarse_training;
    EnhancerConfig enhancer;
    EnhancerTrainConfig enhancer_training;
    BaselineConfig baseline;
};

// Parses and validates; throws ConfigError with the offending key path.
RunConfig parse_run_config(const std::string& json_text);

// Reads the file, then applies the MAPFLOW_OUTPUT_DIR environment override.
RunConfig load_run_config(const std::filesystem::path& path);

std::string scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

} // namespace mapflow

#pragma once

#include "mapflow/autodiff.hpp"

#include <filesystem>

namespace mapflow {

// Checkpoint layout: a directory of named TSR tensors (parameter values plus
// one "<name>.<state>.tsr" per optimizer slot) and a manifest.json mapping
// names to shapes, listing optimizer state names and the step count.
void save_checkpoint(const std::filesystem::path& dir, const ParamStore& ps);

// Restores values (and optimizer state, when present) into a store that
// already has the parameters registered with matching shapes.
void load_checkpoint(const std::filesystem::path& dir, ParamStore& ps);

} // namespace mapflow

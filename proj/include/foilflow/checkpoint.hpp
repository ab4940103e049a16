#pragma once

#include <string>

#include "foilflow/flowmatch.hpp"
#include "foilflow/physics.hpp"

namespace foilflow::io {

inline constexpr int kCheckpointSchemaVersion = 1;

// Checkpoints are single self-describing JSON documents carrying the schema
// version, layer sizes, activation name, row-major weight and bias arrays,
// and the owning model's normalization statistics. Doubles round-trip
// exactly at the written precision.

void save_velocity_model(const flow::VelocityModel& model, const std::string& path);
flow::VelocityModel load_velocity_model(const std::string& path);

void save_surrogate_model(const physics::SurrogateModel& model,
                          const std::string& path);
physics::SurrogateModel load_surrogate_model(const std::string& path);

// "velocity" or "surrogate"; FormatError for anything else.
std::string checkpoint_kind(const std::string& path);

}  // namespace foilflow::io

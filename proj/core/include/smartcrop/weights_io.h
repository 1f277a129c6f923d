#pragma once

#include <string>

#include "smartcrop/model.h"

namespace smartcrop {

// Binary weight file: magic "SCWT", format version, model config, then
// every parameter tensor in declaration order as (name, rows, cols,
// row-major float64 payload). Little-endian throughout.
void save_weights(const DiffusionModel& model, const std::string& path);

// Rebuilds the model from a weight file. Throws std::runtime_error on
// bad magic, version, truncation, or tensors that do not match the
// stored config's layout.
DiffusionModel load_weights(const std::string& path);

}  // namespace smartcrop

#pragma once

#include <string>

#include "normkit/norm_layers.hpp"

namespace normkit {

/// Flat binary container for layer states, used by the golden-file
/// regression tests.
///
/// Layout: magic "NKT1" | u32 little-endian header length | JSON header
/// (field table: name, offset and count in f64 units, plus scalar fields)
/// | payload of little-endian f64 arrays.
void save_layer_state(const LayerState& state, const std::string& path);
LayerState load_layer_state(const std::string& path);

}  // namespace normkit

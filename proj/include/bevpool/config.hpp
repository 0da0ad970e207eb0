// SPDX-License-Identifier: Apache-2.0
#pragma once

// Plain-text configuration files.
//
// Grammar, one entry per line:
//
//   line    := blank | comment | entry
//   comment := '#' any*
//   entry   := key ws* '=' ws* value
//   key     := section '.' name | 'view.' index '.' name
//   value   := whitespace-separated tokens
//
// Recognized keys:
//
//   view.<i>.fx / fy / cx / cy   one number each (pixels)
//   view.<i>.rot                 9 numbers, camera-to-ego rotation, row-major
//   view.<i>.trans               3 numbers, camera-to-ego translation (m)
//   grid.lower                   3 numbers (m)
//   grid.voxel_size              3 numbers (m)
//   grid.dims                    3 integers nx ny nz
//   frustum.feat_h / feat_w / downsample        integers
//   frustum.depth_start / depth_end / depth_step  numbers (m)
//
// Views are numbered 0..N-1 without gaps. Keys of other sections are ignored
// by each reader, so one file can carry a rig, a grid, and a frustum.

#include "bevpool/geometry.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bevpool {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigEntry {
  std::string value;
  int line = 0;
};

using ConfigMap = std::map<std::string, ConfigEntry, std::less<>>;

ConfigMap parse_config(std::string_view text);
ConfigMap load_config(const std::string& path);

CameraRig rig_from_config(const ConfigMap& cfg);
VoxelGridSpec grid_from_config(const ConfigMap& cfg);
FrustumSpec frustum_from_config(const ConfigMap& cfg);

/// Serializers emit doubles with 17 significant digits, so parsing the text
/// back reproduces every value exactly.
std::string format_rig(const CameraRig& rig);
std::string format_grid(const VoxelGridSpec& grid);
std::string format_frustum(const FrustumSpec& spec);

std::string format_double(double v);

}  // namespace bevpool

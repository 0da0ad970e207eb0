// SPDX-License-Identifier: Apache-2.0
#include "bevpool/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace bevpool {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

[[noreturn]] void fail(const std::string& key, int line,
                       const std::string& what) {
  std::ostringstream os;
  os << "line " << line << ": " << key << ": " << what;
  throw ConfigError(os.str());
}

const ConfigEntry& require(const ConfigMap& cfg, const std::string& key) {
  auto it = cfg.find(key);
  if (it == cfg.end()) throw ConfigError("missing key '" + key + "'");
  return it->second;
}

std::vector<double> numbers(const ConfigMap& cfg, const std::string& key,
                            std::size_t count) {
  const ConfigEntry& e = require(cfg, key);
  const auto tokens = split_tokens(e.value);
  if (tokens.size() != count) {
    fail(key, e.line, "expected " + std::to_string(count) + " value(s)");
  }
  std::vector<double> out;
  for (std::string_view t : tokens) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size() || !std::isfinite(v)) {
      fail(key, e.line, "bad number '" + std::string(t) + "'");
    }
    out.push_back(v);
  }
  return out;
}

double number(const ConfigMap& cfg, const std::string& key) {
  return numbers(cfg, key, 1)[0];
}

int integer(const ConfigMap& cfg, const std::string& key) {
  const ConfigEntry& e = require(cfg, key);
  const std::string_view t = trim(e.value);
  int v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || p != t.data() + t.size()) {
    fail(key, e.line, "bad integer '" + std::string(t) + "'");
  }
  return v;
}

}  // namespace

ConfigMap parse_config(std::string_view text) {
  ConfigMap cfg;
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{}
                                        : text.substr(nl + 1);
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    const std::string key{trim(line.substr(0, eq))};
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    }
    auto [it, inserted] =
        cfg.emplace(key, ConfigEntry{std::string(trim(line.substr(eq + 1))),
                                     line_no});
    if (!inserted) fail(key, line_no, "duplicate key");
  }
  return cfg;
}

ConfigMap load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

CameraRig rig_from_config(const ConfigMap& cfg) {
  CameraRig rig;
  for (int i = 0;; ++i) {
    const std::string prefix = "view." + std::to_string(i) + ".";
    if (cfg.find(prefix + "fx") == cfg.end()) break;
    CameraView v;
    v.fx = number(cfg, prefix + "fx");
    v.fy = number(cfg, prefix + "fy");
    v.cx = number(cfg, prefix + "cx");
    v.cy = number(cfg, prefix + "cy");
    const auto r = numbers(cfg, prefix + "rot", 9);
    for (int k = 0; k < 9; ++k) v.rot(k / 3, k % 3) = r[k];
    const auto t = numbers(cfg, prefix + "trans", 3);
    v.trans = {t[0], t[1], t[2]};
    rig.views.push_back(v);
  }
  // Anything under view.* must belong to a parsed view.
  for (const auto& [key, entry] : cfg) {
    if (key.rfind("view.", 0) != 0) continue;
    const auto dot = key.find('.', 5);
    int idx = -1;
    const char* b = key.data() + 5;
    const char* e = key.data() + (dot == std::string::npos ? key.size() : dot);
    auto [p, ec] = std::from_chars(b, e, idx);
    if (ec != std::errc{} || p != e || idx < 0 ||
        idx >= rig.num_views() || dot == std::string::npos) {
      fail(key, entry.line, "view keys must be numbered 0..N-1 without gaps");
    }
    static constexpr std::string_view kFields[] = {"fx",  "fy",  "cx",
                                                   "cy",  "rot", "trans"};
    const std::string_view field = std::string_view(key).substr(dot + 1);
    if (std::find(std::begin(kFields), std::end(kFields), field) ==
        std::end(kFields)) {
      fail(key, entry.line, "unknown view field");
    }
  }
  try {
    validate_rig(rig);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return rig;
}

VoxelGridSpec grid_from_config(const ConfigMap& cfg) {
  VoxelGridSpec grid;
  const auto lo = numbers(cfg, "grid.lower", 3);
  const auto sz = numbers(cfg, "grid.voxel_size", 3);
  const auto dims = numbers(cfg, "grid.dims", 3);
  grid.lower = {lo[0], lo[1], lo[2]};
  grid.voxel_size = {sz[0], sz[1], sz[2]};
  for (int a = 0; a < 3; ++a) {
    if (dims[a] != std::floor(dims[a]) || dims[a] < 1 || dims[a] > 1e9) {
      fail("grid.dims", require(cfg, "grid.dims").line,
           "dims must be positive integers");
    }
    grid.dims[a] = static_cast<int>(dims[a]);
  }
  try {
    validate_grid(grid);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return grid;
}

FrustumSpec frustum_from_config(const ConfigMap& cfg) {
  FrustumSpec spec;
  spec.feat_h = integer(cfg, "frustum.feat_h");
  spec.feat_w = integer(cfg, "frustum.feat_w");
  spec.downsample = integer(cfg, "frustum.downsample");
  spec.depth_start = number(cfg, "frustum.depth_start");
  spec.depth_end = number(cfg, "frustum.depth_end");
  spec.depth_step = number(cfg, "frustum.depth_step");
  try {
    validate_frustum_spec(spec);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v,
                               std::chars_format::general, 17);
  return std::string(buf, p);
}

std::string format_rig(const CameraRig& rig) {
  std::ostringstream os;
  for (int i = 0; i < rig.num_views(); ++i) {
    const CameraView& v = rig.views[i];
    const std::string p = "view." + std::to_string(i) + ".";
    os << p << "fx = " << format_double(v.fx) << '\n'
       << p << "fy = " << format_double(v.fy) << '\n'
       << p << "cx = " << format_double(v.cx) << '\n'
       << p << "cy = " << format_double(v.cy) << '\n'
       << p << "rot =";
    for (int k = 0; k < 9; ++k) os << ' ' << format_double(v.rot(k / 3, k % 3));
    os << '\n' << p << "trans =";
    for (int k = 0; k < 3; ++k) os << ' ' << format_double(v.trans[k]);
    os << "\n\n";
  }
  return os.str();
}

std::string format_grid(const VoxelGridSpec& grid) {
  std::ostringstream os;
  os << "grid.lower =";
  for (int a = 0; a < 3; ++a) os << ' ' << format_double(grid.lower[a]);
  os << "\ngrid.voxel_size =";
  for (int a = 0; a < 3; ++a) os << ' ' << format_double(grid.voxel_size[a]);
  os << "\ngrid.dims = " << grid.dims[0] << ' ' << grid.dims[1] << ' '
     << grid.dims[2] << '\n';
  return os.str();
}

std::string format_frustum(const FrustumSpec& spec) {
  std::ostringstream os;
  os << "frustum.feat_h = " << spec.feat_h << '\n'
     << "frustum.feat_w = " << spec.feat_w << '\n'
     << "frustum.downsample = " << spec.downsample << '\n'
     << "frustum.depth_start = " << format_double(spec.depth_start) << '\n'
     << "frustum.depth_end = " << format_double(spec.depth_end) << '\n'
     << "frustum.depth_step = " << format_double(spec.depth_step) << '\n';
  return os.str();
}

}  // namespace bevpool

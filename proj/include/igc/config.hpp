#pragma once

#include <optional>
#include <string>

#include "igc/blocks.hpp"
#include "igc/specs.hpp"

namespace igc {

struct ToyDataConfig {
  i64 per_class = 8;
  i64 eval_per_class = 8;
  double noise = 0.3;
  bool xor_mode = true;
};

// Parsed form of the textual network description. One format, documented in
// the README: [network] / [stage] (repeatable) / [train] sections with
// `key = value` lines.
struct ConfigFile {
  NetworkSpec network;
  BuildOptions build;
  std::optional<TrainConfig> train;
  ToyDataConfig toy;
};

ConfigFile parse_config(const std::string& text);
ConfigFile load_config(const std::string& path);
std::string serialize_config(const ConfigFile& cfg);

}  // namespace igc

#include "igc/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace igc {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

i64 parse_int(const std::string& v, int line, const std::string& key) {
  try {
    size_t pos = 0;
    const i64 r = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return r;
  } catch (const std::exception&) {
    throw ParseError(line, key + ": expected an integer, got '" + v + "'");
  }
}

double parse_real(const std::string& v, int line, const std::string& key) {
  try {
    size_t pos = 0;
    const double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return r;
  } catch (const std::exception&) {
    throw ParseError(line, key + ": expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ParseError(line, key + ": expected true or false, got '" + v + "'");
}

Family parse_family(const std::string& v, int line) {
  if (v == "igcv1") return Family::IGCV1;
  if (v == "igcv2") return Family::IGCV2;
  if (v == "igcv3") return Family::IGCV3;
  if (v == "mnv1") return Family::MNV1;
  if (v == "mnv2") return Family::MNV2;
  throw ParseError(line, "family: unknown value '" + v +
                             "' (igcv1|igcv2|igcv3|mnv1|mnv2)");
}

ReluPlacement parse_placement(const std::string& v, int line) {
  if (v == "after_first_and_middle") return ReluPlacement::AfterFirstAndMiddle;
  if (v == "after_middle") return ReluPlacement::AfterMiddle;
  if (v == "after_last") return ReluPlacement::AfterLast;
  if (v == "none") return ReluPlacement::None;
  throw ParseError(line, "relu_placement: unknown value '" + v + "'");
}

ReluPlacement default_placement(Family f) {
  switch (f) {
    case Family::IGCV3:
      return ReluPlacement::AfterMiddle;
    default:
      return ReluPlacement::AfterFirstAndMiddle;
  }
}

struct StageDraft {
  BlockSpec block;
  i64 repeat = 1;
  bool saw_in_channels = false;
  bool saw_placement = false;
  int line = 0;
};

}  // namespace

ConfigFile parse_config(const std::string& text) {
  ConfigFile cfg;
  cfg.network.stages.clear();
  std::vector<StageDraft> stages;
  bool saw_network = false;
  bool saw_train = false;
  enum class Section { NoneYet, Network, Stage, Train };
  Section section = Section::NoneYet;

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    const size_t hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;

    if (s.front() == '[') {
      if (s.back() != ']') throw ParseError(line, "unterminated section header");
      const std::string name = trim(s.substr(1, s.size() - 2));
      if (name == "network") {
        if (saw_network) throw ParseError(line, "duplicate [network] section");
        saw_network = true;
        section = Section::Network;
      } else if (name == "stage") {
        StageDraft d;
        d.line = line;
        d.block.relu_placement = default_placement(d.block.family);
        stages.push_back(d);
        section = Section::Stage;
      } else if (name == "train") {
        if (saw_train) throw ParseError(line, "duplicate [train] section");
        saw_train = true;
        cfg.train = TrainConfig{};
        section = Section::Train;
      } else {
        throw ParseError(line, "unknown section [" + name + "]");
      }
      continue;
    }

    const size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ParseError(line, "expected 'key = value', got '" + s + "'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ParseError(line, "empty key");
    if (value.empty()) throw ParseError(line, key + ": empty value");

    switch (section) {
      case Section::NoneYet:
        throw ParseError(line, "key '" + key + "' outside any section");
      case Section::Network: {
        NetworkSpec& n = cfg.network;
        if (key == "input_channels") n.input_channels = parse_int(value, line, key);
        else if (key == "input_resolution") {
          std::istringstream vs(value);
          if (!(vs >> n.input_h >> n.input_w) || !(vs >> std::ws).eof())
            throw ParseError(line, "input_resolution expects two integers");
        } else if (key == "stem_channels") n.stem.out_channels = parse_int(value, line, key);
        else if (key == "stem_kernel") n.stem.spatial_kernel = parse_int(value, line, key);
        else if (key == "stem_stride") n.stem.stride = parse_int(value, line, key);
        else if (key == "num_classes") n.num_classes = parse_int(value, line, key);
        else if (key == "permutations") {
          if (value == "shuffle") cfg.build.identity_permutations = false;
          else if (value == "identity") cfg.build.identity_permutations = true;
          else throw ParseError(line, "permutations: expected shuffle or identity");
        } else if (key == "block_order") {
          if (value == "inverted") cfg.build.order = BlockOrder::Inverted;
          else if (value == "channelwise_first") cfg.build.order = BlockOrder::ChannelwiseFirst;
          else throw ParseError(line, "block_order: expected inverted or channelwise_first");
        } else throw ParseError(line, "[network] unknown key '" + key + "'");
        break;
      }
      case Section::Stage: {
        StageDraft& d = stages.back();
        BlockSpec& b = d.block;
        if (key == "family") {
          b.family = parse_family(value, line);
          if (!d.saw_placement) b.relu_placement = default_placement(b.family);
        } else if (key == "in_channels") {
          b.in_channels = parse_int(value, line, key);
          d.saw_in_channels = true;
        } else if (key == "out_channels") b.out_channels = parse_int(value, line, key);
        else if (key == "expansion") b.expansion = parse_real(value, line, key);
        else if (key == "spatial_kernel") b.spatial_kernel = parse_int(value, line, key);
        else if (key == "stride") b.stride = parse_int(value, line, key);
        else if (key == "g1") b.g1 = parse_int(value, line, key);
        else if (key == "g2") b.g2 = parse_int(value, line, key);
        else if (key == "cs") b.cs = parse_int(value, line, key);
        else if (key == "relu_placement") {
          b.relu_placement = parse_placement(value, line);
          d.saw_placement = true;
        } else if (key == "skip") b.skip = parse_bool(value, line, key);
        else if (key == "repeat") d.repeat = parse_int(value, line, key);
        else throw ParseError(line, "[stage] unknown key '" + key + "'");
        break;
      }
      case Section::Train: {
        TrainConfig& t = *cfg.train;
        if (key == "lr0") t.lr0 = parse_real(value, line, key);
        else if (key == "momentum") t.momentum = parse_real(value, line, key);
        else if (key == "weight_decay") t.weight_decay = parse_real(value, line, key);
        else if (key == "schedule") {
          if (value == "step") t.schedule = Schedule::StepDecay;
          else if (value == "exponential") t.schedule = Schedule::Exponential;
          else throw ParseError(line, "schedule: expected step or exponential");
        } else if (key == "milestones") {
          t.milestones.clear();
          std::istringstream vs(value);
          i64 m;
          while (vs >> m) t.milestones.push_back(m);
          if (!vs.eof())
            throw ParseError(line, "milestones: expected a list of integers");
        } else if (key == "factor") t.factor = parse_real(value, line, key);
        else if (key == "gamma") t.gamma = parse_real(value, line, key);
        else if (key == "epochs") t.epochs = parse_int(value, line, key);
        else if (key == "batch_size") t.batch_size = parse_int(value, line, key);
        else if (key == "seed") t.seed = static_cast<u64>(parse_int(value, line, key));
        else if (key == "per_class") cfg.toy.per_class = parse_int(value, line, key);
        else if (key == "eval_per_class") cfg.toy.eval_per_class = parse_int(value, line, key);
        else if (key == "noise") cfg.toy.noise = parse_real(value, line, key);
        else if (key == "xor_mode") cfg.toy.xor_mode = parse_bool(value, line, key);
        else throw ParseError(line, "[train] unknown key '" + key + "'");
        break;
      }
    }
  }

  if (!saw_network) throw ParseError(line, "missing [network] section");

  // chain stage widths; explicit in_channels must agree
  i64 width = cfg.network.stem.out_channels;
  for (StageDraft& d : stages) {
    if (d.saw_in_channels && d.block.in_channels != width)
      throw ParseError(d.line, "stage in_channels " +
                                   std::to_string(d.block.in_channels) +
                                   " does not chain from previous width " +
                                   std::to_string(width));
    if (!d.saw_in_channels) d.block.in_channels = width;
    width = d.block.out_channels;
    cfg.network.stages.push_back({d.block, d.repeat});
  }

  try {
    cfg.network.validate();
    if (cfg.train) cfg.train->validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

ConfigFile load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

namespace {

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string serialize_config(const ConfigFile& cfg) {
  std::ostringstream out;
  const NetworkSpec& n = cfg.network;
  out << "[network]\n";
  out << "input_channels = " << n.input_channels << "\n";
  out << "input_resolution = " << n.input_h << " " << n.input_w << "\n";
  out << "stem_channels = " << n.stem.out_channels << "\n";
  out << "stem_kernel = " << n.stem.spatial_kernel << "\n";
  out << "stem_stride = " << n.stem.stride << "\n";
  out << "num_classes = " << n.num_classes << "\n";
  out << "permutations = "
      << (cfg.build.identity_permutations ? "identity" : "shuffle") << "\n";
  out << "block_order = "
      << (cfg.build.order == BlockOrder::Inverted ? "inverted"
                                                  : "channelwise_first")
      << "\n";
  for (const StageSpec& st : n.stages) {
    const BlockSpec& b = st.block;
    out << "\n[stage]\n";
    out << "family = " << family_name(b.family) << "\n";
    out << "in_channels = " << b.in_channels << "\n";
    out << "out_channels = " << b.out_channels << "\n";
    out << "expansion = " << fmt_real(b.expansion) << "\n";
    out << "spatial_kernel = " << b.spatial_kernel << "\n";
    out << "stride = " << b.stride << "\n";
    out << "g1 = " << b.g1 << "\n";
    out << "g2 = " << b.g2 << "\n";
    out << "cs = " << b.cs << "\n";
    out << "relu_placement = " << relu_placement_name(b.relu_placement) << "\n";
    out << "skip = " << (b.skip ? "true" : "false") << "\n";
    out << "repeat = " << st.repeat << "\n";
  }
  if (cfg.train) {
    const TrainConfig& t = *cfg.train;
    out << "\n[train]\n";
    out << "lr0 = " << fmt_real(t.lr0) << "\n";
    out << "momentum = " << fmt_real(t.momentum) << "\n";
    out << "weight_decay = " << fmt_real(t.weight_decay) << "\n";
    out << "schedule = "
        << (t.schedule == Schedule::StepDecay ? "step" : "exponential") << "\n";
    if (!t.milestones.empty()) {
      out << "milestones =";
      for (i64 m : t.milestones) out << " " << m;
      out << "\n";
    }
    out << "factor = " << fmt_real(t.factor) << "\n";
    out << "gamma = " << fmt_real(t.gamma) << "\n";
    out << "epochs = " << t.epochs << "\n";
    out << "batch_size = " << t.batch_size << "\n";
    out << "seed = " << t.seed << "\n";
    out << "per_class = " << cfg.toy.per_class << "\n";
    out << "eval_per_class = " << cfg.toy.eval_per_class << "\n";
    out << "noise = " << fmt_real(cfg.toy.noise) << "\n";
    out << "xor_mode = " << (cfg.toy.xor_mode ? "true" : "false") << "\n";
  }
  return out.str();
}

}  // namespace igc

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "igc/blocks.hpp"
#include "igc/complementary.hpp"
#include "igc/config.hpp"
#include "igc/cost.hpp"
#include "igc/network.hpp"
#include "igc/trainer.hpp"

namespace {

using namespace igc;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;   // semantic failure (condition, divergence)
constexpr int kExitUsage = 2;  // usage / parse / config errors

struct ConditionReport {
  bool strict_ok = true;
  bool loose_ok = true;
  double density = 0.0;
  bool dense = false;
};

const Permutation* block_perm(const Block& block) {
  for (const Layer& layer : block.layers)
    if (const auto* pl = std::get_if<PermuteLayer>(&layer)) return &pl->perm;
  return nullptr;
}

// Super-granularity image of the channel permutation; nullopt when the
// permutation shreds super-channels.
bool super_perm_of(const Permutation& chan_perm, i64 cs, Permutation* out) {
  const i64 channels = chan_perm.size();
  if (cs <= 0 || channels % cs != 0) return false;
  const i64 span = channels / cs;
  out->indices.assign(static_cast<size_t>(cs), 0);
  for (i64 s = 0; s < cs; ++s) {
    const i64 dst0 = chan_perm.indices[static_cast<size_t>(s * span)];
    if (dst0 % span != 0) return false;
    for (i64 o = 1; o < span; ++o)
      if (chan_perm.indices[static_cast<size_t>(s * span + o)] != dst0 + o)
        return false;
    out->indices[static_cast<size_t>(s)] = dst0 / span;
  }
  return true;
}

ConditionReport analyze_block(const Block& block, BlockOrder order) {
  ConditionReport rep;
  const BlockSpec& spec = block.spec;
  const std::vector<StagePlan> plan = plan_block(spec, order);
  i64 perm_channels = spec.in_channels;
  for (const StagePlan& p : plan)
    if (p.kind != StageKind::ChannelwiseSpatial) {
      perm_channels = p.out;
      break;
    }
  const Permutation* pp = block_perm(block);
  const Permutation chan_perm =
      pp ? *pp : Permutation::identity(perm_channels);

  try {
    const BranchAssignment first = contiguous_branches(perm_channels, spec.g1);
    const BranchAssignment second = permuted_branches(chan_perm, spec.g2);
    rep.strict_ok = check_strict(first, second);
  } catch (const Error&) {
    rep.strict_ok = false;
  }
  try {
    const i64 cs = spec.effective_cs();
    Permutation sp;
    if (!super_perm_of(chan_perm, cs, &sp)) {
      rep.loose_ok = false;
    } else {
      const BranchAssignment first = contiguous_branches(cs, spec.g1);
      const BranchAssignment second = permuted_branches(sp, spec.g2);
      rep.loose_ok = check_loose(SuperChannelPartition::contiguous(perm_channels, cs),
                                 first, second);
    }
  } catch (const Error&) {
    rep.loose_ok = false;
  }
  const SupportMatrix support = compose_support(composed_kernel(block));
  rep.density = support.density();
  rep.dense = support.all_true();
  return rep;
}

std::vector<Block> build_blocks(const ConfigFile& cfg, u64 seed) {
  Rng rng(seed);
  std::vector<Block> blocks;
  for (const BlockSpec& bs : flatten_blocks(cfg.network))
    blocks.push_back(build(bs, rng, cfg.build));
  return blocks;
}

int cmd_verify(const std::string& path) {
  const ConfigFile cfg = load_config(path);
  const std::vector<Block> blocks = build_blocks(cfg, 1);
  bool all_pass = true;
  for (size_t i = 0; i < blocks.size(); ++i) {
    const BlockSpec& s = blocks[i].spec;
    const ConditionReport rep = analyze_block(blocks[i], cfg.build.order);
    all_pass = all_pass && rep.dense;
    std::printf("block %zu [%s %" PRId64 "->%" PRId64
                " g1=%" PRId64 " g2=%" PRId64 " cs=%" PRId64
                "]: strict=%s loose=%s density=%.6g %s\n",
                i, family_name(s.family), s.in_channels, s.out_channels, s.g1,
                s.g2, s.effective_cs(), rep.strict_ok ? "yes" : "no",
                rep.loose_ok ? "yes" : "no", rep.density,
                rep.dense ? "PASS" : "FAIL");
  }
  std::printf("%s\n", all_pass ? "PASS" : "FAIL");
  return all_pass ? kExitPass : kExitFail;
}

int cmd_cost(const std::string& path, double alpha, i64 classes, bool csv) {
  ConfigFile cfg = load_config(path);
  if (classes > 0) cfg.network.num_classes = classes;
  NetworkSpec net = cfg.network;
  if (alpha != 1.0) net = apply_width_multiplier(net, alpha);
  const CostReport rep = count_params(net);
  if (csv) {
    std::printf("name,params_conv,params_bn,params,madds\n");
    for (const CostRow& row : rep.rows)
      std::printf("%s,%" PRId64 ",%" PRId64 ",%" PRId64 ",%" PRIu64 "\n",
                  row.name.c_str(), row.params_conv, row.params_bn, row.params,
                  row.madds);
    std::printf("backbone,,,%" PRId64 ",%" PRIu64 "\n", rep.params_backbone,
                rep.madds);
    std::printf("classifier,,,%" PRId64 ",\n", rep.params_classifier);
  } else {
    std::printf("%-24s %12s %10s %10s %14s\n", "layer", "params_conv",
                "params_bn", "params", "madds");
    for (const CostRow& row : rep.rows)
      std::printf("%-24s %12" PRId64 " %10" PRId64 " %10" PRId64 " %14" PRIu64 "\n",
                  row.name.c_str(), row.params_conv, row.params_bn, row.params,
                  row.madds);
    std::printf("%-24s %12s %10s %10" PRId64 " %14" PRIu64 "\n", "backbone", "",
                "", rep.params_backbone, rep.madds);
    std::printf("%-24s %12s %10s %10" PRId64 " %14s\n", "classifier", "", "",
                rep.params_classifier, "-");
  }
  return kExitPass;
}

int cmd_enumerate(i64 in_channels, i64 out_channels, i64 max_groups) {
  const std::vector<GroupConfig> configs =
      enumerate_configs(in_channels, out_channels, max_groups);
  for (const GroupConfig& c : configs) {
    BlockSpec b;
    b.family = Family::IGCV3;
    b.in_channels = in_channels;
    b.out_channels = out_channels;
    b.expansion = 6.0;
    b.g1 = c.g1;
    b.g2 = c.g2;
    i64 params = 0;
    for (const StagePlan& p : plan_block(b)) {
      switch (p.kind) {
        case StageKind::GroupedPointwise:
          params += p.in * p.out / p.groups;
          break;
        case StageKind::GroupedSpatial:
          params += (p.in / p.groups) * p.out * p.spatial;
          break;
        case StageKind::ChannelwiseSpatial:
          params += p.out * p.spatial;
          break;
      }
    }
    std::printf("g1=%" PRId64 " g2=%" PRId64 " cs=%" PRId64
                " params_per_block=%" PRId64 "\n",
                c.g1, c.g2, c.cs, params);
  }
  std::printf("%zu configs\n", configs.size());
  return kExitPass;
}

int cmd_train_toy(const std::string& path, i64 seed_override,
                  const std::string& csv_out) {
  const ConfigFile cfg = load_config(path);
  if (!cfg.train) throw ConfigError("config has no [train] section");
  TrainConfig tc = *cfg.train;
  if (seed_override >= 0) tc.seed = static_cast<u64>(seed_override);

  const NetworkSpec& net_spec = cfg.network;
  const ToyDataset train_data = make_toy_dataset(
      net_spec.num_classes, cfg.toy.per_class, net_spec.input_channels,
      net_spec.input_h, net_spec.input_w, tc.seed, cfg.toy.noise,
      cfg.toy.xor_mode, 0);
  const ToyDataset eval_data = make_toy_dataset(
      net_spec.num_classes, cfg.toy.eval_per_class, net_spec.input_channels,
      net_spec.input_h, net_spec.input_w, tc.seed, cfg.toy.noise,
      cfg.toy.xor_mode, 1);

  Network net = build_network(net_spec, tc.seed, cfg.build);
  std::vector<EpochMetrics> history;
  try {
    history = train(net, train_data, eval_data, tc);
  } catch (const TrainingError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitFail;
  }

  std::FILE* out = stdout;
  std::FILE* file = nullptr;
  if (!csv_out.empty()) {
    file = std::fopen(csv_out.c_str(), "w");
    if (!file) throw ConfigError("cannot open CSV output path: " + csv_out);
    out = file;
  }
  std::fprintf(out, "epoch,lr,train_loss,train_acc,eval_acc\n");
  for (const EpochMetrics& m : history)
    std::fprintf(out, "%" PRId64 ",%.17g,%.17g,%.6f,%.6f\n", m.epoch, m.lr,
                 m.train_loss, m.train_acc, m.eval_acc);
  if (file) std::fclose(file);

  const EpochMetrics& last = history.back();
  std::printf("final: train_acc=%.6f eval_acc=%.6f train_loss=%.17g\n",
              last.train_acc, last.eval_acc, last.train_loss);
  return kExitPass;
}

int cmd_export(const std::string& path, const std::string& what,
               i64 block_index, const std::string& out_path) {
  const ConfigFile cfg = load_config(path);
  const std::vector<Block> blocks = build_blocks(cfg, 1);
  if (block_index < 0 || block_index >= static_cast<i64>(blocks.size()))
    throw ConfigError("block index " + std::to_string(block_index) +
                      " out of range (network has " +
                      std::to_string(blocks.size()) + " blocks)");
  const Block& block = blocks[static_cast<size_t>(block_index)];

  if (what == "support") {
    const SupportMatrix s = compose_support(composed_kernel(block));
    std::ofstream out(out_path);
    if (!out) throw ConfigError("cannot open output path: " + out_path);
    for (i64 r = 0; r < s.rows; ++r) {
      for (i64 c = 0; c < s.cols; ++c) out << (s.at(r, c) ? '1' : '0');
      out << '\n';
    }
    return kExitPass;
  }
  if (what == "dense") {
    // the product is meaningful only when no ReLU sits inside the chain
    bool inside = false;
    i64 convs_seen = 0;
    const i64 nconvs = static_cast<i64>(plan_block(block.spec, cfg.build.order).size());
    for (const Layer& layer : block.layers) {
      if (std::holds_alternative<ConvLayer>(layer)) ++convs_seen;
      if (std::holds_alternative<ReluLayer>(layer) && convs_seen > 0 &&
          convs_seen < nconvs)
        inside = true;
    }
    if (inside) {
      std::fprintf(stderr,
                   "dense export requires a linear block: intermediate ReLU "
                   "breaks the pointwise kernel product (use relu_placement = "
                   "none or after_last)\n");
      return kExitFail;
    }
    const Matrix d = equivalent_dense_pointwise(block);
    std::ofstream out(out_path);
    if (!out) throw ConfigError("cannot open output path: " + out_path);
    char buf[64];
    for (i64 r = 0; r < d.rows; ++r) {
      for (i64 c = 0; c < d.cols; ++c) {
        std::snprintf(buf, sizeof(buf), "%.17g", d.at(r, c));
        out << (c ? "," : "") << buf;
      }
      out << '\n';
    }
    return kExitPass;
  }
  throw ConfigError("--what must be support or dense");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"construct, verify, cost and train interleaved group "
               "convolution blocks"};
  app.require_subcommand(1);

  std::string config_path, what = "support", out_path, csv_out;
  double alpha = 1.0;
  i64 classes = 0, in_c = 16, out_c = 16, max_groups = 4, block_index = 0,
      seed_override = -1;
  bool csv = false;

  auto* verify = app.add_subcommand(
      "verify", "check complementary conditions and composed-kernel density");
  verify->add_option("config", config_path, "network config file")->required();

  auto* cost = app.add_subcommand("cost", "parameter and MAdds report");
  cost->add_option("config", config_path, "network config file")->required();
  cost->add_option("--alpha", alpha, "width multiplier");
  cost->add_option("--classes", classes, "override classifier classes");
  cost->add_flag("--csv", csv, "machine-readable CSV output");

  auto* enumerate =
      app.add_subcommand("enumerate", "list valid (G1, G2, Cs) configurations");
  enumerate->add_option("--in", in_c, "input channels")->required();
  enumerate->add_option("--out", out_c, "output channels")->required();
  enumerate->add_option("--max-groups", max_groups, "bound on G1 and G2");

  auto* train_toy =
      app.add_subcommand("train-toy", "train on the synthetic dataset");
  train_toy->add_option("config", config_path, "network config file")->required();
  train_toy->add_option("--seed", seed_override, "override the config seed");
  train_toy->add_option("--csv-out", csv_out, "write per-epoch metrics here");

  auto* exp = app.add_subcommand("export", "dump composed support or dense kernel");
  exp->add_option("config", config_path, "network config file")->required();
  exp->add_option("--what", what, "support | dense");
  exp->add_option("--block", block_index, "block index (default 0)");
  exp->add_option("--out", out_path, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (verify->parsed()) return cmd_verify(config_path);
    if (cost->parsed()) return cmd_cost(config_path, alpha, classes, csv);
    if (enumerate->parsed()) return cmd_enumerate(in_c, out_c, max_groups);
    if (train_toy->parsed())
      return cmd_train_toy(config_path, seed_override, csv_out);
    if (exp->parsed()) return cmd_export(config_path, what, block_index, out_path);
  } catch (const ParseError& e) {
    std::fprintf(stderr, "config parse error: %s\n", e.what());
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitUsage;
  } catch (const ComplementarityError& e) {
    std::fprintf(stderr, "complementarity error: %s\n", e.what());
    return kExitFail;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFail;
  }
  return kExitUsage;
}

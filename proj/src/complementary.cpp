#include "igc/complementary.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace igc {

SuperChannelPartition SuperChannelPartition::contiguous(i64 total_channels,
                                                        i64 num_super) {
  SuperChannelPartition p;
  p.total_channels = total_channels;
  p.num_super = num_super;
  if (total_channels <= 0 || num_super <= 0 || total_channels % num_super != 0)
    throw ConfigError("super-channel partition: " + std::to_string(total_channels) +
                      " channels not divisible into " + std::to_string(num_super) +
                      " super-channels");
  const i64 span = total_channels / num_super;
  p.assignment.resize(static_cast<size_t>(total_channels));
  for (i64 c = 0; c < total_channels; ++c)
    p.assignment[static_cast<size_t>(c)] = c / span;
  return p;
}

void SuperChannelPartition::validate() const {
  if (total_channels <= 0 || num_super <= 0 || total_channels % num_super != 0)
    throw ConfigError("super-channel partition: invalid sizes");
  if (static_cast<i64>(assignment.size()) != total_channels)
    throw ConfigError("super-channel partition: assignment length mismatch");
  const i64 span = total_channels / num_super;
  for (i64 c = 0; c < total_channels; ++c)
    if (assignment[static_cast<size_t>(c)] != c / span)
      throw ConfigError("super-channel partition: runs must be contiguous");
}

void BranchAssignment::validate() const {
  if (num_branches <= 0) throw ConfigError("branch assignment: no branches");
  if (units() % num_branches != 0)
    throw ConfigError("branch assignment: " + std::to_string(units()) +
                      " units not divisible by " + std::to_string(num_branches) +
                      " branches");
  std::vector<i64> count(static_cast<size_t>(num_branches), 0);
  for (i64 b : branch_of_unit) {
    if (b < 0 || b >= num_branches)
      throw ConfigError("branch assignment: branch id out of range");
    ++count[static_cast<size_t>(b)];
  }
  const i64 per = units() / num_branches;
  for (i64 c : count)
    if (c != per)
      throw ConfigError("branch assignment: branches are not balanced");
}

BranchAssignment contiguous_branches(i64 units, i64 branches) {
  BranchAssignment a;
  a.num_branches = branches;
  if (branches <= 0 || units <= 0 || units % branches != 0)
    throw ConfigError("branch assignment: " + std::to_string(units) +
                      " units not divisible by " + std::to_string(branches));
  const i64 span = units / branches;
  a.branch_of_unit.resize(static_cast<size_t>(units));
  for (i64 u = 0; u < units; ++u)
    a.branch_of_unit[static_cast<size_t>(u)] = u / span;
  return a;
}

BranchAssignment permuted_branches(const Permutation& unit_perm, i64 branches) {
  const BranchAssignment dst = contiguous_branches(unit_perm.size(), branches);
  BranchAssignment a;
  a.num_branches = branches;
  a.branch_of_unit.resize(static_cast<size_t>(unit_perm.size()));
  for (i64 u = 0; u < unit_perm.size(); ++u)
    a.branch_of_unit[static_cast<size_t>(u)] =
        dst.branch_of_unit[static_cast<size_t>(
            unit_perm.indices[static_cast<size_t>(u)])];
  return a;
}

namespace {

// One direction of the complementary predicate: every branch of `a` must see
// pairwise-distinct branches of `b` covering all of them. A single branch on
// the `b` side covers everything by itself.
bool covers(const BranchAssignment& a, const BranchAssignment& b) {
  if (b.num_branches == 1) return true;
  for (i64 branch = 0; branch < a.num_branches; ++branch) {
    std::vector<bool> seen(static_cast<size_t>(b.num_branches), false);
    i64 hit = 0;
    for (i64 u = 0; u < a.units(); ++u) {
      if (a.branch_of_unit[static_cast<size_t>(u)] != branch) continue;
      const i64 other = b.branch_of_unit[static_cast<size_t>(u)];
      if (seen[static_cast<size_t>(other)]) return false;  // collision
      seen[static_cast<size_t>(other)] = true;
      ++hit;
    }
    if (hit != b.num_branches) return false;  // not all branches reached
  }
  return true;
}

}  // namespace

bool check_strict(const BranchAssignment& first, const BranchAssignment& second) {
  first.validate();
  second.validate();
  if (first.units() != second.units())
    throw ConfigError("complementary check: assignments cover " +
                      std::to_string(first.units()) + " vs " +
                      std::to_string(second.units()) + " units");
  return covers(first, second) && covers(second, first);
}

bool check_loose(const SuperChannelPartition& partition,
                 const BranchAssignment& first, const BranchAssignment& second) {
  partition.validate();
  if (first.units() != partition.num_super || second.units() != partition.num_super)
    throw ConfigError("loose check: assignments must cover " +
                      std::to_string(partition.num_super) + " super-channels");
  return check_strict(first, second);
}

bool verify_dense(const ComposedKernel& block) {
  return compose_support(block).all_true();
}

std::vector<GroupConfig> enumerate_configs(i64 in_channels, i64 out_channels,
                                           i64 max_groups) {
  if (in_channels < 1 || out_channels < 1 || max_groups < 1)
    throw ConfigError("enumerate_configs: counts must be positive");
  const i64 common = std::gcd(in_channels, out_channels);
  std::vector<GroupConfig> out;
  for (i64 g1 = 1; g1 <= max_groups; ++g1) {
    for (i64 g2 = 1; g2 <= max_groups; ++g2) {
      const i64 cs = g1 * g2;
      if (common % cs != 0) continue;
      const BranchAssignment first = contiguous_branches(cs, g1);
      const BranchAssignment second =
          permuted_branches(interleave_permutation(g1, g2, cs), g2);
      const SuperChannelPartition part =
          SuperChannelPartition::contiguous(in_channels, cs);
      if (!check_loose(part, first, second)) continue;
      out.push_back({g1, g2, cs});
    }
  }
  std::sort(out.begin(), out.end(), [](const GroupConfig& a, const GroupConfig& b) {
    if (a.g1 * a.g2 != b.g1 * b.g2) return a.g1 * a.g2 < b.g1 * b.g2;
    if (a.g1 != b.g1) return a.g1 < b.g1;
    return a.g2 < b.g2;
  });
  return out;
}

}  // namespace igc

#pragma once

#include <vector>

#include "igc/sparse.hpp"

namespace igc {

// Division of a channel axis into num_super equal contiguous super-channels.
struct SuperChannelPartition {
  i64 total_channels = 0;
  i64 num_super = 0;
  std::vector<i64> assignment;  // super-channel id per channel

  static SuperChannelPartition contiguous(i64 total_channels, i64 num_super);
  void validate() const;
};

// Branch membership per unit (channel or super-channel), balanced.
struct BranchAssignment {
  i64 num_branches = 1;
  std::vector<i64> branch_of_unit;

  i64 units() const { return static_cast<i64>(branch_of_unit.size()); }
  void validate() const;  // balanced branches or ConfigError
};

// Contiguous runs: unit u -> branch u / (units/branches).
BranchAssignment contiguous_branches(i64 units, i64 branches);

// Branch of each source unit after routing through `perm` into contiguous
// branches on the destination side.
BranchAssignment permuted_branches(const Permutation& unit_perm, i64 branches);

// Condition at channel granularity: units sharing a branch in one assignment
// must occupy pairwise-distinct branches of the other and cover all of them,
// in both directions.
bool check_strict(const BranchAssignment& first, const BranchAssignment& second);

// The same predicate over the partition's super-channels.
bool check_loose(const SuperChannelPartition& partition,
                 const BranchAssignment& first, const BranchAssignment& second);

bool verify_dense(const ComposedKernel& block);

struct GroupConfig {
  i64 g1 = 1;
  i64 g2 = 1;
  i64 cs = 1;
  bool operator==(const GroupConfig&) const = default;
};

// All (G1, G2, Cs=G1*G2) with G1*G2 | gcd(in, out), G1,G2 <= max_groups, each
// validated by check_loose on the canonical assignments; sorted by (G1*G2, G1).
std::vector<GroupConfig> enumerate_configs(i64 in_channels, i64 out_channels,
                                           i64 max_groups);

}  // namespace igc

#pragma once

#include <string>
#include <vector>

#include "igc/blocks.hpp"
#include "igc/specs.hpp"

namespace igc {

struct CostRow {
  std::string name;
  i64 params_conv = 0;
  i64 params_bn = 0;
  i64 params = 0;  // conv + bn
  u64 madds = 0;
};

// Parameter and multiply-add accounting. The classifier is reported
// separately and excluded from the backbone totals; MAdds cover the
// convolution layers (BN and classifier excluded).
struct CostReport {
  i64 params_backbone = 0;
  i64 params_classifier = 0;
  u64 madds = 0;
  std::vector<CostRow> rows;  // stem + one row per block
};

CostReport count_params(const NetworkSpec& net);
u64 count_madds(const NetworkSpec& net);

NetworkSpec apply_width_multiplier(const NetworkSpec& net, double alpha);

enum class Igcv3Variant { Deeper, Wider };

// Deeper: keep base widths, G1=G2=2, add block repeats until the backbone
// parameter count matches the base within 5%. Wider: keep base depth,
// G1=G2=4, scale widths until parameters match within 5%.
NetworkSpec build_igcv3_network(Igcv3Variant variant, const NetworkSpec& base);

}  // namespace igc

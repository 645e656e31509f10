#pragma once

namespace isometry {

// Memory traffic of one normalization layer in the training loop, counted in
// tensor passes: full activation-map passes (m) and per-map reduced-vector
// passes (q). Reductions produce statistics; elementwise passes apply them.
struct OpCount {
  int reductions_m = 0;
  int reductions_q = 0;
  int elementwise_m = 0;
  int elementwise_q = 0;

  int total_map_passes() const { return reductions_m + elementwise_m; }
};

enum class NormMethod { batch_norm, second_moment_norm };

// batch_norm: 4 reductions over maps (mean, variance — each a two-pass
// sum — in forward and backward) and 9 elementwise map passes.
// second_moment_norm: 3 reductions + 7 elementwise over maps, plus 2 + 2 over
// reduced vectors; dropping the mean subtraction removes one reduction and
// two elementwise passes.
OpCount normalization_op_count(NormMethod method);

struct CostComparison {
  OpCount batch_norm;
  OpCount second_moment_norm;
  int batch_norm_total = 0;         // map passes: 13
  int second_moment_total = 0;      // map passes: 10
  double speedup_vs_smn = 0.0;      // (13 - 10) / 10 = 0.30
  double reduction_vs_bn = 0.0;     // (13 - 10) / 13 ~ 0.23
};

CostComparison normalization_cost_comparison();

}  // namespace isometry

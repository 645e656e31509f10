#include "isometry/smn_cost.hpp"

namespace isometry {

OpCount normalization_op_count(NormMethod method) {
  // Counted in memory passes over the activation map (m) and over the
  // reduced per-channel vector (q), forward + backward of one training step.
  if (method == NormMethod::batch_norm) {
    // mean and variance are each a full reduction in forward and backward
    // (4 reductions over maps); normalize/scale-shift and their gradients
    // account for 9 elementwise map passes.
    return {4, 0, 9, 0};
  }
  // Dropping mean subtraction leaves one forward reduction (second moment)
  // and two backward ones collapse to cheap vector work: 3 map reductions,
  // 7 elementwise map passes, plus 2 + 2 passes over the reduced vector.
  return {3, 2, 7, 2};
}

CostComparison normalization_cost_comparison() {
  CostComparison c;
  c.batch_norm = normalization_op_count(NormMethod::batch_norm);
  c.second_moment_norm = normalization_op_count(NormMethod::second_moment_norm);
  c.batch_norm_total = c.batch_norm.total_map_passes();
  c.second_moment_total = c.second_moment_norm.total_map_passes();
  // Map passes dominate the traffic (the reduced vector is a factor of the
  // spatial size smaller), so the headline numbers compare 13 against 10.
  c.speedup_vs_smn =
      static_cast<double>(c.batch_norm_total - c.second_moment_total) /
      c.second_moment_total;
  c.reduction_vs_bn =
      static_cast<double>(c.batch_norm_total - c.second_moment_total) /
      c.batch_norm_total;
  return c;
}

}  // namespace isometry

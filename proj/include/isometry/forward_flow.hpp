#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "isometry/graph.hpp"
#include "isometry/rng.hpp"

namespace isometry {

// Running second moment of the forward signal after each layer. phi_applied
// is the factor this layer multiplied in (for normalizers it is the
// dynamically bound 1/alpha2_in, not a static table value).
struct FlowState {
  double alpha2 = 1.0;
  int layer_index = 0;
  double phi_applied = 1.0;
};

// Propagates E|x|^2/dim through the graph: alpha2 <- phi * alpha2 for general
// linear components; DataNorm and SMN rebind to the incoming alpha2 and reset
// it to 1. Components without the general_linear property (tanh, SeLU) are
// rejected with InputError — their flow needs the dedicated scalar ops.
// Parallel blocks contribute the sum of their branch second moments (at most
// one non-central branch, else PrerequisiteError) and emit a single state.
std::vector<FlowState> propagate_alpha2(const NetworkGraph& g,
                                        double alpha2_in);

// The residual-network second-moment profile: alpha2 starts at 1, each block
// adds 1, and a downsampling block resets to 2. phi[l] is the block ratio
// alpha2[l+1]/alpha2[l], so the phis telescope to alpha2_L/alpha2_0 exactly.
struct ResnetProfile {
  std::vector<double> alpha2;  // length num_blocks + 1
  std::vector<double> phi;     // length num_blocks
};

ResnetProfile resnet_alpha2_profile(int num_blocks,
                                    const std::vector<int>& downsample_at);

enum class NormClass { partial_normalized, over_normalized, neutral, mixed };

const char* norm_class_name(NormClass c);

// Classifies a scalar normalization response h(alpha2) against the exact one
// beta/alpha2: on probes below beta, partial means 1 < h < beta/alpha2 and
// over means h > beta/alpha2; above beta the inequalities flip (beta/alpha2 <
// h < 1 is partial, 0 < h < beta/alpha2 is over). |h - beta/alpha2| <= 1e-9
// counts as neutral. Unanimous probes give the class, anything else is mixed.
// Probes must be positive, finite, and distinct from beta.
NormClass classify_normalization(const std::function<double(double)>& h,
                                 double beta, const std::vector<double>& probes);

enum class ErrorMode { relative, absolute };

struct ShallowTrickSummary {
  double mean = 0.0;    // Monte-Carlo mean of prod_l (1 + coef * draw_l)
  double stddev = 0.0;  // sample standard deviation over trials
  int effective_depth = 0;  // smallest order whose binomial term falls under 1e-6
  std::vector<double> trial_values;
};

// Estimates how a depth-L product of near-unit factors concentrates.
// relative mode: factor = 1 + (1-omega) * draw; absolute mode:
// factor = 1 + tau * draw. draw pulls one error sample from the rng.
// effective_depth is the smallest i >= 1 with
// C(L,i) * |coef|^i * E|draw|^i < 1e-6 (L if none), evaluated in log space.
ShallowTrickSummary shallow_trick_estimate(
    ErrorMode mode, double omega, double tau, int L,
    const std::function<double(CounterRng&)>& draw, int trials,
    std::uint64_t seed);

struct PlusOneBound {
  bool ok = false;       // branch_phi <= C / L^p with p > 1
  double bound = 0.0;    // (1 + branch_phi)^L
  double first_order = 0.0;  // L * branch_phi
  double remainder = 0.0;    // bound - 1 - first_order
};

// Checks the depth-robustness condition for shortcut networks whose blocks
// multiply phi by (1 + branch_phi): the product over L blocks stays bounded
// as L grows iff branch_phi decays faster than 1/L.
PlusOneBound plus_one_check(double branch_phi, int L, double p,
                            double C = 2.0);

}  // namespace isometry

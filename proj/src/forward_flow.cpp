#include "isometry/forward_flow.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "isometry/errors.hpp"

namespace isometry {

namespace {

bool is_normalizer(const ComponentSpec& c) {
  return std::holds_alternative<DataNormSpec>(c) ||
         std::holds_alternative<SMNSpec>(c);
}

// Second moment after one component. Normalizers do not use their static
// parameter here: their whole point is that they divide by the statistic of
// whatever arrives, so their effective phi is 1/alpha2_in and the running
// second moment resets to 1.
double step_alpha2(const ComponentSpec& c, double alpha2, double* phi_applied,
                   const std::string& where) {
  if (is_normalizer(c)) {
    *phi_applied = 1.0 / alpha2;
    return 1.0;
  }
  if (!structure_flags(c).general_linear) {
    throw InputError(where + ": " + std::string(kind_name(c)) +
                     " is not a general linear transform; second-moment "
                     "propagation does not apply (use its dedicated scalar "
                     "ops instead)");
  }
  const double phi = component_moments(c).phi;
  *phi_applied = phi;
  return phi * alpha2;
}

}  // namespace

std::vector<FlowState> propagate_alpha2(const NetworkGraph& graph,
                                        double alpha2_in) {
  if (!(alpha2_in > 0.0) || !std::isfinite(alpha2_in))
    throw InputError("propagate_alpha2: alpha2_in must be finite and > 0");
  const NetworkGraph g = resolve_graph(graph);

  std::vector<FlowState> states;
  double alpha2 = alpha2_in;
  int layer = 0;

  for (std::size_t b = 0; b < g.blocks.size(); ++b) {
    const std::string where = "blocks[" + std::to_string(b) + "]";
    if (const auto* s = std::get_if<SerialBlock>(&g.blocks[b])) {
      for (std::size_t i = 0; i < s->parts.size(); ++i) {
        double phi = 1.0;
        alpha2 = step_alpha2(s->parts[i], alpha2, &phi,
                             where + ".serial[" + std::to_string(i) + "]");
        states.push_back({alpha2, layer++, phi});
      }
    } else {
      const auto& par = std::get<ParallelBlock>(g.blocks[b]);
      // Sum of branch second moments; valid with at most one non-central
      // branch (cross terms vanish), mirroring the phi addition rule.
      int non_central = 0;
      for (const auto& branch : par.branches) {
        // Same rule as the composition algebra: one zero-mean factor centers
        // the whole branch product.
        bool central = false;
        for (const auto& c : branch) central = central || structure_flags(c).central;
        if (!central) ++non_central;
      }
      if (non_central > 1)
        throw PrerequisiteError(
            where + ".parallel: " + std::to_string(non_central) +
            " non-central branches; second moments do not add");
      double total = 0.0;
      for (std::size_t k = 0; k < par.branches.size(); ++k) {
        double branch_alpha2 = alpha2;
        for (std::size_t i = 0; i < par.branches[k].size(); ++i) {
          double phi = 1.0;
          branch_alpha2 = step_alpha2(
              par.branches[k][i], branch_alpha2, &phi,
              where + ".parallel[" + std::to_string(k) + "][" +
                  std::to_string(i) + "]");
        }
        total += branch_alpha2;
      }
      const double phi_block = total / alpha2;
      alpha2 = total;
      states.push_back({alpha2, layer++, phi_block});
    }
  }
  return states;
}

ResnetProfile resnet_alpha2_profile(int num_blocks,
                                    const std::vector<int>& downsample_at) {
  if (num_blocks < 1)
    throw InputError("resnet_alpha2_profile: num_blocks must be >= 1");
  for (std::size_t i = 0; i < downsample_at.size(); ++i) {
    if (downsample_at[i] < 0 || downsample_at[i] >= num_blocks)
      throw InputError("resnet_alpha2_profile: downsample index " +
                       std::to_string(downsample_at[i]) + " out of range");
    if (i > 0 && downsample_at[i] <= downsample_at[i - 1])
      throw InputError(
          "resnet_alpha2_profile: downsample indices must be strictly "
          "increasing");
  }

  ResnetProfile out;
  out.alpha2.reserve(num_blocks + 1);
  out.phi.reserve(num_blocks);
  out.alpha2.push_back(1.0);
  // Identity shortcut plus a unit-second-moment branch adds 1 per block; a
  // downsampling block replaces the state by 2 (projected shortcut plus
  // branch, both renormalized to 1).
  for (int l = 0; l < num_blocks; ++l) {
    const bool down =
        std::find(downsample_at.begin(), downsample_at.end(), l) !=
        downsample_at.end();
    const double next = down ? 2.0 : out.alpha2.back() + 1.0;
    out.phi.push_back(next / out.alpha2.back());
    out.alpha2.push_back(next);
  }
  return out;
}

const char* norm_class_name(NormClass c) {
  switch (c) {
    case NormClass::partial_normalized: return "partial_normalized";
    case NormClass::over_normalized: return "over_normalized";
    case NormClass::neutral: return "neutral";
    case NormClass::mixed: return "mixed";
  }
  return "?";
}

NormClass classify_normalization(const std::function<double(double)>& h,
                                 double beta,
                                 const std::vector<double>& probes) {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw InputError("classify_normalization: beta must be finite and > 0");
  if (probes.empty())
    throw InputError("classify_normalization: needs at least one probe");

  bool any_partial = false, any_over = false, any_neutral = false,
       any_none = false;
  for (double a : probes) {
    if (!(a > 0.0) || !std::isfinite(a))
      throw InputError("classify_normalization: probes must be finite and > 0");
    if (a == beta)
      throw InputError(
          "classify_normalization: probes must exclude beta itself");
    const double hv = h(a);
    if (!std::isfinite(hv))
      throw InputError("classify_normalization: h(probe) must be finite");
    const double exact = beta / a;
    if (std::abs(hv - exact) <= 1e-9) {
      any_neutral = true;
    } else if (a < beta) {
      // Below beta the exact response amplifies; doing some of that (between
      // no-op and exact) is partial, overshooting beyond exact is over.
      if (hv > 1.0 && hv < exact) any_partial = true;
      else if (hv > exact) any_over = true;
      else any_none = true;
    } else {
      if (hv > exact && hv < 1.0) any_partial = true;
      else if (hv > 0.0 && hv < exact) any_over = true;
      else any_none = true;
    }
  }

  const int kinds = int(any_partial) + int(any_over) + int(any_neutral);
  if (any_none || kinds != 1) return NormClass::mixed;
  if (any_partial) return NormClass::partial_normalized;
  if (any_over) return NormClass::over_normalized;
  return NormClass::neutral;
}

ShallowTrickSummary shallow_trick_estimate(
    ErrorMode mode, double omega, double tau, int L,
    const std::function<double(CounterRng&)>& draw, int trials,
    std::uint64_t seed) {
  if (L < 1) throw InputError("shallow_trick_estimate: L must be >= 1");
  if (trials < 1) throw InputError("shallow_trick_estimate: trials must be >= 1");
  if (!std::isfinite(omega) || !std::isfinite(tau))
    throw InputError("shallow_trick_estimate: omega and tau must be finite");

  const double coef = mode == ErrorMode::relative ? (1.0 - omega) : tau;

  ShallowTrickSummary out;
  out.trial_values.reserve(trials);
  double sum = 0.0, sumsq = 0.0, abs_draws = 0.0;
  for (int t = 0; t < trials; ++t) {
    CounterRng rng(seed ^ static_cast<std::uint64_t>(t));
    double prod = 1.0;
    for (int l = 0; l < L; ++l) {
      const double e = draw(rng);
      abs_draws += std::abs(e);
      prod *= 1.0 + coef * e;
    }
    out.trial_values.push_back(prod);
    sum += prod;
    sumsq += prod * prod;
  }
  out.mean = sum / trials;
  out.stddev = trials > 1
                   ? std::sqrt(std::max(0.0, (sumsq - sum * sum / trials) /
                                                 (trials - 1)))
                   : 0.0;

  // Expanding prod_l (1 + coef*e_l), the order-i terms have magnitude about
  // C(L, i) |coef|^i E|e|^i. The effective depth is where they drop below
  // 1e-6; log space keeps C(100, 50) from overflowing.
  const double mean_abs = abs_draws / (static_cast<double>(trials) * L);
  out.effective_depth = L;
  if (coef == 0.0 || mean_abs == 0.0) {
    out.effective_depth = 1;
  } else {
    const double log_term_base = std::log(std::abs(coef)) + std::log(mean_abs);
    for (int i = 1; i <= L; ++i) {
      const double log_binom = std::lgamma(L + 1.0) - std::lgamma(i + 1.0) -
                               std::lgamma(L - i + 1.0);
      if (log_binom + i * log_term_base < std::log(1e-6)) {
        out.effective_depth = i;
        break;
      }
    }
  }
  return out;
}

PlusOneBound plus_one_check(double branch_phi, int L, double p, double C) {
  if (L < 1) throw InputError("plus_one_check: L must be >= 1");
  if (!(branch_phi >= 0.0) || !std::isfinite(branch_phi))
    throw InputError("plus_one_check: branch_phi must be finite and >= 0");
  if (!(p > 0.0) || !(C > 0.0))
    throw InputError("plus_one_check: p and C must be > 0");
  PlusOneBound out;
  out.ok = p > 1.0 && branch_phi <= C / std::pow(static_cast<double>(L), p);
  out.bound = std::pow(1.0 + branch_phi, L);
  out.first_order = L * branch_phi;
  out.remainder = out.bound - 1.0 - out.first_order;
  return out;
}

}  // namespace isometry

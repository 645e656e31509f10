#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "isometry/graph.hpp"
#include "isometry/moments.hpp"
#include "isometry/rng.hpp"

namespace isometry {

// One random-matrix verification experiment at desk scale. Components must be
// dim-resolved; every dim is capped by max_dim (InputError beyond it — raise
// deliberately, the memory and time costs are cubic).
struct TrialConfig {
  std::uint64_t seed = 0;
  int trials = 20;
  double input_mean = 0.0;
  double input_var = 1.0;
  int max_dim = 5000;
  double band_phi = 0.07;     // pass if |phi_ratio - 1| <= band_phi
  double band_varphi = 0.20;  // and |varphi_ratio - 1| <= band_varphi

  std::vector<ComponentSpec> chain;                   // multiplication runs
  std::vector<std::vector<ComponentSpec>> branches;   // addition runs
};

struct VerificationReport {
  // Analytic composition of the library moments.
  double phi_theory = 0.0;
  std::optional<double> varphi_theory{};
  // Empirical moments of the composed Jacobian, averaged over trials.
  double phi_empirical = 0.0;
  double varphi_empirical = 0.0;
  // empirical / analytic.
  double phi_ratio = 0.0;
  std::optional<double> varphi_ratio{};
  // empirical / (composition formula applied to per-factor empirical
  // moments) — isolates the theorem from the per-component formulas.
  double phi_ratio_vs_factors = 0.0;
  std::optional<double> varphi_ratio_vs_factors{};

  std::vector<double> trial_phi;
  std::vector<double> trial_varphi;

  double band_phi = 0.0;
  double band_varphi = 0.0;
  bool pass = false;
};

// Draws one Jacobian realization. For rectifiers, a Bernoulli(p) slope mask —
// or the slopes at `input` when given (so chains use the actual
// pre-activations). For DataNorm/SMN the Jacobian is evaluated at the sample
// statistics of `input` (drawn from the spec's nominal distribution when
// absent). Orthogonal draws a Haar frame via QR with sign correction.
Eigen::MatrixXd sample_jacobian(const ComponentSpec& spec, CounterRng& rng,
                                const Eigen::VectorXd* input = nullptr);

Eigen::MatrixXd sample_jacobian(const ComponentSpec& spec, std::uint64_t seed);

// phi = |J|_F^2 / rows; varphi = |G|_F^2 / rows - phi^2 with G the smaller
// Gram side. Both scale exactly under J -> c*J when c is a power of two.
Moments empirical_moments(const Eigen::MatrixXd& J);

// Chain experiment: forward-propagates a Gaussian input, accumulates the
// product Jacobian, and compares its empirical moments against (a) the
// analytic composition and (b) the product rule applied to per-factor
// empirical moments.
VerificationReport verify_multiplication(const TrialConfig& cfg);

// Branch-sum experiment over a shared input, against the addition rule.
VerificationReport verify_addition(const TrialConfig& cfg);

// Randomized sweep at the desk scale: boundary dims ~ U_i(dim_min, dim_max),
// depth/branch count ~ U_i(layers_min, layers_max), per-layer weight std
// ~ U(sigma_min, sigma_max), input mean ~ U(-5, 5), input std ~ U(0.1, 2).
// Layers are (DenseGaussian, ReLU) pairs; branches are [Dense, ReLU] chains
// on a shared square width.
struct SweepOptions {
  int configs = 40;
  int trials = 20;
  std::uint64_t seed = 20260814ull;
  int dim_min = 500, dim_max = 1500;
  int layers_min = 2, layers_max = 8;  // branch count range for addition
  double sigma_min = 0.1, sigma_max = 2.0;
  int max_dim = 5000;
  double band_phi = 0.07;
  double band_varphi = 0.20;
};

struct SweepSummary {
  std::vector<VerificationReport> reports;
  int phi_in_band = 0;
  int varphi_in_band = 0;
};

SweepSummary multiplication_sweep(const SweepOptions& opt);
SweepSummary addition_sweep(const SweepOptions& opt);

// Mean empirical phi (and varphi) of one component over `samples` independent
// draws — the per-component check that the library's closed forms describe
// the actual random matrices.
struct ComponentCheck {
  Moments analytic;
  double phi_mean = 0.0;
  double varphi_mean = 0.0;
  int samples = 0;
};

ComponentCheck component_check(const ComponentSpec& spec, int samples,
                               std::uint64_t seed);

// Expectant-orthogonality probe: averages selected off-diagonal entries of
// J^T J over draws and reports the largest |mean| together with the mean
// diagonal scale it should vanish against.
struct GramOffdiagCheck {
  double max_abs_offdiag_mean = 0.0;
  double diag_mean = 0.0;
  int samples = 0;
};

GramOffdiagCheck gram_offdiag_check(const ComponentSpec& spec, int samples,
                                    int pairs, std::uint64_t seed);

}  // namespace isometry

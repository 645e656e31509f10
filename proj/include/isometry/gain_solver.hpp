#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace isometry {

enum class Activation { relu, leaky_relu, tanh };
enum class KernelFamily { gaussian, orthogonal, sws };

Activation activation_from_name(const std::string& s);
KernelFamily family_from_name(const std::string& s);

struct GainRecommendation {
  std::string parameter_name;  // "sigma", "beta", "g", "scale", "sigma2"
  std::vector<double> values;  // main value first; extras explained in notes
  double achieved_phi = 0.0;   // re-substituted block phi
  std::optional<double> achieved_varphi{};  // unknown where not tabulated
  std::vector<std::string> notes;
};

// Initialization gain that makes one (linear, activation) block an exact
// first-moment isometry, phi = 1. n is the linear layer's input dim, m its
// output dim (defaults to n); gamma is the leaky slope where applicable.
// gaussian: per-entry std sigma; orthogonal: frame scale beta; sws: the
// post-standardization gain g (same values as gaussian sigma).
GainRecommendation closed_form_gain(Activation act, KernelFamily family,
                                    int n = 0, int m = -1, double gamma = 0.0);

struct SpreluScale {
  double scale = 1.0;       // sqrt(2 / (1 + alpha_used^2))
  double alpha_used = 0.0;  // alpha after clipping to [0, 0.5]
  bool clamped = false;
};

SpreluScale sprelu_scale(double alpha);

// Solves for (lambda, alpha) of the SeLU so that phi * gamma0 = 1 + eps and
// the output second moment equals 1 at input variance gamma0. eps = 0 has the
// exact solution (sqrt(2/gamma0), 0). Otherwise a damped Newton iteration
// with finite-difference Jacobian from the pinned guess (1.05, 1.67);
// residual target 1e-10, at most 200 iterations with at most 30 step
// halvings; a negative alpha proposal switches the iteration to sqrt(alpha).
// Throws ConvergenceError (with the last residuals) if the target is missed.
std::pair<double, double> selu_solve(double gamma0, double eps);

struct DepthEps {
  double eps = 0.0;           // 0.9 / L
  double growth_bound = 0.0;  // (1 + eps)^L
};

// Depth-aware slack for per-block phi = 1 + eps: keeps the end-to-end product
// (1+eps)^L below e^0.9 ~ 2.46 for any depth.
DepthEps depth_aware_eps(int L);

// Residual-branch downscaling that keeps an L-block chain of phi =
// 1 + (a/2)^m blocks bounded: a = 2 L^{-p/m} with p > 1, where m is the
// number of scaled layers inside one branch. gaussian family returns the
// per-entry variance sigma2 = L^{-p/m} * 2/n (downsampling projections keep
// sigma2 = 1/n); orthogonal returns beta = L^{-p/(2m)} * sqrt(2)
// (downsampling beta = 1). achieved_phi is the per-block 1 + (a/2)^m.
GainRecommendation fixup_scale(int L, int m, double p, int n,
                               KernelFamily family);

}  // namespace isometry

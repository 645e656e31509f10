#include "isometry/gain_solver.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "isometry/errors.hpp"
#include "isometry/graph.hpp"
#include "isometry/moments.hpp"

namespace isometry {

Activation activation_from_name(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "leaky_relu" || s == "leaky-relu") return Activation::leaky_relu;
  if (s == "tanh") return Activation::tanh;
  throw InputError("unknown activation '" + s +
                   "' (expected relu, leaky_relu, tanh)");
}

KernelFamily family_from_name(const std::string& s) {
  if (s == "gaussian") return KernelFamily::gaussian;
  if (s == "orthogonal") return KernelFamily::orthogonal;
  if (s == "sws") return KernelFamily::sws;
  throw InputError("unknown kernel family '" + s +
                   "' (expected gaussian, orthogonal, sws)");
}

namespace {

ComponentSpec activation_spec(Activation act, double gamma, int dim) {
  switch (act) {
    case Activation::relu: return ReLUSpec{0.5, dim};
    case Activation::leaky_relu: return LeakyReLUSpec{0.5, gamma, dim};
    case Activation::tanh: return TanhSpec{dim};
  }
  throw InputError("unknown activation");
}

}  // namespace

GainRecommendation closed_form_gain(Activation act, KernelFamily fam, int n,
                                    int m, double gamma) {
  if (fam != KernelFamily::orthogonal && n < 1)
    throw InputError("closed_form_gain: n (fan-in) must be >= 1");
  if (act == Activation::leaky_relu &&
      (!(gamma >= 0.0 && gamma <= 1.0) || !std::isfinite(gamma)))
    throw InputError("closed_form_gain: gamma must lie in [0, 1]");
  if (fam == KernelFamily::orthogonal && n < 1) n = 1024;  // only ratios matter
  if (m < 0) m = n;
  if (m < 1) throw InputError("closed_form_gain: m must be >= 1");

  const double g2 = gamma * gamma;
  const double mn = static_cast<double>(m) / n;
  // Variance of the rectifier spectrum after exact phi=1 scaling.
  const double leaky_spread = ((1.0 - g2) / (1.0 + g2)) * ((1.0 - g2) / (1.0 + g2));

  GainRecommendation rec;
  double value = 0.0;

  switch (fam) {
    case KernelFamily::gaussian:
    case KernelFamily::sws: {
      rec.parameter_name = fam == KernelFamily::gaussian ? "sigma" : "g";
      switch (act) {
        case Activation::relu:
          value = std::sqrt(2.0 / n);
          rec.achieved_varphi = 1.0 + mn;
          break;
        case Activation::leaky_relu:
          value = std::sqrt(2.0 / (n * (1.0 + g2)));
          rec.achieved_varphi = leaky_spread + mn;
          break;
        case Activation::tanh:
          value = 1.0 / std::sqrt(static_cast<double>(n));
          rec.achieved_varphi = mn;
          break;
      }
      if (fam == KernelFamily::sws) {
        // Standardized weights behave like the Gaussian family to first
        // moment; the spectrum variance is not tabulated for them.
        rec.achieved_varphi.reset();
        rec.notes.push_back(
            "spectrum variance not tabulated for standardized weights; use "
            "the Monte-Carlo verifier for it");
      }
      break;
    }
    case KernelFamily::orthogonal: {
      rec.parameter_name = "beta";
      switch (act) {
        case Activation::relu:
          value = std::sqrt(2.0);
          rec.achieved_varphi = 1.0;
          break;
        case Activation::leaky_relu:
          value = std::sqrt(2.0 / (1.0 + g2));
          rec.achieved_varphi = leaky_spread;
          break;
        case Activation::tanh:
          value = 1.0;
          rec.achieved_varphi = 0.0;
          rec.notes.push_back(
              "tanh/orthogonal gain is ~1 in the linearized regime; returned "
              "exactly 1");
          break;
      }
      break;
    }
  }

  rec.values = {value};

  // Re-substitution: phi of the (linear, activation) block built from the
  // recommendation, via the actual moment tables.
  ComponentSpec linear =
      fam == KernelFamily::orthogonal
          ? ComponentSpec(OrthogonalSpec{value, std::min(m, n), n})
          : ComponentSpec(DenseGaussianSpec{m, n, 0.0, value * value});
  const int act_dim = fam == KernelFamily::orthogonal ? std::min(m, n) : m;
  const ComponentSpec act_spec = activation_spec(act, gamma, act_dim);
  std::vector<Part> parts = {
      {component_moments(linear), structure_flags(linear)},
      {component_moments(act_spec), structure_flags(act_spec)}};
  rec.achieved_phi = compose_serial(parts).moments.phi;
  return rec;
}

SpreluScale sprelu_scale(double alpha) {
  if (!std::isfinite(alpha))
    throw InputError("sprelu_scale: alpha must be finite");
  SpreluScale out;
  out.alpha_used = alpha;
  if (alpha < 0.0 || alpha > 0.5) {
    out.alpha_used = alpha < 0.0 ? 0.0 : 0.5;
    out.clamped = true;
  }
  out.scale = std::sqrt(2.0 / (1.0 + out.alpha_used * out.alpha_used));
  return out;
}

std::pair<double, double> selu_solve(double gamma0, double eps) {
  if (!(gamma0 > 0.0) || !std::isfinite(gamma0))
    throw InputError("selu_solve: gamma0 must be finite and > 0");
  if (!(eps >= 0.0) || !std::isfinite(eps))
    throw InputError("selu_solve: eps must be finite and >= 0");

  // eps = 0 degenerates to alpha = 0: phi = lambda^2/2 = 1/gamma0 and
  // E f^2 = lambda^2 gamma0 / 2 = 1 are the same equation.
  if (eps == 0.0) return {std::sqrt(2.0 / gamma0), 0.0};

  // Residuals of the two design equations at input variance gamma0:
  //   phi * gamma0 = 1 + eps   (slight second-moment expansion)
  //   E[f^2]       = 1         (output lands back at unit scale)
  const auto residual = [&](double lam, double alp) -> std::array<double, 2> {
    const SeLUMoments mm = selu_moments(lam, alp, gamma0);
    return {mm.phi * gamma0 - (1.0 + eps), mm.out_second_moment - 1.0};
  };

  double lam = 1.05, alp = 1.67;  // pinned guess near the canonical pair
  bool sqrt_mode = false;         // iterate on s with alpha = s^2
  double s = 0.0;

  const auto eval = [&](double a, double b) {
    return sqrt_mode ? residual(a, b * b) : residual(a, b);
  };

  double x0 = lam, x1 = alp;
  std::array<double, 2> F = eval(x0, x1);
  const double tol = 1e-10;

  for (int iter = 0; iter < 200; ++iter) {
    if (std::abs(F[0]) < tol && std::abs(F[1]) < tol)
      return {x0, sqrt_mode ? x1 * x1 : x1};

    // Forward-difference Jacobian.
    const double h0 = 1e-7 * std::max(1.0, std::abs(x0));
    const double h1 = 1e-7 * std::max(1.0, std::abs(x1));
    const std::array<double, 2> Fa = eval(x0 + h0, x1);
    const std::array<double, 2> Fb = eval(x0, x1 + h1);
    const double j00 = (Fa[0] - F[0]) / h0, j01 = (Fb[0] - F[0]) / h1;
    const double j10 = (Fa[1] - F[1]) / h0, j11 = (Fb[1] - F[1]) / h1;
    const double det = j00 * j11 - j01 * j10;
    if (std::abs(det) < 1e-14) {
      std::ostringstream os;
      os << "selu_solve: singular Jacobian at (" << x0 << ", " << x1
         << "), residuals (" << F[0] << ", " << F[1] << ")";
      throw ConvergenceError(os.str());
    }
    const double dx0 = (F[0] * j11 - F[1] * j01) / det;
    const double dx1 = (j00 * F[1] - j10 * F[0]) / det;

    // Damped update; a negative alpha proposal switches to the sqrt
    // parametrization, which keeps alpha >= 0 from then on.
    const double fnorm = std::abs(F[0]) + std::abs(F[1]);
    double scale = 1.0;
    bool accepted = false;
    for (int halve = 0; halve < 30; ++halve, scale *= 0.5) {
      double t0 = x0 - scale * dx0;
      double t1 = x1 - scale * dx1;
      if (!sqrt_mode && t1 < 0.0) {
        sqrt_mode = true;
        x1 = std::sqrt(std::max(x1, 0.0));
        accepted = false;
        break;  // recompute everything in the new coordinates
      }
      if (t0 <= 0.0) continue;  // lambda must stay positive
      const std::array<double, 2> Ft = eval(t0, t1);
      if (std::abs(Ft[0]) + std::abs(Ft[1]) < fnorm) {
        x0 = t0;
        x1 = t1;
        F = Ft;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (sqrt_mode) {
        F = eval(x0, x1);
        continue;  // coordinates changed; next iteration rebuilds the model
      }
      std::ostringstream os;
      os << "selu_solve: no descent after 30 halvings at (" << x0 << ", " << x1
         << "), residuals (" << F[0] << ", " << F[1] << ")";
      throw ConvergenceError(os.str());
    }
  }

  std::ostringstream os;
  os << "selu_solve: residual target 1e-10 not met after 200 iterations; "
        "last residuals ("
     << F[0] << ", " << F[1] << ")";
  throw ConvergenceError(os.str());
}

DepthEps depth_aware_eps(int L) {
  if (L < 1) throw InputError("depth_aware_eps: L must be >= 1");
  DepthEps out;
  out.eps = 0.9 / L;
  out.growth_bound = std::pow(1.0 + out.eps, L);
  return out;
}

GainRecommendation fixup_scale(int L, int m, double p, int n,
                               KernelFamily family) {
  if (L < 1) throw InputError("fixup_scale: L must be >= 1");
  if (m < 1) throw InputError("fixup_scale: m (layers per branch) must be >= 1");
  if (family == KernelFamily::sws)
    throw InputError("fixup_scale: family must be gaussian or orthogonal");
  if (family == KernelFamily::gaussian && n < 1)
    throw InputError("fixup_scale: n (fan-in) must be >= 1");
  if (!(p > 1.0) || !std::isfinite(p))
    throw InputError(
        "fixup_scale: p must be > 1 (slower decay cannot keep the depth-L "
        "product bounded)");

  const double decay = std::pow(static_cast<double>(L), -p / m);
  const double a = 2.0 * decay;  // branch phi = (a/2)^m = L^{-p}

  GainRecommendation rec;
  if (family == KernelFamily::gaussian) {
    rec.parameter_name = "sigma2";
    rec.values = {decay * 2.0 / n, 1.0 / n};
    rec.notes.push_back(
        "values: [branch layers, downsampling projection]; per-entry "
        "variances");
  } else {
    rec.parameter_name = "beta";
    rec.values = {std::pow(static_cast<double>(L), -p / (2.0 * m)) *
                      std::sqrt(2.0),
                  1.0};
    rec.notes.push_back(
        "values: [branch layers, downsampling projection]; frame scales");
  }
  rec.achieved_phi = 1.0 + std::pow(a / 2.0, m);
  rec.achieved_varphi.reset();
  {
    std::ostringstream os;
    os << "residual block phi = 1 + (a/2)^m with a = " << a
       << "; depth-" << L << " product stays within "
       << std::pow(1.0 + std::pow(a / 2.0, m), L);
    rec.notes.push_back(os.str());
  }
  return rec;
}

}  // namespace isometry

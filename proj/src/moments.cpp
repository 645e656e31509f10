#include "isometry/moments.hpp"

#include <cmath>
#include <sstream>

namespace isometry {

double normal_cdf(double x) {
  // erfc is accurate in the far tail where 0.5*(1+erf) would cancel.
  return 0.5 * std::erfc(-x * (1.0 / std::sqrt(2.0)));
}

SeLUMoments selu_moments(double lambda, double alpha, double input_var) {
  if (!(input_var > 0.0) || !std::isfinite(input_var))
    throw InputError("selu_moments: input_var must be finite and > 0");
  if (!std::isfinite(lambda) || !std::isfinite(alpha))
    throw InputError("selu_moments: lambda and alpha must be finite");

  // f(x) = lambda * x              for x > 0
  //        lambda * alpha * (e^x - 1)  otherwise,   x ~ N(0, s^2).
  // All three moments reduce to E[e^{kx} 1(x<0)] = e^{k^2 s^2 / 2} Phi(-k s)
  // plus half-Gaussian moments:
  //   E[f'^2] = l^2/2 + l^2 a^2 e^{2 s^2} Phi(-2s)
  //   E[f^2]  = l^2 s^2/2 + l^2 a^2 (1/2 + e^{2 s^2} Phi(-2s)
  //                                      - 2 e^{s^2/2} Phi(-s))
  //   E[f]    = l s / sqrt(2 pi) + l a (e^{s^2/2} Phi(-s) - 1/2)
  const double s2 = input_var;
  const double s = std::sqrt(s2);
  const double e2 = std::exp(2.0 * s2) * normal_cdf(-2.0 * s);
  const double e1 = std::exp(0.5 * s2) * normal_cdf(-s);
  const double l2 = lambda * lambda;
  const double a2 = alpha * alpha;

  SeLUMoments out;
  out.phi = 0.5 * l2 + l2 * a2 * e2;
  out.out_second_moment = 0.5 * l2 * s2 + l2 * a2 * (0.5 + e2 - 2.0 * e1);
  out.out_mean =
      lambda * s / std::sqrt(2.0 * M_PI) + lambda * alpha * (e1 - 0.5);
  return out;
}

namespace {

[[noreturn]] void bad(const char* kind, const std::string& what) {
  throw InputError(std::string(kind) + ": " + what);
}

void check_dim(const char* kind, int dim) {
  if (dim < 1) bad(kind, "dim must be >= 1 (unresolved dims are 0)");
}

void check_finite(const char* kind, double v, const char* field) {
  if (!std::isfinite(v)) bad(kind, std::string(field) + " must be finite");
}

struct Validator {
  void operator()(const ReLUSpec& s) const {
    if (!(s.p >= 0.0 && s.p <= 1.0)) bad("ReLU", "p must lie in [0, 1]");
    check_dim("ReLU", s.dim);
  }
  void operator()(const LeakyReLUSpec& s) const {
    if (!(s.p >= 0.0 && s.p <= 1.0)) bad("LeakyReLU", "p must lie in [0, 1]");
    if (!(s.gamma >= 0.0 && s.gamma <= 1.0))
      bad("LeakyReLU", "gamma must lie in [0, 1]");
    check_dim("LeakyReLU", s.dim);
  }
  void operator()(const TanhSpec& s) const { check_dim("Tanh", s.dim); }
  void operator()(const SPReLUSpec& s) const {
    if (!(s.alpha >= 0.0 && s.alpha <= 1.0))
      bad("SPReLU", "alpha must lie in [0, 1]");
    check_dim("SPReLU", s.dim);
  }
  void operator()(const SeLUSpec& s) const {
    check_finite("SeLU", s.lambda, "lambda");
    check_finite("SeLU", s.alpha, "alpha");
    if (!(s.input_var > 0.0) || !std::isfinite(s.input_var))
      bad("SeLU", "input_var must be finite and > 0");
    check_dim("SeLU", s.dim);
  }
  void operator()(const DenseGaussianSpec& s) const {
    if (s.m < 1 || s.n < 1) bad("DenseGaussian", "m and n must be >= 1");
    check_finite("DenseGaussian", s.mu, "mu");
    if (!(s.sigma2 > 0.0) || !std::isfinite(s.sigma2))
      bad("DenseGaussian", "sigma2 must be finite and > 0");
  }
  void operator()(const Conv2DSpec& s) const {
    if (s.c_out < 1 || s.c_in < 1) bad("Conv2D", "channel counts must be >= 1");
    if (!(s.sigma2 > 0.0) || !std::isfinite(s.sigma2))
      bad("Conv2D", "sigma2 must be finite and > 0");
    validate(s.geom);
  }
  void operator()(const OrthogonalSpec& s) const {
    if (!(s.beta >= 0.0) || !std::isfinite(s.beta))
      bad("Orthogonal", "beta must be finite and >= 0");
    if (s.m < 1 || s.n < 1) bad("Orthogonal", "m and n must be >= 1");
    // J J^T = beta^2 I_m needs m orthonormal rows of length n.
    if (s.m > s.n) bad("Orthogonal", "m must be <= n");
  }
  void operator()(const DataNormSpec& s) const {
    if (!(s.sigma_b2 > 0.0) || !std::isfinite(s.sigma_b2))
      bad("DataNorm", "sigma_B2 must be finite and > 0");
    if (s.dim < 3) {
      // varphi = 2/(m sigma^4) comes from the two rank deficiencies of the
      // centered/normalized Jacobian; the formula needs m >= 3 to mean
      // anything, and dim 0 means unresolved.
      bad("DataNorm", "dim must be >= 3");
    }
  }
  void operator()(const SMNSpec& s) const {
    if (!(s.alpha2 > 0.0) || !std::isfinite(s.alpha2))
      bad("SMN", "alpha2 must be finite and > 0");
    if (s.dim < 2) bad("SMN", "dim must be >= 2");
  }
  void operator()(const IdentitySpec& s) const { check_dim("Identity", s.dim); }
};

Moments leaky_moments(double p, double gamma, int dim) {
  // Slopes are 1 w.p. p and gamma w.p. 1-p, so the Gram eigenvalues are 1 and
  // gamma^2 with those weights.
  const double g2 = gamma * gamma;
  const double phi = p + g2 * (1.0 - p);
  const double second = p + g2 * g2 * (1.0 - p);
  return {phi, second - phi * phi, dim, dim};
}

struct MomentsOf {
  Moments operator()(const ReLUSpec& s) const {
    return leaky_moments(s.p, 0.0, s.dim);
  }
  Moments operator()(const LeakyReLUSpec& s) const {
    return leaky_moments(s.p, s.gamma, s.dim);
  }
  Moments operator()(const TanhSpec& s) const {
    // Linearized deep regime: J -> I as pre-activations concentrate at 0.
    return {1.0, 0.0, s.dim, s.dim};
  }
  Moments operator()(const SPReLUSpec& s) const {
    // PReLU(alpha) at p = 1/2 normalized by its own phi = (1+alpha^2)/2:
    // phi becomes exactly 1, varphi becomes ((1-a^2)/(1+a^2))^2.
    const Moments base = leaky_moments(0.5, s.alpha, s.dim);
    const double norm = base.phi;
    return {base.phi / norm, *base.varphi / (norm * norm), s.dim, s.dim};
  }
  Moments operator()(const SeLUSpec& s) const {
    // Only the first moment has a closed form; the Gram spectrum variance of
    // the SeLU slope distribution is not tabulated.
    const SeLUMoments m = selu_moments(s.lambda, s.alpha, s.input_var);
    return {m.phi, std::nullopt, s.dim, s.dim};
  }
  Moments operator()(const DenseGaussianSpec& s) const {
    const double m = s.m, n = s.n;
    if (s.mu == 0.0) {
      // Wishart: E tr = n sigma^2, spectrum variance m n sigma^4.
      return {n * s.sigma2, m * n * s.sigma2 * s.sigma2, s.m, s.n};
    }
    // Shifted Wishart, asymptotic in m, n with c = n/m.
    const double mu2 = s.mu * s.mu;
    const double s4 = s.sigma2 * s.sigma2;
    const double c = n / m;
    const double phi = s.sigma2 * n + n * mu2;
    const double second = m * m * s4 * (c + c * c) + 6.0 * n * n * mu2 * s.sigma2 +
                          m * n * n * mu2 * mu2;
    return {phi, second - phi * phi, s.m, s.n};
  }
  Moments operator()(const Conv2DSpec& s) const {
    const double ks = effective_kernel_size(s.geom);
    const int h_out = conv_out_extent(s.geom.h_in, s.geom.p_h, s.geom.k_h, s.geom.s_h);
    const int w_out = conv_out_extent(s.geom.w_in, s.geom.p_w, s.geom.k_w, s.geom.s_w);
    // Each output tap accumulates c_in * (taps on real input) weights of
    // variance sigma2; zero-padding trims the boundary average to ks.
    return {s.c_in * ks * s.sigma2, std::nullopt, s.c_out * h_out * w_out,
            s.c_in * s.geom.h_in * s.geom.w_in};
  }
  Moments operator()(const OrthogonalSpec& s) const {
    // J J^T = beta^2 I exactly: point-mass spectrum.
    return {s.beta * s.beta, 0.0, s.m, s.n};
  }
  Moments operator()(const DataNormSpec& s) const {
    const double m = s.dim;
    return {1.0 / s.sigma_b2, 2.0 / (m * s.sigma_b2 * s.sigma_b2), s.dim, s.dim};
  }
  Moments operator()(const SMNSpec& s) const {
    return {1.0 / (s.alpha2 * s.alpha2), 0.0, s.dim, s.dim};
  }
  Moments operator()(const IdentitySpec& s) const {
    return {1.0, 0.0, s.dim, s.dim};
  }
};

StructureFlags flags_of(const ComponentSpec& spec) {
  StructureFlags f;
  if (std::holds_alternative<DenseGaussianSpec>(spec)) {
    const auto& s = std::get<DenseGaussianSpec>(spec);
    if (s.mu == 0.0) {
      // i.i.d. zero-mean Gaussian is bi-unitarily invariant.
      f = {true, true, InvarianceOrder::infinite, true, true};
    } else {
      // A mean shifts E[J^T J] off the identity and breaks every rotation
      // invariance; compositions through it are assumptions, not theorems.
      f = {false, false, InvarianceOrder::none, false, false};
    }
  } else if (std::holds_alternative<Conv2DSpec>(spec)) {
    // Zero-mean but Toeplitz-structured: no rotation invariance is claimed.
    f = {true, true, InvarianceOrder::none, false, true};
  } else if (std::holds_alternative<OrthogonalSpec>(spec)) {
    f = {true, true, InvarianceOrder::second, true, true};
  } else if (std::holds_alternative<IdentitySpec>(spec)) {
    // U * I is Haar: second moments invariant and trivially R-diagonal. Not
    // central, so it never grants invariance to a chain by itself.
    f = {true, false, InvarianceOrder::second, true, true};
  } else if (std::holds_alternative<DataNormSpec>(spec) ||
             std::holds_alternative<SMNSpec>(spec)) {
    f = {true, false, InvarianceOrder::none, false, true};
  } else if (std::holds_alternative<TanhSpec>(spec) ||
             std::holds_alternative<SeLUSpec>(spec)) {
    // Saturating activations scale second moments nonlinearly: not general
    // linear. Their diagonal Jacobians still have E[J^T J] ~ I.
    f = {true, false, InvarianceOrder::none, false, false};
  } else {
    // Rectifier family: diagonal i.i.d. slope masks.
    f = {true, false, InvarianceOrder::none, false, true};
  }
  return f;
}

}  // namespace

void validate(const ComponentSpec& spec) { std::visit(Validator{}, spec); }

Moments component_moments(const ComponentSpec& spec) {
  validate(spec);
  return std::visit(MomentsOf{}, spec);
}

StructureFlags structure_flags(const ComponentSpec& spec) {
  validate(spec);
  return flags_of(spec);
}

std::vector<std::string> component_warnings(const ComponentSpec& spec) {
  std::vector<std::string> w;
  if (std::holds_alternative<TanhSpec>(spec)) {
    w.push_back(
        "tanh uses the deep-regime linearization (phi=1, varphi=0): valid "
        "only while pre-activations stay concentrated near zero");
  } else if (const auto* d = std::get_if<DenseGaussianSpec>(&spec)) {
    if (d->mu != 0.0 && (d->m < 64 || d->n < 64)) {
      std::ostringstream os;
      os << "DenseGaussian with mu != 0 uses asymptotic moment formulas; "
            "dims ("
         << d->m << ", " << d->n << ") below 64 may show visible bias";
      w.push_back(os.str());
    }
  } else if (std::holds_alternative<SeLUSpec>(spec)) {
    w.push_back(
        "SeLU varphi has no closed form; only phi participates in "
        "composition");
  }
  return w;
}

const char* kind_name(const ComponentSpec& spec) {
  struct Namer {
    const char* operator()(const ReLUSpec&) const { return "ReLU"; }
    const char* operator()(const LeakyReLUSpec&) const { return "LeakyReLU"; }
    const char* operator()(const TanhSpec&) const { return "Tanh"; }
    const char* operator()(const SPReLUSpec&) const { return "SPReLU"; }
    const char* operator()(const SeLUSpec&) const { return "SeLU"; }
    const char* operator()(const DenseGaussianSpec&) const {
      return "DenseGaussian";
    }
    const char* operator()(const Conv2DSpec&) const { return "Conv2D"; }
    const char* operator()(const OrthogonalSpec&) const { return "Orthogonal"; }
    const char* operator()(const DataNormSpec&) const { return "DataNorm"; }
    const char* operator()(const SMNSpec&) const { return "SMN"; }
    const char* operator()(const IdentitySpec&) const { return "Identity"; }
  };
  return std::visit(Namer{}, spec);
}

namespace {

struct Dims {
  int out;
  int in;
};

Dims dims_of(const ComponentSpec& spec) {
  struct D {
    Dims operator()(const ReLUSpec& s) const { return {s.dim, s.dim}; }
    Dims operator()(const LeakyReLUSpec& s) const { return {s.dim, s.dim}; }
    Dims operator()(const TanhSpec& s) const { return {s.dim, s.dim}; }
    Dims operator()(const SPReLUSpec& s) const { return {s.dim, s.dim}; }
    Dims operator()(const SeLUSpec& s) const { return {s.dim, s.dim}; }
    Dims operator()(const DenseGaussianSpec& s) const { return {s.m, s.n}; }
    Dims operator()(const Conv2DSpec& s) const {
      const int h_out =
          conv_out_extent(s.geom.h_in, s.geom.p_h, s.geom.k_h, s.geom.s_h);
      const int w_out =
          conv_out_extent(s.geom.w_in, s.geom.p_w, s.geom.k_w, s.geom.s_w);
      return {s.c_out * h_out * w_out, s.c_in * s.geom.h_in * s.geom.w_in};
    }
    Dims operator()(const OrthogonalSpec& s) const { return {s.m, s.n}; }
    Dims operator()(const DataNormSpec& s) const { return {s.dim, s.dim}; }
    Dims operator()(const SMNSpec& s) const { return {s.dim, s.dim}; }
    Dims operator()(const IdentitySpec& s) const { return {s.dim, s.dim}; }
  };
  return std::visit(D{}, spec);
}

}  // namespace

int component_out_dim(const ComponentSpec& spec) { return dims_of(spec).out; }
int component_in_dim(const ComponentSpec& spec) { return dims_of(spec).in; }

int bind_component_dim(ComponentSpec& spec, int dim, const std::string& where) {
  if (dim < 1)
    throw InputError(where + ": cannot bind to non-positive dim " +
                     std::to_string(dim));
  auto mismatch = [&](int have) {
    throw InputError(where + ": " + kind_name(spec) + " input dim " +
                     std::to_string(have) + " does not match incoming dim " +
                     std::to_string(dim));
  };
  // Square element-wise components adopt the incoming dim when unresolved.
  auto bind_square = [&](int& d) {
    if (d == 0)
      d = dim;
    else if (d != dim)
      mismatch(d);
  };
  std::visit(
      [&](auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DenseGaussianSpec>) {
          if (s.n != dim) mismatch(s.n);
        } else if constexpr (std::is_same_v<T, Conv2DSpec>) {
          if (component_in_dim(spec) != dim) mismatch(component_in_dim(spec));
        } else if constexpr (std::is_same_v<T, OrthogonalSpec>) {
          if (s.m == 0 && s.n == 0) s.m = s.n = dim;  // square when inferred
          if (s.n != dim) mismatch(s.n);
        } else {
          bind_square(s.dim);
        }
      },
      spec);
  return component_out_dim(spec);
}

}  // namespace isometry

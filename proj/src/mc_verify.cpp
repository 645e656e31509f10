#include "isometry/mc_verify.hpp"

#include <Eigen/QR>
#include <cmath>
#include <random>
#include <sstream>

namespace isometry {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd gaussian_vector(int n, double mean, double stddev, CounterRng& rng) {
  std::normal_distribution<double> dist(mean, stddev);
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

MatrixXd gaussian_matrix(int rows, int cols, double mean, double stddev,
                         CounterRng& rng) {
  std::normal_distribution<double> dist(mean, stddev);
  MatrixXd m(rows, cols);
  // Column-major fill order: part of the deterministic stream contract.
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = dist(rng);
  return m;
}

// Diagonal slope mask of a rectifier: slope `pos` where the pre-activation is
// positive, `neg` elsewhere. Bernoulli(p) when no pre-activation is given.
VectorXd rectifier_slopes(int dim, double p, double pos, double neg,
                          const VectorXd* input, CounterRng& rng) {
  VectorXd d(dim);
  if (input) {
    for (int i = 0; i < dim; ++i) d[i] = (*input)[i] > 0.0 ? pos : neg;
  } else {
    std::bernoulli_distribution coin(p);
    for (int i = 0; i < dim; ++i) d[i] = coin(rng) ? pos : neg;
  }
  return d;
}

struct JacobianSampler {
  CounterRng& rng;
  const VectorXd* input;

  MatrixXd operator()(const ReLUSpec& s) const {
    return rectifier_slopes(s.dim, s.p, 1.0, 0.0, input, rng).asDiagonal();
  }
  MatrixXd operator()(const LeakyReLUSpec& s) const {
    return rectifier_slopes(s.dim, s.p, 1.0, s.gamma, input, rng).asDiagonal();
  }
  MatrixXd operator()(const TanhSpec& s) const {
    // Slope sech^2(x); pre-activations default to N(0, 1).
    VectorXd x = input ? *input : gaussian_vector(s.dim, 0.0, 1.0, rng);
    VectorXd d(s.dim);
    for (int i = 0; i < s.dim; ++i) {
      const double c = std::cosh(x[i]);
      d[i] = 1.0 / (c * c);
    }
    return d.asDiagonal();
  }
  MatrixXd operator()(const SPReLUSpec& s) const {
    const double scale = std::sqrt(2.0 / (1.0 + s.alpha * s.alpha));
    VectorXd d = rectifier_slopes(s.dim, 0.5, 1.0, s.alpha, input, rng);
    return (scale * d).asDiagonal();
  }
  MatrixXd operator()(const SeLUSpec& s) const {
    VectorXd x = input ? *input
                       : gaussian_vector(s.dim, 0.0, std::sqrt(s.input_var), rng);
    VectorXd d(s.dim);
    for (int i = 0; i < s.dim; ++i)
      d[i] = x[i] > 0.0 ? s.lambda : s.lambda * s.alpha * std::exp(x[i]);
    return d.asDiagonal();
  }
  MatrixXd operator()(const DenseGaussianSpec& s) const {
    return gaussian_matrix(s.m, s.n, s.mu, std::sqrt(s.sigma2), rng);
  }
  MatrixXd operator()(const Conv2DSpec& s) const {
    const auto& g = s.geom;
    const int h_out = conv_out_extent(g.h_in, g.p_h, g.k_h, g.s_h);
    const int w_out = conv_out_extent(g.w_in, g.p_w, g.k_w, g.s_w);
    const long long rows = 1ll * s.c_out * h_out * w_out;
    const long long cols = 1ll * s.c_in * g.h_in * g.w_in;
    if (rows * cols > 30'000'000ll)
      throw InputError(
          "sample_jacobian: Conv2D unrolled operator larger than 3e7 "
          "entries");

    // One weight tensor, unrolled to the linear operator the convolution
    // applies. Taps landing on padding contribute nothing (zero rows entries):
    // that is exactly where the effective kernel size comes from.
    std::normal_distribution<double> dist(0.0, std::sqrt(s.sigma2));
    std::vector<double> w(static_cast<std::size_t>(s.c_out) * s.c_in * g.k_h *
                          g.k_w);
    for (auto& x : w) x = dist(rng);
    auto wat = [&](int co, int ci, int dy, int dx) {
      return w[((static_cast<std::size_t>(co) * s.c_in + ci) * g.k_h + dy) *
                   g.k_w +
               dx];
    };

    MatrixXd J = MatrixXd::Zero(rows, cols);
    for (int co = 0; co < s.c_out; ++co)
      for (int oy = 0; oy < h_out; ++oy)
        for (int ox = 0; ox < w_out; ++ox) {
          const long long row =
              (static_cast<long long>(co) * h_out + oy) * w_out + ox;
          for (int ci = 0; ci < s.c_in; ++ci)
            for (int dy = 0; dy < g.k_h; ++dy) {
              const int iy = oy * g.s_h - g.p_h + dy;
              if (iy < 0 || iy >= g.h_in) continue;
              for (int dx = 0; dx < g.k_w; ++dx) {
                const int ix = ox * g.s_w - g.p_w + dx;
                if (ix < 0 || ix >= g.w_in) continue;
                const long long col =
                    (static_cast<long long>(ci) * g.h_in + iy) * g.w_in + ix;
                J(row, col) = wat(co, ci, dy, dx);
              }
            }
        }
    return J;
  }
  MatrixXd operator()(const OrthogonalSpec& s) const {
    // Haar frame: QR of an n x m Gaussian with the R-diagonal sign fix (plain
    // Householder Q is not Haar without it).
    MatrixXd G = gaussian_matrix(s.n, s.m, 0.0, 1.0, rng);
    Eigen::HouseholderQR<MatrixXd> qr(G);
    MatrixXd Q = qr.householderQ() * MatrixXd::Identity(s.n, s.m);
    for (int j = 0; j < s.m; ++j)
      if (qr.matrixQR()(j, j) < 0.0) Q.col(j) = -Q.col(j);
    return s.beta * Q.transpose();
  }
  MatrixXd operator()(const DataNormSpec& s) const {
    VectorXd u = input ? *input
                       : gaussian_vector(s.dim, 0.0, std::sqrt(s.sigma_b2), rng);
    const double mean = u.mean();
    VectorXd c = u.array() - mean;
    const double var = c.squaredNorm() / s.dim;
    const double sd = std::sqrt(var);
    VectorXd uhat = c / sd;
    // d/du_j (u_i - mean)/sd = (delta_ij - 1/m - uhat_i uhat_j / m) / sd.
    MatrixXd J = MatrixXd::Identity(s.dim, s.dim);
    J.array() -= 1.0 / s.dim;
    J.noalias() -= (uhat * uhat.transpose()) / s.dim;
    J /= sd;
    return J;
  }
  MatrixXd operator()(const SMNSpec& s) const {
    VectorXd x = input ? *input : gaussian_vector(s.dim, 0.0, s.alpha2, rng);
    const double rms = std::sqrt(x.squaredNorm() / s.dim);
    VectorXd xhat = x / rms;
    // d/dx_j x_i/rms = (delta_ij - xhat_i xhat_j / m) / rms.
    MatrixXd J = MatrixXd::Identity(s.dim, s.dim);
    J.noalias() -= (xhat * xhat.transpose()) / s.dim;
    J /= rms;
    return J;
  }
  MatrixXd operator()(const IdentitySpec& s) const {
    return MatrixXd::Identity(s.dim, s.dim);
  }
};

// Forward value map of a component, evaluated at x (used to chain
// pre-activations through a network sample).
VectorXd forward_value(const ComponentSpec& spec, const VectorXd& x,
                       const MatrixXd& J) {
  struct F {
    const VectorXd& x;
    const MatrixXd& J;
    VectorXd operator()(const ReLUSpec&) const { return J * x; }
    VectorXd operator()(const LeakyReLUSpec&) const { return J * x; }
    VectorXd operator()(const SPReLUSpec&) const { return J * x; }
    VectorXd operator()(const TanhSpec&) const {
      return x.array().tanh().matrix();
    }
    VectorXd operator()(const SeLUSpec& s) const {
      VectorXd y(x.size());
      for (int i = 0; i < x.size(); ++i)
        y[i] = x[i] > 0.0 ? s.lambda * x[i]
                          : s.lambda * s.alpha * (std::exp(x[i]) - 1.0);
      return y;
    }
    VectorXd operator()(const DenseGaussianSpec&) const { return J * x; }
    VectorXd operator()(const Conv2DSpec&) const { return J * x; }
    VectorXd operator()(const OrthogonalSpec&) const { return J * x; }
    VectorXd operator()(const DataNormSpec&) const {
      const double mean = x.mean();
      Eigen::ArrayXd c = x.array() - mean;
      const double sd = std::sqrt(c.matrix().squaredNorm() / x.size());
      return (c / sd).matrix();
    }
    VectorXd operator()(const SMNSpec&) const {
      const double rms = std::sqrt(x.squaredNorm() / x.size());
      return x / rms;
    }
    VectorXd operator()(const IdentitySpec&) const { return x; }
  };
  return std::visit(F{x, J}, spec);
}

// The rectifier/normalizer Jacobians depend on their input; linear ones do
// not. Chains must evaluate the former at the propagated pre-activations.
bool jacobian_depends_on_input(const ComponentSpec& spec) {
  return !(std::holds_alternative<DenseGaussianSpec>(spec) ||
           std::holds_alternative<Conv2DSpec>(spec) ||
           std::holds_alternative<OrthogonalSpec>(spec) ||
           std::holds_alternative<IdentitySpec>(spec));
}

void check_dims_cap(const std::vector<ComponentSpec>& chain, int max_dim) {
  for (const auto& c : chain) {
    validate(c);
    const int d = std::max(component_in_dim(c), component_out_dim(c));
    if (d > max_dim) {
      std::ostringstream os;
      os << "TrialConfig: component " << kind_name(c) << " dim " << d
         << " exceeds max_dim " << max_dim
         << " (raise max_dim or ISOMETRY_MAX_DIM deliberately; cost grows "
            "cubically)";
      throw InputError(os.str());
    }
  }
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Part analytic_part(const ComponentSpec& c) {
  return {component_moments(c), structure_flags(c)};
}

// Composition of the analytic library moments; evaluated with the assumption
// switch on because the verifier's whole purpose is to test the formulas
// empirically, including where the flags alone would not prove them.
Part theory_serial(const std::vector<ComponentSpec>& chain) {
  std::vector<Part> parts;
  parts.reserve(chain.size());
  for (const auto& c : chain) parts.push_back(analytic_part(c));
  return compose_serial(parts, ComposeOptions{true});
}

struct EmpiricalAccumulator {
  double phi_sum = 0.0;
  double varphi_sum = 0.0;
  int count = 0;

  void add(const Moments& m) {
    phi_sum += m.phi;
    varphi_sum += *m.varphi;
    ++count;
  }
  Moments mean(int out_dim, int in_dim) const {
    return {phi_sum / count, varphi_sum / count, out_dim, in_dim};
  }
};

void finalize_report(VerificationReport& r, const Part& theory,
                     const Moments& factor_based, const TrialConfig& cfg) {
  r.phi_theory = theory.moments.phi;
  r.varphi_theory = theory.moments.varphi;
  r.phi_empirical = mean_of(r.trial_phi);
  r.varphi_empirical = mean_of(r.trial_varphi);
  r.band_phi = cfg.band_phi;
  r.band_varphi = cfg.band_varphi;

  r.phi_ratio = r.phi_empirical / r.phi_theory;
  if (r.varphi_theory && *r.varphi_theory > 0.0)
    r.varphi_ratio = r.varphi_empirical / *r.varphi_theory;

  r.phi_ratio_vs_factors = r.phi_empirical / factor_based.phi;
  if (factor_based.varphi && *factor_based.varphi > 0.0)
    r.varphi_ratio_vs_factors = r.varphi_empirical / *factor_based.varphi;

  r.pass = std::abs(r.phi_ratio - 1.0) <= r.band_phi &&
           (!r.varphi_ratio || std::abs(*r.varphi_ratio - 1.0) <= r.band_varphi);
}

}  // namespace

Eigen::MatrixXd sample_jacobian(const ComponentSpec& spec, CounterRng& rng,
                                const Eigen::VectorXd* input) {
  validate(spec);
  if (input && input->size() != component_in_dim(spec)) {
    std::ostringstream os;
    os << "sample_jacobian: input size " << input->size()
       << " != component input dim " << component_in_dim(spec);
    throw InputError(os.str());
  }
  return std::visit(JacobianSampler{rng, input}, spec);
}

Eigen::MatrixXd sample_jacobian(const ComponentSpec& spec, std::uint64_t seed) {
  CounterRng rng(seed);
  return sample_jacobian(spec, rng);
}

Moments empirical_moments(const Eigen::MatrixXd& J) {
  if (J.rows() < 1 || J.cols() < 1)
    throw InputError("empirical_moments: empty matrix");
  const double m = static_cast<double>(J.rows());
  const double phi = J.squaredNorm() / m;
  // tr((J J^T)^2) = |J J^T|_F^2 = |J^T J|_F^2; build the smaller Gram.
  MatrixXd gram;
  if (J.rows() <= J.cols())
    gram.noalias() = J * J.transpose();
  else
    gram.noalias() = J.transpose() * J;
  const double second = gram.squaredNorm() / m;
  return {phi, second - phi * phi, static_cast<int>(J.rows()),
          static_cast<int>(J.cols())};
}

VerificationReport verify_multiplication(const TrialConfig& cfg) {
  if (cfg.chain.empty())
    throw InputError("verify_multiplication: empty chain");
  if (cfg.trials < 1 || cfg.trials > 5000)
    throw InputError("verify_multiplication: trials must lie in [1, 5000]");
  check_dims_cap(cfg.chain, cfg.max_dim);
  for (std::size_t i = 1; i < cfg.chain.size(); ++i)
    if (component_in_dim(cfg.chain[i]) != component_out_dim(cfg.chain[i - 1]))
      throw InputError("verify_multiplication: chain dims do not compose at part " +
                       std::to_string(i));

  const Part theory = theory_serial(cfg.chain);

  VerificationReport r;
  r.trial_phi.reserve(cfg.trials);
  r.trial_varphi.reserve(cfg.trials);
  std::vector<EmpiricalAccumulator> factors(cfg.chain.size());

  for (int t = 0; t < cfg.trials; ++t) {
    CounterRng rng(cfg.seed ^ static_cast<std::uint64_t>(t));
    VectorXd x = gaussian_vector(component_in_dim(cfg.chain.front()),
                                 cfg.input_mean, std::sqrt(cfg.input_var), rng);
    MatrixXd product;
    for (std::size_t i = 0; i < cfg.chain.size(); ++i) {
      const ComponentSpec& c = cfg.chain[i];
      const VectorXd* in =
          jacobian_depends_on_input(c) ? &x : nullptr;
      MatrixXd J = sample_jacobian(c, rng, in);
      factors[i].add(empirical_moments(J));
      x = forward_value(c, x, J);
      if (i == 0)
        product = std::move(J);
      else {
        MatrixXd next;
        next.noalias() = J * product;
        product = std::move(next);
      }
    }
    const Moments pm = empirical_moments(product);
    r.trial_phi.push_back(pm.phi);
    r.trial_varphi.push_back(*pm.varphi);
  }

  // Product rule applied to the per-factor empirical means.
  std::vector<Part> factor_parts;
  factor_parts.reserve(factors.size());
  for (std::size_t i = 0; i < factors.size(); ++i)
    factor_parts.push_back({factors[i].mean(component_out_dim(cfg.chain[i]),
                                            component_in_dim(cfg.chain[i])),
                            structure_flags(cfg.chain[i])});
  const Moments factor_based =
      compose_serial(factor_parts, ComposeOptions{true}).moments;

  finalize_report(r, theory, factor_based, cfg);
  return r;
}

VerificationReport verify_addition(const TrialConfig& cfg) {
  if (cfg.branches.size() < 2)
    throw InputError("verify_addition: need at least 2 branches");
  if (cfg.trials < 1 || cfg.trials > 5000)
    throw InputError("verify_addition: trials must lie in [1, 5000]");
  for (const auto& b : cfg.branches) {
    if (b.empty()) throw InputError("verify_addition: empty branch");
    check_dims_cap(b, cfg.max_dim);
  }
  const int in_dim = component_in_dim(cfg.branches.front().front());
  const int out_dim = component_out_dim(cfg.branches.front().back());
  for (const auto& b : cfg.branches)
    if (component_in_dim(b.front()) != in_dim ||
        component_out_dim(b.back()) != out_dim)
      throw InputError("verify_addition: branch dims disagree");

  std::vector<Part> theory_branches;
  theory_branches.reserve(cfg.branches.size());
  for (const auto& b : cfg.branches) theory_branches.push_back(theory_serial(b));
  const Part theory =
      compose_parallel(theory_branches, ComposeOptions{true});

  VerificationReport r;
  r.trial_phi.reserve(cfg.trials);
  r.trial_varphi.reserve(cfg.trials);
  std::vector<EmpiricalAccumulator> branch_acc(cfg.branches.size());

  for (int t = 0; t < cfg.trials; ++t) {
    CounterRng rng(cfg.seed ^ static_cast<std::uint64_t>(t));
    VectorXd x0 = gaussian_vector(in_dim, cfg.input_mean,
                                  std::sqrt(cfg.input_var), rng);
    MatrixXd sum = MatrixXd::Zero(out_dim, in_dim);
    for (std::size_t k = 0; k < cfg.branches.size(); ++k) {
      VectorXd x = x0;
      MatrixXd branch;
      for (std::size_t i = 0; i < cfg.branches[k].size(); ++i) {
        const ComponentSpec& c = cfg.branches[k][i];
        const VectorXd* in = jacobian_depends_on_input(c) ? &x : nullptr;
        MatrixXd J = sample_jacobian(c, rng, in);
        x = forward_value(c, x, J);
        if (i == 0)
          branch = std::move(J);
        else {
          MatrixXd next;
          next.noalias() = J * branch;
          branch = std::move(next);
        }
      }
      branch_acc[k].add(empirical_moments(branch));
      sum += branch;
    }
    const Moments sm = empirical_moments(sum);
    r.trial_phi.push_back(sm.phi);
    r.trial_varphi.push_back(*sm.varphi);
  }

  std::vector<Part> factor_parts;
  factor_parts.reserve(branch_acc.size());
  for (std::size_t k = 0; k < branch_acc.size(); ++k) {
    // Carry each branch's composed flags so the addition rule sees the same
    // structure evidence the analytic path does.
    factor_parts.push_back(
        {branch_acc[k].mean(out_dim, in_dim), theory_branches[k].flags});
  }
  const Moments factor_based =
      compose_parallel(factor_parts, ComposeOptions{true}).moments;

  finalize_report(r, theory, factor_based, cfg);
  return r;
}

namespace {

// Uniform integer/real draws for sweep configuration sampling.
int uniform_int(CounterRng& rng, int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  return d(rng);
}

double uniform_real(CounterRng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

}  // namespace

SweepSummary multiplication_sweep(const SweepOptions& opt) {
  if (opt.configs < 1) throw InputError("multiplication_sweep: configs >= 1");
  SweepSummary out;
  out.reports.reserve(opt.configs);
  CounterRng master(opt.seed);
  for (int c = 0; c < opt.configs; ++c) {
    const int L = uniform_int(master, opt.layers_min, opt.layers_max);
    std::vector<int> dims(L + 1);
    for (int& d : dims) d = uniform_int(master, opt.dim_min, opt.dim_max);

    TrialConfig cfg;
    cfg.trials = opt.trials;
    cfg.max_dim = opt.max_dim;
    cfg.band_phi = opt.band_phi;
    cfg.band_varphi = opt.band_varphi;
    cfg.seed = master();
    cfg.input_mean = uniform_real(master, -5.0, 5.0);
    const double sx = uniform_real(master, 0.1, 2.0);
    cfg.input_var = sx * sx;
    for (int l = 0; l < L; ++l) {
      const double sigma = uniform_real(master, opt.sigma_min, opt.sigma_max);
      cfg.chain.push_back(
          DenseGaussianSpec{dims[l + 1], dims[l], 0.0, sigma * sigma});
      cfg.chain.push_back(ReLUSpec{0.5, dims[l + 1]});
    }
    VerificationReport r = verify_multiplication(cfg);
    if (std::abs(r.phi_ratio - 1.0) <= opt.band_phi) ++out.phi_in_band;
    if (r.varphi_ratio && std::abs(*r.varphi_ratio - 1.0) <= opt.band_varphi)
      ++out.varphi_in_band;
    out.reports.push_back(std::move(r));
  }
  return out;
}

SweepSummary addition_sweep(const SweepOptions& opt) {
  if (opt.configs < 1) throw InputError("addition_sweep: configs >= 1");
  SweepSummary out;
  out.reports.reserve(opt.configs);
  CounterRng master(opt.seed);
  for (int c = 0; c < opt.configs; ++c) {
    const int B = uniform_int(master, opt.layers_min, opt.layers_max);
    const int dim = uniform_int(master, opt.dim_min, opt.dim_max);

    TrialConfig cfg;
    cfg.trials = opt.trials;
    cfg.max_dim = opt.max_dim;
    cfg.band_phi = opt.band_phi;
    cfg.band_varphi = opt.band_varphi;
    cfg.seed = master();
    cfg.input_mean = uniform_real(master, -5.0, 5.0);
    const double sx = uniform_real(master, 0.1, 2.0);
    cfg.input_var = sx * sx;
    for (int b = 0; b < B; ++b) {
      const double sigma = uniform_real(master, opt.sigma_min, opt.sigma_max);
      cfg.branches.push_back(
          {DenseGaussianSpec{dim, dim, 0.0, sigma * sigma},
           ReLUSpec{0.5, dim}});
    }
    VerificationReport r = verify_addition(cfg);
    if (std::abs(r.phi_ratio - 1.0) <= opt.band_phi) ++out.phi_in_band;
    if (r.varphi_ratio && std::abs(*r.varphi_ratio - 1.0) <= opt.band_varphi)
      ++out.varphi_in_band;
    out.reports.push_back(std::move(r));
  }
  return out;
}

ComponentCheck component_check(const ComponentSpec& spec, int samples,
                               std::uint64_t seed) {
  if (samples < 1) throw InputError("component_check: samples must be >= 1");
  ComponentCheck out;
  out.analytic = component_moments(spec);
  out.samples = samples;
  double phi = 0.0, varphi = 0.0;
  for (int t = 0; t < samples; ++t) {
    CounterRng rng(seed ^ static_cast<std::uint64_t>(t));
    const Moments m = empirical_moments(sample_jacobian(spec, rng));
    phi += m.phi;
    varphi += *m.varphi;
  }
  out.phi_mean = phi / samples;
  out.varphi_mean = varphi / samples;
  return out;
}

GramOffdiagCheck gram_offdiag_check(const ComponentSpec& spec, int samples,
                                    int pairs, std::uint64_t seed) {
  if (samples < 1 || pairs < 1)
    throw InputError("gram_offdiag_check: samples and pairs must be >= 1");
  validate(spec);
  const int n = component_in_dim(spec);
  if (n < 2) throw InputError("gram_offdiag_check: input dim must be >= 2");

  // Fixed pair selection, independent of the sample stream.
  CounterRng pick(seed * 0x9e3779b97f4a7c15ull + 1);
  std::vector<std::pair<int, int>> idx;
  idx.reserve(pairs);
  for (int k = 0; k < pairs; ++k) {
    int a = uniform_int(pick, 0, n - 1);
    int b = uniform_int(pick, 0, n - 2);
    if (b >= a) ++b;
    idx.emplace_back(a, b);
  }

  std::vector<double> acc(pairs, 0.0);
  double diag = 0.0;
  for (int t = 0; t < samples; ++t) {
    CounterRng rng(seed ^ static_cast<std::uint64_t>(t));
    const MatrixXd J = sample_jacobian(spec, rng);
    for (int k = 0; k < pairs; ++k)
      acc[k] += J.col(idx[k].first).dot(J.col(idx[k].second));
    diag += J.col(idx[0].first).squaredNorm();
  }

  GramOffdiagCheck out;
  out.samples = samples;
  out.diag_mean = diag / samples;
  for (int k = 0; k < pairs; ++k)
    out.max_abs_offdiag_mean =
        std::max(out.max_abs_offdiag_mean, std::abs(acc[k] / samples));
  return out;
}

}  // namespace isometry

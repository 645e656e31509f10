#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "isometry/effective_kernel.hpp"
#include "isometry/errors.hpp"

namespace isometry {

// First two spectrum-moments of a layer's Jacobian Gram matrix J*J^T together
// with the shape of J. phi is the expected normalized trace E[tr(J J^T)]
// (tr = trace / dimension); varphi is the variance of the Gram spectrum,
// E[tr((J J^T)^2)] - phi^2. varphi is empty when no closed form is available
// (2D convolution, SeLU) — unknown is represented, never fabricated.
struct Moments {
  double phi = 0.0;
  std::optional<double> varphi{};
  int out_dim = 0;  // rows of J
  int in_dim = 0;   // columns of J
};

// How strongly a Jacobian's distribution is invariant under independent
// orthogonal/unitary rotations. "first" covers first Gram moments, "second"
// covers fourth mixed moments (enough for the variance formulas), "infinite"
// is full bi-invariance (i.i.d. Gaussian).
enum class InvarianceOrder { none = 0, first = 1, second = 2, infinite = 3 };

// Algebraic properties a component's Jacobian is known to satisfy. These
// drive the prerequisite checks of the composition rules; they are
// deliberately conservative defaults and callers may assert stronger ones.
struct StructureFlags {
  bool expectant_orthogonal = false;  // E[J^T J] is a multiple of the identity
  bool central = false;               // every entry of J has zero mean
  InvarianceOrder unitary_invariance_order = InvarianceOrder::none;
  bool r_diagonal = false;   // U*J has a polar part free of its radial part
  bool general_linear = false;  // E|f(x)|^2/dim = phi * E|x|^2/dim
};

// ---------------------------------------------------------------------------
// Component descriptions. dim fields equal to 0 mean "not resolved yet"; the
// graph resolver fills them from the network's boundary dims.

struct ReLUSpec {
  double p = 0.5;  // probability that a pre-activation is positive
  int dim = 0;
};

struct LeakyReLUSpec {
  double p = 0.5;
  double gamma = 0.0;  // negative-side slope, in [0, 1]
  int dim = 0;
};

// Deep-regime linearization: activations concentrated near zero, J ~ I.
struct TanhSpec {
  int dim = 0;
};

// PReLU with negative slope alpha at p = 1/2, post-scaled by sqrt(2/(1+a^2))
// so that phi is exactly 1.
struct SPReLUSpec {
  double alpha = 0.0;
  int dim = 0;
};

struct SeLUSpec {
  double lambda = 1.0507009873554805;
  double alpha = 1.6732632423543772;
  double input_var = 1.0;  // variance of the (zero-mean Gaussian) pre-activations
  int dim = 0;
};

struct DenseGaussianSpec {
  int m = 0;  // output dim
  int n = 0;  // input dim
  double mu = 0.0;
  double sigma2 = 1.0;  // per-entry variance
};

struct Conv2DSpec {
  int c_out = 0;
  int c_in = 0;
  ConvGeometry geom{};
  double sigma2 = 1.0;  // per-weight variance, zero mean
};

// Rows-orthonormal frame scaled by beta: J J^T = beta^2 * I_m. Needs m <= n.
struct OrthogonalSpec {
  double beta = 1.0;
  int m = 0;
  int n = 0;
};

// Zero-mean batch data normalization by the batch std sigma_B.
struct DataNormSpec {
  double sigma_b2 = 1.0;  // batch variance of the incoming pre-activations
  int dim = 0;
};

// Second-moment normalization: divides by the rms alpha2 of the incoming
// pre-activations (no mean subtraction).
struct SMNSpec {
  double alpha2 = 1.0;  // rms of the incoming pre-activations
  int dim = 0;
};

struct IdentitySpec {
  int dim = 0;
};

using ComponentSpec =
    std::variant<ReLUSpec, LeakyReLUSpec, TanhSpec, SPReLUSpec, SeLUSpec,
                 DenseGaussianSpec, Conv2DSpec, OrthogonalSpec, DataNormSpec,
                 SMNSpec, IdentitySpec>;

// Closed-form scalar moments of the SeLU nonlinearity for x ~ N(0, input_var):
// phi = E[f'(x)^2], the output second moment E[f(x)^2], and the output mean.
struct SeLUMoments {
  double phi = 0.0;
  double out_second_moment = 0.0;
  double out_mean = 0.0;
};

SeLUMoments selu_moments(double lambda, double alpha, double input_var);

// Standard normal CDF via erfc; absolute error far below 1e-12 everywhere.
double normal_cdf(double x);

// Validates the spec (throws InputError naming the offending field) and
// returns its spectrum-moments.
Moments component_moments(const ComponentSpec& spec);

// Known algebraic structure of the component's Jacobian.
StructureFlags structure_flags(const ComponentSpec& spec);

void validate(const ComponentSpec& spec);

// Human-readable notes about modeling assumptions the moments rely on
// (linearization regimes, asymptotic formulas at small dims). Empty if none.
std::vector<std::string> component_warnings(const ComponentSpec& spec);

const char* kind_name(const ComponentSpec& spec);
int component_out_dim(const ComponentSpec& spec);
int component_in_dim(const ComponentSpec& spec);

// Fills unresolved activation/normalizer dims with `dim`; checks components
// that carry intrinsic dims against it. Returns the component's output dim.
// `where` prefixes error messages.
int bind_component_dim(ComponentSpec& spec, int dim, const std::string& where);

}  // namespace isometry

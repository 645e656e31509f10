// isometry — static spectrum-moment analysis and Monte-Carlo verification of
// deep-network Jacobians.
//
// Exit codes: 0 success / analysis clean; 1 isometry violation or refused
// composition; 2 bad input; 3 solver or internal failure.

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "isometry/effective_kernel.hpp"
#include "isometry/errors.hpp"
#include "isometry/forward_flow.hpp"
#include "isometry/gain_solver.hpp"
#include "isometry/graph.hpp"
#include "isometry/mc_verify.hpp"
#include "isometry/netspec.hpp"
#include "isometry/smn_cost.hpp"
#include "json.hpp"

namespace {

using namespace isometry;
using nlohmann::json;

constexpr int kExitViolation = 1;
constexpr int kExitInput = 2;
constexpr int kExitInternal = 3;

int env_max_dim(int fallback) {
  const char* v = std::getenv("ISOMETRY_MAX_DIM");
  if (!v) return fallback;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (end == v || *end != '\0' || n < 1)
    throw InputError("ISOMETRY_MAX_DIM must be a positive integer");
  return static_cast<int>(n);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string varphi_str(const std::optional<double>& v) {
  return v ? fmt(*v) : std::string("unknown");
}

// ---- analyze ---------------------------------------------------------------

struct AnalyzeArgs {
  std::string spec_path;
  bool json_out = false;
  bool forward = false;
  bool assume_second_order = false;
  std::optional<double> tol_phi, tol_varphi, alpha2_in;
};

int run_analyze(const AnalyzeArgs& a) {
  NetworkSpecFile spec = parse_network_spec(a.spec_path);
  if (a.tol_phi) spec.analysis.tol_phi = *a.tol_phi;
  if (a.tol_varphi) spec.analysis.tol_varphi = *a.tol_varphi;
  if (a.alpha2_in) spec.analysis.alpha2_in = *a.alpha2_in;
  if (a.assume_second_order) spec.analysis.assume_second_order = true;

  const CompositionResult res = analyze_graph(spec.graph, spec.analysis);

  std::vector<FlowState> flow;
  if (a.forward) flow = propagate_alpha2(spec.graph, spec.analysis.alpha2_in);

  bool all_pass = true;
  for (const auto& b : res.per_block) all_pass = all_pass && b.isometry_pass;

  if (a.json_out) {
    json j = json::parse(composition_result_json(res));
    if (a.forward) {
      json f = json::array();
      for (const auto& st : flow)
        f.push_back({{"layer", st.layer_index},
                     {"alpha2", st.alpha2},
                     {"phi_applied", st.phi_applied}});
      j["forward"] = std::move(f);
    }
    j["isometry_pass"] = all_pass;
    std::printf("%s\n", j.dump(2).c_str());
  } else {
    for (const auto& line : res.trace) std::printf("%s\n", line.c_str());
    for (const auto& b : res.per_block)
      for (const auto& n : b.notes)
        std::printf("  note (block %d): %s\n", b.index, n.c_str());
    if (a.forward) {
      std::printf("forward second-moment trace (alpha2_in=%s):\n",
                  fmt(spec.analysis.alpha2_in).c_str());
      for (const auto& st : flow)
        std::printf("  layer %d: alpha2=%s (phi applied %s)\n", st.layer_index,
                    fmt(st.alpha2).c_str(), fmt(st.phi_applied).c_str());
    }
    std::printf("isometry %s (tol_phi=%s, tol_varphi=%s)\n",
                all_pass ? "PASS" : "FAIL",
                fmt(spec.analysis.tol_phi).c_str(),
                fmt(spec.analysis.tol_varphi).c_str());
  }
  return all_pass ? 0 : kExitViolation;
}

// ---- verify ----------------------------------------------------------------

struct VerifyArgs {
  std::string mode = "both";
  int configs = 8;
  int trials = 10;
  std::uint64_t seed = 20260814ull;
  int dim_min = 500, dim_max = 1500;
  int max_dim = 5000;
  bool json_out = false;
};

int run_verify(const VerifyArgs& a) {
  SweepOptions opt;
  opt.configs = a.configs;
  opt.trials = a.trials;
  opt.seed = a.seed;
  opt.dim_min = a.dim_min;
  opt.dim_max = a.dim_max;
  opt.max_dim = env_max_dim(a.max_dim);

  bool pass = true;
  json out;
  out["schema_version"] = 1;

  auto run_one = [&](const char* name, SweepSummary (*sweep)(const SweepOptions&)) {
    const SweepSummary s = sweep(opt);
    const int n = static_cast<int>(s.reports.size());
    // Same acceptance fractions as the pinned experiment: 95% phi, 90% varphi.
    const bool ok = s.phi_in_band * 20 >= n * 19 && s.varphi_in_band * 10 >= n * 9;
    pass = pass && ok;
    if (a.json_out) {
      json reports = json::array();
      for (const auto& r : s.reports)
        reports.push_back(json::parse(verification_report_json(r)));
      out[name] = {{"phi_in_band", s.phi_in_band},
                   {"varphi_in_band", s.varphi_in_band},
                   {"configs", n},
                   {"pass", ok},
                   {"reports", std::move(reports)}};
    } else {
      std::printf("%s: %d configs, phi in band %d, varphi in band %d -> %s\n",
                  name, n, s.phi_in_band, s.varphi_in_band,
                  ok ? "PASS" : "FAIL");
      for (int i = 0; i < n; ++i) {
        const auto& r = s.reports[i];
        std::printf(
            "  [%02d] phi %s/%s (ratio %s, vs factors %s) varphi %s/%s "
            "(ratio %s)\n",
            i, fmt(r.phi_empirical).c_str(), fmt(r.phi_theory).c_str(),
            fmt(r.phi_ratio).c_str(), fmt(r.phi_ratio_vs_factors).c_str(),
            fmt(r.varphi_empirical).c_str(),
            varphi_str(r.varphi_theory).c_str(),
            varphi_str(r.varphi_ratio).c_str());
      }
    }
  };

  if (a.mode == "mul" || a.mode == "both")
    run_one("multiplication", &multiplication_sweep);
  if (a.mode == "add" || a.mode == "both") run_one("addition", &addition_sweep);
  if (a.mode != "mul" && a.mode != "add" && a.mode != "both")
    throw InputError("verify: --mode must be mul, add or both");

  if (a.json_out) {
    out["pass"] = pass;
    std::printf("%s\n", out.dump(2).c_str());
  }
  return pass ? 0 : kExitViolation;
}

// ---- gains -----------------------------------------------------------------

struct GainsArgs {
  std::string activation;
  std::string family;
  int n = 0;
  int m = -1;
  double gamma = 0.0;
  bool json_out = false;
};

int run_gains(const GainsArgs& a) {
  const GainRecommendation rec =
      closed_form_gain(activation_from_name(a.activation),
                       family_from_name(a.family), a.n, a.m, a.gamma);
  if (a.json_out) {
    json j;
    j["schema_version"] = 1;
    j["parameter"] = rec.parameter_name;
    j["values"] = rec.values;
    j["achieved_phi"] = rec.achieved_phi;
    j["achieved_varphi"] =
        rec.achieved_varphi ? json(*rec.achieved_varphi) : json(nullptr);
    j["notes"] = rec.notes;
    std::printf("%s\n", j.dump(2).c_str());
  } else {
    std::printf("%s = %s\n", rec.parameter_name.c_str(),
                fmt(rec.values[0]).c_str());
    std::printf("achieved phi = %s, varphi = %s\n", fmt(rec.achieved_phi).c_str(),
                varphi_str(rec.achieved_varphi).c_str());
    for (const auto& n : rec.notes) std::printf("note: %s\n", n.c_str());
  }
  return 0;
}

// ---- selu-solve ------------------------------------------------------------

struct SeluArgs {
  double gamma0 = 1.0;
  std::optional<double> eps;
  std::optional<int> depth;
  bool json_out = false;
};

int run_selu(const SeluArgs& a) {
  if (a.eps.has_value() == a.depth.has_value())
    throw InputError("selu-solve: give exactly one of --eps or --depth");
  double eps = 0.0;
  std::optional<DepthEps> de;
  if (a.depth) {
    de = depth_aware_eps(*a.depth);
    eps = de->eps;
  } else {
    eps = *a.eps;
  }
  const auto [lambda, alpha] = selu_solve(a.gamma0, eps);
  const SeLUMoments m = selu_moments(lambda, alpha, a.gamma0);
  if (a.json_out) {
    json j;
    j["schema_version"] = 1;
    j["gamma0"] = a.gamma0;
    j["eps"] = eps;
    if (de) j["depth_growth_bound"] = de->growth_bound;
    j["lambda"] = lambda;
    j["alpha"] = alpha;
    j["phi"] = m.phi;
    j["out_second_moment"] = m.out_second_moment;
    j["out_mean"] = m.out_mean;
    std::printf("%s\n", j.dump(2).c_str());
  } else {
    if (de)
      std::printf("depth-aware eps = %s (depth-L growth bound %s)\n",
                  fmt(eps).c_str(), fmt(de->growth_bound).c_str());
    std::printf("lambda = %.12f\nalpha  = %.12f\n", lambda, alpha);
    std::printf("check: phi*gamma0 = %s, out second moment = %s\n",
                fmt(m.phi * a.gamma0).c_str(), fmt(m.out_second_moment).c_str());
  }
  return 0;
}

// ---- effective-kernel -------------------------------------------------------

struct KernelArgs {
  std::vector<int> k, stride, pad, in;
  bool oracle = false;
  bool json_out = false;
};

int run_kernel(const KernelArgs& a) {
  ConvGeometry g;
  g.k_h = a.k.at(0);
  g.k_w = a.k.at(1);
  g.s_h = a.stride.at(0);
  g.s_w = a.stride.at(1);
  g.p_h = a.pad.at(0);
  g.p_w = a.pad.at(1);
  g.h_in = a.in.at(0);
  g.w_in = a.in.at(1);
  const double eff = effective_kernel_size(g);
  std::optional<double> oracle;
  if (a.oracle) oracle = brute_force_kernel_oracle(g);
  if (a.json_out) {
    json j;
    j["schema_version"] = 1;
    j["effective_kernel_size"] = eff;
    j["full_kernel_size"] = g.k_h * g.k_w;
    j["h_out"] = conv_out_extent(g.h_in, g.p_h, g.k_h, g.s_h);
    j["w_out"] = conv_out_extent(g.w_in, g.p_w, g.k_w, g.s_w);
    if (oracle) j["oracle"] = *oracle;
    std::printf("%s\n", j.dump(2).c_str());
  } else {
    std::printf("effective kernel size = %.12g (of %d)\n", eff, g.k_h * g.k_w);
    if (oracle)
      std::printf("enumeration oracle    = %.12g (|diff| = %.3g)\n", *oracle,
                  std::abs(*oracle - eff));
  }
  return 0;
}

// ---- resnet-profile ----------------------------------------------------------

struct ResnetArgs {
  int blocks = 0;
  std::vector<int> downsample_at;
  bool json_out = false;
};

int run_resnet(const ResnetArgs& a) {
  const ResnetProfile p = resnet_alpha2_profile(a.blocks, a.downsample_at);
  if (a.json_out) {
    json j;
    j["schema_version"] = 1;
    j["alpha2"] = p.alpha2;
    j["phi"] = p.phi;
    std::printf("%s\n", j.dump(2).c_str());
  } else {
    std::printf("alpha2:");
    for (double v : p.alpha2) std::printf(" %g", v);
    std::printf("\nphi:   ");
    double prod = 1.0;
    for (double v : p.phi) {
      std::printf(" %g", v);
      prod *= v;
    }
    std::printf("\ntelescoped product = %g (= alpha2_L / alpha2_0)\n", prod);
  }
  return 0;
}

// ---- smn-cost ----------------------------------------------------------------

int run_smn_cost(bool json_out) {
  const CostComparison c = normalization_cost_comparison();
  if (json_out) {
    json j;
    j["schema_version"] = 1;
    j["batch_norm"] = {{"reductions_m", c.batch_norm.reductions_m},
                       {"reductions_q", c.batch_norm.reductions_q},
                       {"elementwise_m", c.batch_norm.elementwise_m},
                       {"elementwise_q", c.batch_norm.elementwise_q},
                       {"total_map_passes", c.batch_norm_total}};
    j["second_moment_norm"] = {
        {"reductions_m", c.second_moment_norm.reductions_m},
        {"reductions_q", c.second_moment_norm.reductions_q},
        {"elementwise_m", c.second_moment_norm.elementwise_m},
        {"elementwise_q", c.second_moment_norm.elementwise_q},
        {"total_map_passes", c.second_moment_total}};
    j["speedup_vs_smn"] = c.speedup_vs_smn;
    j["reduction_vs_bn"] = c.reduction_vs_bn;
    std::printf("%s\n", j.dump(2).c_str());
  } else {
    std::printf("batch norm:          %d map passes (%d reductions + %d elementwise)\n",
                c.batch_norm_total, c.batch_norm.reductions_m,
                c.batch_norm.elementwise_m);
    std::printf("second-moment norm:  %d map passes (%d reductions + %d elementwise, "
                "+%d/%d over reduced vectors)\n",
                c.second_moment_total, c.second_moment_norm.reductions_m,
                c.second_moment_norm.elementwise_m,
                c.second_moment_norm.reductions_q,
                c.second_moment_norm.elementwise_q);
    std::printf("speedup vs smn cost: %.0f%%  (traffic reduction vs bn: %.0f%%)\n",
                100.0 * c.speedup_vs_smn, 100.0 * c.reduction_vs_bn);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "isometry — spectrum-moment analysis of deep-network Jacobians"};
  app.require_subcommand(1);

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand(
      "analyze", "Compose spectrum-moments of a network spec and check "
                 "block dynamical isometry");
  analyze->add_option("spec", an.spec_path, "JSON network spec")->required();
  analyze->add_flag("--json", an.json_out, "JSON report");
  analyze->add_flag("--forward", an.forward, "second-moment forward trace");
  analyze->add_flag("--assume-second-order", an.assume_second_order,
                    "evaluate variance formulas beyond their proven range");
  double tol_phi_v = 0, tol_varphi_v = 0, alpha2_v = 0;
  analyze->add_option("--tol-phi", tol_phi_v, "override |phi-1| tolerance")
      ->each([&an](const std::string& s) { an.tol_phi = std::stod(s); });
  analyze->add_option("--tol-varphi", tol_varphi_v, "override varphi tolerance")
      ->each([&an](const std::string& s) { an.tol_varphi = std::stod(s); });
  analyze->add_option("--alpha2-in", alpha2_v, "input second moment")
      ->each([&an](const std::string& s) { an.alpha2_in = std::stod(s); });

  VerifyArgs ve;
  auto* verify = app.add_subcommand(
      "verify", "Monte-Carlo random-matrix check of the composition rules");
  verify->add_option("--mode", ve.mode, "mul, add or both")
      ->check(CLI::IsMember({"mul", "add", "both"}));
  verify->add_option("--configs", ve.configs, "random configurations per mode");
  verify->add_option("--trials", ve.trials, "trials per configuration");
  verify->add_option("--seed", ve.seed, "master seed");
  verify->add_option("--dim-min", ve.dim_min, "smallest boundary width");
  verify->add_option("--dim-max", ve.dim_max, "largest boundary width");
  verify->add_option("--max-dim", ve.max_dim,
                     "hard cap on any dimension (also ISOMETRY_MAX_DIM)");
  verify->add_flag("--json", ve.json_out, "JSON report");

  GainsArgs ga;
  auto* gains = app.add_subcommand(
      "gains", "Closed-form initialization gains for exact phi = 1");
  gains->add_option("--activation", ga.activation, "relu, leaky_relu, tanh")
      ->required();
  gains->add_option("--family", ga.family, "gaussian, orthogonal, sws")
      ->required();
  gains->add_option("--n", ga.n, "fan-in");
  gains->add_option("--m", ga.m, "fan-out (defaults to n)");
  gains->add_option("--gamma", ga.gamma, "leaky slope");
  gains->add_flag("--json", ga.json_out, "JSON report");

  SeluArgs se;
  auto* selu = app.add_subcommand(
      "selu-solve", "Solve SeLU (lambda, alpha) for phi*gamma0 = 1+eps with "
                    "unit output second moment");
  selu->add_option("--gamma0", se.gamma0, "input second moment (default 1)");
  double eps_v = 0;
  int depth_v = 0;
  selu->add_option("--eps", eps_v, "second-moment slack")
      ->each([&se](const std::string& s) { se.eps = std::stod(s); });
  selu->add_option("--depth", depth_v, "derive eps = 0.9/L from depth L")
      ->each([&se](const std::string& s) { se.depth = std::stoi(s); });
  selu->add_flag("--json", se.json_out, "JSON report");

  KernelArgs ke;
  auto* kernel = app.add_subcommand(
      "effective-kernel", "Average kernel taps on real input under padding");
  kernel->add_option("--k", ke.k, "kernel extents: KH KW")
      ->required()
      ->expected(2);
  kernel->add_option("--stride", ke.stride, "strides: SH SW")->expected(2);
  kernel->add_option("--pad", ke.pad, "padding per side: PH PW")->expected(2);
  kernel->add_option("--in", ke.in, "input extents: H W")
      ->required()
      ->expected(2);
  kernel->add_flag("--oracle", ke.oracle,
                   "also run the enumeration oracle (inputs <= 10^4 pixels)");
  kernel->add_flag("--json", ke.json_out, "JSON report");
  ke.stride = {1, 1};
  ke.pad = {0, 0};

  ResnetArgs re;
  auto* resnet = app.add_subcommand(
      "resnet-profile", "Residual-network second-moment and phi profile");
  resnet->add_option("--blocks", re.blocks, "number of residual blocks")
      ->required();
  resnet->add_option("--downsample-at", re.downsample_at,
                     "block indices with projection shortcuts");
  resnet->add_flag("--json", re.json_out, "JSON report");

  bool smn_json = false;
  auto* smn = app.add_subcommand(
      "smn-cost", "Normalization memory-pass accounting (batch norm vs "
                  "second-moment norm)");
  smn->add_flag("--json", smn_json, "JSON report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (analyze->parsed()) return run_analyze(an);
    if (verify->parsed()) return run_verify(ve);
    if (gains->parsed()) return run_gains(ga);
    if (selu->parsed()) return run_selu(se);
    if (kernel->parsed()) return run_kernel(ke);
    if (resnet->parsed()) return run_resnet(re);
    if (smn->parsed()) return run_smn_cost(smn_json);
  } catch (const InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInput;
  } catch (const PrerequisiteError& e) {
    std::fprintf(stderr, "violated: %s\n", e.what());
    return kExitViolation;
  } catch (const ConvergenceError& e) {
    std::fprintf(stderr, "convergence failure: %s\n", e.what());
    return kExitInternal;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  }
  return 0;
}

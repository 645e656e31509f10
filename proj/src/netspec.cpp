#include "isometry/netspec.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "isometry/mc_verify.hpp"
#include "json.hpp"

namespace isometry {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw InputError(path + ": " + what);
}

void require_object(const json& j, const std::string& path,
                    const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      fail(path + "." + it.key(), "unknown key");
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

class ParamReader {
 public:
  ParamReader(const json& component, const std::string& path)
      : path_(path + ".params") {
    if (component.contains("params")) {
      const json& p = component.at("params");
      if (!p.is_object()) fail(path_, "expected an object");
      params_ = &p;
    }
  }

  double number(const char* name, std::optional<double> fallback = {}) {
    const json* v = find(name);
    if (!v) {
      if (fallback) return *fallback;
      fail(path_ + "." + name, "required parameter missing");
    }
    return get_number(*v, path_ + "." + name);
  }

  int integer(const char* name, std::optional<int> fallback = {}) {
    const json* v = find(name);
    if (!v) {
      if (fallback) return *fallback;
      fail(path_ + "." + name, "required parameter missing");
    }
    return get_int(*v, path_ + "." + name);
  }

  // Every accepted parameter must have been read; anything else is a typo.
  void finish() const {
    if (!params_) return;
    for (auto it = params_->begin(); it != params_->end(); ++it)
      if (!seen_.count(it.key()))
        fail(path_ + "." + it.key(), "unknown parameter");
  }

  const std::string& path() const { return path_; }

 private:
  const json* find(const char* name) {
    seen_.insert(name);
    if (!params_ || !params_->contains(name)) return nullptr;
    return &params_->at(name);
  }

  const json* params_ = nullptr;
  std::string path_;
  std::set<std::string> seen_;
};

ComponentSpec parse_component(const json& j, const std::string& path) {
  require_object(j, path, {"kind", "params"});
  if (!j.contains("kind")) fail(path + ".kind", "required key missing");
  if (!j.at("kind").is_string()) fail(path + ".kind", "expected a string");
  const std::string kind = j.at("kind").get<std::string>();

  ParamReader rd(j, path);
  ComponentSpec spec;

  if (kind == "ReLU") {
    ReLUSpec s;
    s.p = rd.number("p", 0.5);
    if (!(s.p >= 0.0 && s.p <= 1.0))
      fail(rd.path() + ".p", "must lie in [0, 1]");
    spec = s;
  } else if (kind == "LeakyReLU") {
    LeakyReLUSpec s;
    s.p = rd.number("p", 0.5);
    s.gamma = rd.number("gamma");
    if (!(s.p >= 0.0 && s.p <= 1.0))
      fail(rd.path() + ".p", "must lie in [0, 1]");
    // gamma = 1 (pure identity limit) is reserved for the library API.
    if (!(s.gamma >= 0.0 && s.gamma < 1.0))
      fail(rd.path() + ".gamma", "must lie in [0, 1)");
    spec = s;
  } else if (kind == "Tanh") {
    spec = TanhSpec{};
  } else if (kind == "SPReLU") {
    SPReLUSpec s;
    s.alpha = rd.number("alpha");
    if (!(s.alpha >= 0.0 && s.alpha <= 1.0))
      fail(rd.path() + ".alpha", "must lie in [0, 1]");
    spec = s;
  } else if (kind == "SeLU") {
    SeLUSpec s;
    s.lambda = rd.number("lambda");
    s.alpha = rd.number("alpha");
    s.input_var = rd.number("input_var", 1.0);
    if (!(s.input_var > 0.0)) fail(rd.path() + ".input_var", "must be > 0");
    spec = s;
  } else if (kind == "DenseGaussian") {
    DenseGaussianSpec s;
    s.m = rd.integer("m");
    s.n = rd.integer("n");
    s.mu = rd.number("mu", 0.0);
    s.sigma2 = rd.number("sigma2");
    if (s.m < 1) fail(rd.path() + ".m", "must be >= 1");
    if (s.n < 1) fail(rd.path() + ".n", "must be >= 1");
    if (!(s.sigma2 > 0.0)) fail(rd.path() + ".sigma2", "must be > 0");
    spec = s;
  } else if (kind == "Conv2D") {
    Conv2DSpec s;
    s.c_out = rd.integer("c_out");
    s.c_in = rd.integer("c_in");
    s.geom.k_h = rd.integer("k_h");
    s.geom.k_w = rd.integer("k_w");
    s.geom.s_h = rd.integer("s_h", 1);
    s.geom.s_w = rd.integer("s_w", 1);
    s.geom.p_h = rd.integer("p_h", 0);
    s.geom.p_w = rd.integer("p_w", 0);
    s.geom.h_in = rd.integer("h_in");
    s.geom.w_in = rd.integer("w_in");
    s.sigma2 = rd.number("sigma2");
    try {
      validate(ComponentSpec(s));
    } catch (const InputError& e) {
      fail(rd.path(), e.what());
    }
    spec = s;
  } else if (kind == "Orthogonal") {
    OrthogonalSpec s;
    s.beta = rd.number("beta");
    s.m = rd.integer("m", 0);
    s.n = rd.integer("n", 0);
    if (!(s.beta >= 0.0)) fail(rd.path() + ".beta", "must be >= 0");
    if ((s.m == 0) != (s.n == 0))
      fail(rd.path(), "give both m and n or neither (inferred square)");
    if (s.m != 0 && s.m > s.n) fail(rd.path() + ".m", "must be <= n");
    spec = s;
  } else if (kind == "DataNorm") {
    DataNormSpec s;
    s.sigma_b2 = rd.number("sigma_B2", 1.0);
    if (!(s.sigma_b2 > 0.0)) fail(rd.path() + ".sigma_B2", "must be > 0");
    spec = s;
  } else if (kind == "SMN") {
    SMNSpec s;
    s.alpha2 = rd.number("alpha2", 1.0);
    if (!(s.alpha2 > 0.0)) fail(rd.path() + ".alpha2", "must be > 0");
    spec = s;
  } else if (kind == "Identity") {
    spec = IdentitySpec{};
  } else {
    fail(path + ".kind", "unknown component kind '" + kind + "'");
  }

  rd.finish();
  return spec;
}

std::vector<ComponentSpec> parse_chain(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty())
    fail(path, "expected a non-empty array of components");
  std::vector<ComponentSpec> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(parse_component(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace

NetworkSpecFile parse_network_spec_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("network spec: JSON parse error: ") +
                     e.what());
  }

  require_object(j, "spec", {"dims", "blocks", "analysis"});

  NetworkSpecFile out;

  if (!j.contains("dims")) fail("spec.dims", "required key missing");
  const json& dims = j.at("dims");
  if (!dims.is_array() || dims.size() < 2)
    fail("spec.dims", "expected an array of at least 2 boundary widths");
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const int d = get_int(dims[i], "dims[" + std::to_string(i) + "]");
    if (d < 1) fail("dims[" + std::to_string(i) + "]", "must be >= 1");
    out.graph.dims.push_back(d);
  }

  if (!j.contains("blocks")) fail("spec.blocks", "required key missing");
  const json& blocks = j.at("blocks");
  if (!blocks.is_array() || blocks.empty())
    fail("spec.blocks", "expected a non-empty array");
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::string path = "blocks[" + std::to_string(b) + "]";
    require_object(blocks[b], path, {"serial", "parallel"});
    const bool has_serial = blocks[b].contains("serial");
    const bool has_parallel = blocks[b].contains("parallel");
    if (has_serial == has_parallel)
      fail(path, "expected exactly one of 'serial' or 'parallel'");
    if (has_serial) {
      out.graph.blocks.push_back(
          SerialBlock{parse_chain(blocks[b].at("serial"), path + ".serial")});
    } else {
      const json& par = blocks[b].at("parallel");
      if (!par.is_array() || par.size() < 2)
        fail(path + ".parallel", "expected an array of at least 2 branches");
      ParallelBlock pb;
      for (std::size_t k = 0; k < par.size(); ++k)
        pb.branches.push_back(parse_chain(
            par[k], path + ".parallel[" + std::to_string(k) + "]"));
      out.graph.blocks.push_back(std::move(pb));
    }
  }

  if (j.contains("analysis")) {
    const std::string path = "analysis";
    require_object(j.at("analysis"), path,
                   {"tol_phi", "tol_varphi", "alpha2_in",
                    "assume_second_order"});
    const json& a = j.at("analysis");
    if (a.contains("tol_phi"))
      out.analysis.tol_phi = get_number(a.at("tol_phi"), path + ".tol_phi");
    if (a.contains("tol_varphi"))
      out.analysis.tol_varphi =
          get_number(a.at("tol_varphi"), path + ".tol_varphi");
    if (a.contains("alpha2_in"))
      out.analysis.alpha2_in =
          get_number(a.at("alpha2_in"), path + ".alpha2_in");
    if (a.contains("assume_second_order")) {
      if (!a.at("assume_second_order").is_boolean())
        fail(path + ".assume_second_order", "expected a boolean");
      out.analysis.assume_second_order =
          a.at("assume_second_order").get<bool>();
    }
    if (!(out.analysis.tol_phi > 0.0))
      fail(path + ".tol_phi", "must be > 0");
    if (!(out.analysis.tol_varphi > 0.0))
      fail(path + ".tol_varphi", "must be > 0");
    if (!(out.analysis.alpha2_in > 0.0))
      fail(path + ".alpha2_in", "must be > 0");
  }

  // Resolve eagerly so dim errors surface with file-level context at parse
  // time, not at first use.
  out.graph = resolve_graph(out.graph);
  return out;
}

NetworkSpecFile parse_network_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("network spec: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_network_spec_text(ss.str());
}

namespace {

json moments_json(const Moments& m) {
  json j;
  j["phi"] = m.phi;
  if (m.varphi)
    j["varphi"] = *m.varphi;
  else
    j["varphi"] = nullptr;
  j["out_dim"] = m.out_dim;
  j["in_dim"] = m.in_dim;
  return j;
}

}  // namespace

std::string composition_result_json(const CompositionResult& r) {
  json j;
  j["schema_version"] = 1;
  j["network"] = moments_json(r.moments);
  j["network"]["verdict"] = verdict_name(r.verdict);
  j["trace"] = r.trace;
  json blocks = json::array();
  for (const auto& b : r.per_block) {
    json jb = moments_json(b.moments);
    jb["index"] = b.index;
    jb["verdict"] = verdict_name(b.verdict);
    jb["isometry"] = b.isometry_pass;
    jb["notes"] = b.notes;
    blocks.push_back(std::move(jb));
  }
  j["blocks"] = std::move(blocks);
  return j.dump(2);
}

std::string verification_report_json(const VerificationReport& r) {
  json j;
  j["schema_version"] = 1;
  j["phi_theory"] = r.phi_theory;
  j["varphi_theory"] = r.varphi_theory ? json(*r.varphi_theory) : json(nullptr);
  j["phi_empirical"] = r.phi_empirical;
  j["varphi_empirical"] = r.varphi_empirical;
  j["phi_ratio"] = r.phi_ratio;
  j["varphi_ratio"] = r.varphi_ratio ? json(*r.varphi_ratio) : json(nullptr);
  j["phi_ratio_vs_factors"] = r.phi_ratio_vs_factors;
  j["varphi_ratio_vs_factors"] = r.varphi_ratio_vs_factors
                                     ? json(*r.varphi_ratio_vs_factors)
                                     : json(nullptr);
  j["trial_phi"] = r.trial_phi;
  j["trial_varphi"] = r.trial_varphi;
  j["band_phi"] = r.band_phi;
  j["band_varphi"] = r.band_varphi;
  j["pass"] = r.pass;
  return j.dump(2);
}

}  // namespace isometry

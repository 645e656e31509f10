#include "isometry/graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace isometry {

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::proven: return "proven";
    case Verdict::assumed: return "assumed";
    case Verdict::violated: return "violated";
  }
  return "?";
}

namespace {

Verdict worse(Verdict a, Verdict b) {
  return static_cast<int>(a) >= static_cast<int>(b) ? a : b;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

// A square part with known moments phi = 1 and varphi = 0 has a point-mass
// Gram spectrum, i.e. it is almost surely orthogonal. Orthogonal factors do
// not move the singular value distribution of the rest of a serial chain at
// all, so these parts are exactly neutral for the variance bookkeeping (and
// contribute factor 1 to phi). This is what makes [I, I, I] -> (1, 0) a
// theorem rather than an assumption, and what keeps inserting Identity
// anywhere from changing any result.
bool spectrum_neutral(const Part& p) {
  return p.moments.phi == 1.0 && p.moments.varphi.has_value() &&
         *p.moments.varphi == 0.0 && p.moments.out_dim == p.moments.in_dim;
}

bool almost_surely_zero(const Part& p) {
  return p.moments.phi == 0.0 && p.moments.varphi.has_value() &&
         *p.moments.varphi == 0.0;
}

struct SerialOutcome {
  Part part;
  bool first_order_proven = false;   // phi product backed by flags
  bool second_order_proven = false;  // varphi sum backed by flags
  bool varphi_assumed = false;       // varphi present only due to the option
  int active_parts = 0;              // parts that are not spectrum-neutral
};

SerialOutcome compose_serial_impl(const std::vector<Part>& parts,
                                  const ComposeOptions& opt) {
  if (parts.empty()) throw InputError("compose_serial: empty chain");
  for (std::size_t i = 1; i < parts.size(); ++i) {
    if (parts[i].moments.in_dim != parts[i - 1].moments.out_dim) {
      std::ostringstream os;
      os << "compose_serial: part " << i << " expects input dim "
         << parts[i].moments.in_dim << " but part " << i - 1
         << " produces dim " << parts[i - 1].moments.out_dim;
      throw InputError(os.str());
    }
  }

  SerialOutcome out;

  // Structure flags of the product.
  bool all_eo = true, all_gl = true, any_central = false, any_rdiag = false;
  InvarianceOrder granted = InvarianceOrder::none;
  for (const Part& p : parts) {
    all_eo = all_eo && p.flags.expectant_orthogonal;
    all_gl = all_gl && p.flags.general_linear;
    any_central = any_central || p.flags.central;
    any_rdiag = any_rdiag || p.flags.r_diagonal;
    // Only a central factor rotates the rest of the chain: its invariance
    // order is inherited by the whole product. Non-central parts (Identity
    // included) never upgrade a chain on their own.
    if (p.flags.central)
      granted = std::max(granted, p.flags.unitary_invariance_order);
  }
  if (granted == InvarianceOrder::none && all_eo)
    granted = InvarianceOrder::first;

  out.part.flags = {all_eo, any_central, granted, any_rdiag, all_gl};
  out.first_order_proven = granted >= InvarianceOrder::first;
  out.second_order_proven = granted >= InvarianceOrder::second;

  const int m_last = parts.back().moments.out_dim;
  const int n_first = parts.front().moments.in_dim;

  double phi = 1.0;
  bool all_varphi_known = true;
  for (const Part& p : parts) {
    phi *= p.moments.phi;
    all_varphi_known = all_varphi_known && p.moments.varphi.has_value();
    if (!spectrum_neutral(p)) ++out.active_parts;
  }

  Moments m;
  m.out_dim = m_last;
  m.in_dim = n_first;
  m.phi = phi;

  if (phi == 0.0 && all_varphi_known) {
    // A factor with phi = 0 and varphi = 0 annihilates the product.
    bool annihilated = std::any_of(parts.begin(), parts.end(),
                                   [](const Part& p) { return almost_surely_zero(p); });
    if (annihilated) {
      m.varphi = 0.0;
      out.part.moments = m;
      return out;
    }
  }

  // Variance of the product spectrum:
  //   varphi = phi^2 * sum_i (m_last / m_i) * varphi_i / phi_i^2
  // Valid as a theorem when at most one factor has a spread spectrum (the
  // rest being a.s. orthogonal), or when the chain carries second-order
  // rotation invariance. Free of either, it is still computable on request.
  const bool covered = out.active_parts <= 1 || out.second_order_proven;
  if (all_varphi_known && (covered || opt.assume_second_order)) {
    bool any_zero = false;
    double sum = 0.0;
    for (const Part& p : parts) {
      if (p.moments.phi == 0.0) { any_zero = true; break; }
      const double ratio = static_cast<double>(m_last) / p.moments.out_dim;
      sum += ratio * *p.moments.varphi / (p.moments.phi * p.moments.phi);
    }
    if (!any_zero) {
      m.varphi = phi * phi * sum;
      out.varphi_assumed = !covered;
    }
  }

  out.part.moments = m;
  return out;
}

struct ParallelOutcome {
  Part part;
  bool second_order_proven = false;
  bool varphi_assumed = false;
};

ParallelOutcome compose_parallel_impl(const std::vector<Part>& branches,
                                      const ComposeOptions& opt) {
  if (branches.size() < 2)
    throw InputError("compose_parallel: need at least 2 branches");
  for (std::size_t i = 1; i < branches.size(); ++i) {
    if (branches[i].moments.out_dim != branches.front().moments.out_dim ||
        branches[i].moments.in_dim != branches.front().moments.in_dim) {
      std::ostringstream os;
      os << "compose_parallel: branch " << i << " dims ("
         << branches[i].moments.out_dim << ", " << branches[i].moments.in_dim
         << ") differ from branch 0 ("
         << branches.front().moments.out_dim << ", "
         << branches.front().moments.in_dim << ")";
      throw InputError(os.str());
    }
  }

  int non_central = 0;
  for (const Part& b : branches)
    if (!b.flags.central) ++non_central;
  if (non_central > 1) {
    std::ostringstream os;
    os << "compose_parallel: " << non_central
       << " non-central branches; the cross terms of the sum do not vanish, "
          "so phi addition is refused";
    throw PrerequisiteError(os.str());
  }

  ParallelOutcome out;

  double phi = 0.0;
  bool all_known = true;
  bool all_eligible = true;
  for (const Part& b : branches) {
    phi += b.moments.phi;
    all_known = all_known && b.moments.varphi.has_value();
    // The variance rule sums free R-diagonal summands. A branch qualifies
    // through its flags, or trivially when it is a.s. orthogonal / a.s. zero
    // (its Haar-rotated version is R-diagonal by construction).
    const bool trivially_ok = spectrum_neutral(b) || almost_surely_zero(b);
    const bool flagged_ok =
        b.flags.r_diagonal &&
        b.flags.unitary_invariance_order >= InvarianceOrder::second;
    all_eligible = all_eligible && (trivially_ok || flagged_ok);
  }

  Moments m;
  m.out_dim = branches.front().moments.out_dim;
  m.in_dim = branches.front().moments.in_dim;
  m.phi = phi;

  out.second_order_proven = all_eligible;
  if (all_known && (all_eligible || opt.assume_second_order)) {
    // varphi = phi_tot^2 + sum_i (varphi_i - phi_i^2)
    double sum = phi * phi;
    for (const Part& b : branches)
      sum += *b.moments.varphi - b.moments.phi * b.moments.phi;
    m.varphi = sum;
    out.varphi_assumed = !all_eligible;
  }

  // Flags of the sum.
  StructureFlags f;
  bool all_eo = true, all_gl = true, all_central = true, all_rdiag = true;
  InvarianceOrder ord = InvarianceOrder::infinite;
  for (const Part& b : branches) {
    all_eo = all_eo && b.flags.expectant_orthogonal;
    all_gl = all_gl && b.flags.general_linear;
    all_central = all_central && b.flags.central;
    all_rdiag = all_rdiag && b.flags.r_diagonal;
    ord = std::min(ord, b.flags.unitary_invariance_order);
  }
  f.expectant_orthogonal = all_eo && non_central <= 1;
  f.general_linear = all_gl && non_central <= 1;
  f.central = all_central;
  f.r_diagonal = all_rdiag;
  f.unitary_invariance_order = ord;
  out.part.flags = f;

  out.part.moments = m;
  return out;
}

}  // namespace

Part compose_serial(const std::vector<Part>& parts, const ComposeOptions& opt) {
  return compose_serial_impl(parts, opt).part;
}

Part compose_parallel(const std::vector<Part>& branches,
                      const ComposeOptions& opt) {
  return compose_parallel_impl(branches, opt).part;
}

NetworkGraph resolve_graph(const NetworkGraph& g) {
  if (g.blocks.empty()) throw InputError("graph: needs at least one block");
  if (g.dims.size() != g.blocks.size() + 1)
    throw InputError("graph: dims must list blocks+1 boundary widths (got " +
                     std::to_string(g.dims.size()) + " for " +
                     std::to_string(g.blocks.size()) + " blocks)");
  for (std::size_t i = 0; i < g.dims.size(); ++i)
    if (g.dims[i] < 1)
      throw InputError("graph: dims[" + std::to_string(i) + "] must be >= 1");

  NetworkGraph r = g;
  auto resolve_chain = [](std::vector<ComponentSpec>& parts, int in_dim,
                          int out_dim, const std::string& where) {
    if (parts.empty()) throw InputError(where + ": empty chain");
    int cur = in_dim;
    for (std::size_t i = 0; i < parts.size(); ++i)
      cur = bind_component_dim(parts[i], cur,
                               where + "[" + std::to_string(i) + "]");
    if (cur != out_dim)
      throw InputError(where + ": chain produces dim " + std::to_string(cur) +
                       " but the block boundary expects " +
                       std::to_string(out_dim));
  };

  for (std::size_t b = 0; b < r.blocks.size(); ++b) {
    const std::string where = "blocks[" + std::to_string(b) + "]";
    const int in_dim = r.dims[b];
    const int out_dim = r.dims[b + 1];
    if (auto* s = std::get_if<SerialBlock>(&r.blocks[b])) {
      resolve_chain(s->parts, in_dim, out_dim, where + ".serial");
    } else {
      auto& par = std::get<ParallelBlock>(r.blocks[b]);
      if (par.branches.size() < 2)
        throw InputError(where + ".parallel: need at least 2 branches");
      for (std::size_t k = 0; k < par.branches.size(); ++k)
        resolve_chain(par.branches[k], in_dim, out_dim,
                      where + ".parallel[" + std::to_string(k) + "]");
    }
  }
  return r;
}

namespace {

Part part_of(const ComponentSpec& c) {
  return {component_moments(c), structure_flags(c)};
}

std::string moments_str(const Moments& m) {
  std::string s = "phi=" + fmt(m.phi);
  s += m.varphi ? (" varphi=" + fmt(*m.varphi)) : " varphi=unknown";
  return s;
}

}  // namespace

CompositionResult analyze_graph(const NetworkGraph& graph,
                                const AnalysisOptions& opt) {
  const NetworkGraph g = resolve_graph(graph);
  const ComposeOptions copt{opt.assume_second_order};

  CompositionResult res;
  std::vector<Part> block_parts;
  block_parts.reserve(g.blocks.size());

  for (std::size_t b = 0; b < g.blocks.size(); ++b) {
    CompositionResult::BlockReport br;
    br.index = static_cast<int>(b);

    SerialOutcome so;
    if (const auto* s = std::get_if<SerialBlock>(&g.blocks[b])) {
      std::vector<Part> parts;
      parts.reserve(s->parts.size());
      for (const auto& c : s->parts) {
        parts.push_back(part_of(c));
        for (auto& w : component_warnings(c)) br.notes.push_back(std::move(w));
      }
      so = compose_serial_impl(parts, copt);
    } else {
      const auto& par = std::get<ParallelBlock>(g.blocks[b]);
      std::vector<Part> branch_parts;
      branch_parts.reserve(par.branches.size());
      for (const auto& branch : par.branches) {
        std::vector<Part> parts;
        parts.reserve(branch.size());
        for (const auto& c : branch) {
          parts.push_back(part_of(c));
          for (auto& w : component_warnings(c))
            br.notes.push_back(std::move(w));
        }
        branch_parts.push_back(compose_serial_impl(parts, copt).part);
      }
      const ParallelOutcome po = compose_parallel_impl(branch_parts, copt);
      so.part = po.part;
      so.first_order_proven = true;  // checked by the non-central count
      so.second_order_proven = po.second_order_proven;
      so.varphi_assumed = po.varphi_assumed;
      so.active_parts = 2;
    }

    br.moments = so.part.moments;
    br.verdict = Verdict::proven;
    if (!so.first_order_proven) {
      br.verdict = worse(br.verdict, Verdict::assumed);
      br.notes.push_back(
          "phi product lacks proven first-order invariance (a part is not "
          "expectant-orthogonal)");
    }
    if (so.varphi_assumed) {
      br.verdict = worse(br.verdict, Verdict::assumed);
      br.notes.push_back(
          "varphi evaluated under the requested second-order assumption");
    }
    if (!br.moments.varphi.has_value())
      br.notes.push_back("varphi unknown; isometry judged on phi alone");

    br.isometry_pass =
        std::abs(br.moments.phi - 1.0) <= opt.tol_phi &&
        (!br.moments.varphi || *br.moments.varphi <= opt.tol_varphi);

    {
      std::ostringstream os;
      os << "block " << b << ": " << moments_str(br.moments) << " ["
         << verdict_name(br.verdict) << "]"
         << (br.isometry_pass ? " isometry=ok" : " isometry=FAIL");
      res.trace.push_back(os.str());
    }

    res.verdict = worse(res.verdict, br.verdict);
    res.per_block.push_back(std::move(br));
    block_parts.push_back(so.part);
  }

  const SerialOutcome net = compose_serial_impl(block_parts, copt);
  res.moments = net.part.moments;
  res.flags = net.part.flags;
  if (!net.first_order_proven) res.verdict = worse(res.verdict, Verdict::assumed);
  if (net.varphi_assumed) {
    res.verdict = worse(res.verdict, Verdict::assumed);
    res.trace.push_back(
        "network varphi evaluated under the requested second-order assumption");
  }
  res.trace.push_back("network: " + moments_str(res.moments) + " [" +
                      verdict_name(res.verdict) + "]");
  return res;
}

Moments densenet_block(int c_prev, int delta, const Moments& h) {
  if (c_prev < 1 || delta < 1)
    throw InputError("densenet_block: channel counts must be >= 1");
  if (!(h.phi >= 0.0))
    throw InputError("densenet_block: branch phi must be >= 0");
  Moments m;
  // Single fraction keeps exact cases exact: (24 + 12*1)/36 == 1.0.
  m.phi = (c_prev + delta * h.phi) / static_cast<double>(c_prev + delta);
  m.varphi = std::nullopt;  // concatenation spectrum spread not tabulated
  m.out_dim = c_prev + delta;
  m.in_dim = c_prev;
  return m;
}

std::vector<double> grad_norm_profile(const NetworkGraph& g,
                                      const std::vector<Moments>& theta) {
  const CompositionResult res = analyze_graph(g, {});
  if (theta.size() != res.per_block.size())
    throw InputError("grad_norm_profile: theta list size " +
                     std::to_string(theta.size()) + " != block count " +
                     std::to_string(res.per_block.size()));
  std::vector<double> out(theta.size());
  // Gradient reaching block i passes through the Jacobians of blocks i+1..L,
  // so its expected squared norm carries the product of their phis.
  double downstream = 1.0;
  for (std::size_t i = theta.size(); i-- > 0;) {
    out[i] = theta[i].phi * downstream;
    downstream *= res.per_block[i].moments.phi;
  }
  return out;
}

}  // namespace isometry

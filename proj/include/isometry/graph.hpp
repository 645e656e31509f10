#pragma once

#include <string>
#include <variant>
#include <vector>

#include "isometry/moments.hpp"

namespace isometry {

struct SerialBlock {
  std::vector<ComponentSpec> parts;
};

// Branches read the same input and their outputs are summed entrywise, so
// every branch must map the block's input dim to the block's output dim.
struct ParallelBlock {
  std::vector<std::vector<ComponentSpec>> branches;
};

using Block = std::variant<SerialBlock, ParallelBlock>;

// A network is a serial chain of blocks. dims lists the boundary widths
// m_0..m_L (one more entry than blocks); components with unresolved dims are
// bound to these boundaries.
struct NetworkGraph {
  std::vector<Block> blocks;
  std::vector<int> dims;
};

// Binds unresolved component dims to the boundary dims and cross-checks the
// intrinsic ones; throws InputError with a path like "blocks[1].serial[0]".
NetworkGraph resolve_graph(const NetworkGraph& g);

// One factor of a composition: its spectrum-moments plus what is known about
// its Jacobian's structure.
struct Part {
  Moments moments;
  StructureFlags flags;
};

// proven   — every prerequisite of every composition step follows from the
//            structure flags;
// assumed  — a value was produced under an explicitly requested assumption,
//            or a step's prerequisite is believed but not proven by flags;
// violated — a hard precondition failed (reported by raising
//            PrerequisiteError, never by returning numbers).
enum class Verdict { proven = 0, assumed = 1, violated = 2 };

const char* verdict_name(Verdict v);

struct ComposeOptions {
  // Evaluate the serial/parallel variance formulas even where only
  // first-order invariance is proven; results are labeled `assumed`.
  bool assume_second_order = false;
};

// Moments of a serial product of parts (rightmost part applied first is a
// convention-free statement here: multiplication is commutative in phi and
// the variance sum is order-independent). Throws InputError on dim mismatch.
Part compose_serial(const std::vector<Part>& parts,
                    const ComposeOptions& opt = {});

// Moments of an entrywise sum of branch Jacobians over a shared input.
// Throws PrerequisiteError if more than one branch is non-central.
Part compose_parallel(const std::vector<Part>& branches,
                      const ComposeOptions& opt = {});

struct AnalysisOptions {
  double tol_phi = 0.05;     // block isometry: |phi - 1| <= tol_phi
  double tol_varphi = 0.5;   // block isometry: varphi <= tol_varphi (if known)
  bool assume_second_order = false;
  double alpha2_in = 1.0;    // input second moment for the forward trace
};

struct CompositionResult {
  Moments moments;        // whole-network moments
  StructureFlags flags;
  Verdict verdict = Verdict::proven;
  std::vector<std::string> trace;  // one line per composition step

  struct BlockReport {
    int index = 0;
    Moments moments;
    Verdict verdict = Verdict::proven;
    bool isometry_pass = false;
    std::vector<std::string> notes;
  };
  std::vector<BlockReport> per_block;
};

// Full static analysis: per-block moments, per-block isometry check against
// the tolerances, network-level composition, verdict, and a readable trace.
CompositionResult analyze_graph(const NetworkGraph& g,
                                const AnalysisOptions& opt = {});

// Dense concatenation block [x, H(x)]: c_prev pass-through channels joined
// with delta channels produced by a branch with moments h. phi is the
// channel-weighted mean (c_prev + delta*h.phi)/(c_prev + delta); the variance
// of the concatenated spectrum has no closed form here, so varphi is unknown.
Moments densenet_block(int c_prev, int delta, const Moments& h);

// Expected squared gradient norm per parameter block, from the product of all
// downstream block phis: entry i = theta[i].phi * prod_{j>i} phi_block_j.
// theta supplies phi(df_i/dtheta_i^T df_i/dtheta_i) per block (pass 1.0
// placeholders for the pure propagation profile).
std::vector<double> grad_norm_profile(const NetworkGraph& g,
                                      const std::vector<Moments>& theta);

}  // namespace isometry

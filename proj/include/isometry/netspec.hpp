#pragma once

#include <string>

#include "isometry/graph.hpp"

namespace isometry {

// Parsed network description: the graph plus the analysis options the file
// carried (defaults where omitted).
struct NetworkSpecFile {
  NetworkGraph graph;
  AnalysisOptions analysis;
};

// Parses the JSON network description:
//
// {
//   "dims": [512, 512],
//   "blocks": [
//     { "serial": [ { "kind": "DenseGaussian",
//                     "params": { "m": 512, "n": 512, "sigma2": 0.00390625 } },
//                   { "kind": "ReLU" } ] },
//     { "parallel": [ [ { "kind": "Identity" } ],
//                     [ { "kind": "DenseGaussian", "params": { ... } } ] ] }
//   ],
//   "analysis": { "tol_phi": 0.05, "tol_varphi": 0.5, "alpha2_in": 1.0 }
// }
//
// Unknown keys, wrong types, non-finite numbers and out-of-range parameters
// are rejected with InputError messages carrying the JSON path of the
// offending value (e.g. "blocks[0].serial[1].params.gamma"). LeakyReLU gamma
// is restricted to [0, 1) in spec files; gamma = 1 is reachable only through
// the library API. Dims are resolved against the boundary list.
NetworkSpecFile parse_network_spec(const std::string& path);

NetworkSpecFile parse_network_spec_text(const std::string& text);

struct VerificationReport;  // defined in mc_verify.hpp

// JSON renderings of analysis and verification results; schema_version 1.
// Numbers round-trip exactly (shortest-representation printing).
std::string composition_result_json(const CompositionResult& r);
std::string verification_report_json(const VerificationReport& r);

}  // namespace isometry

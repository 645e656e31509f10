#include "isometry/netspec.hpp"

#include <string>
#include <variant>

#include "doctest.h"
#include "isometry/errors.hpp"
#include "isometry/graph.hpp"
#include "isometry/mc_verify.hpp"
#include "json.hpp"

using namespace isometry;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_network_spec_text(text);
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

const char* kResidual = R"({
  "dims": [512, 256, 256],
  "blocks": [
    {"serial": [
      {"kind": "DenseGaussian", "params": {"m": 256, "n": 512, "sigma2": 0.00390625}},
      {"kind": "ReLU"}
    ]},
    {"parallel": [
      [{"kind": "Identity"}],
      [{"kind": "DenseGaussian", "params": {"m": 256, "n": 256, "sigma2": 0.0005}},
       {"kind": "ReLU", "params": {"p": 0.5}}]
    ]}
  ],
  "analysis": {"tol_phi": 0.2, "tol_varphi": 3.0}
})";

}  // namespace

TEST_CASE("parsing a residual spec yields the resolved graph") {
  const NetworkSpecFile f = parse_network_spec_text(kResidual);
  REQUIRE(f.graph.blocks.size() == 2);
  REQUIRE(f.graph.dims.size() == 3);
  CHECK(std::holds_alternative<SerialBlock>(f.graph.blocks[0]));
  CHECK(std::holds_alternative<ParallelBlock>(f.graph.blocks[1]));
  // Dims are already bound: the parser resolves eagerly.
  const auto& s = std::get<SerialBlock>(f.graph.blocks[0]);
  CHECK(std::get<ReLUSpec>(s.parts[1]).dim == 256);
  CHECK(f.analysis.tol_phi == 0.2);
  CHECK(f.analysis.tol_varphi == 3.0);
  // Untouched analysis keys keep their defaults.
  CHECK(f.analysis.alpha2_in == 1.0);
  CHECK_FALSE(f.analysis.assume_second_order);

  const CompositionResult r = analyze_graph(f.graph, f.analysis);
  CHECK(r.moments.phi == doctest::Approx(1.064).epsilon(1e-12));
  CHECK(r.verdict == Verdict::proven);
}

TEST_CASE("component parameter defaults") {
  const NetworkSpecFile f = parse_network_spec_text(R"({
    "dims": [32, 32, 32, 32, 32],
    "blocks": [
      {"serial": [{"kind": "ReLU"}]},
      {"serial": [{"kind": "DataNorm"}]},
      {"serial": [{"kind": "SMN"}]},
      {"serial": [{"kind": "Conv2D", "params": {
        "c_out": 2, "c_in": 2, "k_h": 3, "k_w": 3,
        "h_in": 4, "w_in": 4, "sigma2": 0.1, "p_h": 1, "p_w": 1}}]}
    ]
  })");
  const auto& b0 = std::get<SerialBlock>(f.graph.blocks[0]);
  CHECK(std::get<ReLUSpec>(b0.parts[0]).p == 0.5);
  const auto& b1 = std::get<SerialBlock>(f.graph.blocks[1]);
  CHECK(std::get<DataNormSpec>(b1.parts[0]).sigma_b2 == 1.0);
  const auto& b2 = std::get<SerialBlock>(f.graph.blocks[2]);
  CHECK(std::get<SMNSpec>(b2.parts[0]).alpha2 == 1.0);
  const auto& b3 = std::get<SerialBlock>(f.graph.blocks[3]);
  const auto& conv = std::get<Conv2DSpec>(b3.parts[0]);
  CHECK(conv.geom.s_h == 1);  // stride defaults
  CHECK(conv.geom.s_w == 1);
  // 2 channels * 4x4 maps on both sides with same-padding stride 1.
  CHECK(component_out_dim(b3.parts[0]) == 32);
}

TEST_CASE("strict key checking with precise paths") {
  CHECK(error_of(R"({"dims": [2, 2], "layers": []})")
            .find("spec.layers: unknown key") != std::string::npos);
  CHECK(error_of(R"({
      "dims": [2, 2],
      "blocks": [{"serial": [{"kind": "ReLU", "params": {"q": 1}}]}]
    })").find("blocks[0].serial[0].params.q: unknown parameter") !=
        std::string::npos);
  CHECK(error_of(R"({
      "dims": [2, 2],
      "blocks": [{"serial": [{"kind": "Swish"}]}]
    })").find("unknown component kind 'Swish'") != std::string::npos);
  CHECK(error_of(R"({
      "dims": [2, 2],
      "blocks": [{"serial": [{"kind": "ReLU"}], "parallel": []}]
    })").find("exactly one of 'serial' or 'parallel'") != std::string::npos);
}

TEST_CASE("parameter range rejections carry the parameter path") {
  const std::string err = error_of(R"({
    "dims": [4, 4, 4],
    "blocks": [
      {"serial": [{"kind": "DenseGaussian", "params": {"m": 4, "n": 4, "sigma2": 0.5}}]},
      {"serial": [{"kind": "LeakyReLU", "params": {"gamma": 1.0}}]}
    ]
  })");
  CHECK(err.find("blocks[1].serial[0].params.gamma: must lie in [0, 1)") !=
        std::string::npos);

  CHECK(error_of(R"({
      "dims": [4, 4],
      "blocks": [{"serial": [{"kind": "DenseGaussian",
                              "params": {"m": 4, "n": 4, "sigma2": -1.0}}]}]
    })").find("sigma2: must be > 0") != std::string::npos);

  CHECK(error_of(R"({
      "dims": [4, 4],
      "blocks": [{"serial": [{"kind": "Orthogonal",
                              "params": {"beta": 1.0, "m": 4}}]}]
    })").find("give both m and n or neither") != std::string::npos);

  CHECK(error_of(R"({
      "dims": [4, 4],
      "blocks": [{"serial": [{"kind": "SPReLU", "params": {"alpha": 1.5}}]}]
    })").find("alpha: must lie in [0, 1]") != std::string::npos);
}

TEST_CASE("boundary width mismatches surface at parse time") {
  const std::string err = error_of(R"({
    "dims": [8, 16],
    "blocks": [{"serial": [{"kind": "ReLU"}]}]
  })");
  CHECK(err.find("blocks[0].serial") != std::string::npos);
  CHECK(err.find("expects 16") != std::string::npos);

  CHECK(error_of(R"({"dims": [8], "blocks": [{"serial": [{"kind": "ReLU"}]}]})")
            .find("at least 2 boundary widths") != std::string::npos);
  CHECK(error_of("{not json") .find("JSON parse error") != std::string::npos);
  CHECK_THROWS_AS(parse_network_spec("/nonexistent/path.json"), InputError);
}

TEST_CASE("analysis section validation") {
  CHECK(error_of(R"({
      "dims": [2, 2],
      "blocks": [{"serial": [{"kind": "ReLU"}]}],
      "analysis": {"tol_phi": -0.1}
    })").find("analysis.tol_phi: must be > 0") != std::string::npos);
  CHECK(error_of(R"({
      "dims": [2, 2],
      "blocks": [{"serial": [{"kind": "ReLU"}]}],
      "analysis": {"assume_second_order": 1}
    })").find("expected a boolean") != std::string::npos);
  const NetworkSpecFile f = parse_network_spec_text(R"({
    "dims": [2, 2],
    "blocks": [{"serial": [{"kind": "ReLU"}]}],
    "analysis": {"assume_second_order": true, "alpha2_in": 2.5}
  })");
  CHECK(f.analysis.assume_second_order);
  CHECK(f.analysis.alpha2_in == 2.5);
}

TEST_CASE("composition result serialization") {
  const NetworkSpecFile f = parse_network_spec_text(kResidual);
  const CompositionResult r = analyze_graph(f.graph, f.analysis);
  const std::string text = composition_result_json(r);
  const nlohmann::json j = nlohmann::json::parse(text);
  CHECK(j.at("schema_version") == 1);
  CHECK(j.at("network").at("phi").get<double>() ==
        doctest::Approx(1.064).epsilon(1e-12));
  CHECK(j.at("network").at("verdict") == "proven");
  CHECK(j.at("network").at("out_dim") == 256);
  CHECK(j.at("network").at("in_dim") == 512);
  REQUIRE(j.at("blocks").size() == 2);
  CHECK(j.at("blocks")[0].at("isometry") == true);
  // Round-trip exactness: the serialized phi parses back bit-identically.
  CHECK(j.at("network").at("phi").get<double>() == r.moments.phi);
  CHECK(j.at("blocks")[1].at("varphi").get<double>() ==
        *r.per_block[1].moments.varphi);
  CHECK(j.at("trace").is_array());

  // A chain with unknown varphi serializes it as null.
  const NetworkSpecFile f2 = parse_network_spec_text(R"({
    "dims": [4, 4],
    "blocks": [{"serial": [{"kind": "ReLU"}, {"kind": "ReLU"}]}]
  })");
  const nlohmann::json j2 =
      nlohmann::json::parse(composition_result_json(analyze_graph(f2.graph, f2.analysis)));
  CHECK(j2.at("network").at("varphi").is_null());
}

TEST_CASE("verification report serialization") {
  TrialConfig cfg;
  cfg.seed = 7;
  cfg.trials = 3;
  cfg.chain = {ComponentSpec(DenseGaussianSpec{48, 48, 0.0, 1.0 / 48}),
               ComponentSpec(ReLUSpec{0.5, 48})};
  const VerificationReport rep = verify_multiplication(cfg);
  const nlohmann::json j = nlohmann::json::parse(verification_report_json(rep));
  CHECK(j.at("schema_version") == 1);
  CHECK(j.at("phi_theory").get<double>() == rep.phi_theory);
  CHECK(j.at("phi_ratio").get<double>() == rep.phi_ratio);
  CHECK(j.at("trial_phi").size() == 3);
  CHECK(j.at("pass").is_boolean());
  CHECK(j.at("band_phi").get<double>() == rep.band_phi);
}

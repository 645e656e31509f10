#include "isometry/gain_solver.hpp"

#include <cmath>
#include <utility>

#include "doctest.h"
#include "isometry/errors.hpp"
#include "isometry/moments.hpp"

using namespace isometry;

TEST_CASE("closed-form gains make every (kernel, activation) block a phi=1 block") {
  const Activation acts[] = {Activation::relu, Activation::leaky_relu,
                             Activation::tanh};
  const KernelFamily fams[] = {KernelFamily::gaussian, KernelFamily::orthogonal,
                               KernelFamily::sws};
  for (Activation a : acts) {
    for (KernelFamily f : fams) {
      CAPTURE(static_cast<int>(a));
      CAPTURE(static_cast<int>(f));
      const GainRecommendation rec = closed_form_gain(a, f, 512, 256, 0.3);
      REQUIRE(rec.values.size() == 1);
      CHECK(rec.values[0] > 0.0);
      // Round trip: rebuild the block from the recommendation and re-derive
      // its phi through the moment tables.
      CHECK(std::abs(rec.achieved_phi - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("gain values and spectrum variances match the closed forms") {
  const int n = 512, m = 256;
  const double mn = double(m) / n;

  SUBCASE("relu") {
    const auto g = closed_form_gain(Activation::relu, KernelFamily::gaussian, n, m);
    CHECK(g.parameter_name == "sigma");
    CHECK(g.values[0] == doctest::Approx(std::sqrt(2.0 / n)).epsilon(1e-15));
    CHECK(*g.achieved_varphi == 1.0 + mn);  // exact at power-of-two dims

    const auto o = closed_form_gain(Activation::relu, KernelFamily::orthogonal, n, m);
    CHECK(o.parameter_name == "beta");
    CHECK(o.values[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(*o.achieved_varphi == 1.0);
  }
  SUBCASE("leaky relu") {
    const double gamma = 0.3, g2 = gamma * gamma;
    const double spread = ((1 - g2) / (1 + g2)) * ((1 - g2) / (1 + g2));
    const auto g = closed_form_gain(Activation::leaky_relu,
                                    KernelFamily::gaussian, n, m, gamma);
    CHECK(g.values[0] ==
          doctest::Approx(std::sqrt(2.0 / (n * (1 + g2)))).epsilon(1e-15));
    CHECK(*g.achieved_varphi == doctest::Approx(spread + mn).epsilon(1e-15));

    const auto o = closed_form_gain(Activation::leaky_relu,
                                    KernelFamily::orthogonal, n, m, gamma);
    CHECK(o.values[0] == doctest::Approx(1.35457092).epsilon(1e-8));
    CHECK(*o.achieved_varphi == doctest::Approx(0.696995202).epsilon(1e-8));
  }
  SUBCASE("tanh") {
    const auto g = closed_form_gain(Activation::tanh, KernelFamily::gaussian, n, m);
    CHECK(g.values[0] == doctest::Approx(1.0 / std::sqrt(double(n))).epsilon(1e-15));
    CHECK(*g.achieved_varphi == doctest::Approx(mn).epsilon(1e-15));

    const auto o = closed_form_gain(Activation::tanh, KernelFamily::orthogonal, n, m);
    CHECK(o.values[0] == 1.0);
    CHECK(*o.achieved_varphi == 0.0);
    CHECK_FALSE(o.notes.empty());  // flags the linearized-regime caveat
  }
  SUBCASE("standardized weights share the first-moment gain, withhold varphi") {
    const auto s = closed_form_gain(Activation::relu, KernelFamily::sws, n, m);
    CHECK(s.parameter_name == "g");
    CHECK(s.values[0] == doctest::Approx(std::sqrt(2.0 / n)).epsilon(1e-15));
    CHECK_FALSE(s.achieved_varphi.has_value());
    CHECK_FALSE(s.notes.empty());
  }
  SUBCASE("gamma = 1 collapses the rectifier to a scaled identity") {
    const auto g = closed_form_gain(Activation::leaky_relu,
                                    KernelFamily::orthogonal, n, m, 1.0);
    CHECK(g.values[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(*g.achieved_varphi == 0.0);
  }
}

TEST_CASE("gain input validation") {
  CHECK_THROWS_AS(closed_form_gain(Activation::relu, KernelFamily::gaussian, 0),
                  InputError);
  CHECK_THROWS_AS(closed_form_gain(Activation::leaky_relu,
                                   KernelFamily::gaussian, 64, -1, 1.5),
                  InputError);
  CHECK_THROWS_AS(closed_form_gain(Activation::leaky_relu,
                                   KernelFamily::gaussian, 64, -1, -0.2),
                  InputError);
  // Orthogonal frames have no fan-in dependence; n is optional there.
  CHECK_NOTHROW(closed_form_gain(Activation::relu, KernelFamily::orthogonal, 0));
}

TEST_CASE("name parsing") {
  CHECK(activation_from_name("relu") == Activation::relu);
  CHECK(activation_from_name("leaky-relu") == Activation::leaky_relu);
  CHECK(activation_from_name("leaky_relu") == Activation::leaky_relu);
  CHECK(activation_from_name("tanh") == Activation::tanh);
  CHECK_THROWS_AS(activation_from_name("gelu"), InputError);
  CHECK(family_from_name("gaussian") == KernelFamily::gaussian);
  CHECK(family_from_name("orthogonal") == KernelFamily::orthogonal);
  CHECK(family_from_name("sws") == KernelFamily::sws);
  CHECK_THROWS_AS(family_from_name("uniform"), InputError);
}

TEST_CASE("parametric rectifier scale") {
  const SpreluScale a = sprelu_scale(0.25);
  CHECK(a.alpha_used == 0.25);
  CHECK_FALSE(a.clamped);
  CHECK(a.scale == doctest::Approx(std::sqrt(2.0 / 1.0625)).epsilon(1e-15));

  const SpreluScale hi = sprelu_scale(0.8);
  CHECK(hi.clamped);
  CHECK(hi.alpha_used == 0.5);
  CHECK(hi.scale == doctest::Approx(std::sqrt(1.6)).epsilon(1e-15));

  const SpreluScale lo = sprelu_scale(-0.1);
  CHECK(lo.clamped);
  CHECK(lo.alpha_used == 0.0);
  CHECK(lo.scale == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

  CHECK_THROWS_AS(sprelu_scale(std::nan("")), InputError);
}

TEST_CASE("self-normalizing parameter solve") {
  SUBCASE("eps = 0 is the exact linear-gain solution") {
    CHECK(selu_solve(1.0, 0.0) == std::make_pair(std::sqrt(2.0), 0.0));
    CHECK(selu_solve(2.0, 0.0) == std::make_pair(1.0, 0.0));
    CHECK(selu_solve(0.5, 0.0) == std::make_pair(2.0, 0.0));
  }
  SUBCASE("canonical pair at eps = 0.0716") {
    const auto [lam, alp] = selu_solve(1.0, 0.0716);
    CHECK(lam == doctest::Approx(1.0507).epsilon(1e-3));
    CHECK(alp == doctest::Approx(1.6733).epsilon(1e-3));
    // Independent of the solver internals: the pair satisfies both design
    // equations through the closed-form moment evaluator.
    const SeLUMoments mm = selu_moments(lam, alp, 1.0);
    CHECK(mm.phi == doctest::Approx(1.0716).epsilon(1e-10));
    CHECK(mm.out_second_moment == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("solutions at other input scales satisfy the equations") {
    for (double gamma0 : {0.5, 1.5, 2.0}) {
      for (double eps : {0.01, 0.05}) {
        CAPTURE(gamma0);
        CAPTURE(eps);
        const auto [lam, alp] = selu_solve(gamma0, eps);
        const SeLUMoments mm = selu_moments(lam, alp, gamma0);
        CHECK(mm.phi * gamma0 == doctest::Approx(1.0 + eps).epsilon(1e-9));
        CHECK(mm.out_second_moment == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(alp >= 0.0);
      }
    }
  }
  SUBCASE("infeasible targets raise a convergence error") {
    // At gamma0 = 1 the attainable expansion saturates near eps ~ 0.16;
    // demanding 0.9 has no real solution.
    CHECK_THROWS_AS(selu_solve(1.0, 0.9), ConvergenceError);
  }
  SUBCASE("validation") {
    CHECK_THROWS_AS(selu_solve(0.0, 0.05), InputError);
    CHECK_THROWS_AS(selu_solve(-1.0, 0.05), InputError);
    CHECK_THROWS_AS(selu_solve(1.0, -0.05), InputError);
  }
}

TEST_CASE("depth-aware expansion budget") {
  const DepthEps d = depth_aware_eps(10);
  CHECK(d.eps == doctest::Approx(0.09).epsilon(1e-15));
  CHECK(d.growth_bound == doctest::Approx(std::pow(1.09, 10)).epsilon(1e-12));
  const DepthEps one = depth_aware_eps(1);
  CHECK(one.eps == doctest::Approx(0.9).epsilon(1e-15));
  CHECK_THROWS_AS(depth_aware_eps(0), InputError);
}

TEST_CASE("residual branch decay schedule") {
  SUBCASE("gaussian family") {
    const GainRecommendation r =
        fixup_scale(100, 2, 2.0, 64, KernelFamily::gaussian);
    CHECK(r.parameter_name == "sigma2");
    REQUIRE(r.values.size() == 2);
    CHECK(r.values[0] == doctest::Approx(0.01 * 2.0 / 64).epsilon(1e-12));
    CHECK(r.values[1] == doctest::Approx(1.0 / 64).epsilon(1e-15));
    CHECK(r.achieved_phi ==
          doctest::Approx(1.0 + std::pow(100.0, -2.0)).epsilon(1e-12));
    CHECK_FALSE(r.achieved_varphi.has_value());
  }
  SUBCASE("orthogonal family") {
    const GainRecommendation r =
        fixup_scale(100, 2, 2.0, 0, KernelFamily::orthogonal);
    CHECK(r.parameter_name == "beta");
    CHECK(r.values[0] ==
          doctest::Approx(std::sqrt(2.0) / 10.0).epsilon(1e-12));
    CHECK(r.values[1] == 1.0);
    CHECK(r.achieved_phi ==
          doctest::Approx(1.0 + std::pow(100.0, -2.0)).epsilon(1e-12));
  }
  SUBCASE("rejections") {
    CHECK_THROWS_AS(fixup_scale(100, 2, 1.0, 64, KernelFamily::gaussian),
                    InputError);
    CHECK_THROWS_AS(fixup_scale(100, 2, 2.0, 64, KernelFamily::sws), InputError);
    CHECK_THROWS_AS(fixup_scale(0, 2, 2.0, 64, KernelFamily::gaussian),
                    InputError);
    CHECK_THROWS_AS(fixup_scale(100, 0, 2.0, 64, KernelFamily::gaussian),
                    InputError);
    CHECK_THROWS_AS(fixup_scale(100, 2, 2.0, 0, KernelFamily::gaussian),
                    InputError);
  }
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "zeno/nonlinear.hpp"

using namespace zeno;

namespace {

ResonatorParams probe_cavity() {
  return make_critical_resonator(1529.365e-9, 1e5, 0.05, 1.9e-11, 1.99, 2.5);
}

ResonatorParams pump_cavity() {
  return make_critical_resonator(780.241209e-9, 1e5, 0.05, 1.9e-11, 1.99, 2.5);
}

// Independent check: 2-D brute-force minimisation of the residual map
// R(Ua, Ub) = max(|Ua - Fa(ka(Ib))|, |Ub - Fb(kb(Ia))|) / U_lin.
struct GridSolution {
  double ua, ub, step_a, step_b;
};

GridSolution brute_force(const ResonatorParams& a, const ResonatorParams& b,
                         double pa, double pb, const LossRateFn& la,
                         const LossRateFn& lb, double dwa = 0.0,
                         double dwb = 0.0) {
  const double ulin_a = steady_state(a, dwa, 0.0, pa).energy_j;
  const double ulin_b = steady_state(b, dwb, 0.0, pb).energy_j;
  const auto residual = [&](double ua, double ub) {
    const double ia = intensity_from_energy(ua, a.mode_volume_cm3, a.group_index);
    const double ib = intensity_from_energy(ub, b.mode_volume_cm3, b.group_index);
    const double fa = steady_state(a, dwa, la(ib), pa).energy_j;
    const double fb = steady_state(b, dwb, lb(ia), pb).energy_j;
    return std::max(std::abs(ua - fa) / std::max(ulin_a, 1e-300),
                    std::abs(ub - fb) / std::max(ulin_b, 1e-300));
  };

  double lo_a = 0.0, hi_a = ulin_a, lo_b = 0.0, hi_b = ulin_b;
  double best_a = 0.0, best_b = 0.0, step_a = ulin_a, step_b = ulin_b;
  int n = 200;
  for (int pass = 0; pass < 3; ++pass) {
    double best_r = std::numeric_limits<double>::infinity();
    const double sa = (hi_a - lo_a) / (n - 1);
    const double sb = (hi_b - lo_b) / (n - 1);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double r = residual(lo_a + sa * i, lo_b + sb * j);
        if (r < best_r) {
          best_r = r;
          best_a = lo_a + sa * i;
          best_b = lo_b + sb * j;
        }
      }
    }
    step_a = sa;
    step_b = sb;
    lo_a = std::max(0.0, best_a - 2.0 * sa);
    hi_a = best_a + 2.0 * sa;
    lo_b = std::max(0.0, best_b - 2.0 * sb);
    hi_b = best_b + 2.0 * sb;
    n = 61;
  }
  return {best_a, best_b, step_a, step_b};
}

}  // namespace

TEST_CASE("zero loss law reduces to the linear steady state") {
  const auto a = probe_cavity();
  const auto b = pump_cavity();
  const LossRateFn none = [](double) { return 0.0; };
  const auto res = solve_self_consistent(a, b, 14e-9, 56e-9, none, none);
  CHECK(res.converged);
  CHECK(res.iterations <= 3);
  const auto lin_a = steady_state(a, 0.0, 0.0, 14e-9);
  const auto lin_b = steady_state(b, 0.0, 0.0, 56e-9);
  CHECK(res.field_a.energy_j == Catch::Approx(lin_a.energy_j).epsilon(1e-14));
  CHECK(res.field_b.energy_j == Catch::Approx(lin_b.energy_j).epsilon(1e-14));
  CHECK(res.kappa_tpa_a == 0.0);
  CHECK(res.kappa_tpa_b == 0.0);
}

TEST_CASE("dual-field fixed point matches a brute-force grid solve") {
  const auto a = probe_cavity();
  const auto b = pump_cavity();
  const LossRateFn la = [](double i) { return 1e6 * i; };
  const LossRateFn lb = [](double i) { return 3e5 * i; };
  const double pa = 13e-9, pb = 13e-9;

  const auto res = solve_self_consistent(a, b, pa, pb, la, lb);
  REQUIRE(res.converged);
  CHECK(res.residual < 1e-12);
  CHECK(res.kappa_tpa_a > 0.0);
  CHECK(res.kappa_tpa_b > 0.0);
  // Loading only removes energy.
  CHECK(res.field_a.energy_j < steady_state(a, 0.0, 0.0, pa).energy_j);
  CHECK(res.field_b.energy_j < steady_state(b, 0.0, 0.0, pb).energy_j);

  const auto grid = brute_force(a, b, pa, pb, la, lb);
  CHECK(std::abs(res.field_a.energy_j - grid.ua) <= 2.0 * grid.step_a);
  CHECK(std::abs(res.field_b.energy_j - grid.ub) <= 2.0 * grid.step_b);
}

TEST_CASE("re-substituting the solution changes nothing") {
  const auto a = probe_cavity();
  const auto b = pump_cavity();
  const LossRateFn la = [](double i) { return 5e5 * i; };
  const LossRateFn lb = [](double i) { return 5e5 * i; };
  const auto res = solve_self_consistent(a, b, 20e-9, 20e-9, la, lb, 0.2e10, -0.1e10);
  REQUIRE(res.converged);

  const double ia = intensity_from_energy(res.field_a.energy_j,
                                          a.mode_volume_cm3, a.group_index);
  const double ib = intensity_from_energy(res.field_b.energy_j,
                                          b.mode_volume_cm3, b.group_index);
  const double fa = steady_state(a, 0.2e10, la(ib), 20e-9).energy_j;
  const double fb = steady_state(b, -0.1e10, lb(ia), 20e-9).energy_j;
  CHECK(std::abs(fa - res.field_a.energy_j) <= 1e-12 * res.field_a.energy_j);
  CHECK(std::abs(fb - res.field_b.energy_j) <= 1e-12 * res.field_b.energy_j);
}

TEST_CASE("single-field solve is one linear evaluation") {
  const auto a = probe_cavity();
  const LossRateFn law = [](double i) { return 2.5e6 * i; };
  const double pump_intensity = 470.0;
  const auto r = solve_single_field(a, 14e-9, law, pump_intensity, 0.0);
  const auto expected = steady_state(a, 0.0, 2.5e6 * 470.0, 14e-9);
  CHECK(r.energy_j == expected.energy_j);
  CHECK(r.through == expected.through);
  CHECK(r.drop == expected.drop);
}

TEST_CASE("zero input power gives zero energy") {
  const auto a = probe_cavity();
  const auto b = pump_cavity();
  const LossRateFn la = [](double i) { return 1e6 * i; };
  const auto res = solve_self_consistent(a, b, 0.0, 25e-9, la, la);
  CHECK(res.converged);
  CHECK(res.field_a.energy_j == 0.0);
  CHECK(res.field_b.energy_j ==
        Catch::Approx(steady_state(b, 0.0, 0.0, 25e-9).energy_j).epsilon(1e-14));
}

TEST_CASE("malformed loss law is rejected") {
  const auto a = probe_cavity();
  const auto b = pump_cavity();
  const LossRateFn bad = [](double) { return -1.0; };
  const LossRateFn fine = [](double i) { return 1e6 * i; };
  CHECK_THROWS_AS(solve_self_consistent(a, b, 1e-9, 1e-9, bad, fine),
                  std::invalid_argument);
  const LossRateFn nan_law = [](double) {
    return std::numeric_limits<double>::quiet_NaN();
  };
  CHECK_THROWS_AS(solve_self_consistent(a, b, 1e-9, 1e-9, fine, nan_law),
                  std::invalid_argument);
  CHECK_THROWS_AS(solve_self_consistent(a, b, -1e-9, 1e-9, fine, fine),
                  std::invalid_argument);
}

TEST_CASE("a hostile discontinuous law still reports honestly") {
  const auto a = probe_cavity();
  const auto b = pump_cavity();
  const double i_lin_a =
      steady_state(a, 0.0, 0.0, 20e-9).intensity_w_cm2;
  const double i_lin_b =
      steady_state(b, 0.0, 0.0, 20e-9).intensity_w_cm2;
  const double big = 100.0 * a.kappa_total();
  // Step laws triggering right in the middle of the linear range invite
  // flip-flopping between corners.
  const LossRateFn la = [=](double i) { return i > 0.5 * i_lin_b ? big : 0.0; };
  const LossRateFn lb = [=](double i) { return i > 0.5 * i_lin_a ? big : 0.0; };
  const auto res = solve_self_consistent(a, b, 20e-9, 20e-9, la, lb);
  // Whatever the outcome, the report must be self-describing: a finite
  // residual consistent with the convergence flag.
  CHECK(std::isfinite(res.residual));
  CHECK(res.converged == (res.residual < 1e-12));
  CHECK(res.iterations >= 1000);  // damped iteration alone cannot settle
}

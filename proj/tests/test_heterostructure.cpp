#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wiggle/errors.hpp"
#include "wiggle/heterostructure.hpp"

using namespace wiggle;

namespace {

ProfileSpec grown_well() {
  ProfileSpec s;
  s.amplitude = 0.09;
  s.set_wavelength(1.8);
  return s;
}

}  // namespace

TEST_CASE("material constants") {
  const MaterialConstants c;
  CHECK(c.k0() == doctest::Approx(9.7197).epsilon(1e-4));
  CHECK(c.monolayer() == c.a0 / 4.0);
  CHECK(c.umklapp_q() == doctest::Approx(4.0 * std::numbers::pi / 0.543 - 2.0 * c.k0()));
  CHECK(c.umklapp_q() == doctest::Approx(3.70).epsilon(2e-3));
}

TEST_CASE("grid spacing divides the monolayer") {
  for (int sub : {1, 2, 4, 8, 16}) {
    ProfileSpec s = grown_well();
    s.points_per_monolayer = sub;
    const auto p = build_profile(s);
    CHECK(p.spacing * sub == doctest::Approx(MaterialConstants{}.monolayer()).epsilon(1e-15));
    for (std::size_t k = 1; k < p.size(); ++k) CHECK(p.z[k] - p.z[k - 1] == doctest::Approx(p.spacing).epsilon(1e-9));
  }
}

TEST_CASE("well interior follows the oscillation exactly for a linear grade") {
  ProfileSpec s = grown_well();
  s.interface_shape = InterfaceShape::linear_grade;
  const auto p = build_profile(s);
  const double q = s.wavevector;
  double lo = 1.0, hi = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double z = p.z[k];
    if (z < -s.well_width + s.interface_width || z > -s.interface_width) continue;
    CHECK(p.xbar[k] == doctest::Approx(0.5 * 0.09 * (1.0 - std::cos(q * z))).epsilon(1e-12));
    lo = std::min(lo, p.xbar[k]);
    hi = std::max(hi, p.xbar[k]);
  }
  // Oscillates between 0 and the 9% peak with a 1.8 nm period.
  CHECK(lo == doctest::Approx(0.0).epsilon(1e-3));
  CHECK(hi == doctest::Approx(0.09).epsilon(1e-3));
  CHECK(s.wavelength() == doctest::Approx(1.8));
}

TEST_CASE("average of the oscillation is half the peak") {
  // Commensurate period: 32 grid points per wavelength make the discrete mean exact.
  ProfileSpec s = grown_well();
  s.interface_shape = InterfaceShape::linear_grade;
  const auto grid = build_profile(s);
  s.set_wavelength(32.0 * grid.spacing);
  const auto p = build_profile(s);
  const auto osc = p.oscillatory();
  const std::size_t start = static_cast<std::size_t>(-p.origin_index) - 200;
  double sum = 0.0;
  for (std::size_t k = start; k < start + 32; ++k) sum += osc[k];
  CHECK(sum / 32.0 == doctest::Approx(0.045).epsilon(1e-12));

  // The grown 1.8 nm period: numeric average over five periods.
  const auto g = build_profile(grown_well());
  double acc = 0.0, len = 0.0;
  for (std::size_t k = 0; k + 1 < g.size(); ++k) {
    if (g.z[k] < -10.0 || g.z[k + 1] > -1.0) continue;
    acc += 0.5 * (g.xbar[k] + g.xbar[k + 1]) * g.spacing;
    len += g.spacing;
  }
  CHECK(acc / len == doctest::Approx(0.045).epsilon(2e-2));
  CHECK(grown_well().average_concentration() == doctest::Approx(0.045));
}

TEST_CASE("average convention doubles to the peak") {
  const auto s = ProfileSpec::from_average(0.045, 3.49);
  CHECK(s.amplitude == doctest::Approx(0.09));
  CHECK(s.wavevector == 3.49);
}

TEST_CASE("zero amplitude gives a flat pure-Si well and no oscillating potential") {
  ProfileSpec s;
  const auto p = build_profile(s);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p.z[k] > -s.well_width + 7.0 && p.z[k] < -7.0) CHECK(p.xbar[k] < 1e-6);
  }
  const auto v = potential_from_profile(p);
  for (double x : v.V_osc) CHECK(x == 0.0);
}

TEST_CASE("concentrations stay within [0, 1] and the barrier follows delta_rho") {
  ProfileSpec s = grown_well();
  const auto p = build_profile(s);
  for (double x : p.xbar) {
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
  }
  CHECK(s.barrier() == doctest::Approx(0.09 + 0.25));
  CHECK(p.xbar.back() == doctest::Approx(s.barrier()).epsilon(1e-6));
}

TEST_CASE("invalid specs name the offending field") {
  ProfileSpec s;
  s.amplitude = 1.5;
  CHECK_THROWS_WITH_AS(build_profile(s), doctest::Contains("amplitude"), InvalidSpec);
  s = ProfileSpec{};
  s.well_width = 0.0;
  CHECK_THROWS_WITH_AS(build_profile(s), doctest::Contains("well_width"), InvalidSpec);
  s = ProfileSpec{};
  s.well_offset = 0.8;
  s.amplitude = 0.3;
  CHECK_THROWS_AS(build_profile(s), InvalidSpec);
  s = ProfileSpec{};
  s.barrier_concentration = 0.5;
  CHECK_THROWS_WITH_AS(build_profile(s), doctest::Contains("barrier_concentration"), InvalidSpec);
  s.barrier_concentration = 0.25;
  CHECK_NOTHROW(build_profile(s));
  s = ProfileSpec{};
  s.extent_below = 10.0;
  CHECK_THROWS_WITH_AS(build_profile(s), doctest::Contains("extent_below"), InvalidSpec);
  CHECK_THROWS_AS(interface_shape_from_string("cubic"), InvalidSpec);
}

TEST_CASE("build_profile is deterministic") {
  const auto a = build_profile(grown_well());
  const auto b = build_profile(grown_well());
  CHECK(a.z == b.z);
  CHECK(a.xbar == b.xbar);
}

TEST_CASE("translating the origin leaves concentrations unchanged") {
  ProfileSpec s = grown_well();
  const auto a = build_profile(s);
  s.interface_position = 7.25;
  const auto b = build_profile(s);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(b.xbar[k] == doctest::Approx(a.xbar[k]).epsilon(1e-12));
  CHECK(b.z.front() == doctest::Approx(a.z.front() + 7.25));
}

TEST_CASE("linear grade is monotone across each interface") {
  for (double A : {0.0, 0.05, 0.2}) {
    for (double q : {1.0, 3.7, 19.4}) {
      ProfileSpec s;
      s.amplitude = A;
      s.wavevector = q;
      s.interface_shape = InterfaceShape::linear_grade;
      s.interface_width = 1.0;
      const auto p = build_profile(s);
      for (std::size_t k = 1; k < p.size(); ++k) {
        const double z = p.z[k];
        if (z > -0.5 && z <= 0.5) CHECK(p.xbar[k] >= p.xbar[k - 1] - 1e-15);
        if (z > -s.well_width - 0.5 && z <= -s.well_width + 0.5) CHECK(p.xbar[k] <= p.xbar[k - 1] + 1e-15);
      }
    }
  }
}

TEST_CASE("potential terms") {
  const auto p = build_profile(grown_well());
  const auto v = potential_from_profile(p);
  for (std::size_t k = 0; k < v.size(); ++k) CHECK(v.V_total[k] == v.V_F[k] + v.V_B[k] + v.V_osc[k]);
  // F = 8.5 MV/m gives a -0.0085 eV/nm slope.
  for (std::size_t k = 1; k < v.size(); ++k)
    CHECK((v.V_F[k] - v.V_F[k - 1]) / (v.z[k] - v.z[k - 1]) == doctest::Approx(-0.0085).epsilon(1e-9));
  const auto zero = static_cast<std::size_t>(-p.origin_index);
  CHECK(v.z[zero] == 0.0);
  CHECK(v.V_B[zero] == 0.075);
  CHECK(v.V_F[zero] == 0.0);
}

TEST_CASE("peak oscillating potential equals A |V0| within grid sampling") {
  const auto s = grown_well();
  const auto p = build_profile(s);
  const auto v = potential_from_profile(p);
  double peak = 0.0;
  for (double x : v.V_osc) peak = std::max(peak, std::abs(x));
  const double target = 0.09 * 1.53;
  const double tol = target * (1.0 - std::cos(0.5 * s.wavevector * p.spacing)) + 1e-6;
  CHECK(peak <= target + 1e-12);
  CHECK(target - peak <= tol);
}

TEST_CASE("barrier model follows the profile interface when requested") {
  ProfileSpec s = grown_well();
  s.interface_shape = InterfaceShape::linear_grade;
  const auto p = build_profile(s);
  PotentialOptions opt;
  opt.barrier_model = BarrierModel::from_profile;
  const auto v = potential_from_profile(p, opt);
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (p.z[k] <= -0.5) CHECK(v.V_B[k] == 0.0);
    if (p.z[k] >= 0.5) CHECK(v.V_B[k] == 0.15);
  }
  opt.field = -1.0;
  CHECK_THROWS_AS(potential_from_profile(p, opt), InvalidSpec);
}

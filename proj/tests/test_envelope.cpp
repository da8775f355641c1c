#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <boost/math/special_functions/airy.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "wiggle/envelope.hpp"
#include "wiggle/errors.hpp"
#include "wiggle/heterostructure.hpp"

using namespace wiggle;

namespace {

constexpr double kWall = 1e6;  // eV; numerically a hard wall

struct Grid {
  std::vector<double> z, V;
};

/// Region [lo, hi) sampled at spacing h, followed by `pad` wall points on the right.
Grid walled(double lo, double hi, double h, int pad, auto&& potential) {
  Grid g;
  const int n = static_cast<int>(std::lround((hi - lo) / h));
  for (int k = 0; k < n + pad; ++k) {
    const double z = lo + k * h;
    g.z.push_back(z);
    g.V.push_back(k < n ? potential(z) : kWall);
  }
  return g;
}

double l2_dot(const EnvelopeSolution& a, const EnvelopeSolution& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.psi.size(); ++k) s += a.psi[k] * b.psi[k];
  return s * a.spacing;
}

}  // namespace

TEST_CASE("triangular well against the Airy zeros") {
  const double eF = 0.0085;  // eV/nm
  const double m = 0.92;
  const double h = 0.005;
  // z < 0 is the linear region; the wall sits at z = 0.
  auto g = walled(-40.0 + h, 0.0, h, 20, [&](double z) { return -eF * z; });
  g.V.front() = kWall;
  const auto states = solve_envelope(g.z, g.V, m, 2);
  const double scale = std::cbrt(kHbar2Over2M0 / m * eF * eF);
  for (int n = 0; n < 2; ++n) {
    const double exact = -boost::math::airy_ai_zero<double>(n + 1) * scale;
    CHECK(states[n].energy == doctest::Approx(exact).epsilon(1e-3));
  }
}

TEST_CASE("infinite square well after grid refinement") {
  const double L = 10.0;
  const double m = 0.92;
  const std::vector<double> spacings{0.02, 0.01, 0.005};
  std::vector<double> err;
  for (double h : spacings) {
    // Walls sit at z = 0 and z = L.
    auto g = walled(0.0, L, h, 1, [](double) { return 0.0; });
    g.V.front() = kWall;
    g.V.back() = kWall;
    const auto states = solve_envelope(g.z, g.V, m, 3);
    double worst = 0.0;
    for (int n = 1; n <= 3; ++n) {
      const double exact = kHbar2Over2M0 / m * std::pow(n * std::numbers::pi / L, 2);
      worst = std::max(worst, std::abs(states[n - 1].energy / exact - 1.0));
    }
    err.push_back(worst);
  }
  CHECK(err[1] < err[0]);
  CHECK(err[2] < err[1]);
  CHECK(err.back() < 1e-4);
}

TEST_CASE("eigenvectors are orthonormal and sign-fixed") {
  ProfileSpec s;
  s.amplitude = 0.09;
  s.set_wavelength(1.8);
  const auto pot = potential_from_profile(build_profile(s));
  const auto states = solve_envelope(pot, 0.92, 4);
  REQUIRE(states.size() == 4);
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (std::size_t j = 0; j < states.size(); ++j)
      CHECK(std::abs(l2_dot(states[i], states[j]) - (i == j ? 1.0 : 0.0)) < 1e-8);
    if (i > 0) CHECK(states[i].energy > states[i - 1].energy);
    double peak = 0.0;
    for (double x : states[i].psi)
      if (std::abs(x) > std::abs(peak)) peak = x;
    CHECK(peak > 0.0);
  }
  // Ground state has no node.
  for (double x : states[0].psi) CHECK(x > -1e-12);
}

TEST_CASE("eigenvalues match a dense tridiagonal solver") {
  ProfileSpec s;
  s.amplitude = 0.1;
  s.wavevector = 3.5;
  s.extent_below = 20.0;
  s.points_per_monolayer = 2;
  const auto pot = potential_from_profile(build_profile(s));
  const auto states = solve_envelope(pot, 0.92, 3);
  const double t = kHbar2Over2M0 / 0.92 / (pot.spacing * pot.spacing);
  const auto n = static_cast<Eigen::Index>(pot.size());
  Eigen::VectorXd diag(n), off(n - 1);
  for (Eigen::Index k = 0; k < n; ++k) diag[k] = pot.V_total[k] + 2.0 * t;
  off.setConstant(-t);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
  for (int i = 0; i < 3; ++i) {
    CHECK(states[i].energy == doctest::Approx(es.eigenvalues()[i]).epsilon(1e-10));
    double overlap = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) overlap += states[i].psi[k] * es.eigenvectors()(k, i);
    CHECK(std::abs(overlap) * std::sqrt(pot.spacing) == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("constant shift moves energies and leaves states alone") {
  ProfileSpec s;
  const auto pot = potential_from_profile(build_profile(s));
  auto shifted = pot.V_total;
  for (double& v : shifted) v += 0.3;
  const auto a = solve_envelope(pot.z, pot.V_total, 0.92, 2);
  const auto b = solve_envelope(pot.z, shifted, 0.92, 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(b[i].energy - a[i].energy == doctest::Approx(0.3).epsilon(1e-10));
    for (std::size_t k = 0; k < a[i].psi.size(); ++k) CHECK(std::abs(a[i].psi[k] - b[i].psi[k]) < 1e-8);
  }
}

TEST_CASE("reflecting the potential reflects the state") {
  ProfileSpec s;
  s.amplitude = 0.08;
  s.wavevector = 2.0;
  const auto pot = potential_from_profile(build_profile(s));
  std::vector<double> rev(pot.V_total.rbegin(), pot.V_total.rend());
  const auto a = solve_envelope(pot.z, pot.V_total, 0.92, 2);
  const auto b = solve_envelope(pot.z, rev, 0.92, 2);
  const std::size_t n = pot.size();
  for (int i = 0; i < 2; ++i) {
    CHECK(b[i].energy == doctest::Approx(a[i].energy).epsilon(1e-12));
    for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(std::abs(a[i].psi[k]) - std::abs(b[i].psi[n - 1 - k])) < 1e-8);
  }
}

TEST_CASE("halving the grid spacing changes the ground energy by under 1 ueV") {
  ProfileSpec s;
  s.points_per_monolayer = 8;
  const auto coarse = solve_envelope(potential_from_profile(build_profile(s)), 0.92, 1);
  s.points_per_monolayer = 16;
  const auto fine = solve_envelope(potential_from_profile(build_profile(s)), 0.92, 1);
  CHECK(std::abs(coarse[0].energy - fine[0].energy) < 1e-6);
}

TEST_CASE("density normalizes to one") {
  const auto st = solve_envelope(potential_from_profile(build_profile(ProfileSpec{})), 0.92, 1);
  double sum = 0.0;
  for (double d : st[0].density()) sum += d;
  CHECK(sum * st[0].spacing == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("errors") {
  std::vector<double> z{0.0, 0.1, 0.2, 0.35, 0.4};
  std::vector<double> V(5, 1.0);
  CHECK_THROWS_AS(solve_envelope(z, V, 0.92, 1), DegenerateGrid);
  std::vector<double> flat_z, flat_V;
  for (int k = 0; k < 200; ++k) {
    flat_z.push_back(0.05 * k);
    flat_V.push_back(0.0);
  }
  CHECK_THROWS_AS(solve_envelope(flat_z, flat_V, 0.92, 1), NotConfined);
  // Weak confinement: the second state escapes over a shallow barrier.
  ProfileSpec s;
  PotentialOptions opt;
  opt.barrier_height = 0.002;
  opt.field = 0.0;
  const auto pot = potential_from_profile(build_profile(s), opt);
  CHECK_THROWS_AS(solve_envelope(pot, 0.92, 2), NotConfined);
}

TEST_CASE("tridiagonal helpers") {
  const std::vector<double> diag{2.0, 2.0, 2.0, 2.0};
  // Eigenvalues 2 - 2 cos(k pi / 5).
  for (std::size_t k = 0; k < 4; ++k) {
    const double exact = 2.0 - 2.0 * std::cos((k + 1) * std::numbers::pi / 5.0);
    CHECK(tridiag::eigenvalue(diag, -1.0, k) == doctest::Approx(exact).epsilon(1e-13));
  }
  CHECK(tridiag::sturm_count(diag, -1.0, 2.0) == 2);
  CHECK(tridiag::sturm_count(diag, -1.0, 10.0) == 4);
}

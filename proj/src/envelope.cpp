#include "wiggle/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "wiggle/errors.hpp"

namespace wiggle {

std::vector<double> EnvelopeSolution::density() const {
  std::vector<double> rho(psi.size());
  std::transform(psi.begin(), psi.end(), rho.begin(), [](double p) { return p * p; });
  return rho;
}

double uniform_spacing(std::span<const double> z) {
  if (z.size() < 3) throw DegenerateGrid(fmt::format("grid has {} points; need at least 3", z.size()));
  const double h = (z.back() - z.front()) / static_cast<double>(z.size() - 1);
  if (!(h > 0.0)) throw DegenerateGrid("grid must be strictly increasing");
  for (std::size_t k = 1; k < z.size(); ++k) {
    if (std::abs((z[k] - z[k - 1]) - h) > 1e-6 * h)
      throw DegenerateGrid(fmt::format("non-uniform spacing at index {}: {} vs {}", k, z[k] - z[k - 1], h));
  }
  return h;
}

namespace tridiag {

std::size_t sturm_count(std::span<const double> diag, double off, double shift) {
  const double off2 = off * off;
  const double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
  std::size_t count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < diag.size(); ++i) {
    q = diag[i] - shift - (i == 0 ? 0.0 : off2 / q);
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++count;
  }
  return count;
}

double eigenvalue(std::span<const double> diag, double off, std::size_t k) {
  const auto [mn, mx] = std::minmax_element(diag.begin(), diag.end());
  double lo = *mn - 2.0 * std::abs(off) - 1e-12;
  double hi = *mx + 2.0 * std::abs(off) + 1e-12;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(diag, off, mid) > k)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

// Solves (T - shift I) x = rhs in place with partial pivoting (LAPACK dgtsv scheme).
void shifted_solve(std::span<const double> diag, double off, double shift, std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  std::vector<double> d(n), dl(n - 1, off), du(n - 1, off);
  for (std::size_t i = 0; i < n; ++i) d[i] = diag[i] - shift;
  const double scale = std::abs(off) + std::abs(*std::max_element(diag.begin(), diag.end(), [](double a, double b) {
                         return std::abs(a) < std::abs(b);
                       }));
  const double tiny = std::numeric_limits<double>::epsilon() * scale;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(d[i]) >= std::abs(dl[i])) {
      if (d[i] == 0.0) d[i] = tiny;
      const double fact = dl[i] / d[i];
      d[i + 1] -= fact * du[i];
      rhs[i + 1] -= fact * rhs[i];
      dl[i] = 0.0;
    } else {
      const double fact = d[i] / dl[i];
      d[i] = dl[i];
      const double temp = d[i + 1];
      d[i + 1] = du[i] - fact * temp;
      if (i + 2 < n) {
        dl[i] = du[i + 1];
        du[i + 1] = -fact * dl[i];
      } else {
        dl[i] = 0.0;
      }
      du[i] = temp;
      const double b = rhs[i];
      rhs[i] = rhs[i + 1];
      rhs[i + 1] = b - fact * rhs[i + 1];
    }
  }
  if (d[n - 1] == 0.0) d[n - 1] = tiny;
  rhs[n - 1] /= d[n - 1];
  if (n > 1) rhs[n - 2] = (rhs[n - 2] - du[n - 2] * rhs[n - 1]) / d[n - 2];
  for (std::size_t i = n - 2; i-- > 0;) {
    rhs[i] = (rhs[i] - du[i] * rhs[i + 1] - dl[i] * rhs[i + 2]) / d[i];
  }
}

void normalize(std::vector<double>& v) {
  const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
  for (auto& x : v) x /= norm;
}

}  // namespace

std::vector<double> eigenvector(std::span<const double> diag, double off, double eigenvalue) {
  const std::size_t n = diag.size();
  std::vector<double> v(n);
  // Deterministic, non-symmetric start vector so no eigenvector is orthogonal to it.
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.25 * std::sin(0.7 * static_cast<double>(i) + 0.3);
  normalize(v);
  for (int it = 0; it < 3; ++it) {
    shifted_solve(diag, off, eigenvalue, v);
    normalize(v);
  }
  return v;
}

}  // namespace tridiag

std::vector<EnvelopeSolution> solve_envelope(std::span<const double> z, std::span<const double> V, double mass,
                                             int n_states, double hbar2_over_2m0) {
  if (z.size() != V.size()) throw DegenerateGrid("z and V have different lengths");
  if (!(mass > 0.0)) throw InvalidSpec(fmt::format("mass: must be > 0, got {}", mass));
  if (n_states < 1) throw InvalidSpec(fmt::format("n_states: must be >= 1, got {}", n_states));
  const double h = uniform_spacing(z);
  const std::size_t n = z.size();
  if (static_cast<std::size_t>(n_states) > n) throw InvalidSpec("n_states exceeds grid size");

  const double t = hbar2_over_2m0 / (mass * h * h);
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = 2.0 * t + V[i];
  const double off = -t;
  const double boundary = std::min(V.front(), V.back());

  std::vector<EnvelopeSolution> out;
  out.reserve(static_cast<std::size_t>(n_states));
  for (int k = 0; k < n_states; ++k) {
    const double E = tridiag::eigenvalue(diag, off, static_cast<std::size_t>(k));
    if (!(E < boundary))
      throw NotConfined(fmt::format("state {} at {:.6g} eV is not below the boundary potential {:.6g} eV", k, E,
                                    boundary));
    std::vector<double> v = tridiag::eigenvector(diag, off, E);
    // Gram-Schmidt against lower states keeps near-degenerate pairs orthogonal.
    for (const auto& prev : out) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += prev.psi[i] * v[i] * std::sqrt(h);
      for (std::size_t i = 0; i < n; ++i) v[i] -= dot * prev.psi[i] * std::sqrt(h);
    }
    const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    std::size_t imax = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(v[i]) > std::abs(v[imax])) imax = i;
    const double sign = v[imax] < 0.0 ? -1.0 : 1.0;
    const double scale = sign / (norm * std::sqrt(h));
    EnvelopeSolution sol;
    sol.z.assign(z.begin(), z.end());
    sol.psi.resize(n);
    for (std::size_t i = 0; i < n; ++i) sol.psi[i] = v[i] * scale;
    sol.energy = E;
    sol.state_index = k;
    sol.spacing = h;
    out.push_back(std::move(sol));
  }
  return out;
}

std::vector<EnvelopeSolution> solve_envelope(const PotentialProfile& potential, double mass, int n_states,
                                             double hbar2_over_2m0) {
  return solve_envelope(potential.z, potential.V_total, mass, n_states, hbar2_over_2m0);
}

}  // namespace wiggle

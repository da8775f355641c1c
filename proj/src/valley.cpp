#include "wiggle/valley.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "wiggle/errors.hpp"
#include "wiggle/parallel.hpp"

namespace wiggle {

std::string to_string(ValleyMode mode) {
  return mode == ValleyMode::perturbative ? "perturbative" : "two-component";
}

ValleyMode valley_mode_from_string(const std::string& name) {
  if (name == "perturbative") return ValleyMode::perturbative;
  if (name == "two-component" || name == "two_component") return ValleyMode::two_component;
  throw ConfigError(fmt::format("mode: unknown valley mode '{}' (expected perturbative or two-component)", name));
}

namespace {

// Kernel terms whose weight matters for quadrature accuracy.
bool significant(const KernelTerm& term, double max_weight) {
  return std::abs(term.weight) > 1e-6 * max_weight;
}

double max_weight(std::span<const KernelTerm> kernel) {
  double m = 0.0;
  for (const auto& t : kernel) m = std::max(m, std::abs(t.weight));
  return m;
}

void check_resolution(double h, std::span<const KernelTerm> kernel, double q) {
  const double wmax = max_weight(kernel);
  for (const auto& term : kernel) {
    if (!significant(term, wmax)) continue;
    const double k = std::abs(term.Q) + std::abs(q);
    if (k == 0.0) continue;
    const double points = 2.0 * std::numbers::pi / (k * h);
    if (points < kMinPointsPerPeriod)
      throw GridTooCoarse(fmt::format(
          "grid spacing {:.5g} nm gives {:.2f} points per period at |Q| + q = {:.4g} nm^-1 (dl = {}); "
          "need >= {} (raise points_per_monolayer)",
          h, points, k, term.dl, kMinPointsPerPeriod));
  }
}

// Trapezoid of f(z) e^{i k (z - origin)} on a uniform grid.
cplx fourier_trapezoid(std::span<const double> z, std::span<const double> f, double h, double k, double origin) {
  const std::size_t n = z.size();
  cplx sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (f[j] == 0.0) continue;
    const double wj = (j == 0 || j + 1 == n) ? 0.5 : 1.0;
    sum += wj * f[j] * std::polar(1.0, k * (z[j] - origin));
  }
  return h * sum;
}

}  // namespace

ValleyCouplingResult intervalley_element(const EnvelopeSolution& envelope, const BlochCoefficientTable& table,
                                         const OscillationParams& osc, const MaterialConstants& constants) {
  if (table.entries.empty()) throw InvalidTable("coefficient table is empty");
  const auto kernel = valley_kernel(table, constants);
  const double h = envelope.spacing > 0.0 ? envelope.spacing : uniform_spacing(envelope.z);
  check_resolution(h, kernel, osc.wavevector);

  std::vector<double> f = envelope.density();
  if (!osc.window.empty()) {
    if (osc.window.size() != f.size())
      throw InvalidSpec(fmt::format("window: has {} points, envelope has {}", osc.window.size(), f.size()));
    for (std::size_t j = 0; j < f.size(); ++j) f[j] *= osc.window[j];
  }

  ValleyCouplingResult result;
  result.q = osc.wavevector;
  result.mode = ValleyMode::perturbative;
  result.ground_energy = envelope.energy;
  const double prefactor = 0.5 * osc.amplitude * constants.V0;
  if (prefactor != 0.0) {
    const double q = osc.wavevector;
    for (const auto& term : kernel) {
      if (term.weight == 0.0) continue;
      const cplx j0 = fourier_trapezoid(envelope.z, f, h, term.Q, osc.origin);
      const cplx jp = fourier_trapezoid(envelope.z, f, h, term.Q + q, osc.origin);
      const cplx jm = fourier_trapezoid(envelope.z, f, h, term.Q - q, osc.origin);
      result.delta += term.weight * prefactor * (j0 - 0.5 * (jp + jm));
    }
  }
  result.E_v = 2.0 * std::abs(result.delta);
  return result;
}

ValleyCouplingResult intervalley_element(const EnvelopeSolution& envelope, std::span<const KernelTerm> kernel,
                                         std::span<const double> coupling, double origin) {
  if (coupling.size() != envelope.psi.size())
    throw InvalidSpec(fmt::format("coupling: has {} points, envelope has {}", coupling.size(), envelope.psi.size()));
  const double h = envelope.spacing > 0.0 ? envelope.spacing : uniform_spacing(envelope.z);
  check_resolution(h, kernel, 0.0);
  std::vector<double> f(coupling.size());
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = envelope.psi[j] * envelope.psi[j] * coupling[j];

  ValleyCouplingResult result;
  result.mode = ValleyMode::perturbative;
  result.ground_energy = envelope.energy;
  for (const auto& term : kernel) {
    if (term.weight == 0.0) continue;
    result.delta += term.weight * fourier_trapezoid(envelope.z, f, h, term.Q, origin);
  }
  result.E_v = 2.0 * std::abs(result.delta);
  return result;
}

std::vector<double> coupling_potential(const PotentialProfile& potential, bool include_interface) {
  std::vector<double> u = potential.V_osc;
  if (include_interface) {
    for (std::size_t j = 0; j < u.size(); ++j) u[j] += potential.V_interface[j];
  }
  return u;
}

namespace {

// Block tridiagonal Hamiltonian with 2x2 site blocks [[d, D], [D*, d]] and
// nearest-neighbour blocks -t I. Every Schur complement keeps the form
// [[a, c], [c*, a]], so its eigenvalues are a +- |c|.
class BlockSturm {
 public:
  BlockSturm(std::vector<double> diag, std::vector<cplx> coupling, double hop)
      : d_(std::move(diag)), c_(std::move(coupling)), t2_(hop * hop), hop_(hop) {
    pivmin_ = std::numeric_limits<double>::min() * std::max(1.0, t2_);
  }

  std::size_t count_below(double E) const {
    std::size_t count = 0;
    double a_prev = 0.0, det_prev = 1.0;
    cplx c_prev = 0.0;
    for (std::size_t i = 0; i < d_.size(); ++i) {
      double a = d_[i] - E;
      cplx c = c_[i];
      if (i > 0) {
        a -= t2_ * a_prev / det_prev;
        c += t2_ * c_prev / det_prev;
      }
      const double r = std::abs(c);
      double lp = a + r, lm = a - r;
      if (std::abs(lp) < pivmin_) lp = -pivmin_;
      if (std::abs(lm) < pivmin_) lm = -pivmin_;
      count += (lp < 0.0) + (lm < 0.0);
      a_prev = 0.5 * (lp + lm);
      const double r_new = 0.5 * (lp - lm);
      c_prev = r > 0.0 ? c * (r_new / r) : cplx(r_new, 0.0);
      det_prev = lp * lm;
    }
    return count;
  }

  /// k-th smallest eigenvalue by bisection.
  double eigenvalue(std::size_t k) const {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < d_.size(); ++i) {
      const double r = std::abs(c_[i]);
      lo = std::min(lo, d_[i] - r);
      hi = std::max(hi, d_[i] + r);
    }
    lo -= 2.0 * hop_ + 1e-12;
    hi += 2.0 * hop_ + 1e-12;
    for (int it = 0; it < 400; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (count_below(mid) > k)
        hi = mid;
      else
        lo = mid;
    }
    return 0.5 * (lo + hi);
  }

 private:
  std::vector<double> d_;
  std::vector<cplx> c_;
  double t2_;
  double hop_;
  double pivmin_;
};

}  // namespace

ValleyCouplingResult two_component_spectrum(const PotentialProfile& potential, const BlochCoefficientTable& table,
                                            const MaterialConstants& constants, const ValleyOptions& options,
                                            double origin) {
  if (table.entries.empty()) throw InvalidTable("coefficient table is empty");
  const double h = uniform_spacing(potential.z);
  const auto kernel = valley_kernel(table, constants);
  check_resolution(h, kernel, 0.0);
  const auto u = coupling_potential(potential, options.include_interface);

  const std::size_t n = potential.size();
  const double t = constants.hbar2_over_2m0 / (constants.m_l * h * h);
  std::vector<double> diag(n);
  std::vector<cplx> off(n);
  for (std::size_t j = 0; j < n; ++j) {
    diag[j] = 2.0 * t + potential.V_total[j];
    cplx phase = 0.0;
    for (const auto& term : kernel) {
      if (term.weight != 0.0) phase += term.weight * std::polar(1.0, term.Q * (potential.z[j] - origin));
    }
    off[j] = u[j] * phase;
  }
  const BlockSturm sturm(std::move(diag), std::move(off), t);
  const double E0 = sturm.eigenvalue(0);
  const double E1 = sturm.eigenvalue(1);
  const double v_edge = std::min(potential.V_total.front(), potential.V_total.back());
  if (!(E1 < v_edge))
    throw NotConfined(fmt::format("ground doublet energy {:.6g} eV is not below the boundary potential {:.6g} eV",
                                  E1, v_edge));

  const auto ground = solve_envelope(potential, constants.m_l, 1, constants.hbar2_over_2m0);
  ValleyCouplingResult result = intervalley_element(ground.front(), kernel, u, origin);
  result.mode = ValleyMode::two_component;
  result.E_v = std::max(0.0, E1 - E0);
  result.ground_energy = E0;
  return result;
}

ValleyCouplingResult evaluate_splitting(const ConcentrationProfile& profile, const ValleyConfig& config,
                                        const MaterialConstants& constants) {
  if (!config.table) throw InvalidTable("no coefficient table configured");
  const auto potential = potential_from_profile(profile, config.potential, constants);
  const double origin = profile.spec.interface_position;
  const auto kernel = valley_kernel(*config.table, constants);
  const double q_osc = profile.spec.amplitude > 0.0 ? profile.spec.wavevector : 0.0;
  check_resolution(profile.spacing, kernel, q_osc);

  ValleyCouplingResult result;
  if (config.valley.mode == ValleyMode::two_component) {
    result = two_component_spectrum(potential, *config.table, constants, config.valley, origin);
  } else {
    const auto ground = solve_envelope(potential, constants.m_l, 1, constants.hbar2_over_2m0);
    const auto u = coupling_potential(potential, config.valley.include_interface);
    result = intervalley_element(ground.front(), kernel, u, origin);
  }
  result.q = profile.spec.wavevector;
  return result;
}

std::size_t ValleySplittingCurve::argmax() const {
  if (E_v_values.empty()) throw InvalidSpec("curve is empty");
  return static_cast<std::size_t>(std::max_element(E_v_values.begin(), E_v_values.end()) - E_v_values.begin());
}

std::vector<std::size_t> ValleySplittingCurve::local_maxima() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i + 1 < E_v_values.size(); ++i) {
    if (E_v_values[i] > E_v_values[i - 1] && E_v_values[i] > E_v_values[i + 1]) out.push_back(i);
  }
  return out;
}

ValleySplittingCurve scan_q(const ProfileSpec& spec_template, std::span<const double> q_grid,
                            const ValleyConfig& config, int workers, const MaterialConstants& constants) {
  if (q_grid.empty()) throw InvalidSpec("q_grid: must not be empty");
  for (std::size_t i = 0; i < q_grid.size(); ++i) {
    if (!(q_grid[i] > 0.0)) throw InvalidSpec(fmt::format("q_grid: values must be > 0, got {}", q_grid[i]));
    if (i > 0 && !(q_grid[i] > q_grid[i - 1])) throw InvalidSpec("q_grid: values must be strictly increasing");
  }
  spec_template.validate();
  ValleySplittingCurve curve;
  curve.q_values.assign(q_grid.begin(), q_grid.end());
  curve.E_v_values.assign(q_grid.size(), 0.0);
  curve.profile = spec_template;
  curve.potential = config.potential;
  curve.valley = config.valley;
  curve.table_label = config.table ? config.table->source_label : "";
  parallel_for(q_grid.size(), workers, [&](std::size_t i) {
    ProfileSpec spec = spec_template;
    spec.wavevector = q_grid[i];
    const auto profile = build_profile(spec, constants);
    curve.E_v_values[i] = evaluate_splitting(profile, config, constants).E_v;
  });
  return curve;
}

}  // namespace wiggle

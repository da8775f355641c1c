#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wiggle/envelope.hpp"
#include "wiggle/heterostructure.hpp"

namespace wiggle {

using cplx = std::complex<double>;

/// One plane-wave component of the two z-valley Bloch functions.
/// K = (h, k, l) in units of 2 pi / a0.
struct BlochCoefficient {
  int h = 0;
  int k = 0;
  int l = 0;
  cplx c_plus;
  cplx c_minus;
};

struct BlochCoefficientTable {
  std::vector<BlochCoefficient> entries;
  std::string source_label;

  double norm_plus() const;
  double norm_minus() const;

  /// Throws InvalidTable when empty, when K vectors repeat, or when either
  /// norm falls outside [min_norm, 1 + 1e-9].
  void validate(double min_norm = 0.95) const;

  /// The single-coefficient fallback {K = 0, c+ = c- = 1}.
  static BlochCoefficientTable single_coefficient();

  /// Reads the 7-column CSV (Kx, Ky, Kz, Re c+, Im c+, Re c-, Im c-) with a header row.
  static BlochCoefficientTable load_csv(const std::filesystem::path& path, double min_norm = 0.95);
  void save_csv(const std::filesystem::path& path) const;
};

/// Resolves a table reference: "builtin:single" or a CSV path.
BlochCoefficientTable load_table(const std::string& reference, double min_norm = 0.95);

/// Random table on the 59 lowest-|K| FCC reciprocal vectors (|K|^2 <= 12).
///
/// With `diamond_symmetric`, coefficients obey the 4_1 screw relation
/// c(k, -h, l) = i^(h+k+l) c(h, k, l) and c-(K) = conj(c+(-K)); pair sums with
/// Kz - K'z = 2, 6, ... (2 pi / a0) then cancel exactly.
BlochCoefficientTable synthetic_table(std::uint64_t seed, bool diamond_symmetric,
                                      const MaterialConstants& constants = {});

/// Multiplies every c+ and c- by independent random phases.
BlochCoefficientTable randomize_phases(const BlochCoefficientTable& table, std::uint64_t seed);

/// Sum over coefficient pairs sharing (Kx, Ky), grouped by dl = l - l'.
struct KernelTerm {
  int dl = 0;
  cplx weight;        // sum of conj(c+(K)) c-(K')
  double Q = 0.0;     // dl (2 pi / a0) - 2 k0, nm^-1
};

std::vector<KernelTerm> valley_kernel(const BlochCoefficientTable& table,
                                      const MaterialConstants& constants = {});

enum class ValleyMode { perturbative, two_component };

std::string to_string(ValleyMode mode);
ValleyMode valley_mode_from_string(const std::string& name);

struct ValleyCouplingResult {
  double q = 0.0;       // nm^-1
  cplx delta;           // first-order intervalley matrix element, eV
  double E_v = 0.0;     // eV
  ValleyMode mode = ValleyMode::perturbative;
  double ground_energy = 0.0;
};

/// Oscillation used by the analytic path: V = V0 (A/2) [1 - cos(q (z - origin))] w(z).
struct OscillationParams {
  double amplitude = 0.0;
  double wavevector = 0.0;
  double origin = 0.0;
  std::vector<double> window;  // optional, same grid as the envelope; empty means 1
};

/// Minimum quadrature points per period of the fastest retained exponential.
inline constexpr double kMinPointsPerPeriod = 6.0;

/// First-order element with cos(qz) expanded into exponentials before quadrature.
ValleyCouplingResult intervalley_element(const EnvelopeSolution& envelope, const BlochCoefficientTable& table,
                                         const OscillationParams& oscillation,
                                         const MaterialConstants& constants = {});

/// First-order element of a sampled coupling potential U(z) (eV) on the envelope grid.
/// Phases e^{iQz} are referenced to `origin`.
ValleyCouplingResult intervalley_element(const EnvelopeSolution& envelope, std::span<const KernelTerm> kernel,
                                         std::span<const double> coupling, double origin = 0.0);

struct ValleyOptions {
  ValleyMode mode = ValleyMode::perturbative;
  bool include_interface = false;  // add the interface concentration step to the coupling
};

/// Coupling potential fed to the intervalley kernel: V_osc (+ V_interface).
std::vector<double> coupling_potential(const PotentialProfile& potential, bool include_interface);

/// Lowest doublet of the two-valley block Hamiltonian; E_v = E1 - E0.
ValleyCouplingResult two_component_spectrum(const PotentialProfile& potential, const BlochCoefficientTable& table,
                                            const MaterialConstants& constants = {},
                                            const ValleyOptions& options = {.mode = ValleyMode::two_component},
                                            double origin = 0.0);

/// Everything needed to turn a concentration profile into a valley splitting.
struct ValleyConfig {
  ValleyOptions valley;
  PotentialOptions potential;
  std::shared_ptr<const BlochCoefficientTable> table =
      std::make_shared<const BlochCoefficientTable>(BlochCoefficientTable::single_coefficient());
};

ValleyCouplingResult evaluate_splitting(const ConcentrationProfile& profile, const ValleyConfig& config,
                                        const MaterialConstants& constants = {});

struct ValleySplittingCurve {
  std::vector<double> q_values;
  std::vector<double> E_v_values;
  ProfileSpec profile;
  PotentialOptions potential;
  ValleyOptions valley;
  std::string table_label;

  /// Index of the global maximum.
  std::size_t argmax() const;
  /// Indices of strict interior local maxima.
  std::vector<std::size_t> local_maxima() const;
};

/// E_v(q) with the profile rebuilt and the envelope re-solved at every q.
ValleySplittingCurve scan_q(const ProfileSpec& spec_template, std::span<const double> q_grid,
                            const ValleyConfig& config, int workers = 1,
                            const MaterialConstants& constants = {});

}  // namespace wiggle

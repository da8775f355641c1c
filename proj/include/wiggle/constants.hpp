#pragma once

#include <numbers>

namespace wiggle {

// Units throughout: nm, eV, Ge fraction (dimensionless).

/// hbar^2 / (2 m0) in eV nm^2 (CODATA 2018).
inline constexpr double kHbar2Over2M0 = 0.0380998;

/// Boltzmann constant in eV/K.
inline constexpr double kBoltzmann = 8.617333e-5;

/// Material parameters of strained Si and the Ge site-energy offset.
struct MaterialConstants {
  double a0 = 0.543;                      // lattice constant, nm
  double k0_fraction = 0.84;              // valley minimum in units of 2 pi / a0
  double m_l = 0.92;                      // longitudinal mass, m0
  double m_t = 0.19;                      // transverse mass, m0
  double V0 = -1.53;                      // Ge - Si site-energy difference, eV
  double hbar2_over_2m0 = kHbar2Over2M0;  // eV nm^2

  /// Valley minimum wavevector, nm^-1.
  double k0() const { return k0_fraction * 2.0 * std::numbers::pi / a0; }
  /// Reciprocal-lattice unit 2 pi / a0, nm^-1.
  double reciprocal_unit() const { return 2.0 * std::numbers::pi / a0; }
  /// (001) monolayer spacing, nm.
  double monolayer() const { return a0 / 4.0; }
  /// Umklapp wavevector 4 pi / a0 - 2 k0.
  double umklapp_q() const { return 2.0 * reciprocal_unit() - 2.0 * k0(); }
};

}  // namespace wiggle

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wiggle/constants.hpp"

namespace wiggle {

enum class InterfaceShape { linear_grade, tanh };

std::string to_string(InterfaceShape shape);
InterfaceShape interface_shape_from_string(const std::string& name);

/// Deterministic description of a Wiggle Well stack.
///
/// The top interface (well/barrier) sits at `interface_position`; the well
/// occupies [interface_position - well_width, interface_position] and the
/// barrier lies above. Inside the well the Ge fraction is
///   well_offset + (A/2) [1 - cos(q (z - interface_position))],
/// so `amplitude` is the peak of the oscillation and its mean is A/2.
struct ProfileSpec {
  double well_width = 15.0;        // nm
  double amplitude = 0.0;          // peak Ge fraction A of the oscillation
  double wavevector = 0.0;         // q, nm^-1
  std::optional<double> barrier_concentration;  // rho_b; derived when unset
  double well_offset = 0.0;        // rho_w offset, Ge fraction
  double delta_rho = 0.25;         // barrier minus well reference concentration
  double interface_width = 1.0;    // W, nm
  InterfaceShape interface_shape = InterfaceShape::tanh;
  double extent_below = 30.0;      // nm of domain below the top interface
  double extent_above = 10.0;      // nm of domain above the top interface
  double interface_position = 0.0; // nm
  int points_per_monolayer = 4;

  /// Builds a spec from the average Ge concentration of the oscillation (A = 2 n).
  static ProfileSpec from_average(double average_concentration, double wavevector);

  double average_concentration() const { return 0.5 * amplitude; }
  double wavelength() const;
  void set_wavelength(double lambda_nm);

  /// Well reference concentration rho_w = well_offset + A.
  double well_reference() const { return well_offset + amplitude; }
  /// Resolved barrier concentration rho_b = rho_w + delta_rho.
  double barrier() const;

  /// Throws InvalidSpec naming the offending field.
  void validate() const;
};

/// Ge fraction sampled on a uniform grid.
struct ConcentrationProfile {
  std::vector<double> z;         // nm
  std::vector<double> xbar;      // mean Ge fraction
  std::vector<double> baseline;  // smooth reference: offset + interfaces, no oscillation or disorder
  double spacing = 0.0;          // nm
  long origin_index = 0;         // z[k] = interface_position + (origin_index + k) * spacing
  bool layer_resolved = false;   // true when values are constant within each monolayer cell
  ProfileSpec spec;

  std::size_t size() const { return z.size(); }
  /// xbar - baseline.
  std::vector<double> oscillatory() const;
  /// Monolayer index (relative to the top interface plane) of grid point k.
  long layer_of(std::size_t k) const;
};

enum class BarrierModel { tanh, from_profile };

std::string to_string(BarrierModel model);
BarrierModel barrier_model_from_string(const std::string& name);

struct PotentialOptions {
  double field = 8.5;               // MV/m
  double barrier_height = 0.15;     // B, eV
  double barrier_width = 1.0;       // w, nm (tanh model)
  BarrierModel barrier_model = BarrierModel::tanh;
};

/// Potential energy landscape; V_total = V_F + V_B + V_osc exactly.
struct PotentialProfile {
  std::vector<double> z;
  std::vector<double> V_F;
  std::vector<double> V_B;
  std::vector<double> V_osc;
  std::vector<double> V_total;
  /// V0 (baseline - well_offset): concentration step of the interfaces, used
  /// only when interface intervalley coupling is requested.
  std::vector<double> V_interface;
  double spacing = 0.0;
  PotentialOptions options;

  std::size_t size() const { return z.size(); }
};

/// Interface step function: 0 deep in the well, 1 deep in the barrier.
/// `distance` is measured from the interface towards the barrier.
double interface_step(InterfaceShape shape, double distance, double width);

ConcentrationProfile build_profile(const ProfileSpec& spec,
                                   const MaterialConstants& constants = {});

PotentialProfile potential_from_profile(const ConcentrationProfile& profile,
                                        const PotentialOptions& options = {},
                                        const MaterialConstants& constants = {});

}  // namespace wiggle

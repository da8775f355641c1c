#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wiggle/heterostructure.hpp"
#include "wiggle/valley.hpp"

namespace wiggle {

/// Lateral harmonic confinement of a gate-defined dot. Energies in meV, lengths in nm.
struct DotGeometry {
  double hbar_omega_x = 2.0;
  double hbar_omega_y = 2.0;
  double x0 = 0.0;
  double y0 = 0.0;

  double radius_x(const MaterialConstants& constants = {}) const;
  double radius_y(const MaterialConstants& constants = {}) const;
  void validate() const;
};

/// r = sqrt(hbar / (m_t omega)) for a confinement energy in meV.
double dot_radius(double hbar_omega_meV, const MaterialConstants& constants = {});

/// Lateral window of the alloy field. The default keeps the truncated |chi|^2
/// mass below 1e-6 for hbar omega_x >= 1 meV, hbar omega_y >= 2 meV and y0 in
/// [0, 20] nm.
struct FieldExtent {
  double width_x = 150.0;
  double width_y = 150.0;
  double center_x = 0.0;
  double center_y = 10.0;
};

/// Random-alloy occupancy on (001) monolayers. Each monolayer is a square
/// lattice with spacing a0/sqrt(2) (one atom per cell), shifted laterally by a
/// quarter-period cycle from layer to layer. Site (layer, ix, iy) is Ge when a
/// counter-based uniform keyed by (seed, site) falls below the layer's mean
/// concentration, so fields are reproducible and order-independent.
struct AlloyField {
  std::uint64_t seed = 0;
  FieldExtent extent;
  double site_spacing = 0.0;   // nm
  std::size_t nx = 0;
  std::size_t ny = 0;
  long first_layer = 0;        // monolayer index of layer 0
  std::vector<double> layer_z;
  std::vector<double> layer_probability;
  std::size_t words_per_row = 0;
  std::vector<std::uint64_t> bits;  // [layer][iy][word]
  ConcentrationProfile profile;     // source profile

  std::size_t n_layers() const { return layer_z.size(); }
  std::size_t sites_per_layer() const { return nx * ny; }
  std::size_t site_count() const { return nx * ny * n_layers(); }
  bool occupied(std::size_t layer, std::size_t ix, std::size_t iy) const;
  std::size_t ge_count(std::size_t layer) const;
  /// In-plane coordinates of a site column/row for the given layer.
  double site_x(std::size_t layer, std::size_t ix) const;
  double site_y(std::size_t layer, std::size_t iy) const;
};

/// Mean concentration of every monolayer, sampled at the layer plane.
std::vector<double> layer_concentrations(const ConcentrationProfile& profile, long& first_layer);

AlloyField sample_alloy_field(const ConcentrationProfile& profile, const FieldExtent& extent, std::uint64_t seed,
                              const MaterialConstants& constants = {});

/// Fraction of |chi|^2 lying outside the field extent.
double truncated_mass(const FieldExtent& extent, const DotGeometry& dot, const MaterialConstants& constants = {});

/// Ge fraction of one layer under separable site weights wx[ix] * wy[iy].
double weighted_concentration(const AlloyField& field, std::size_t layer, std::span<const double> wx,
                              std::span<const double> wy);

/// Dot-weighted concentration of each layer of the field.
std::vector<double> effective_concentrations(const AlloyField& field, const DotGeometry& dot,
                                             const MaterialConstants& constants = {});

/// Monolayer-resolved profile seen by the dot: each monolayer cell holds its
/// weighted concentration; the baseline is sampled at the layer planes.
ConcentrationProfile effective_profile(const AlloyField& field, const DotGeometry& dot,
                                       const MaterialConstants& constants = {});

/// Disorder-free counterpart: layer-plane values broadcast over each monolayer cell.
ConcentrationProfile layer_sampled_profile(const ConcentrationProfile& profile);

/// Linear co-variation of hbar omega_x (and y0 for the moving-dot case).
struct SweepSchedule {
  double omega_x_start = 1.0;  // meV
  double omega_x_end = 2.0;
  double y0_start = 0.0;       // nm
  double y0_end = 20.0;
  double hbar_omega_y = 2.0;
  double x0 = 0.0;
  int points = 2;

  void validate() const;
};

struct SweepPoint {
  double parameter = 0.0;  // 0 at the start of the sweep, 1 at the end
  double y0 = 0.0;
  double E_orb_meV = 0.0;  // reported as hbar omega_x
  double E_v = 0.0;        // eV
  std::uint64_t seed = 0;
};

/// Moving dot: y0 and omega_x vary together.
std::vector<SweepPoint> case1_sweep(const AlloyField& field, const SweepSchedule& schedule,
                                    const ValleyConfig& config, const MaterialConstants& constants = {});
/// Stationary dot: y0 stays at y0_start while omega_x varies.
std::vector<SweepPoint> case2_sweep(const AlloyField& field, const SweepSchedule& schedule,
                                    const ValleyConfig& config, const MaterialConstants& constants = {});

struct SweepEnsemble {
  std::vector<std::vector<SweepPoint>> case1;  // one sweep per seed
  std::vector<std::vector<SweepPoint>> case2;
  std::vector<std::uint64_t> seeds;
};

/// Case 1 and Case 2 sweeps over seeds base_seed .. base_seed + n_seeds - 1,
/// sharing one alloy field per seed.
SweepEnsemble sweep_ensemble(const ProfileSpec& spec, std::size_t n_seeds, const SweepSchedule& schedule,
                             const ValleyConfig& config, std::uint64_t base_seed, const FieldExtent& extent = {},
                             int workers = 1, const MaterialConstants& constants = {});

struct EnsembleStatistics {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  double p5 = 0.0;
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
  double p95 = 0.0;

  /// Percentiles use linear interpolation between order statistics.
  static EnsembleStatistics from(std::span<const double> values);
};

double percentile(std::span<const double> sorted, double p);

struct DisorderSample {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  double E_v = 0.0;  // eV
  double E_orb_meV = 0.0;
  DotGeometry dot;
};

struct DisorderEnsemble {
  std::vector<DisorderSample> samples;
  EnsembleStatistics statistics;  // of E_v in eV
  ProfileSpec spec;
  DotGeometry dot;
  FieldExtent extent;
  std::uint64_t base_seed = 0;

  std::vector<double> energies() const;
};

/// Sample k uses seed base_seed + k.
DisorderEnsemble ensemble(const ProfileSpec& spec, std::size_t n_samples, const DotGeometry& dot,
                          const ValleyConfig& config, std::uint64_t base_seed, const FieldExtent& extent = {},
                          int workers = 1, const MaterialConstants& constants = {});

/// Valley configuration used for alloy-disorder runs: interface coupling on and
/// the barrier following the concentration profile.
ValleyConfig disorder_valley_defaults();
/// Profile defaults for alloy-disorder runs: 1 nm linearly graded interfaces.
ProfileSpec disorder_profile_defaults();

}  // namespace wiggle

#include "wiggle/disorder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "wiggle/errors.hpp"
#include "wiggle/parallel.hpp"
#include "wiggle/rng.hpp"

namespace wiggle {

double dot_radius(double hbar_omega_meV, const MaterialConstants& constants) {
  if (!(hbar_omega_meV > 0.0))
    throw InvalidSpec(fmt::format("hbar_omega: must be > 0 meV, got {}", hbar_omega_meV));
  return std::sqrt(2.0 * constants.hbar2_over_2m0 / (constants.m_t * hbar_omega_meV * 1e-3));
}

double DotGeometry::radius_x(const MaterialConstants& constants) const { return dot_radius(hbar_omega_x, constants); }
double DotGeometry::radius_y(const MaterialConstants& constants) const { return dot_radius(hbar_omega_y, constants); }

void DotGeometry::validate() const {
  if (!(hbar_omega_x > 0.0)) throw InvalidSpec(fmt::format("hbar_omega_x: must be > 0, got {}", hbar_omega_x));
  if (!(hbar_omega_y > 0.0)) throw InvalidSpec(fmt::format("hbar_omega_y: must be > 0, got {}", hbar_omega_y));
  if (!std::isfinite(x0) || !std::isfinite(y0)) throw InvalidSpec("dot center: must be finite");
}

namespace {

// Lateral shift of monolayer l in units of the in-plane spacing.
constexpr double kLayerShift[4][2] = {{0.0, 0.0}, {0.5, 0.0}, {0.5, 0.5}, {0.0, 0.5}};

int layer_phase(long layer) { return static_cast<int>(((layer % 4) + 4) % 4); }

constexpr std::uint64_t kLayerBias = std::uint64_t{1} << 20;

std::uint64_t site_key(long layer, std::size_t ix, std::size_t iy) {
  return ((static_cast<std::uint64_t>(layer + static_cast<long>(kLayerBias)) << 21 | iy) << 21) | ix;
}

void validate_extent(const FieldExtent& e) {
  if (!(e.width_x > 0.0) || !(e.width_y > 0.0))
    throw InvalidSpec(fmt::format("extent: widths must be > 0, got {} x {}", e.width_x, e.width_y));
}

}  // namespace

bool AlloyField::occupied(std::size_t layer, std::size_t ix, std::size_t iy) const {
  const auto& w = bits[(layer * ny + iy) * words_per_row + ix / 64];
  return (w >> (ix % 64)) & 1U;
}

std::size_t AlloyField::ge_count(std::size_t layer) const {
  std::size_t n = 0;
  const auto begin = bits.begin() + static_cast<std::ptrdiff_t>(layer * ny * words_per_row);
  for (auto it = begin; it != begin + static_cast<std::ptrdiff_t>(ny * words_per_row); ++it)
    n += static_cast<std::size_t>(std::popcount(*it));
  return n;
}

double AlloyField::site_x(std::size_t layer, std::size_t ix) const {
  const long l = first_layer + static_cast<long>(layer);
  return extent.center_x - 0.5 * extent.width_x + (static_cast<double>(ix) + kLayerShift[layer_phase(l)][0]) * site_spacing;
}

double AlloyField::site_y(std::size_t layer, std::size_t iy) const {
  const long l = first_layer + static_cast<long>(layer);
  return extent.center_y - 0.5 * extent.width_y + (static_cast<double>(iy) + kLayerShift[layer_phase(l)][1]) * site_spacing;
}

std::vector<double> layer_concentrations(const ConcentrationProfile& profile, long& first_layer) {
  if (profile.size() == 0) throw InvalidSpec("profile is empty");
  const long sub = profile.spec.points_per_monolayer;
  first_layer = profile.layer_of(0);
  const long last_layer = profile.layer_of(profile.size() - 1);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(last_layer - first_layer + 1));
  for (long l = first_layer; l <= last_layer; ++l) {
    const long k = std::clamp(l * sub - profile.origin_index, 0L, static_cast<long>(profile.size()) - 1);
    out.push_back(profile.xbar[static_cast<std::size_t>(k)]);
  }
  return out;
}

AlloyField sample_alloy_field(const ConcentrationProfile& profile, const FieldExtent& extent, std::uint64_t seed,
                              const MaterialConstants& constants) {
  validate_extent(extent);
  AlloyField field;
  field.seed = seed;
  field.extent = extent;
  field.site_spacing = constants.a0 / std::sqrt(2.0);
  field.nx = static_cast<std::size_t>(std::floor(extent.width_x / field.site_spacing));
  field.ny = static_cast<std::size_t>(std::floor(extent.width_y / field.site_spacing));
  if (field.nx == 0 || field.ny == 0 || field.nx >= (std::size_t{1} << 21) || field.ny >= (std::size_t{1} << 21))
    throw InvalidSpec(fmt::format("extent: {} x {} nm gives an unusable lattice", extent.width_x, extent.width_y));
  field.layer_probability = layer_concentrations(profile, field.first_layer);
  field.layer_z.resize(field.layer_probability.size());
  for (std::size_t l = 0; l < field.layer_z.size(); ++l)
    field.layer_z[l] = profile.spec.interface_position +
                       static_cast<double>(field.first_layer + static_cast<long>(l)) * constants.monolayer();
  field.words_per_row = (field.nx + 63) / 64;
  field.bits.assign(field.n_layers() * field.ny * field.words_per_row, 0);
  field.profile = profile;

  for (std::size_t l = 0; l < field.n_layers(); ++l) {
    const double p = field.layer_probability[l];
    if (p <= 0.0) continue;
    const long layer = field.first_layer + static_cast<long>(l);
    for (std::size_t iy = 0; iy < field.ny; ++iy) {
      std::uint64_t* row = &field.bits[(l * field.ny + iy) * field.words_per_row];
      if (p >= 1.0) {
        for (std::size_t ix = 0; ix < field.nx; ++ix) row[ix / 64] |= std::uint64_t{1} << (ix % 64);
        continue;
      }
      for (std::size_t ix = 0; ix < field.nx; ++ix) {
        if (rng::to_unit(rng::counter_bits(seed, site_key(layer, ix, iy))) < p)
          row[ix / 64] |= std::uint64_t{1} << (ix % 64);
      }
    }
  }
  return field;
}

double truncated_mass(const FieldExtent& extent, const DotGeometry& dot, const MaterialConstants& constants) {
  const double rx = dot.radius_x(constants), ry = dot.radius_y(constants);
  auto inside = [](double lo, double hi, double c, double r) {
    return 0.5 * (std::erf((hi - c) / r) - std::erf((lo - c) / r));
  };
  const double fx = inside(extent.center_x - 0.5 * extent.width_x, extent.center_x + 0.5 * extent.width_x, dot.x0, rx);
  const double fy = inside(extent.center_y - 0.5 * extent.width_y, extent.center_y + 0.5 * extent.width_y, dot.y0, ry);
  return 1.0 - fx * fy;
}

double weighted_concentration(const AlloyField& field, std::size_t layer, std::span<const double> wx,
                              std::span<const double> wy) {
  if (wx.size() != field.nx || wy.size() != field.ny)
    throw InvalidSpec(fmt::format("weights: expected {} x {} values, got {} x {}", field.nx, field.ny, wx.size(),
                                  wy.size()));
  const double sum_x = std::accumulate(wx.begin(), wx.end(), 0.0);
  const double sum_y = std::accumulate(wy.begin(), wy.end(), 0.0);
  double occupied = 0.0;
  for (std::size_t iy = 0; iy < field.ny; ++iy) {
    if (wy[iy] == 0.0) continue;
    const std::uint64_t* row = &field.bits[(layer * field.ny + iy) * field.words_per_row];
    double row_sum = 0.0;
    for (std::size_t w = 0; w < field.words_per_row; ++w) {
      std::uint64_t word = row[w];
      while (word) {
        const int b = std::countr_zero(word);
        row_sum += wx[w * 64 + static_cast<std::size_t>(b)];
        word &= word - 1;
      }
    }
    occupied += wy[iy] * row_sum;
  }
  return std::clamp(occupied / (sum_x * sum_y), 0.0, 1.0);
}

std::vector<double> effective_concentrations(const AlloyField& field, const DotGeometry& dot,
                                             const MaterialConstants& constants) {
  dot.validate();
  const double lost = truncated_mass(field.extent, dot, constants);
  if (lost > 1e-6)
    throw ExtentTooSmall(fmt::format(
        "field extent {} x {} nm centred at ({}, {}) truncates {:.3g} of the dot density (limit 1e-6)",
        field.extent.width_x, field.extent.width_y, field.extent.center_x, field.extent.center_y, lost));
  const double rx = dot.radius_x(constants), ry = dot.radius_y(constants);
  std::vector<double> p_eff(field.n_layers());
  std::vector<double> wx(field.nx), wy(field.ny);
  for (std::size_t l = 0; l < field.n_layers(); ++l) {
    const double p = field.layer_probability[l];
    if (p <= 0.0 || p >= 1.0) {
      p_eff[l] = p;
      continue;
    }
    for (std::size_t ix = 0; ix < field.nx; ++ix) {
      const double x = (field.site_x(l, ix) - dot.x0) / rx;
      wx[ix] = std::exp(-x * x);
    }
    for (std::size_t iy = 0; iy < field.ny; ++iy) {
      const double y = (field.site_y(l, iy) - dot.y0) / ry;
      wy[iy] = std::exp(-y * y);
    }
    p_eff[l] = weighted_concentration(field, l, wx, wy);
  }
  return p_eff;
}

namespace {

ConcentrationProfile broadcast_layers(const ConcentrationProfile& profile, long first_layer,
                                      std::span<const double> layer_values) {
  long base_first = 0;
  const auto baseline_layers = [&] {
    ConcentrationProfile b = profile;
    b.xbar = profile.baseline;
    return layer_concentrations(b, base_first);
  }();
  ConcentrationProfile out = profile;
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto l = static_cast<std::size_t>(profile.layer_of(k) - first_layer);
    out.xbar[k] = layer_values[l];
    out.baseline[k] = baseline_layers[l];
  }
  out.layer_resolved = true;
  return out;
}

}  // namespace

ConcentrationProfile effective_profile(const AlloyField& field, const DotGeometry& dot,
                                       const MaterialConstants& constants) {
  const auto p_eff = effective_concentrations(field, dot, constants);
  return broadcast_layers(field.profile, field.first_layer, p_eff);
}

ConcentrationProfile layer_sampled_profile(const ConcentrationProfile& profile) {
  long first = 0;
  const auto values = layer_concentrations(profile, first);
  return broadcast_layers(profile, first, values);
}

void SweepSchedule::validate() const {
  if (points < 1) throw InvalidSpec(fmt::format("points: must be >= 1, got {}", points));
  if (!(omega_x_start > 0.0) || !(omega_x_end > 0.0))
    throw InvalidSpec("omega_x_range: confinement energies must be > 0 meV");
  if (!(hbar_omega_y > 0.0)) throw InvalidSpec(fmt::format("hbar_omega_y: must be > 0, got {}", hbar_omega_y));
}

namespace {

std::vector<SweepPoint> run_sweep(const AlloyField& field, const SweepSchedule& schedule, bool move_dot,
                                  const ValleyConfig& config, const MaterialConstants& constants) {
  schedule.validate();
  std::vector<SweepPoint> out;
  for (int i = 0; i < schedule.points; ++i) {
    const double s = schedule.points == 1 ? 0.0 : static_cast<double>(i) / (schedule.points - 1);
    DotGeometry dot;
    dot.hbar_omega_x = schedule.omega_x_start + s * (schedule.omega_x_end - schedule.omega_x_start);
    dot.hbar_omega_y = schedule.hbar_omega_y;
    dot.x0 = schedule.x0;
    dot.y0 = move_dot ? schedule.y0_start + s * (schedule.y0_end - schedule.y0_start) : schedule.y0_start;
    const auto profile = effective_profile(field, dot, constants);
    const auto result = evaluate_splitting(profile, config, constants);
    out.push_back({s, dot.y0, dot.hbar_omega_x, result.E_v, field.seed});
  }
  return out;
}

}  // namespace

std::vector<SweepPoint> case1_sweep(const AlloyField& field, const SweepSchedule& schedule,
                                    const ValleyConfig& config, const MaterialConstants& constants) {
  return run_sweep(field, schedule, true, config, constants);
}

std::vector<SweepPoint> case2_sweep(const AlloyField& field, const SweepSchedule& schedule,
                                    const ValleyConfig& config, const MaterialConstants& constants) {
  return run_sweep(field, schedule, false, config, constants);
}

SweepEnsemble sweep_ensemble(const ProfileSpec& spec, std::size_t n_seeds, const SweepSchedule& schedule,
                             const ValleyConfig& config, std::uint64_t base_seed, const FieldExtent& extent,
                             int workers, const MaterialConstants& constants) {
  if (n_seeds < 1) throw InvalidSpec("n_seeds: must be >= 1");
  schedule.validate();
  const auto profile = build_profile(spec, constants);
  SweepEnsemble out;
  out.case1.resize(n_seeds);
  out.case2.resize(n_seeds);
  out.seeds.resize(n_seeds);
  parallel_for(n_seeds, workers, [&](std::size_t k) {
    const std::uint64_t seed = base_seed + k;
    const auto field = sample_alloy_field(profile, extent, seed, constants);
    out.seeds[k] = seed;
    out.case1[k] = case1_sweep(field, schedule, config, constants);
    out.case2[k] = case2_sweep(field, schedule, config, constants);
  });
  return out;
}

double percentile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InvalidSpec("percentile of an empty sample");
  const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

EnsembleStatistics EnsembleStatistics::from(std::span<const double> values) {
  if (values.empty()) throw InvalidSpec("statistics of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  EnsembleStatistics s;
  s.count = sorted.size();
  // Summing the sorted values makes the result independent of sample order.
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(s.count);
  double ss = 0.0;
  for (double v : sorted) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(s.count));
  s.p5 = percentile(sorted, 5.0);
  s.p25 = percentile(sorted, 25.0);
  s.p50 = percentile(sorted, 50.0);
  s.p75 = percentile(sorted, 75.0);
  s.p95 = percentile(sorted, 95.0);
  return s;
}

std::vector<double> DisorderEnsemble::energies() const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.E_v);
  return out;
}

DisorderEnsemble ensemble(const ProfileSpec& spec, std::size_t n_samples, const DotGeometry& dot,
                          const ValleyConfig& config, std::uint64_t base_seed, const FieldExtent& extent,
                          int workers, const MaterialConstants& constants) {
  if (n_samples < 1) throw InvalidSpec("n_samples: must be >= 1");
  dot.validate();
  const double lost = truncated_mass(extent, dot, constants);
  if (lost > 1e-6)
    throw ExtentTooSmall(fmt::format("field extent truncates {:.3g} of the dot density (limit 1e-6)", lost));
  const auto profile = build_profile(spec, constants);
  DisorderEnsemble out;
  out.spec = spec;
  out.dot = dot;
  out.extent = extent;
  out.base_seed = base_seed;
  out.samples.resize(n_samples);
  parallel_for(n_samples, workers, [&](std::size_t k) {
    const std::uint64_t seed = base_seed + k;
    const auto field = sample_alloy_field(profile, extent, seed, constants);
    const auto eff = effective_profile(field, dot, constants);
    const auto result = evaluate_splitting(eff, config, constants);
    out.samples[k] = {k, seed, result.E_v, dot.hbar_omega_x, dot};
  });
  out.statistics = EnsembleStatistics::from(out.energies());
  return out;
}

ValleyConfig disorder_valley_defaults() {
  ValleyConfig config;
  config.valley.include_interface = true;
  config.potential.barrier_model = BarrierModel::from_profile;
  return config;
}

ProfileSpec disorder_profile_defaults() {
  ProfileSpec spec;
  spec.interface_shape = InterfaceShape::linear_grade;
  spec.interface_width = 1.0;
  return spec;
}

}  // namespace wiggle

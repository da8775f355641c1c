#include "wiggle/heterostructure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "wiggle/errors.hpp"

namespace wiggle {

std::string to_string(InterfaceShape shape) {
  return shape == InterfaceShape::tanh ? "tanh" : "linear_grade";
}

InterfaceShape interface_shape_from_string(const std::string& name) {
  if (name == "tanh") return InterfaceShape::tanh;
  if (name == "linear_grade" || name == "linear") return InterfaceShape::linear_grade;
  throw InvalidSpec(fmt::format("interface_shape: unknown shape '{}' (expected tanh or linear_grade)", name));
}

std::string to_string(BarrierModel model) {
  return model == BarrierModel::tanh ? "tanh" : "from_profile";
}

BarrierModel barrier_model_from_string(const std::string& name) {
  if (name == "tanh") return BarrierModel::tanh;
  if (name == "from_profile") return BarrierModel::from_profile;
  throw InvalidSpec(fmt::format("barrier_model: unknown model '{}' (expected tanh or from_profile)", name));
}

ProfileSpec ProfileSpec::from_average(double average_concentration, double wavevector) {
  ProfileSpec spec;
  spec.amplitude = 2.0 * average_concentration;
  spec.wavevector = wavevector;
  return spec;
}

double ProfileSpec::wavelength() const {
  return wavevector > 0.0 ? 2.0 * std::numbers::pi / wavevector : 0.0;
}

void ProfileSpec::set_wavelength(double lambda_nm) {
  if (!(lambda_nm > 0.0)) throw InvalidSpec(fmt::format("wavelength: must be > 0, got {}", lambda_nm));
  wavevector = 2.0 * std::numbers::pi / lambda_nm;
}

double ProfileSpec::barrier() const {
  return barrier_concentration.value_or(well_reference() + delta_rho);
}

void ProfileSpec::validate() const {
  auto in_unit = [](const char* name, double v) {
    if (!(v >= 0.0 && v <= 1.0))
      throw InvalidSpec(fmt::format("{}: must lie in [0, 1], got {}", name, v));
  };
  in_unit("amplitude", amplitude);
  in_unit("well_offset", well_offset);
  in_unit("delta_rho", delta_rho);
  if (well_reference() > 1.0)
    throw InvalidSpec(fmt::format("amplitude: peak concentration well_offset + amplitude = {} exceeds 1",
                                  well_reference()));
  if (barrier_concentration) {
    in_unit("barrier_concentration", *barrier_concentration);
    if (std::abs(*barrier_concentration - (well_reference() + delta_rho)) > 1e-9)
      throw InvalidSpec(fmt::format(
          "barrier_concentration: {} is inconsistent with well_offset + amplitude + delta_rho = {}",
          *barrier_concentration, well_reference() + delta_rho));
  }
  in_unit("barrier_concentration", barrier());
  if (!(well_width > 0.0)) throw InvalidSpec(fmt::format("well_width: must be > 0, got {}", well_width));
  if (!(wavevector >= 0.0)) throw InvalidSpec(fmt::format("wavevector: must be >= 0, got {}", wavevector));
  if (!(interface_width >= 0.0))
    throw InvalidSpec(fmt::format("interface_width: must be >= 0, got {}", interface_width));
  if (interface_width >= well_width)
    throw InvalidSpec(fmt::format("interface_width: {} must be smaller than well_width {}", interface_width,
                                  well_width));
  if (!(extent_below > well_width + 0.5 * interface_width))
    throw InvalidSpec(fmt::format("extent_below: {} nm does not cover the well and its lower interface",
                                  extent_below));
  if (!(extent_above > 0.5 * interface_width))
    throw InvalidSpec(fmt::format("extent_above: {} nm does not cover the upper interface", extent_above));
  if (points_per_monolayer < 1)
    throw InvalidSpec(fmt::format("points_per_monolayer: must be >= 1, got {}", points_per_monolayer));
}

double interface_step(InterfaceShape shape, double distance, double width) {
  if (width <= 0.0) return distance > 0.0 ? 1.0 : (distance < 0.0 ? 0.0 : 0.5);
  if (shape == InterfaceShape::tanh) return 0.5 * (1.0 + std::tanh(distance / width));
  return std::clamp(distance / width + 0.5, 0.0, 1.0);
}

std::vector<double> ConcentrationProfile::oscillatory() const {
  std::vector<double> out(xbar.size());
  for (std::size_t k = 0; k < xbar.size(); ++k) out[k] = xbar[k] - baseline[k];
  return out;
}

long ConcentrationProfile::layer_of(std::size_t k) const {
  const long sub = spec.points_per_monolayer;
  const long i = origin_index + static_cast<long>(k);
  // floor((i + sub/2) / sub) for possibly negative i
  const long num = i + sub / 2;
  return num >= 0 ? num / sub : -((-num + sub - 1) / sub);
}

namespace {

struct Evaluator {
  const ProfileSpec& spec;
  double z_top;
  double z_bottom;
  double rho_b;

  double well(double z, double offset) const {
    return offset + 0.5 * spec.amplitude * (1.0 - std::cos(spec.wavevector * (z - z_top)));
  }

  // Returns the total concentration (with_oscillation) or the smooth baseline.
  double operator()(double z, bool with_oscillation) const {
    const double offset = spec.well_offset;
    const double W = spec.interface_width;
    auto inner = [&](double zz) { return with_oscillation ? well(zz, offset) : offset; };
    if (spec.interface_shape == InterfaceShape::tanh) {
      const double s = interface_step(InterfaceShape::tanh, z - z_top, W) +
                       interface_step(InterfaceShape::tanh, z_bottom - z, W);
      return inner(z) * (1.0 - s) + rho_b * s;
    }
    // Linear grade between the well value at the edge of the graded region and rho_b.
    if (z >= z_top - 0.5 * W) {
      const double x_edge = inner(z_top - 0.5 * W);
      return x_edge + (rho_b - x_edge) * interface_step(InterfaceShape::linear_grade, z - z_top, W);
    }
    if (z <= z_bottom + 0.5 * W) {
      const double x_edge = inner(z_bottom + 0.5 * W);
      return x_edge + (rho_b - x_edge) * interface_step(InterfaceShape::linear_grade, z_bottom - z, W);
    }
    return inner(z);
  }
};

}  // namespace

ConcentrationProfile build_profile(const ProfileSpec& spec, const MaterialConstants& constants) {
  spec.validate();
  ConcentrationProfile profile;
  profile.spec = spec;
  profile.spacing = constants.monolayer() / spec.points_per_monolayer;
  const double h = profile.spacing;
  const long i_lo = -static_cast<long>(std::floor(spec.extent_below / h + 1e-9));
  const long i_hi = static_cast<long>(std::floor(spec.extent_above / h + 1e-9));
  profile.origin_index = i_lo;

  const Evaluator eval{spec, spec.interface_position, spec.interface_position - spec.well_width, spec.barrier()};
  const auto n = static_cast<std::size_t>(i_hi - i_lo + 1);
  profile.z.resize(n);
  profile.xbar.resize(n);
  profile.baseline.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    // Offsets are measured from the interface so translations leave values unchanged.
    const double offset = static_cast<double>(i_lo + static_cast<long>(k)) * h;
    const double z = spec.interface_position + offset;
    profile.z[k] = z;
    profile.xbar[k] = std::clamp(eval(z, true), 0.0, 1.0);
    profile.baseline[k] = std::clamp(eval(z, false), 0.0, 1.0);
  }
  return profile;
}

PotentialProfile potential_from_profile(const ConcentrationProfile& profile, const PotentialOptions& options,
                                        const MaterialConstants& constants) {
  if (!(options.field >= 0.0)) throw InvalidSpec(fmt::format("field: must be >= 0, got {}", options.field));
  if (!(options.barrier_height >= 0.0))
    throw InvalidSpec(fmt::format("barrier_height: must be >= 0, got {}", options.barrier_height));
  if (!(options.barrier_width >= 0.0))
    throw InvalidSpec(fmt::format("barrier_width: must be >= 0, got {}", options.barrier_width));

  const auto& spec = profile.spec;
  const double eF = options.field * 1e-3;  // MV/m -> eV/nm
  const std::size_t n = profile.size();
  PotentialProfile pot;
  pot.z = profile.z;
  pot.spacing = profile.spacing;
  pot.options = options;
  pot.V_F.resize(n);
  pot.V_B.resize(n);
  pot.V_osc.resize(n);
  pot.V_total.resize(n);
  pot.V_interface.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double dz = profile.z[k] - spec.interface_position;
    pot.V_F[k] = -eF * dz;
    pot.V_B[k] = options.barrier_model == BarrierModel::tanh
                     ? options.barrier_height * interface_step(InterfaceShape::tanh, dz, options.barrier_width)
                     : options.barrier_height *
                           interface_step(spec.interface_shape, dz, spec.interface_width);
    pot.V_osc[k] = constants.V0 * (profile.xbar[k] - profile.baseline[k]);
    pot.V_total[k] = pot.V_F[k] + pot.V_B[k] + pot.V_osc[k];
    pot.V_interface[k] = constants.V0 * (profile.baseline[k] - spec.well_offset);
  }
  return pot;
}

}  // namespace wiggle

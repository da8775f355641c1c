#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wiggle/constants.hpp"

namespace wiggle {

// Width convention: the charge-sensor transition is
//   I(V) = A tanh((V - V0) / w) + b V + I0,   w = 2 k_B tau,
// where tau = T_e / alpha carries units of K V / eV and w is in volts.

/// Gate-voltage sweep across a charge transition.
struct TransitionTrace {
  std::vector<double> voltage;  // V
  std::vector<double> current;  // arbitrary units
  double T_MC = 0.0;            // K; 0 when unknown
  std::string label;

  /// At least 10 samples, equal lengths, finite values, strictly monotone voltages.
  void validate() const;
};

struct TransitionParameters {
  double A = 1.0;
  double tau = 1.0;  // K V / eV
  double b = 0.0;
  double V0 = 0.0;
  double I0 = 0.0;

  double width() const { return 2.0 * kBoltzmann * tau; }
  double evaluate(double V) const;
};

struct TransitionFit {
  TransitionParameters params;
  TransitionParameters errors;  // one-sigma standard errors
  double width = 0.0;           // V
  double width_error = 0.0;
  /// Covariance of (A, w, V0, b, I0).
  Eigen::Matrix<double, 5, 5> covariance;
  double residual_rms = 0.0;
  int iterations = 0;
  double T_MC = 0.0;
};

/// Five-parameter least-squares fit. Throws NoTransitionFound when the step
/// is not resolved above the residual noise and NonConvergence when the
/// optimizer exhausts its budget.
TransitionFit fit_transition(const TransitionTrace& trace, int max_evaluations = 4000);

struct TemperaturePoint {
  double T_MC = 0.0;  // K
  double tau = 0.0;   // K V / eV
};

struct LeverArmFit {
  double alpha = 0.0;  // eV / V
  double T_e0 = 0.0;   // K
  double alpha_error = 0.0;
  double T_e0_error = 0.0;
  Eigen::Matrix2d covariance;  // of (alpha, T_e0)
  std::vector<TemperaturePoint> points;
  std::vector<double> residuals;
  double residual_rms = 0.0;
  int iterations = 0;

  double predict(double T_MC) const;
};

/// Fits tau = sqrt(T_MC^2 + T_e0^2) / alpha. Throws IllConditioned when every
/// T_MC is far below the fitted T_e0.
LeverArmFit fit_lever_arm(std::span<const TemperaturePoint> points, int max_evaluations = 4000);

struct EnergyEstimate {
  double energy = 0.0;  // eV
  double error = 0.0;   // eV
};

/// E = alpha dV, with the dV and alpha errors combined in quadrature.
EnergyEstimate voltage_to_energy(double dV, double alpha, double dV_error = 0.0, double alpha_error = 0.0);

/// Noise-free model sampled on `n` evenly spaced voltages, plus Gaussian noise
/// of standard deviation noise * |A|.
TransitionTrace synthetic_trace(const TransitionParameters& params, double v_min, double v_max, std::size_t n,
                                double noise, std::uint64_t seed, double T_MC = 0.0);

/// tau values at each T_MC with relative Gaussian noise.
std::vector<TemperaturePoint> synthetic_lever_points(double alpha, double T_e0, std::span<const double> T_MC,
                                                     double noise, std::uint64_t seed);

/// Reads voltage_V,current_au[,T_MC_K] CSV. Without a T_MC column the
/// temperature comes from a sidecar <stem>.json or <stem>.toml holding "T_MC".
TransitionTrace load_trace(const std::filesystem::path& path);
/// Writes the CSV plus a JSON sidecar with T_MC.
void save_trace(const std::filesystem::path& path, const TransitionTrace& trace);

}  // namespace wiggle

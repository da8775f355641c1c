#include "wiggle/spectrofit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <toml.hpp>

#include "wiggle/errors.hpp"
#include "wiggle/io.hpp"
#include "wiggle/least_squares.hpp"
#include "wiggle/rng.hpp"

namespace wiggle {

void TransitionTrace::validate() const {
  if (voltage.size() != current.size())
    throw InvalidSpec(fmt::format("trace: {} voltages but {} currents", voltage.size(), current.size()));
  if (voltage.size() < 10) throw InvalidSpec(fmt::format("trace: need >= 10 samples, got {}", voltage.size()));
  for (std::size_t i = 0; i < voltage.size(); ++i) {
    if (!std::isfinite(voltage[i]) || !std::isfinite(current[i]))
      throw InvalidSpec(fmt::format("trace: non-finite sample at index {}", i));
  }
  const bool up = voltage[1] > voltage[0];
  for (std::size_t i = 1; i < voltage.size(); ++i) {
    if (up ? !(voltage[i] > voltage[i - 1]) : !(voltage[i] < voltage[i - 1]))
      throw InvalidSpec(fmt::format("trace: voltages not strictly monotone at index {}", i));
  }
  if (!(T_MC >= 0.0)) throw InvalidSpec(fmt::format("T_MC: must be >= 0, got {}", T_MC));
}

double TransitionParameters::evaluate(double V) const {
  return A * std::tanh((V - V0) / width()) + b * V + I0;
}

namespace {

struct Line {
  double slope = 0.0;
  double intercept = 0.0;
};

Line fit_line(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  return {slope, my - slope * mx};
}

// First interpolated position where g crosses `level`, scanning in increasing u.
double crossing(std::span<const double> u, std::span<const double> g, double level) {
  for (std::size_t i = 1; i < u.size(); ++i) {
    const double a = g[i - 1] - level, b = g[i] - level;
    if (a == 0.0) return u[i - 1];
    if ((a < 0.0) != (b < 0.0)) return u[i - 1] + (u[i] - u[i - 1]) * a / (a - b);
  }
  return std::nan("");
}

}  // namespace

TransitionFit fit_transition(const TransitionTrace& trace_in, int max_evaluations) {
  trace_in.validate();
  // Work in increasing voltage on centred, scaled axes.
  std::vector<std::size_t> order(trace_in.voltage.size());
  std::iota(order.begin(), order.end(), 0);
  if (trace_in.voltage[1] < trace_in.voltage[0]) std::reverse(order.begin(), order.end());
  const std::size_t n = order.size();
  std::vector<double> V(n), I(n);
  for (std::size_t i = 0; i < n; ++i) {
    V[i] = trace_in.voltage[order[i]];
    I[i] = trace_in.current[order[i]];
  }
  const double Vc = 0.5 * (V.front() + V.back());
  const double Vs = 0.5 * (V.back() - V.front());
  const auto [imin, imax] = std::minmax_element(I.begin(), I.end());
  const double Ic = 0.5 * (*imin + *imax);
  const double Is = 0.5 * (*imax - *imin);
  if (!(Is > 0.0)) throw NoTransitionFound("trace current is constant");
  std::vector<double> u(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = (V[i] - Vc) / Vs;
    y[i] = (I[i] - Ic) / Is;
  }

  const Line overall = fit_line(u, y);
  double linear_ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) linear_ss += std::pow(y[i] - overall.slope * u[i] - overall.intercept, 2);
  if (std::sqrt(linear_ss / n) < 1e-9) throw NoTransitionFound("trace is linear in the gate voltage");

  // Edge slopes and plateau levels.
  const std::size_t edge = std::max<std::size_t>(3, n * 15 / 100);
  const Line left = fit_line(std::span(u).first(edge), std::span(y).first(edge));
  const Line right = fit_line(std::span(u).last(edge), std::span(y).last(edge));
  const double beta0 = 0.5 * (left.slope + right.slope);
  const double lo_level = left.intercept + (left.slope - beta0) * u[edge / 2];
  const double hi_level = right.intercept + (right.slope - beta0) * u[n - 1 - edge / 2];
  double a0 = 0.5 * (hi_level - lo_level);
  const double c0 = 0.5 * (hi_level + lo_level);

  // Centre at the steepest point of a lightly smoothed derivative.
  std::vector<double> detrended(n);
  for (std::size_t i = 0; i < n; ++i) detrended[i] = y[i] - beta0 * u[i];
  std::size_t steepest = n / 2;
  double best = -1.0;
  for (std::size_t i = 2; i + 2 < n; ++i) {
    const double d = std::abs(detrended[i + 2] + detrended[i + 1] - detrended[i - 1] - detrended[i - 2]) /
                     (u[i + 2] + u[i + 1] - u[i - 1] - u[i - 2]);
    if (d > best) {
      best = d;
      steepest = i;
    }
  }
  double u0 = u[steepest];

  // Width from the 25%-75% rise: tanh(x) = +-0.5 at x = +-0.5493.
  double omega = 0.1;
  if (a0 != 0.0) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = (detrended[i] - c0) / a0;
    const double ua = crossing(u, g, -0.5), ub = crossing(u, g, 0.5);
    if (std::isfinite(ua) && std::isfinite(ub) && ub != ua) omega = std::abs(ub - ua) / 1.0986;
  }
  omega = std::clamp(omega, 1e-4, 4.0);
  if (a0 == 0.0) a0 = 1e-3;

  LeastSquaresProblem problem;
  problem.parameters = 5;
  problem.residuals = static_cast<int>(n);
  // x = (a, omega, u0, beta, c)
  problem.residual = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r) {
    for (std::size_t i = 0; i < n; ++i)
      r[i] = x[0] * std::tanh((u[i] - x[2]) / x[1]) + x[3] * u[i] + x[4] - y[i];
  };
  problem.jacobian = [&](const Eigen::VectorXd& x, Eigen::MatrixXd& J) {
    for (std::size_t i = 0; i < n; ++i) {
      const double s = (u[i] - x[2]) / x[1];
      const double t = std::tanh(s);
      const double sech2 = 1.0 - t * t;
      J(i, 0) = t;
      J(i, 1) = -x[0] * sech2 * s / x[1];
      J(i, 2) = -x[0] * sech2 / x[1];
      J(i, 3) = u[i];
      J(i, 4) = 1.0;
    }
  };
  Eigen::VectorXd x0(5);
  x0 << a0, omega, u0, beta0, c0;
  LeastSquaresOptions options;
  options.max_evaluations = max_evaluations;
  const auto ls = least_squares(problem, x0, options);

  const auto& x = ls.x;
  const double rms = ls.rms * Is;
  TransitionFit fit;
  fit.T_MC = trace_in.T_MC;
  fit.iterations = ls.iterations;
  fit.residual_rms = rms;
  fit.width = std::abs(x[1]) * Vs;
  fit.params.A = (x[1] < 0.0 ? -x[0] : x[0]) * Is;
  fit.params.tau = fit.width / (2.0 * kBoltzmann);
  fit.params.V0 = Vc + x[2] * Vs;
  fit.params.b = x[3] * Is / Vs;
  fit.params.I0 = Ic + x[4] * Is - x[3] * Is * Vc / Vs;

  // Map the covariance from scaled (a, omega, u0, beta, c) to (A, w, V0, b, I0).
  Eigen::Matrix<double, 5, 5> M = Eigen::Matrix<double, 5, 5>::Zero();
  const double sign = x[1] < 0.0 ? -1.0 : 1.0;
  M(0, 0) = sign * Is;
  M(1, 1) = sign * Vs;
  M(2, 2) = Vs;
  M(3, 3) = Is / Vs;
  M(4, 3) = -Is * Vc / Vs;
  M(4, 4) = Is;
  fit.covariance = M * ls.covariance * M.transpose();
  auto sd = [&](int k) { return std::sqrt(std::max(0.0, fit.covariance(k, k))); };
  fit.errors.A = sd(0);
  fit.width_error = sd(1);
  fit.errors.tau = fit.width_error / (2.0 * kBoltzmann);
  fit.errors.V0 = sd(2);
  fit.errors.b = sd(3);
  fit.errors.I0 = sd(4);

  if (!(std::abs(fit.params.A) >= 3.0 * rms))
    throw NoTransitionFound(
        fmt::format("fitted step |A| = {:.4g} is below 3x the residual rms {:.4g}", std::abs(fit.params.A), rms));
  if (fit.width > 4.0 * Vs)
    throw NoTransitionFound(fmt::format("fitted width {:.4g} V exceeds the sweep window", fit.width));
  return fit;
}

double LeverArmFit::predict(double T_MC) const { return std::hypot(T_MC, T_e0) / alpha; }

LeverArmFit fit_lever_arm(std::span<const TemperaturePoint> points, int max_evaluations) {
  if (points.size() < 3) throw InvalidSpec(fmt::format("points: need >= 3, got {}", points.size()));
  for (const auto& p : points) {
    if (!(p.T_MC >= 0.0) || !(p.tau > 0.0) || !std::isfinite(p.T_MC) || !std::isfinite(p.tau))
      throw InvalidSpec(fmt::format("points: invalid (T_MC = {}, tau = {})", p.T_MC, p.tau));
  }
  const std::size_t n = points.size();
  std::vector<double> T2(n), tau2(n);
  for (std::size_t i = 0; i < n; ++i) {
    T2[i] = points[i].T_MC * points[i].T_MC;
    tau2[i] = points[i].tau * points[i].tau;
  }
  // tau^2 = T^2 / alpha^2 + T_e0^2 / alpha^2
  const Line guess = fit_line(T2, tau2);
  double alpha0 = 0.0, T0 = 0.0;
  if (guess.slope > 0.0) {
    alpha0 = 1.0 / std::sqrt(guess.slope);
    T0 = guess.intercept > 0.0 ? std::sqrt(guess.intercept / guess.slope) : 0.0;
  } else {
    const auto top = std::max_element(points.begin(), points.end(),
                                      [](const auto& a, const auto& b) { return a.T_MC < b.T_MC; });
    alpha0 = top->T_MC > 0.0 ? top->T_MC / top->tau : 1.0;
  }
  const double t_max = std::max_element(points.begin(), points.end(), [](const auto& a, const auto& b) {
                         return a.T_MC < b.T_MC;
                       })->T_MC;
  if (T0 == 0.0) T0 = 0.1 * std::max(t_max, 1e-6);

  LeastSquaresProblem problem;
  problem.parameters = 2;
  problem.residuals = static_cast<int>(n);
  problem.residual = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r) {
    for (std::size_t i = 0; i < n; ++i) r[i] = std::hypot(points[i].T_MC, x[1]) / x[0] - points[i].tau;
  };
  problem.jacobian = [&](const Eigen::VectorXd& x, Eigen::MatrixXd& J) {
    for (std::size_t i = 0; i < n; ++i) {
      const double root = std::hypot(points[i].T_MC, x[1]);
      J(i, 0) = -root / (x[0] * x[0]);
      J(i, 1) = root > 0.0 ? x[1] / (x[0] * root) : 1.0 / x[0];
    }
  };
  Eigen::VectorXd x0(2);
  x0 << alpha0, T0;
  LeastSquaresOptions options;
  options.max_evaluations = max_evaluations;
  const auto ls = least_squares(problem, x0, options);

  LeverArmFit fit;
  fit.alpha = ls.x[0];
  fit.T_e0 = std::abs(ls.x[1]);
  if (!(fit.alpha > 0.0)) throw NonConvergence(fmt::format("fitted lever arm {} is not positive", fit.alpha));
  fit.covariance = ls.covariance;
  if (ls.x[1] < 0.0) {
    fit.covariance(0, 1) = -fit.covariance(0, 1);
    fit.covariance(1, 0) = -fit.covariance(1, 0);
  }
  fit.alpha_error = std::sqrt(std::max(0.0, fit.covariance(0, 0)));
  fit.T_e0_error = std::sqrt(std::max(0.0, fit.covariance(1, 1)));
  fit.points.assign(points.begin(), points.end());
  fit.residuals.assign(ls.residual.data(), ls.residual.data() + n);
  fit.residual_rms = ls.rms;
  fit.iterations = ls.iterations;
  if (t_max < 0.25 * fit.T_e0)
    throw IllConditioned(fmt::format("highest T_MC = {:.4g} K is far below the fitted T_e0 = {:.4g} K; "
                                     "extend the temperature range",
                                     t_max, fit.T_e0));
  return fit;
}

EnergyEstimate voltage_to_energy(double dV, double alpha, double dV_error, double alpha_error) {
  if (!(alpha > 0.0)) throw InvalidSpec(fmt::format("alpha: must be > 0, got {}", alpha));
  return {alpha * dV, std::hypot(alpha * dV_error, dV * alpha_error)};
}

TransitionTrace synthetic_trace(const TransitionParameters& params, double v_min, double v_max, std::size_t n,
                                double noise, std::uint64_t seed, double T_MC) {
  if (n < 2 || !(v_max > v_min)) throw InvalidSpec("synthetic trace: need n >= 2 and v_max > v_min");
  rng::Stream stream(seed);
  TransitionTrace trace;
  trace.T_MC = T_MC;
  trace.voltage.resize(n);
  trace.current.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double V = v_min + (v_max - v_min) * static_cast<double>(i) / static_cast<double>(n - 1);
    trace.voltage[i] = V;
    trace.current[i] = params.evaluate(V) + noise * std::abs(params.A) * stream.normal();
  }
  return trace;
}

std::vector<TemperaturePoint> synthetic_lever_points(double alpha, double T_e0, std::span<const double> T_MC,
                                                     double noise, std::uint64_t seed) {
  rng::Stream stream(seed);
  std::vector<TemperaturePoint> out;
  for (double T : T_MC) out.push_back({T, std::hypot(T, T_e0) / alpha * (1.0 + noise * stream.normal())});
  return out;
}

namespace {

double sidecar_temperature(const std::filesystem::path& csv) {
  auto json_path = csv;
  json_path.replace_extension(".json");
  if (std::filesystem::exists(json_path)) {
    const auto j = read_json(json_path);
    if (!j.contains("T_MC") || !j["T_MC"].is_number())
      throw IoError(fmt::format("{}: missing numeric \"T_MC\"", json_path.string()));
    return j["T_MC"].get<double>();
  }
  auto toml_path = csv;
  toml_path.replace_extension(".toml");
  if (std::filesystem::exists(toml_path)) {
    try {
      const auto tbl = toml::parse_file(toml_path.string());
      if (auto v = tbl["T_MC"].value<double>()) return *v;
    } catch (const toml::parse_error& e) {
      throw IoError(fmt::format("{}: {}", toml_path.string(), e.description()));
    }
    throw IoError(fmt::format("{}: missing numeric T_MC", toml_path.string()));
  }
  throw IoError(fmt::format("{}: no T_MC column and no .json/.toml sidecar", csv.string()));
}

}  // namespace

TransitionTrace load_trace(const std::filesystem::path& path) {
  const auto rows = read_numeric_csv(path, 2);
  TransitionTrace trace;
  trace.label = path.stem().string();
  bool has_column = !rows.empty() && rows.front().size() >= 3;
  for (const auto& r : rows) {
    trace.voltage.push_back(r[0]);
    trace.current.push_back(r[1]);
  }
  trace.T_MC = has_column ? rows.front()[2] : sidecar_temperature(path);
  trace.validate();
  return trace;
}

void save_trace(const std::filesystem::path& path, const TransitionTrace& trace) {
  CsvWriter out(path, {"voltage_V", "current_au"});
  for (std::size_t i = 0; i < trace.voltage.size(); ++i) out.row({trace.voltage[i], trace.current[i]});
  out.close();
  auto sidecar = path;
  sidecar.replace_extension(".json");
  write_json(sidecar, {{"T_MC", trace.T_MC}, {"units", {{"T_MC", "K"}}}});
}

}  // namespace wiggle

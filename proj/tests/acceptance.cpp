// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit on any failure.
#include <sys/wait.h>

#include <algorithm>
#include <boost/math/special_functions/airy.hpp>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "wiggle/commands.hpp"
#include "wiggle/config.hpp"
#include "wiggle/disorder.hpp"
#include "wiggle/envelope.hpp"
#include "wiggle/errors.hpp"
#include "wiggle/io.hpp"
#include "wiggle/spectrofit.hpp"
#include "wiggle/valley.hpp"

using namespace wiggle;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = WIGGLE_SOURCE_DIR;
const fs::path kCli = WIGGLE_CLI_PATH;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "wiggle_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void info(const std::string& line) { fmt::print("    {}\n", line); }

std::shared_ptr<const BlochCoefficientTable> share(BlochCoefficientTable t) {
  return std::make_shared<const BlochCoefficientTable>(std::move(t));
}

ProfileSpec grown(double amplitude, int ppm) {
  ProfileSpec s;
  s.amplitude = amplitude;
  s.wavevector = 1.0;
  s.points_per_monolayer = ppm;
  return s;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

double peak_in(const ValleySplittingCurve& c) {
  return *std::max_element(c.E_v_values.begin(), c.E_v_values.end());
}

// 1. Local maxima of E_v(q) at 2 k0 and at the umklapp wavevector.
Outcome peak_locations() {
  Stopwatch clock;
  const MaterialConstants c;
  std::vector<double> q;
  for (int k = 1; k <= 500; ++k) q.push_back(25.0 * k / 500.0);
  const std::vector<std::pair<std::string, BlochCoefficientTable>> tables{
      {"bundled random", BlochCoefficientTable::load_csv(kSource / "data/tables/synthetic_random.csv")},
      {"random seed 21", synthetic_table(21, false)},
      {"random seed 1234", synthetic_table(1234, false)},
  };
  bool ok = true;
  for (const auto& [label, table] : tables) {
    ValleyConfig cfg;
    cfg.table = share(table);
    const auto curve = scan_q(grown(0.10, 16), q, cfg);
    bool main = false, umklapp = false;
    std::string found;
    for (auto i : curve.local_maxima()) {
      const double qi = curve.q_values[i];
      main |= std::abs(qi - 2.0 * c.k0()) <= 0.3;
      umklapp |= std::abs(qi - c.umklapp_q()) <= 0.3;
      found += fmt::format(" {:.2f}", qi);
    }
    info(fmt::format("{}: local maxima at{} nm^-1", label, found));
    ok &= main && umklapp;
  }
  const double t = clock.seconds();
  return {ok && t < 120.0, fmt::format("maxima near {:.2f} and {:.2f} nm^-1 (+-0.3) for 3 tables, {:.1f} s (< 120 s)",
                                       2.0 * c.k0(), c.umklapp_q(), t)};
}

// 2. Main peak linear in concentration; two-component harmonic quadratic.
Outcome scaling_laws() {
  const std::vector<double> n{0.05, 0.10, 0.15, 0.20};
  ValleyConfig main_cfg;
  main_cfg.table = share(BlochCoefficientTable::load_csv(kSource / "data/tables/synthetic_random.csv"));
  const auto q_main = linspace(19.0, 19.9, 19);
  std::vector<double> main_peak;
  for (double x : n) main_peak.push_back(peak_in(scan_q(grown(2.0 * x, 16), q_main, main_cfg)));

  ValleyConfig harm_cfg;
  harm_cfg.valley.mode = ValleyMode::two_component;
  const auto q_harm = linspace(8.5, 11.0, 51);
  std::vector<double> harm_peak;
  for (double x : n) harm_peak.push_back(peak_in(scan_q(grown(2.0 * x, 8), q_harm, harm_cfg)));

  double worst_lin = 0.0, worst_quad = 0.0;
  for (std::size_t i = 1; i < n.size(); ++i) {
    const double r = n[i] / n[0];
    const double lin = main_peak[i] / main_peak[0] / r;
    const double quad = harm_peak[i] / harm_peak[0] / (r * r);
    worst_lin = std::max(worst_lin, std::abs(lin - 1.0));
    worst_quad = std::max(worst_quad, std::abs(quad - 1.0));
    info(fmt::format("n = {:.2f}: main {:.1f} ueV (ratio/n {:.3f}), harmonic {:.1f} ueV (ratio/n^2 {:.3f})", n[i],
                     main_peak[i] * 1e6, lin, harm_peak[i] * 1e6, quad));
  }
  return {worst_lin <= 0.15 && worst_quad <= 0.25,
          fmt::format("main-peak linear deviation {:.3f} (<= 0.15), harmonic quadratic deviation {:.3f} (<= 0.25)",
                      worst_lin, worst_quad)};
}

// 3. Gaussian envelope against the closed-form Fourier combination.
Outcome gaussian_oracle() {
  const MaterialConstants c;
  const auto table = BlochCoefficientTable::single_coefficient();
  double worst = 0.0;
  for (double sigma : {0.8, 1.0, 1.5, 2.0}) {
    EnvelopeSolution env;
    env.spacing = 0.004;
    const int half = static_cast<int>(std::lround(12.0 * sigma / env.spacing));
    const double norm = std::pow(std::numbers::pi * sigma * sigma, -0.25);
    for (int k = -half; k <= half; ++k) {
      const double z = k * env.spacing;
      env.z.push_back(z);
      env.psi.push_back(norm * std::exp(-z * z / (2.0 * sigma * sigma)));
    }
    auto F = [&](double k) { return std::exp(-k * k * sigma * sigma / 4.0); };
    for (double A : {0.05, 0.2}) {
      for (double q : {17.0, 19.44, 21.0}) {
        const auto r = intervalley_element(env, table, {.amplitude = A, .wavevector = q});
        const double k2 = 2.0 * c.k0();
        const double oracle = A * std::abs(c.V0) / 4.0 * std::abs(F(k2 - q) + F(k2 + q) - 2.0 * F(k2));
        worst = std::max(worst, std::abs(std::abs(r.delta) / oracle - 1.0));
      }
    }
  }
  return {worst <= 1e-6, fmt::format("max relative error {:.2e} (<= 1e-6)", worst)};
}

// 4. Triangular and infinite wells, orthonormality.
Outcome eigensolver() {
  constexpr double kWall = 1e6;
  const double m = 0.92;
  // Triangular well with a hard wall at z = 0.
  const double eF = 0.0085, h = 0.005;
  std::vector<double> z, V;
  for (int k = 0;; ++k) {
    const double zk = -40.0 + k * h;
    if (zk > 0.1) break;
    z.push_back(zk);
    V.push_back(zk < -1e-12 && k > 0 ? -eF * zk : kWall);
  }
  const auto tri = solve_envelope(z, V, m, 1);
  const double airy = -boost::math::airy_ai_zero<double>(1) * std::cbrt(kHbar2Over2M0 / m * eF * eF);
  const double tri_err = std::abs(tri[0].energy / airy - 1.0);

  // Infinite well of width 10 nm.
  const double L = 10.0, hw = 0.005;
  z.clear();
  V.clear();
  const int n = static_cast<int>(std::lround(L / hw));
  for (int k = 0; k <= n; ++k) {
    z.push_back(k * hw);
    V.push_back(k == 0 || k == n ? kWall : 0.0);
  }
  const auto box = solve_envelope(z, V, m, 3);
  double box_err = 0.0;
  for (int i = 1; i <= 3; ++i)
    box_err = std::max(box_err, std::abs(box[i - 1].energy /
                                             (kHbar2Over2M0 / m * std::pow(i * std::numbers::pi / L, 2)) - 1.0));

  ProfileSpec s;
  s.amplitude = 0.09;
  s.set_wavelength(1.8);
  const auto states = solve_envelope(potential_from_profile(build_profile(s)), m, 4);
  double ortho = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i)
    for (std::size_t j = 0; j < states.size(); ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < states[i].psi.size(); ++k) dot += states[i].psi[k] * states[j].psi[k];
      ortho = std::max(ortho, std::abs(dot * states[i].spacing - (i == j ? 1.0 : 0.0)));
    }
  return {tri_err <= 1e-3 && box_err <= 1e-4 && ortho <= 1e-8,
          fmt::format("Airy error {:.2e} (<= 1e-3), infinite well {:.2e} (<= 1e-4), orthonormality {:.2e} (<= 1e-8)",
                      tri_err, box_err, ortho)};
}

// 5. Weighted-binomial variance of p_eff and worker-count bit-exactness.
Outcome disorder_statistics() {
  ProfileSpec s;
  s.well_width = 4.0;
  s.extent_below = 5.0;
  s.extent_above = 1.0;
  s.amplitude = 0.1;
  s.set_wavelength(1.8);
  s.interface_shape = InterfaceShape::linear_grade;
  const auto profile = build_profile(s);
  const DotGeometry dot;
  const int n_seeds = 200;
  const auto probe = sample_alloy_field(profile, FieldExtent{}, 0);
  std::vector<std::size_t> layers;
  for (std::size_t l = 0; l < probe.n_layers(); ++l)
    if (probe.layer_probability[l] > 0.005 && probe.layer_probability[l] < 0.995) layers.push_back(l);
  std::vector<std::vector<double>> values(layers.size());
  for (int k = 0; k < n_seeds; ++k) {
    const auto p = effective_concentrations(sample_alloy_field(profile, FieldExtent{}, 10000 + k), dot);
    for (std::size_t i = 0; i < layers.size(); ++i) values[i].push_back(p[layers[i]]);
  }
  const double rx = dot.radius_x(), ry = dot.radius_y();
  double worst_z = 0.0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::size_t l = layers[i];
    double sx = 0, sx2 = 0, sy = 0, sy2 = 0;
    for (std::size_t ix = 0; ix < probe.nx; ++ix) {
      const double w = std::exp(-std::pow((probe.site_x(l, ix) - dot.x0) / rx, 2));
      sx += w;
      sx2 += w * w;
    }
    for (std::size_t iy = 0; iy < probe.ny; ++iy) {
      const double w = std::exp(-std::pow((probe.site_y(l, iy) - dot.y0) / ry, 2));
      sy += w;
      sy2 += w * w;
    }
    const double p = probe.layer_probability[l];
    const double oracle = p * (1.0 - p) * sx2 * sy2 / (sx * sx * sy * sy);
    const double mean = std::accumulate(values[i].begin(), values[i].end(), 0.0) / n_seeds;
    double var = 0.0;
    for (double v : values[i]) var += (v - mean) * (v - mean);
    var /= n_seeds - 1;
    worst_z = std::max(worst_z, std::abs(var - oracle) / (oracle * std::sqrt(2.0 / (n_seeds - 1))));
  }

  auto cfg = disorder_valley_defaults();
  cfg.table = share(BlochCoefficientTable::load_csv(kSource / "data/tables/synthetic_diamond.csv"));
  s.points_per_monolayer = 12;
  const auto one = ensemble(s, 16, dot, cfg, 777, FieldExtent{}, 1).energies();
  const auto eight = ensemble(s, 16, dot, cfg, 777, FieldExtent{}, 8).energies();
  const bool exact = one == eight;
  return {worst_z <= 3.0 && exact,
          fmt::format("{} layers x {} seeds, worst variance deviation {:.2f} sigma (<= 3); 1 vs 8 workers {}",
                      layers.size(), n_seeds, worst_z, exact ? "bit-identical" : "DIFFER")};
}

double population_std(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// 6. Moving-dot spread exceeds stationary-dot spread; mean E_v rises with E_orb.
Outcome dot_sweep() {
  Stopwatch clock;
  const auto doc = load_config(kSource / "configs/dot_sweep.toml");
  CliOverrides o;
  o.out = scratch("dot_sweep");
  const auto rc = resolve_config("dot-sweep", &doc, o);
  run_command(rc);
  struct Case {
    std::vector<double> delta, start, end;
  };
  auto read_case = [&](const char* file) {
    std::vector<std::string> header;
    const auto rows = read_numeric_csv(*o.out / file, 7, &header);
    const auto col = [&](const std::string& name) {
      return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
    };
    Case c;
    for (const auto& r : rows) {
      if (r[col("sweep_param")] == 0.0) c.start.push_back(r[col("E_v_ueV")]);
      if (r[col("sweep_param")] == 1.0) {
        c.end.push_back(r[col("E_v_ueV")]);
        c.delta.push_back(r[col("delta_E_v_ueV")]);
      }
    }
    return c;
  };
  const auto c1 = read_case("sweep_case1.csv");
  const auto c2 = read_case("sweep_case2.csv");
  const double s1 = population_std(c1.delta), s2 = population_std(c2.delta);
  info(fmt::format("Case 1: mean E_v {:.0f} -> {:.0f} ueV, delta spread {:.0f} ueV", mean_of(c1.start),
                   mean_of(c1.end), s1));
  info(fmt::format("Case 2: mean E_v {:.0f} -> {:.0f} ueV, delta spread {:.0f} ueV", mean_of(c2.start),
                   mean_of(c2.end), s2));
  const double t = clock.seconds();
  const bool ok = c1.delta.size() >= 20 && s1 > s2 && mean_of(c1.end) > mean_of(c1.start) &&
                  mean_of(c2.end) > mean_of(c2.start) && t < 600.0;
  return {ok, fmt::format("{} seeds, spread case 1 {:.0f} > case 2 {:.0f} ueV, mean E_v rises with E_orb, {:.1f} s",
                          c1.delta.size(), s1, s2, t)};
}

// 7. Disorder ensembles in the grown configurations; overlap with 54-239 ueV.
Outcome ensemble_configurations() {
  bool config_ok = true;
  auto expect = [&](bool cond, const std::string& what) {
    if (!cond) {
      info("configuration mismatch: " + what);
      config_ok = false;
    }
  };
  auto run = [&](const char* name, const std::vector<double>& conc, std::size_t samples, double lambda) {
    const auto doc = load_config(kSource / "configs" / name);
    CliOverrides o;
    o.out = scratch(name);
    const auto rc = resolve_config("ensemble", &doc, o);
    expect(rc.ensemble.concentrations == conc, fmt::format("{} concentrations", name));
    expect(rc.ensemble.n_samples == samples, fmt::format("{} n_samples", name));
    expect(std::abs(rc.profile.wavelength() - lambda) < 1e-12, fmt::format("{} wavelength", name));
    expect(rc.dot.hbar_omega_x == 2.0 && rc.dot.hbar_omega_y == 2.0, fmt::format("{} confinement", name));
    expect(rc.potential.field == 8.5, fmt::format("{} field", name));
    run_command(rc);
    std::vector<std::string> header;
    const auto rows = read_numeric_csv(*o.out / "summary.csv", 10, &header);
    for (const auto& r : rows)
      info(fmt::format("{} n = {:.3f}: mean {:.0f}, p25 {:.0f}, p75 {:.0f}, p5-p95 {:.0f}-{:.0f} ueV", name, r[0], r[3],
                       r[6], r[8], r[5], r[9]));
    return rows;
  };
  const auto long_rows = run("ensemble_long.toml", {0.05, 0.10, 0.15, 0.20}, 40, 1.8);
  run("ensemble_short.toml", {0.005, 0.01, 0.015}, 20, 0.32);

  // Single-coefficient table at the 5% setting, for reference only.
  {
    const auto doc = load_config(kSource / "configs/ensemble_long.toml");
    CliOverrides o;
    o.out = scratch("ensemble_single");
    o.table = "builtin:single";
    auto rc = resolve_config("ensemble", &doc, o);
    rc.ensemble.concentrations = {0.05};
    run_command(rc);
    const auto rows = read_numeric_csv(*o.out / "summary.csv", 10);
    info(fmt::format("single-coefficient table, n = 0.05 (reference): mean {:.0f}, p5-p95 {:.0f}-{:.0f} ueV",
                     rows[0][3], rows[0][5], rows[0][9]));
  }
  const double p5 = long_rows.at(0)[5], p95 = long_rows.at(0)[9];
  const bool overlap = p5 <= 239.0 && p95 >= 54.0;
  return {config_ok && overlap,
          fmt::format("configurations {}, 5% long-wavelength p5-p95 {:.0f}-{:.0f} ueV {} 54-239 ueV",
                      config_ok ? "exact" : "MISMATCHED", p5, p95, overlap ? "overlaps" : "misses")};
}

// 8. Lever-arm round trips and quadrature error propagation.
Outcome lever_arm() {
  std::vector<double> T;
  for (int mK = 50; mK <= 500; mK += 10) T.push_back(mK * 1e-3);
  double worst_alpha = 0.0, worst_T = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto fit = fit_lever_arm(synthetic_lever_points(0.1, 0.1, T, 0.01, seed));
    worst_alpha = std::max(worst_alpha, std::abs(fit.alpha / 0.1 - 1.0));
    worst_T = std::max(worst_T, std::abs(fit.T_e0 / 0.1 - 1.0));
  }
  double worst_q = 0.0;
  for (double rv : {0.01, 0.02, 0.05})
    for (double ra : {0.005, 0.03, 0.1}) {
      const auto e = voltage_to_energy(1.64e-3, 0.1, rv * 1.64e-3, ra * 0.1);
      worst_q = std::max(worst_q, std::abs(e.error / (e.energy * std::sqrt(rv * rv + ra * ra)) - 1.0));
    }
  const auto ref = voltage_to_energy(1.64e-3, 0.1, 0.02 * 1.64e-3, 0.03 * 0.1);
  info(fmt::format("2% on dV and 3% on alpha -> {:.2f}% on energy", 100.0 * ref.error / ref.energy));
  return {worst_alpha <= 0.01 && worst_T <= 0.05 && worst_q <= 1e-14,
          fmt::format("50 seeds, {} points, 1% noise: worst alpha error {:.2f}% (<= 1%), T_e0 {:.2f}% (<= 5%); "
                      "quadrature deviation {:.1e}",
                      T.size(), 100.0 * worst_alpha, 100.0 * worst_T, worst_q)};
}

// 9. Every subcommand from the bundled configs via the CLI.
Outcome cli_coverage() {
  Stopwatch clock;
  const std::vector<std::pair<std::string, std::string>> runs{
      {"profile", "profile.toml"},        {"scan-q", "scan_q.toml"},
      {"scan-q", "scan_q_harmonic.toml"}, {"ensemble", "ensemble_long.toml"},
      {"ensemble", "ensemble_short.toml"}, {"dot-sweep", "dot_sweep.toml"},
      {"fit-transition", "fit_transition.toml"}, {"fit-leverarm", "fit_leverarm.toml"},
  };
  bool ok = true;
  for (const auto& [command, file] : runs) {
    const auto out = scratch("cli_" + fs::path(file).stem().string());
    const std::string cmd = fmt::format("{} {} --config {} --out {} > {} 2>&1", kCli.string(), command,
                                        (kSource / "configs" / file).string(), out.string(),
                                        (out.parent_path() / (file + ".log")).string());
    Stopwatch one;
    const int status = std::system(cmd.c_str());
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::string problem;
    try {
      if (code != 0) throw std::runtime_error(fmt::format("exit code {}", code));
      const auto manifest = read_json(out / "manifest.json");
      if (manifest.at("command") != command) throw std::runtime_error("manifest names another command");
      if (manifest.at("outputs").empty()) throw std::runtime_error("manifest lists no outputs");
      for (const auto& entry : manifest.at("outputs")) {
        const auto path = out / entry.at("file").get<std::string>();
        if (entry.contains("rows")) {
          const auto rows = validate_csv(path, entry.value("text_columns", std::size_t{0}));
          if (rows != entry.at("rows").get<std::size_t>()) throw std::runtime_error(path.string() + " row count");
        } else {
          read_json(path);
        }
      }
    } catch (const std::exception& e) {
      problem = e.what();
      ok = false;
    }
    info(fmt::format("{} --config {}: {:.1f} s {}", command, file, one.seconds(),
                     problem.empty() ? "ok" : "FAILED: " + problem));
  }
  const double t = clock.seconds();
  return {ok && t < 300.0, fmt::format("{} runs, manifests validated, {:.1f} s total (< 300 s)", runs.size(), t)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"peak locations", peak_locations},
      {"scaling laws", scaling_laws},
      {"Gaussian oracle", gaussian_oracle},
      {"eigensolver", eigensolver},
      {"disorder statistics", disorder_statistics},
      {"moving vs stationary dot", dot_sweep},
      {"ensemble configurations", ensemble_configurations},
      {"lever arm", lever_arm},
      {"CLI coverage", cli_coverage},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, fmt::format("error: {}", e.what())};
    }
    fmt::print("AC{} {} {}: {}\n", i + 1, r.pass ? "PASS" : "FAIL", criteria[i].first, r.detail);
    std::fflush(stdout);
    failed += !r.pass;
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

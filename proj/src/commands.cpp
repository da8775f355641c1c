#include "wiggle/commands.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "wiggle/disorder.hpp"
#include "wiggle/envelope.hpp"
#include "wiggle/errors.hpp"
#include "wiggle/io.hpp"
#include "wiggle/spectrofit.hpp"
#include "wiggle/valley.hpp"

namespace wiggle {

using nlohmann::json;

namespace {

constexpr double kMicro = 1e6;

// Collects outputs, validates them and writes the manifest last.
class OutputSet {
 public:
  explicit OutputSet(const RunConfig& config) : config_(config) {
    std::filesystem::create_directories(config.output_dir);
    std::error_code ec;
    std::filesystem::remove(config.output_dir / "manifest.json", ec);
  }

  std::filesystem::path path(const std::string& name) const { return config_.output_dir / name; }

  void csv(const std::string& name, std::size_t expected_rows, std::size_t text_columns = 0) {
    files_.push_back({name, expected_rows, text_columns, true});
  }
  void json_file(const std::string& name) { files_.push_back({name, 0, 0, false}); }

  std::filesystem::path finish(json seeds, json summary) {
    json outputs = json::array();
    for (const auto& f : files_) {
      const auto p = path(f.name);
      if (f.is_csv) {
        const auto rows = validate_csv(p, f.text_columns);
        if (rows != f.rows)
          throw IoError(fmt::format("{}: wrote {} rows, expected {}", p.string(), rows, f.rows));
        json entry = {{"file", f.name}, {"rows", rows}};
        if (f.text_columns) entry["text_columns"] = f.text_columns;
        outputs.push_back(std::move(entry));
      } else {
        read_json(p);
        outputs.push_back({{"file", f.name}});
      }
    }
    json manifest = {{"tool", "wiggle"},
                     {"version", WIGGLE_VERSION},
                     {"command", config_.command},
                     {"config", config_.resolved},
                     {"seeds", std::move(seeds)},
                     {"outputs", std::move(outputs)},
                     {"summary", std::move(summary)},
                     {"conventions",
                      {{"amplitude", "peak Ge fraction A; average concentration = A / 2"},
                       {"transition_width", "w = 2 k_B tau, tau = T_e / alpha in K V / eV"},
                       {"units", "nm, eV (and ueV columns), meV for confinement, K, V"}}}};
    const auto mp = path("manifest.json");
    write_json(mp, manifest);
    return mp;
  }

 private:
  struct File {
    std::string name;
    std::size_t rows;
    std::size_t text_columns;
    bool is_csv;
  };
  const RunConfig& config_;
  std::vector<File> files_;
};

ValleyConfig valley_config(const RunConfig& rc) {
  ValleyConfig vc;
  vc.valley = rc.valley;
  vc.potential = rc.potential;
  vc.table = std::make_shared<const BlochCoefficientTable>(load_table(rc.table, rc.min_norm));
  return vc;
}

json concentration_json(double amplitude) {
  return {{"amplitude_peak", amplitude}, {"average_concentration", 0.5 * amplitude}};
}

json result_json(const ValleyCouplingResult& r) {
  return {{"q_inv_nm", r.q},
          {"E_v_eV", r.E_v},
          {"E_v_ueV", r.E_v * kMicro},
          {"delta_abs_eV", std::abs(r.delta)},
          {"delta_re_eV", r.delta.real()},
          {"delta_im_eV", r.delta.imag()},
          {"mode", to_string(r.mode)},
          {"ground_energy_eV", r.ground_energy}};
}

json stats_json(const EnsembleStatistics& s) {
  auto both = [](double v) { return json{{"eV", v}, {"ueV", v * kMicro}}; };
  return {{"count", s.count}, {"mean", both(s.mean)}, {"std", both(s.std)}, {"p5", both(s.p5)},
          {"p25", both(s.p25)}, {"p50", both(s.p50)}, {"p75", both(s.p75)}, {"p95", both(s.p95)}};
}

}  // namespace

std::string concentration_tag(double value, ConcentrationConvention convention) {
  return fmt::format("{}{}", convention == ConcentrationConvention::average ? "avg" : "peak", format_number(value));
}

CommandResult cmd_profile(const RunConfig& rc) {
  OutputSet out(rc);
  const auto profile = build_profile(rc.profile, rc.constants);
  const auto potential = potential_from_profile(profile, rc.potential, rc.constants);
  const auto states = solve_envelope(potential, rc.constants.m_l, 2, rc.constants.hbar2_over_2m0);
  const auto vc = valley_config(rc);
  const auto valley = evaluate_splitting(profile, vc, rc.constants);

  {
    CsvWriter w(out.path("profile.csv"), {"z_nm", "ge_fraction"});
    for (std::size_t k = 0; k < profile.size(); ++k) w.row({profile.z[k], profile.xbar[k]});
    w.close();
    out.csv("profile.csv", profile.size());
  }
  {
    CsvWriter w(out.path("potential.csv"), {"z_nm", "V_F", "V_B", "V_osc", "V_total"});
    for (std::size_t k = 0; k < potential.size(); ++k)
      w.row({potential.z[k], potential.V_F[k], potential.V_B[k], potential.V_osc[k], potential.V_total[k]});
    w.close();
    out.csv("potential.csv", potential.size());
  }
  {
    CsvWriter w(out.path("envelope.csv"), {"z_nm", "psi", "psi_squared"});
    const auto& g = states.front();
    for (std::size_t k = 0; k < g.psi.size(); ++k) w.row({g.z[k], g.psi[k], g.psi[k] * g.psi[k]});
    w.close();
    out.csv("envelope.csv", states.front().psi.size());
  }
  json energies = json::array();
  for (const auto& s : states) energies.push_back({{"state_index", s.state_index}, {"energy_eV", s.energy}});
  json envelope = {{"energies", energies},
                   {"orbital_gap_eV", states[1].energy - states[0].energy},
                   {"mass_m0", rc.constants.m_l},
                   {"grid_points", profile.size()},
                   {"spacing_nm", profile.spacing},
                   {"concentration", concentration_json(rc.profile.amplitude)},
                   {"wavelength_nm", rc.profile.wavelength()},
                   {"valley", result_json(valley)},
                   {"table", vc.table->source_label}};
  write_json(out.path("envelope.json"), envelope);
  out.json_file("envelope.json");

  json summary = {{"grid_points", profile.size()}, {"ground_energy_eV", states[0].energy}, {"E_v_ueV", valley.E_v * kMicro}};
  return {out.finish({{"seed", rc.seed}, {"used", false}}, summary), summary};
}

CommandResult cmd_scan_q(const RunConfig& rc) {
  OutputSet out(rc);
  const auto vc = valley_config(rc);
  CsvWriter combined(out.path("combined.csv"),
                     {"average_concentration", "amplitude_peak", "q_inv_nm", "E_v_eV", "E_v_ueV"});
  json curves = json::array();
  std::size_t combined_rows = 0;
  for (double c : rc.scan.concentrations) {
    ProfileSpec spec = rc.profile;
    spec.amplitude = RunConfig::peak_amplitude(c, rc.scan.convention);
    const auto curve = scan_q(spec, rc.scan.q_values, vc, rc.workers, rc.constants);
    const std::string tag = concentration_tag(c, rc.scan.convention);
    const std::string name = fmt::format("curve_{}.csv", tag);
    CsvWriter w(out.path(name), {"q_inv_nm", "E_v_eV", "E_v_ueV"});
    for (std::size_t i = 0; i < curve.q_values.size(); ++i) {
      w.row({curve.q_values[i], curve.E_v_values[i], curve.E_v_values[i] * kMicro});
      combined.row({0.5 * spec.amplitude, spec.amplitude, curve.q_values[i], curve.E_v_values[i],
                    curve.E_v_values[i] * kMicro});
      ++combined_rows;
    }
    w.close();
    out.csv(name, curve.q_values.size());

    const auto imax = curve.argmax();
    json maxima = json::array();
    for (auto i : curve.local_maxima())
      maxima.push_back({{"q_inv_nm", curve.q_values[i]}, {"E_v_ueV", curve.E_v_values[i] * kMicro}});
    json meta = {{"curve", name},
                 {"concentration", concentration_json(spec.amplitude)},
                 {"mode", to_string(rc.valley.mode)},
                 {"include_interface", rc.valley.include_interface},
                 {"field_MV_per_m", rc.potential.field},
                 {"table", curve.table_label},
                 {"points_per_monolayer", spec.points_per_monolayer},
                 {"global_max", {{"q_inv_nm", curve.q_values[imax]}, {"E_v_eV", curve.E_v_values[imax]},
                                 {"E_v_ueV", curve.E_v_values[imax] * kMicro}}},
                 {"local_maxima", maxima},
                 {"reference_q_inv_nm", {{"2k0", 2.0 * rc.constants.k0()}, {"umklapp", rc.constants.umklapp_q()}}}};
    const std::string meta_name = fmt::format("curve_{}.json", tag);
    write_json(out.path(meta_name), meta);
    out.json_file(meta_name);
    curves.push_back({{"tag", tag}, {"global_max_q_inv_nm", curve.q_values[imax]},
                      {"global_max_E_v_ueV", curve.E_v_values[imax] * kMicro}});
  }
  combined.close();
  out.csv("combined.csv", combined_rows);
  json summary = {{"curves", curves}};
  return {out.finish({{"seed", rc.seed}, {"used", false}}, summary), summary};
}

CommandResult cmd_ensemble(const RunConfig& rc) {
  OutputSet out(rc);
  const auto vc = valley_config(rc);
  CsvWriter table(out.path("summary.csv"), {"average_concentration", "amplitude_peak", "n_samples", "mean_ueV", "std_ueV",
                                            "p5_ueV", "p25_ueV", "p50_ueV", "p75_ueV", "p95_ueV"});
  json summary = json::array();
  for (double c : rc.ensemble.concentrations) {
    ProfileSpec spec = rc.profile;
    spec.amplitude = RunConfig::peak_amplitude(c, rc.ensemble.convention);
    const auto ens = ensemble(spec, rc.ensemble.n_samples, rc.dot, vc, rc.seed, rc.extent, rc.workers, rc.constants);
    const std::string tag = concentration_tag(c, rc.ensemble.convention);
    const std::string name = fmt::format("ensemble_{}.csv", tag);
    CsvWriter w(out.path(name), {"sample_index", "seed", "E_orb_meV", "E_v_eV", "E_v_ueV"});
    for (const auto& s : ens.samples)
      w.row({double(s.index), double(s.seed), s.E_orb_meV, s.E_v, s.E_v * kMicro});
    w.close();
    out.csv(name, ens.samples.size());
    const auto& st = ens.statistics;
    table.row({0.5 * spec.amplitude, spec.amplitude, double(st.count), st.mean * kMicro, st.std * kMicro,
               st.p5 * kMicro, st.p25 * kMicro, st.p50 * kMicro, st.p75 * kMicro, st.p95 * kMicro});
    json meta = {{"samples_file", name},
                 {"concentration", concentration_json(spec.amplitude)},
                 {"wavelength_nm", spec.wavelength()},
                 {"dot", {{"hbar_omega_x_meV", rc.dot.hbar_omega_x}, {"hbar_omega_y_meV", rc.dot.hbar_omega_y},
                          {"x0_nm", rc.dot.x0}, {"y0_nm", rc.dot.y0}, {"r_x_nm", rc.dot.radius_x(rc.constants)},
                          {"r_y_nm", rc.dot.radius_y(rc.constants)}}},
                 {"seeds", {{"base", rc.seed}, {"first", rc.seed}, {"last", rc.seed + rc.ensemble.n_samples - 1}}},
                 {"table", vc.table->source_label},
                 {"statistics", stats_json(st)}};
    const std::string meta_name = fmt::format("ensemble_{}.json", tag);
    write_json(out.path(meta_name), meta);
    out.json_file(meta_name);
    summary.push_back({{"tag", tag}, {"mean_ueV", st.mean * kMicro}, {"p25_ueV", st.p25 * kMicro},
                       {"p75_ueV", st.p75 * kMicro}});
  }
  table.close();
  out.csv("summary.csv", rc.ensemble.concentrations.size());
  json seeds = {{"base_seed", rc.seed}, {"rule", "sample k uses base_seed + k"}, {"n_samples", rc.ensemble.n_samples}};
  json s = {{"ensembles", summary}};
  return {out.finish(seeds, s), s};
}

CommandResult cmd_dot_sweep(const RunConfig& rc) {
  OutputSet out(rc);
  const auto vc = valley_config(rc);
  const auto sweeps = sweep_ensemble(rc.profile, rc.n_seeds, rc.sweep, vc, rc.seed, rc.extent, rc.workers, rc.constants);
  json summary = json::object();
  auto write_case = [&](const std::string& label, const std::vector<std::vector<SweepPoint>>& runs) {
    const std::string name = fmt::format("sweep_{}.csv", label);
    CsvWriter w(out.path(name), {"sweep_param", "y0_nm", "E_orb_meV", "E_v_ueV", "seed", "E_v_eV", "delta_E_v_ueV"});
    std::size_t rows = 0;
    std::vector<double> final_shift;
    std::vector<std::vector<double>> per_point(static_cast<std::size_t>(rc.sweep.points));
    for (const auto& run : runs) {
      for (std::size_t i = 0; i < run.size(); ++i) {
        const auto& p = run[i];
        w.row({p.parameter, p.y0, p.E_orb_meV, p.E_v * kMicro, double(p.seed), p.E_v, (p.E_v - run.front().E_v) * kMicro});
        per_point[i].push_back(p.E_v);
        ++rows;
      }
      final_shift.push_back(run.back().E_v - run.front().E_v);
    }
    w.close();
    out.csv(name, rows);
    json means = json::array();
    for (std::size_t i = 0; i < per_point.size(); ++i) {
      const auto st = EnsembleStatistics::from(per_point[i]);
      means.push_back({{"E_orb_meV", runs.front()[i].E_orb_meV}, {"mean_E_v_ueV", st.mean * kMicro}});
    }
    const auto shift = EnsembleStatistics::from(final_shift);
    summary[label] = {{"delta_E_v_std_ueV", shift.std * kMicro},
                      {"delta_E_v_range_ueV", (shift.p95 - shift.p5) * kMicro},
                      {"mean_by_E_orb", means}};
  };
  write_case("case1", sweeps.case1);
  write_case("case2", sweeps.case2);
  write_json(out.path("sweep_summary.json"), summary);
  out.json_file("sweep_summary.json");
  json seeds = {{"base_seed", rc.seed}, {"n_seeds", rc.n_seeds}, {"rule", "seed k shares one alloy field for both cases"}};
  return {out.finish(seeds, summary), summary};
}

CommandResult cmd_fit_transition(const RunConfig& rc) {
  OutputSet out(rc);
  CsvWriter w(out.path("transition_fits.csv"),
              {"trace", "T_MC_K", "A", "A_err", "tau_K_V_per_eV", "tau_err", "width_V", "width_err_V", "V0_V",
               "V0_err_V", "b", "b_err", "I0", "I0_err", "residual_rms", "iterations"});
  json fits = json::array();
  for (const auto& path : rc.traces) {
    const auto trace = load_trace(path);
    const auto f = fit_transition(trace, rc.max_evaluations);
    w.raw_row({trace.label, format_number(f.T_MC), format_number(f.params.A), format_number(f.errors.A),
               format_number(f.params.tau), format_number(f.errors.tau), format_number(f.width),
               format_number(f.width_error), format_number(f.params.V0), format_number(f.errors.V0),
               format_number(f.params.b), format_number(f.errors.b), format_number(f.params.I0),
               format_number(f.errors.I0), format_number(f.residual_rms), format_number(f.iterations)});
    fits.push_back({{"trace", path.string()},
                    {"T_MC_K", f.T_MC},
                    {"A", f.params.A}, {"A_err", f.errors.A},
                    {"tau_K_V_per_eV", f.params.tau}, {"tau_err", f.errors.tau},
                    {"width_V", f.width}, {"width_err_V", f.width_error},
                    {"V0_V", f.params.V0}, {"V0_err_V", f.errors.V0},
                    {"b", f.params.b}, {"b_err", f.errors.b},
                    {"I0", f.params.I0}, {"I0_err", f.errors.I0},
                    {"residual_rms", f.residual_rms}, {"iterations", f.iterations}});
  }
  w.close();
  out.csv("transition_fits.csv", rc.traces.size(), 1);
  write_json(out.path("transition_fits.json"), {{"fits", fits}});
  out.json_file("transition_fits.json");
  json summary = {{"traces", rc.traces.size()}};
  return {out.finish({{"seed", rc.seed}, {"used", false}}, summary), summary};
}

CommandResult cmd_fit_leverarm(const RunConfig& rc) {
  OutputSet out(rc);
  const auto& l = rc.leverarm;
  std::vector<TemperaturePoint> points = l.points;
  json trace_fits = json::array();
  for (const auto& path : l.traces) {
    const auto trace = load_trace(path);
    if (!(trace.T_MC > 0.0)) throw IoError(fmt::format("{}: T_MC must be > 0 for lever-arm fits", path.string()));
    const auto f = fit_transition(trace, l.max_evaluations);
    points.push_back({trace.T_MC, f.params.tau});
    trace_fits.push_back({{"trace", path.string()}, {"T_MC_K", trace.T_MC}, {"tau_K_V_per_eV", f.params.tau},
                          {"tau_err", f.errors.tau}});
  }
  const auto fit = fit_lever_arm(points, l.max_evaluations);
  {
    CsvWriter w(out.path("leverarm_points.csv"), {"T_MC_K", "tau_K_V_per_eV", "tau_model", "residual"});
    for (std::size_t i = 0; i < fit.points.size(); ++i)
      w.row({fit.points[i].T_MC, fit.points[i].tau, fit.predict(fit.points[i].T_MC), fit.residuals[i]});
    w.close();
    out.csv("leverarm_points.csv", fit.points.size());
  }
  json energies = json::array();
  if (!l.splittings.empty()) {
    CsvWriter w(out.path("energies.csv"), {"dV_V", "dV_error_V", "E_eV", "E_error_eV", "E_ueV", "E_error_ueV"});
    for (const auto& s : l.splittings) {
      const auto e = voltage_to_energy(s.dV, fit.alpha, s.dV_error, fit.alpha_error);
      w.row({s.dV, s.dV_error, e.energy, e.error, e.energy * kMicro, e.error * kMicro});
      energies.push_back({{"dV_V", s.dV}, {"E_ueV", e.energy * kMicro}, {"E_error_ueV", e.error * kMicro}});
    }
    w.close();
    out.csv("energies.csv", l.splittings.size());
  }
  json result = {{"alpha_eV_per_V", fit.alpha},
                 {"alpha_error", fit.alpha_error},
                 {"T_e0_K", fit.T_e0},
                 {"T_e0_error_K", fit.T_e0_error},
                 {"covariance", {{fit.covariance(0, 0), fit.covariance(0, 1)}, {fit.covariance(1, 0), fit.covariance(1, 1)}}},
                 {"residual_rms", fit.residual_rms},
                 {"iterations", fit.iterations},
                 {"model", "tau = sqrt(T_MC^2 + T_e0^2) / alpha"},
                 {"trace_fits", trace_fits},
                 {"energies", energies}};
  write_json(out.path("leverarm.json"), result);
  out.json_file("leverarm.json");
  json summary = {{"alpha_eV_per_V", fit.alpha}, {"T_e0_K", fit.T_e0}};
  return {out.finish({{"seed", rc.seed}, {"used", false}}, summary), summary};
}

CommandResult run_command(const RunConfig& config) {
  const auto& c = config.command;
  if (c == "profile") return cmd_profile(config);
  if (c == "scan-q") return cmd_scan_q(config);
  if (c == "ensemble") return cmd_ensemble(config);
  if (c == "dot-sweep") return cmd_dot_sweep(config);
  if (c == "fit-transition") return cmd_fit_transition(config);
  if (c == "fit-leverarm") return cmd_fit_leverarm(config);
  throw ConfigError(fmt::format("unknown command '{}'", c));
}

std::string error_category(const std::exception& error) {
  if (const auto* e = dynamic_cast<const Error*>(&error)) return e->category();
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&error)) return "IoError";
  return "InternalError";
}

int exit_code_for(const std::exception& error) {
  const auto cat = error_category(error);
  if (cat == "ConfigError" || cat == "InvalidSpec" || cat == "InvalidTable") return 2;
  if (cat == "IoError") return 3;
  if (cat == "NotConfined" || cat == "DegenerateGrid" || cat == "GridTooCoarse" || cat == "ExtentTooSmall") return 4;
  if (cat == "NoTransitionFound" || cat == "NonConvergence" || cat == "IllConditioned") return 5;
  return 1;
}

}  // namespace wiggle

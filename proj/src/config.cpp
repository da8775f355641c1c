#include "wiggle/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <toml.hpp>

#include "wiggle/errors.hpp"

namespace wiggle {

using nlohmann::json;

std::string ConfigDocument::where(const std::string& pointer) const {
  const std::string file = path.empty() ? std::string("<config>") : path.string();
  const auto it = lines.find(pointer);
  if (it != lines.end()) return fmt::format("{}:{}: ", file, it->second);
  return fmt::format("{}: ", file);
}

namespace {

std::string escape_key(const std::string& key) {
  // RFC 6901 escaping
  std::string out;
  for (char c : key) {
    if (c == '~')
      out += "~0";
    else if (c == '/')
      out += "~1";
    else
      out += c;
  }
  return out;
}

void toml_to_json(const toml::node& node, json& out, const std::string& pointer, std::map<std::string, int>& lines) {
  lines[pointer] = static_cast<int>(node.source().begin.line);
  if (const auto* tbl = node.as_table()) {
    out = json::object();
    for (const auto& [key, value] : *tbl) {
      const std::string k(key.str());
      toml_to_json(value, out[k], pointer + "/" + escape_key(k), lines);
    }
  } else if (const auto* arr = node.as_array()) {
    out = json::array();
    for (std::size_t i = 0; i < arr->size(); ++i) {
      json element;
      toml_to_json(*arr->get(i), element, fmt::format("{}/{}", pointer, i), lines);
      out.push_back(std::move(element));
    }
  } else if (auto v = node.value_exact<std::int64_t>()) {
    out = *v;
  } else if (auto d = node.value_exact<double>()) {
    out = *d;
  } else if (auto b = node.value_exact<bool>()) {
    out = *b;
  } else if (auto s = node.value_exact<std::string>()) {
    out = *s;
  } else {
    throw ConfigError(fmt::format("line {}: dates and times are not supported config values",
                                  node.source().begin.line));
  }
}

// Records the line of every object key and array element in JSON text.
void scan_json_lines(const std::string& text, std::map<std::string, int>& lines) {
  struct Frame {
    bool object;
    std::string pointer;
    std::size_t index = 0;
    std::string key;
    bool expect_key = true;
  };
  std::vector<Frame> stack;
  int line = 1;
  auto value_start = [&]() {
    if (stack.empty()) return;
    auto& f = stack.back();
    if (!f.object) lines[fmt::format("{}/{}", f.pointer, f.index)] = line;
  };
  auto child_pointer = [&]() -> std::string {
    if (stack.empty()) return "";
    const auto& f = stack.back();
    return f.object ? f.pointer + "/" + escape_key(f.key) : fmt::format("{}/{}", f.pointer, f.index);
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
    } else if (c == '"') {
      std::string s;
      std::size_t j = i + 1;
      for (; j < text.size() && text[j] != '"'; ++j) {
        if (text[j] == '\\' && j + 1 < text.size()) {
          s += text[++j];
          continue;
        }
        s += text[j];
      }
      if (!stack.empty() && stack.back().object && stack.back().expect_key) {
        stack.back().key = s;
        stack.back().expect_key = false;
        lines[stack.back().pointer + "/" + escape_key(s)] = line;
      } else {
        value_start();
      }
      i = j;
    } else if (c == '{' || c == '[') {
      value_start();
      const std::string p = child_pointer();
      if (stack.empty()) lines[""] = line;
      stack.push_back(Frame{c == '{', p, 0, {}, true});
    } else if (c == '}' || c == ']') {
      if (!stack.empty()) stack.pop_back();
    } else if (c == ',') {
      if (!stack.empty()) {
        if (stack.back().object)
          stack.back().expect_key = true;
        else
          ++stack.back().index;
      }
    } else if (!std::isspace(static_cast<unsigned char>(c)) && c != ':') {
      value_start();
      while (i + 1 < text.size() && std::string_view(",}]\n").find(text[i + 1]) == std::string_view::npos) ++i;
    }
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open config '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

ConfigDocument parse_config(const std::string& text, ConfigFormat format, const std::filesystem::path& origin) {
  ConfigDocument doc;
  doc.path = origin;
  const std::string file = origin.empty() ? std::string("<config>") : origin.string();
  if (format == ConfigFormat::toml) {
    try {
      const auto tbl = toml::parse(text, origin.string());
      toml_to_json(tbl, doc.data, "", doc.lines);
    } catch (const toml::parse_error& e) {
      throw ConfigError(fmt::format("{}:{}: {}", file, e.source().begin.line, e.description()));
    }
  } else {
    try {
      doc.data = json::parse(text);
    } catch (const json::parse_error& e) {
      // Convert the byte offset to a line number.
      const auto upto = std::min<std::size_t>(e.byte, text.size());
      const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
      throw ConfigError(fmt::format("{}:{}: invalid JSON: {}", file, line, e.what()));
    }
    scan_json_lines(text, doc.lines);
  }
  if (!doc.data.is_object()) throw ConfigError(fmt::format("{}: top level must be a table/object", file));
  // A manifest carries the resolved config under "config".
  if (doc.data.contains("config") && doc.data["config"].is_object() && doc.data.contains("tool")) {
    if (doc.data.contains("command") && doc.data["command"].is_string())
      doc.command = doc.data["command"].get<std::string>();
    json inner = doc.data["config"];
    std::map<std::string, int> inner_lines;
    for (const auto& [p, l] : doc.lines) {
      if (p.rfind("/config", 0) == 0) inner_lines[p.substr(7)] = l;
    }
    doc.data = std::move(inner);
    doc.lines = std::move(inner_lines);
  }
  return doc;
}

ConfigDocument load_config(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  ConfigFormat format;
  if (ext == ".toml")
    format = ConfigFormat::toml;
  else if (ext == ".json")
    format = ConfigFormat::json;
  else
    throw ConfigError(fmt::format("{}: unsupported config extension '{}' (use .toml or .json)", path.string(), ext));
  return parse_config(read_text(path), format, path);
}

double RunConfig::peak_amplitude(double value, ConcentrationConvention convention) {
  return convention == ConcentrationConvention::average ? 2.0 * value : value;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"profile",  "scan-q",         "ensemble",
                                                 "dot-sweep", "fit-transition", "fit-leverarm"};
  return names;
}

namespace {

bool is_disorder(const std::string& command) { return command == "ensemble" || command == "dot-sweep"; }

json constants_defaults() {
  const MaterialConstants c;
  return {{"a0", c.a0}, {"k0_fraction", c.k0_fraction}, {"m_l", c.m_l},
          {"m_t", c.m_t}, {"V0", c.V0},                 {"hbar2_over_2m0", c.hbar2_over_2m0}};
}

json profile_defaults(const std::string& command) {
  ProfileSpec s = is_disorder(command) ? disorder_profile_defaults() : ProfileSpec{};
  if (command == "profile" || command == "scan-q") {
    s.amplitude = 0.09;
    s.set_wavelength(1.8);
  }
  if (is_disorder(command)) {
    s.amplitude = 0.10;
    s.set_wavelength(1.8);
  }
  if (command == "scan-q" || is_disorder(command)) s.points_per_monolayer = 16;
  return {{"well_width", s.well_width},
          {"amplitude", s.amplitude},
          {"wavevector", s.wavevector},
          {"well_offset", s.well_offset},
          {"delta_rho", s.delta_rho},
          {"interface_width", s.interface_width},
          {"interface_shape", to_string(s.interface_shape)},
          {"extent_below", s.extent_below},
          {"extent_above", s.extent_above},
          {"interface_position", s.interface_position},
          {"points_per_monolayer", s.points_per_monolayer}};
}

json potential_defaults(const std::string& command) {
  PotentialOptions p = is_disorder(command) ? disorder_valley_defaults().potential : PotentialOptions{};
  return {{"field", p.field},
          {"barrier_height", p.barrier_height},
          {"barrier_width", p.barrier_width},
          {"barrier_model", to_string(p.barrier_model)}};
}

json valley_defaults(const std::string& command) {
  const bool interface = is_disorder(command);
  return {{"mode", "perturbative"}, {"table", "builtin:single"}, {"include_interface", interface}, {"min_norm", 0.95}};
}

json defaults_for(const std::string& command) {
  json d = json::object();
  d["run"] = {{"workers", 1}, {"seed", 1}, {"output", ""}};
  if (command == "fit-transition") {
    d["fit"] = {{"traces", json::array()}, {"max_evaluations", 4000}};
    return d;
  }
  if (command == "fit-leverarm") {
    d["leverarm"] = {{"traces", json::array()},
                     {"points", json::array()},
                     {"splittings", json::array()},
                     {"max_evaluations", 4000}};
    return d;
  }
  d["constants"] = constants_defaults();
  d["profile"] = profile_defaults(command);
  d["potential"] = potential_defaults(command);
  d["valley"] = valley_defaults(command);
  if (command == "scan-q")
    d["scan"] = {{"concentrations", {0.05}}, {"convention", "average"}, {"q_min", 0.05}, {"q_max", 25.0}, {"q_points", 500}};
  if (command == "ensemble") {
    d["ensemble"] = {{"concentrations", {0.05}}, {"convention", "average"}, {"n_samples", 40}};
    d["dot"] = {{"hbar_omega_x", 2.0}, {"hbar_omega_y", 2.0}, {"x0", 0.0}, {"y0", 0.0}};
  }
  if (is_disorder(command)) {
    const FieldExtent e;
    d["extent"] = {{"width_x", e.width_x}, {"width_y", e.width_y}, {"center_x", e.center_x}, {"center_y", e.center_y}};
  }
  if (command == "dot-sweep") {
    const SweepSchedule s;
    d["sweep"] = {{"omega_x_start", s.omega_x_start}, {"omega_x_end", s.omega_x_end}, {"y0_start", s.y0_start},
                  {"y0_end", s.y0_end},               {"hbar_omega_y", s.hbar_omega_y}, {"x0", s.x0},
                  {"points", s.points},               {"n_seeds", 20}};
  }
  return d;
}

// Keys accepted in addition to the defaults.
const std::map<std::string, std::set<std::string>>& optional_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"profile", {"average_concentration", "wavelength", "barrier_concentration"}},
      {"scan", {"q_values"}},
  };
  return keys;
}

const std::set<std::string>& known_sections() {
  static const std::set<std::string> sections = {"run",      "constants", "profile", "potential", "valley", "scan",
                                                 "ensemble", "dot",       "extent",  "sweep",     "fit",    "leverarm"};
  return sections;
}

class Resolver {
 public:
  Resolver(const std::string& command, const ConfigDocument* doc) : command_(command), doc_(doc) {}

  std::string where(const std::string& pointer) const {
    if (doc_ && user_keys_.count(pointer)) return doc_->where(pointer);
    return doc_ ? doc_->where(pointer) : std::string("<defaults>: ");
  }

  [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
    std::string key = pointer.substr(1);
    std::replace(key.begin(), key.end(), '/', '.');
    throw ConfigError(fmt::format("{}{}: {}", where(pointer), key, message));
  }

  json merge() {
    json cfg = defaults_for(command_);
    if (!doc_) return cfg;
    for (const auto& [section, body] : doc_->data.items()) {
      const std::string sp = "/" + section;
      if (!known_sections().count(section)) fail(sp, "unknown section");
      if (!cfg.contains(section)) continue;  // belongs to another command
      if (!body.is_object()) fail(sp, "must be a table");
      for (const auto& [key, value] : body.items()) {
        const std::string kp = sp + "/" + key;
        const bool optional = optional_keys().count(section) && optional_keys().at(section).count(key);
        if (!cfg[section].contains(key) && !optional) fail(kp, "unknown key");
        cfg[section][key] = value;
        user_keys_.insert(kp);
      }
    }
    return cfg;
  }

  double number(const json& cfg, const std::string& pointer) const {
    const auto& v = cfg.at(json::json_pointer(pointer));
    if (!v.is_number()) fail(pointer, fmt::format("expected a number, got {}", v.dump()));
    return v.get<double>();
  }

  long integer(const json& cfg, const std::string& pointer) const {
    const auto& v = cfg.at(json::json_pointer(pointer));
    if (!v.is_number_integer()) fail(pointer, fmt::format("expected an integer, got {}", v.dump()));
    return v.get<long>();
  }

  std::string text(const json& cfg, const std::string& pointer) const {
    const auto& v = cfg.at(json::json_pointer(pointer));
    if (!v.is_string()) fail(pointer, fmt::format("expected a string, got {}", v.dump()));
    return v.get<std::string>();
  }

  bool boolean(const json& cfg, const std::string& pointer) const {
    const auto& v = cfg.at(json::json_pointer(pointer));
    if (!v.is_boolean()) fail(pointer, fmt::format("expected true or false, got {}", v.dump()));
    return v.get<bool>();
  }

  std::vector<double> numbers(const json& cfg, const std::string& pointer) const {
    const auto& v = cfg.at(json::json_pointer(pointer));
    if (!v.is_array()) fail(pointer, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(fmt::format("{}/{}", pointer, i), "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::filesystem::path base_dir() const {
    if (doc_ && !doc_->path.empty()) return std::filesystem::absolute(doc_->path).parent_path();
    return std::filesystem::current_path();
  }

  // Paths from the file resolve against its directory; others against the working directory.
  std::string resolve_path(const std::string& value, const std::string& pointer) const {
    if (value.rfind("builtin:", 0) == 0 || value.empty()) return value;
    std::filesystem::path p(value);
    if (p.is_relative()) p = (user_keys_.count(pointer) || from_file_.count(pointer) ? base_dir() : std::filesystem::current_path()) / p;
    return p.lexically_normal().string();
  }

  void mark_from_file(const std::string& pointer) { from_file_.insert(pointer); }
  bool user_set(const std::string& pointer) const { return user_keys_.count(pointer) > 0; }

  // Maps an InvalidSpec "field: message" to the config key that set it.
  [[noreturn]] void rethrow_spec(const std::string& section, const Error& e) const {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    const std::string field = colon == std::string::npos ? "" : msg.substr(0, colon);
    std::string pointer = "/" + section + "/" + field;
    if (!user_keys_.count(pointer)) {
      for (const auto& alias : {"average_concentration", "wavelength"}) {
        if ((field == "amplitude" && std::string(alias) == "average_concentration") ||
            (field == "wavevector" && std::string(alias) == "wavelength")) {
          const std::string ap = "/" + section + "/" + alias;
          if (user_keys_.count(ap)) pointer = ap;
        }
      }
    }
    throw ConfigError(fmt::format("{}{}.{}", where(pointer), section, msg));
  }

 private:
  std::string command_;
  const ConfigDocument* doc_;
  std::set<std::string> user_keys_;
  std::set<std::string> from_file_;
};

ConcentrationConvention parse_convention(const Resolver& r, const json& cfg, const std::string& pointer) {
  const auto v = r.text(cfg, pointer);
  if (v == "average") return ConcentrationConvention::average;
  if (v == "peak") return ConcentrationConvention::peak;
  r.fail(pointer, fmt::format("unknown convention '{}' (expected average or peak)", v));
}

}  // namespace

RunConfig resolve_config(const std::string& command, const ConfigDocument* document, const CliOverrides& overrides) {
  if (std::find(command_names().begin(), command_names().end(), command) == command_names().end())
    throw ConfigError(fmt::format("unknown command '{}'", command));
  Resolver r(command, document);
  json cfg = r.merge();
  RunConfig rc;
  rc.command = command;

  // CLI overrides.
  if (overrides.seed) cfg["run"]["seed"] = *overrides.seed;
  if (overrides.workers) cfg["run"]["workers"] = *overrides.workers;
  const bool valley_section = cfg.contains("valley");
  if (valley_section) {
    if (overrides.mode) cfg["valley"]["mode"] = *overrides.mode;
    if (overrides.table) cfg["valley"]["table"] = *overrides.table;
  }

  // run
  const long workers = r.integer(cfg, "/run/workers");
  if (workers < 1 || workers > 1024) r.fail("/run/workers", fmt::format("must be in [1, 1024], got {}", workers));
  rc.workers = static_cast<int>(workers);
  {
    const auto& s = cfg["run"]["seed"];
    if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() && s.get<long>() < 0))
      r.fail("/run/seed", fmt::format("expected a non-negative integer, got {}", s.dump()));
    rc.seed = s.get<std::uint64_t>();
  }
  const std::string output = r.text(cfg, "/run/output");
  if (overrides.out) {
    rc.output_dir = std::filesystem::absolute(*overrides.out);
  } else if (!output.empty()) {
    std::filesystem::path p(output);
    rc.output_dir = p.is_absolute() ? p : std::filesystem::absolute(p);
  } else if (const char* root = std::getenv(kOutputRootEnv); root && *root) {
    rc.output_dir = std::filesystem::absolute(std::filesystem::path(root) / command);
  } else {
    rc.output_dir = std::filesystem::absolute(std::filesystem::path("wiggle-out") / command);
  }
  rc.output_dir = rc.output_dir.lexically_normal();
  cfg["run"]["output"] = rc.output_dir.string();

  if (cfg.contains("constants")) {
    auto& c = rc.constants;
    c.a0 = r.number(cfg, "/constants/a0");
    c.k0_fraction = r.number(cfg, "/constants/k0_fraction");
    c.m_l = r.number(cfg, "/constants/m_l");
    c.m_t = r.number(cfg, "/constants/m_t");
    c.V0 = r.number(cfg, "/constants/V0");
    c.hbar2_over_2m0 = r.number(cfg, "/constants/hbar2_over_2m0");
    for (const auto& [key, v] : {std::pair{"a0", c.a0}, {"m_l", c.m_l}, {"m_t", c.m_t}, {"hbar2_over_2m0", c.hbar2_over_2m0}, {"k0_fraction", c.k0_fraction}}) {
      if (!(v > 0.0)) r.fail(fmt::format("/constants/{}", key), fmt::format("must be > 0, got {}", v));
    }
  }

  if (cfg.contains("profile")) {
    auto& pj = cfg["profile"];
    auto& s = rc.profile;
    s.well_width = r.number(cfg, "/profile/well_width");
    s.amplitude = r.number(cfg, "/profile/amplitude");
    if (pj.contains("average_concentration")) {
      const double avg = r.number(cfg, "/profile/average_concentration");
      if (r.user_set("/profile/amplitude") && std::abs(2.0 * avg - s.amplitude) > 1e-12)
        r.fail("/profile/average_concentration",
               fmt::format("conflicts with amplitude = {} (average is amplitude / 2)", s.amplitude));
      s.amplitude = 2.0 * avg;
      pj.erase("average_concentration");
      pj["amplitude"] = s.amplitude;
    }
    s.wavevector = r.number(cfg, "/profile/wavevector");
    if (pj.contains("wavelength")) {
      const double lambda = r.number(cfg, "/profile/wavelength");
      if (!(lambda > 0.0)) r.fail("/profile/wavelength", fmt::format("must be > 0, got {}", lambda));
      if (r.user_set("/profile/wavevector"))
        r.fail("/profile/wavelength", "set either wavelength or wavevector, not both");
      s.set_wavelength(lambda);
      pj.erase("wavelength");
      pj["wavevector"] = s.wavevector;
    }
    if (pj.contains("barrier_concentration")) s.barrier_concentration = r.number(cfg, "/profile/barrier_concentration");
    s.well_offset = r.number(cfg, "/profile/well_offset");
    s.delta_rho = r.number(cfg, "/profile/delta_rho");
    s.interface_width = r.number(cfg, "/profile/interface_width");
    try {
      s.interface_shape = interface_shape_from_string(r.text(cfg, "/profile/interface_shape"));
    } catch (const InvalidSpec& e) {
      r.rethrow_spec("profile", e);
    }
    s.extent_below = r.number(cfg, "/profile/extent_below");
    s.extent_above = r.number(cfg, "/profile/extent_above");
    s.interface_position = r.number(cfg, "/profile/interface_position");
    s.points_per_monolayer = static_cast<int>(r.integer(cfg, "/profile/points_per_monolayer"));
    try {
      s.validate();
    } catch (const InvalidSpec& e) {
      r.rethrow_spec("profile", e);
    }
  }

  if (cfg.contains("potential")) {
    auto& p = rc.potential;
    p.field = r.number(cfg, "/potential/field");
    p.barrier_height = r.number(cfg, "/potential/barrier_height");
    p.barrier_width = r.number(cfg, "/potential/barrier_width");
    try {
      p.barrier_model = barrier_model_from_string(r.text(cfg, "/potential/barrier_model"));
    } catch (const InvalidSpec& e) {
      r.rethrow_spec("potential", e);
    }
    for (const auto& [key, v] : {std::pair{"field", p.field}, {"barrier_height", p.barrier_height}, {"barrier_width", p.barrier_width}}) {
      if (!(v >= 0.0)) r.fail(fmt::format("/potential/{}", key), fmt::format("must be >= 0, got {}", v));
    }
  }

  if (valley_section) {
    const std::string mode = r.text(cfg, "/valley/mode");
    if (mode == "perturbative")
      rc.valley.mode = ValleyMode::perturbative;
    else if (mode == "two-component" || mode == "two_component")
      rc.valley.mode = ValleyMode::two_component;
    else
      r.fail("/valley/mode", fmt::format("unknown mode '{}' (expected perturbative or two-component)", mode));
    cfg["valley"]["mode"] = to_string(rc.valley.mode);
    rc.valley.include_interface = r.boolean(cfg, "/valley/include_interface");
    rc.min_norm = r.number(cfg, "/valley/min_norm");
    if (!(rc.min_norm > 0.0 && rc.min_norm <= 1.0))
      r.fail("/valley/min_norm", fmt::format("must be in (0, 1], got {}", rc.min_norm));
    const bool explicit_table = overrides.table.has_value() || r.user_set("/valley/table");
    if (rc.valley.mode == ValleyMode::two_component && !explicit_table)
      throw ConfigError(fmt::format(
          "{}valley.table: two-component mode needs an explicit coefficient table; pass --table <path.csv> "
          "or set valley.table (use \"builtin:single\" for the single-coefficient fallback)",
          r.where("/valley/mode")));
    std::string table = r.text(cfg, "/valley/table");
    if (overrides.table) {
      table = std::filesystem::path(table).is_relative() && table.rfind("builtin:", 0) != 0
                  ? (std::filesystem::current_path() / table).lexically_normal().string()
                  : table;
    } else {
      table = r.resolve_path(table, "/valley/table");
    }
    if (table.rfind("builtin:", 0) != 0 && !std::filesystem::exists(table))
      throw IoError(fmt::format("{}valley.table: coefficient table '{}' not found; pass --table <path.csv> "
                                "(columns Kx,Ky,Kz,Re_c_plus,Im_c_plus,Re_c_minus,Im_c_minus) or use builtin:single",
                                r.where("/valley/table"), table));
    rc.table = table;
    cfg["valley"]["table"] = table;
  }

  if (cfg.contains("scan")) {
    rc.scan.concentrations = r.numbers(cfg, "/scan/concentrations");
    if (rc.scan.concentrations.empty()) r.fail("/scan/concentrations", "must list at least one value");
    rc.scan.convention = parse_convention(r, cfg, "/scan/convention");
    if (cfg["scan"].contains("q_values")) {
      rc.scan.q_values = r.numbers(cfg, "/scan/q_values");
    } else {
      const double q_min = r.number(cfg, "/scan/q_min"), q_max = r.number(cfg, "/scan/q_max");
      const long n = r.integer(cfg, "/scan/q_points");
      if (!(q_min > 0.0)) r.fail("/scan/q_min", fmt::format("must be > 0, got {}", q_min));
      if (!(q_max > q_min)) r.fail("/scan/q_max", fmt::format("must exceed q_min = {}", q_min));
      if (n < 2) r.fail("/scan/q_points", fmt::format("must be >= 2, got {}", n));
      for (long i = 0; i < n; ++i) rc.scan.q_values.push_back(q_min + (q_max - q_min) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    for (std::size_t i = 0; i < rc.scan.q_values.size(); ++i) {
      if (!(rc.scan.q_values[i] > 0.0) || (i > 0 && !(rc.scan.q_values[i] > rc.scan.q_values[i - 1])))
        r.fail("/scan/q_values", "must be positive and strictly increasing");
    }
    for (std::size_t i = 0; i < rc.scan.concentrations.size(); ++i) {
      ProfileSpec s = rc.profile;
      s.amplitude = RunConfig::peak_amplitude(rc.scan.concentrations[i], rc.scan.convention);
      try {
        s.validate();
      } catch (const InvalidSpec& e) {
        r.fail(fmt::format("/scan/concentrations/{}", i), e.what());
      }
    }
  }

  if (cfg.contains("ensemble")) {
    rc.ensemble.concentrations = r.numbers(cfg, "/ensemble/concentrations");
    if (rc.ensemble.concentrations.empty()) r.fail("/ensemble/concentrations", "must list at least one value");
    rc.ensemble.convention = parse_convention(r, cfg, "/ensemble/convention");
    const long n = r.integer(cfg, "/ensemble/n_samples");
    if (n < 1) r.fail("/ensemble/n_samples", fmt::format("must be >= 1, got {}", n));
    rc.ensemble.n_samples = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i < rc.ensemble.concentrations.size(); ++i) {
      ProfileSpec s = rc.profile;
      s.amplitude = RunConfig::peak_amplitude(rc.ensemble.concentrations[i], rc.ensemble.convention);
      try {
        s.validate();
      } catch (const InvalidSpec& e) {
        r.fail(fmt::format("/ensemble/concentrations/{}", i), e.what());
      }
    }
  }

  if (cfg.contains("dot")) {
    rc.dot.hbar_omega_x = r.number(cfg, "/dot/hbar_omega_x");
    rc.dot.hbar_omega_y = r.number(cfg, "/dot/hbar_omega_y");
    rc.dot.x0 = r.number(cfg, "/dot/x0");
    rc.dot.y0 = r.number(cfg, "/dot/y0");
    try {
      rc.dot.validate();
    } catch (const InvalidSpec& e) {
      r.rethrow_spec("dot", e);
    }
  }

  if (cfg.contains("extent")) {
    rc.extent.width_x = r.number(cfg, "/extent/width_x");
    rc.extent.width_y = r.number(cfg, "/extent/width_y");
    rc.extent.center_x = r.number(cfg, "/extent/center_x");
    rc.extent.center_y = r.number(cfg, "/extent/center_y");
    if (!(rc.extent.width_x > 0.0)) r.fail("/extent/width_x", "must be > 0");
    if (!(rc.extent.width_y > 0.0)) r.fail("/extent/width_y", "must be > 0");
  }

  if (cfg.contains("sweep")) {
    auto& s = rc.sweep;
    s.omega_x_start = r.number(cfg, "/sweep/omega_x_start");
    s.omega_x_end = r.number(cfg, "/sweep/omega_x_end");
    s.y0_start = r.number(cfg, "/sweep/y0_start");
    s.y0_end = r.number(cfg, "/sweep/y0_end");
    s.hbar_omega_y = r.number(cfg, "/sweep/hbar_omega_y");
    s.x0 = r.number(cfg, "/sweep/x0");
    s.points = static_cast<int>(r.integer(cfg, "/sweep/points"));
    const long n = r.integer(cfg, "/sweep/n_seeds");
    if (n < 1) r.fail("/sweep/n_seeds", fmt::format("must be >= 1, got {}", n));
    rc.n_seeds = static_cast<std::size_t>(n);
    try {
      s.validate();
    } catch (const InvalidSpec& e) {
      const std::string msg = e.what();
      r.fail("/sweep/" + msg.substr(0, msg.find(':')), msg.substr(msg.find(':') + 2));
    }
  }

  auto trace_list = [&](const std::string& pointer) {
    std::vector<std::filesystem::path> out;
    const auto& arr = cfg.at(json::json_pointer(pointer));
    if (!arr.is_array()) r.fail(pointer, "expected an array of paths");
    json resolved = json::array();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string ip = fmt::format("{}/{}", pointer, i);
      if (!arr[i].is_string()) r.fail(ip, "expected a path string");
      if (r.user_set(pointer)) r.mark_from_file(ip);
      const auto p = r.resolve_path(arr[i].get<std::string>(), ip);
      if (!std::filesystem::exists(p)) throw IoError(fmt::format("{}trace '{}' not found", r.where(ip), p));
      out.emplace_back(p);
      resolved.push_back(p);
    }
    cfg[json::json_pointer(pointer)] = resolved;
    return out;
  };

  if (cfg.contains("fit")) {
    rc.traces = trace_list("/fit/traces");
    if (rc.traces.empty()) r.fail("/fit/traces", "list at least one trace CSV");
    rc.max_evaluations = static_cast<int>(r.integer(cfg, "/fit/max_evaluations"));
    if (rc.max_evaluations < 10) r.fail("/fit/max_evaluations", "must be >= 10");
  }

  if (cfg.contains("leverarm")) {
    auto& l = rc.leverarm;
    l.traces = trace_list("/leverarm/traces");
    const auto& pts = cfg["leverarm"]["points"];
    if (!pts.is_array()) r.fail("/leverarm/points", "expected an array of [T_MC, tau] pairs");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const std::string ip = fmt::format("/leverarm/points/{}", i);
      if (pts[i].is_array() && pts[i].size() == 2 && pts[i][0].is_number() && pts[i][1].is_number()) {
        l.points.push_back({pts[i][0].get<double>(), pts[i][1].get<double>()});
      } else if (pts[i].is_object() && pts[i].contains("T_MC") && pts[i].contains("tau") && pts[i]["T_MC"].is_number() &&
                 pts[i]["tau"].is_number()) {
        l.points.push_back({pts[i]["T_MC"].get<double>(), pts[i]["tau"].get<double>()});
      } else {
        r.fail(ip, "expected [T_MC, tau] or {T_MC = .., tau = ..}");
      }
    }
    if (l.traces.empty() == l.points.empty())
      r.fail("/leverarm/points", "give either traces (fitted first) or points, exactly one of them");
    const auto& sp = cfg["leverarm"]["splittings"];
    if (!sp.is_array()) r.fail("/leverarm/splittings", "expected an array of {dV, dV_error}");
    for (std::size_t i = 0; i < sp.size(); ++i) {
      const std::string ip = fmt::format("/leverarm/splittings/{}", i);
      if (!sp[i].is_object() || !sp[i].contains("dV") || !sp[i]["dV"].is_number())
        r.fail(ip, "expected {dV = <volts>, dV_error = <volts>}");
      const double err = sp[i].contains("dV_error") ? sp[i]["dV_error"].get<double>() : 0.0;
      l.splittings.push_back({sp[i]["dV"].get<double>(), err});
    }
    l.max_evaluations = static_cast<int>(r.integer(cfg, "/leverarm/max_evaluations"));
    if (l.max_evaluations < 10) r.fail("/leverarm/max_evaluations", "must be >= 10");
  }

  rc.resolved = std::move(cfg);
  return rc;
}

}  // namespace wiggle

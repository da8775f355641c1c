// Regenerates the bundled synthetic coefficient tables and charge-sensor traces.
//   wiggle-fixtures <data-dir>
#include <cmath>
#include <fstream>
#include <iostream>

#include <fmt/format.h>

#include "wiggle/io.hpp"
#include "wiggle/spectrofit.hpp"
#include "wiggle/valley.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: wiggle-fixtures <data-dir>\n";
    return 2;
  }
  const std::filesystem::path root = argv[1];
  try {
    wiggle::synthetic_table(7, true).save_csv(root / "tables" / "synthetic_diamond.csv");
    wiggle::synthetic_table(7, false).save_csv(root / "tables" / "synthetic_random.csv");

    // Lever arm 0.1 eV/V, saturation temperature 100 mK, 0.5% current noise.
    const double alpha = 0.1, T_e0 = 0.1;
    for (int i = 1; i <= 10; ++i) {
      const double T = 0.05 * i;
      wiggle::TransitionParameters p;
      p.A = 1.0;
      p.tau = std::hypot(T, T_e0) / alpha;
      p.b = 0.5;
      p.V0 = 0.35;
      p.I0 = 2.0;
      auto trace = wiggle::synthetic_trace(p, 0.344, 0.356, 401, 0.005, 100 + static_cast<std::uint64_t>(i), T);
      const auto path = root / "traces" / fmt::format("trace_T{:03d}mK.csv", 50 * i);
      wiggle::save_trace(path, trace);
      if (i == 5) {
        // Exercise the TOML sidecar path.
        auto json_sidecar = path;
        std::filesystem::remove(json_sidecar.replace_extension(".json"));
        auto toml_sidecar = path;
        std::ofstream(toml_sidecar.replace_extension(".toml")) << fmt::format("T_MC = {}  # K\n", wiggle::format_number(T));
      }
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <tuple>

#include <fmt/format.h>

#include "wiggle/errors.hpp"
#include "wiggle/io.hpp"
#include "wiggle/rng.hpp"
#include "wiggle/valley.hpp"

namespace wiggle {

double BlochCoefficientTable::norm_plus() const {
  double s = 0.0;
  for (const auto& e : entries) s += std::norm(e.c_plus);
  return s;
}

double BlochCoefficientTable::norm_minus() const {
  double s = 0.0;
  for (const auto& e : entries) s += std::norm(e.c_minus);
  return s;
}

void BlochCoefficientTable::validate(double min_norm) const {
  if (entries.empty()) throw InvalidTable("coefficient table is empty");
  std::set<std::tuple<int, int, int>> seen;
  for (const auto& e : entries) {
    if (!seen.emplace(e.h, e.k, e.l).second)
      throw InvalidTable(fmt::format("duplicate K vector ({}, {}, {})", e.h, e.k, e.l));
  }
  const double np = norm_plus();
  const double nm = norm_minus();
  if (np < min_norm || np > 1.0 + 1e-9)
    throw InvalidTable(fmt::format("sum |c+|^2 = {:.6f} outside [{}, 1]", np, min_norm));
  if (nm < min_norm || nm > 1.0 + 1e-9)
    throw InvalidTable(fmt::format("sum |c-|^2 = {:.6f} outside [{}, 1]", nm, min_norm));
}

BlochCoefficientTable BlochCoefficientTable::single_coefficient() {
  BlochCoefficientTable t;
  t.entries.push_back({0, 0, 0, cplx(1.0, 0.0), cplx(1.0, 0.0)});
  t.source_label = "builtin:single";
  return t;
}

namespace {

int as_lattice_index(double v, const std::string& where) {
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-6)
    throw InvalidTable(fmt::format("{}: K component {} is not an integer multiple of 2 pi / a0", where, v));
  return static_cast<int>(r);
}

}  // namespace

BlochCoefficientTable BlochCoefficientTable::load_csv(const std::filesystem::path& path, double min_norm) {
  const auto rows = read_numeric_csv(path, 7);
  BlochCoefficientTable t;
  t.source_label = path.string();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& v = rows[r];
    const auto where = fmt::format("{} row {}", path.string(), r + 1);
    t.entries.push_back({as_lattice_index(v[0], where), as_lattice_index(v[1], where),
                         as_lattice_index(v[2], where), cplx(v[3], v[4]), cplx(v[5], v[6])});
  }
  t.validate(min_norm);
  return t;
}

void BlochCoefficientTable::save_csv(const std::filesystem::path& path) const {
  CsvWriter out(path, {"Kx", "Ky", "Kz", "Re_c_plus", "Im_c_plus", "Re_c_minus", "Im_c_minus"});
  for (const auto& e : entries) {
    out.row({double(e.h), double(e.k), double(e.l), e.c_plus.real(), e.c_plus.imag(), e.c_minus.real(),
             e.c_minus.imag()});
  }
  out.close();
}

BlochCoefficientTable load_table(const std::string& reference, double min_norm) {
  if (reference == "builtin:single") return BlochCoefficientTable::single_coefficient();
  if (reference.rfind("builtin:", 0) == 0)
    throw InvalidTable(fmt::format("unknown builtin table '{}' (available: builtin:single)", reference));
  if (!std::filesystem::exists(reference))
    throw IoError(fmt::format("coefficient table '{}' not found", reference));
  return BlochCoefficientTable::load_csv(reference, min_norm);
}

BlochCoefficientTable synthetic_table(std::uint64_t seed, bool diamond_symmetric, const MaterialConstants&) {
  // FCC reciprocal lattice: h, k, l all even or all odd; |K|^2 <= 12 gives 59 vectors.
  std::vector<std::tuple<int, int, int>> ks;
  for (int h = -3; h <= 3; ++h)
    for (int k = -3; k <= 3; ++k)
      for (int l = -3; l <= 3; ++l) {
        const bool same_parity = ((h & 1) == (k & 1)) && ((k & 1) == (l & 1));
        if (same_parity && h * h + k * k + l * l <= 12) ks.emplace_back(h, k, l);
      }
  std::sort(ks.begin(), ks.end(), [](const auto& a, const auto& b) {
    const auto na = std::get<0>(a) * std::get<0>(a) + std::get<1>(a) * std::get<1>(a) + std::get<2>(a) * std::get<2>(a);
    const auto nb = std::get<0>(b) * std::get<0>(b) + std::get<1>(b) * std::get<1>(b) + std::get<2>(b) * std::get<2>(b);
    return na != nb ? na < nb : a < b;
  });

  rng::Stream stream(seed);
  auto random_amplitude = [&](int h, int k, int l) {
    const double mag = std::exp(-0.25 * (h * h + k * k + l * l)) * (0.5 + stream.uniform());
    const double phase = 2.0 * std::numbers::pi * stream.uniform();
    return std::polar(mag, phase);
  };

  std::map<std::tuple<int, int, int>, cplx> plus;
  if (diamond_symmetric) {
    const cplx powers_of_i[4] = {cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)};
    for (const auto& K : ks) {
      if (plus.count(K)) continue;
      auto [h, k, l] = K;
      if (h == 0 && k == 0) {
        // Fixed by the screw: c = i^l c, so only l = 0 mod 4 survives.
        plus[K] = (l % 4 == 0) ? random_amplitude(h, k, l) : cplx(0.0);
        continue;
      }
      cplx c = random_amplitude(h, k, l);
      for (int step = 0; step < 4; ++step) {
        plus[{h, k, l}] = c;
        // c(R^-1 K) = i^(h+k+l) c(K), R^-1 (h, k, l) = (k, -h, l)
        const int p = ((h + k + l) % 4 + 4) % 4;
        c *= powers_of_i[p];
        const int nh = k, nk = -h;
        h = nh;
        k = nk;
      }
    }
  } else {
    for (const auto& K : ks) plus[K] = random_amplitude(std::get<0>(K), std::get<1>(K), std::get<2>(K));
  }

  double norm = 0.0;
  for (const auto& [K, c] : plus) norm += std::norm(c);
  const double scale = 1.0 / std::sqrt(norm);

  BlochCoefficientTable t;
  t.source_label = fmt::format("synthetic:{}:seed={}", diamond_symmetric ? "diamond" : "random", seed);
  for (const auto& K : ks) {
    const auto [h, k, l] = K;
    const cplx cp = plus.at(K) * scale;
    cplx cm;
    if (diamond_symmetric) {
      cm = std::conj(plus.at({-h, -k, -l})) * scale;  // time reversal
    } else {
      cm = random_amplitude(h, k, l);
    }
    t.entries.push_back({h, k, l, cp, cm});
  }
  if (!diamond_symmetric) {
    double nm = 0.0;
    for (const auto& e : t.entries) nm += std::norm(e.c_minus);
    for (auto& e : t.entries) e.c_minus /= std::sqrt(nm);
  }
  return t;
}

BlochCoefficientTable randomize_phases(const BlochCoefficientTable& table, std::uint64_t seed) {
  rng::Stream stream(seed);
  BlochCoefficientTable t = table;
  for (auto& e : t.entries) {
    e.c_plus *= std::polar(1.0, 2.0 * std::numbers::pi * stream.uniform());
    e.c_minus *= std::polar(1.0, 2.0 * std::numbers::pi * stream.uniform());
  }
  t.source_label = fmt::format("{}+random_phases:seed={}", table.source_label, seed);
  return t;
}

std::vector<KernelTerm> valley_kernel(const BlochCoefficientTable& table, const MaterialConstants& constants) {
  std::map<int, cplx> sums;
  for (const auto& a : table.entries) {
    for (const auto& b : table.entries) {
      if (a.h != b.h || a.k != b.k) continue;
      sums[a.l - b.l] += std::conj(a.c_plus) * b.c_minus;
    }
  }
  std::vector<KernelTerm> out;
  for (const auto& [dl, w] : sums) {
    out.push_back({dl, w, dl * constants.reciprocal_unit() - 2.0 * constants.k0()});
  }
  return out;
}

}  // namespace wiggle

// Copyright (c) the fspg authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef FSPG_GRID_HPP
#define FSPG_GRID_HPP

#include <algorithm>
#include <array>
#include <complex>
#include <cstdio>
#include <cstring>
#include <map>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "fspg/common.hpp"

namespace fspg {

// Periodic cubic box, n samples per axis at x_i = (i - n/2) L/n, box centered
// at the origin so that position-weighted integrals are directly computable.
struct GridSpec {
  int n = 0;
  double L = 0.0;

  bool operator==(const GridSpec &) const = default;

  void validate() const {
    require(n >= 4 && n % 2 == 0, "GridSpec: n must be even and >= 4");
    require(L > 0.0 && std::isfinite(L), "GridSpec: L must be positive");
  }

  std::size_t size() const { return static_cast<std::size_t>(n) * n * n; }
  double spacing() const { return L / n; }
  double cell_volume() const { double h = spacing(); return h * h * h; }
  // physical coordinate of sample index along one axis
  double coord(int i) const { return (i - n / 2) * spacing(); }
  // integer frequency of mode index along one axis, in {-n/2, ..., n/2-1}
  int freq_index(int m) const { return m < n / 2 ? m : m - n; }
  // angular frequency xi = 2 pi k~ / L
  double freq(int m) const { return 2.0 * M_PI * freq_index(m) / L; }

  std::size_t flat(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n + j) * n + k;
  }
};

// Real-valued samples on the periodic box; row-major (x outermost).
struct Field {
  GridSpec grid;
  std::vector<double> values;

  Field() = default;
  explicit Field(const GridSpec &g, double fill = 0.0) : grid(g), values(g.size(), fill) {
    g.validate();
  }

  double &operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }

  void validate() const {
    grid.validate();
    require(values.size() == grid.size(), "Field: values length != n^3");
    for (double v : values)
      require(std::isfinite(v), "Field: non-finite sample");
  }

  // fill from a function of the physical coordinates
  template <class F> void fill_with(F &&f) {
    const int n = grid.n;
    std::size_t idx = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k, ++idx)
          values[idx] = f(grid.coord(i), grid.coord(j), grid.coord(k));
  }
};

// Complex modes in FFTW index order; mode m holds the coefficient of
// exp(i xi_m . x) with xi referenced to the centered box coordinates, i.e.
// modes[m] = sum_j f_j exp(-i xi_m . x_j), inverse divides by n^3.
struct SpectralField {
  GridSpec grid;
  std::vector<std::complex<double>> modes;

  SpectralField() = default;
  explicit SpectralField(const GridSpec &g) : grid(g), modes(g.size()) { g.validate(); }

  std::size_t size() const { return modes.size(); }
};

namespace detail {

// Plans are cached per (n, sign); created out-of-place with FFTW_UNALIGNED so
// they can execute on any buffer pair. Planner calls are serialized (FFTW's
// planner is not thread-safe); execution is.
inline fftw_plan fft_plan(int n, int sign) {
  static std::mutex mtx;
  static std::map<std::pair<int, int>, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto key = std::make_pair(n, sign);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::size_t sz = static_cast<std::size_t>(n) * n * n;
  std::vector<std::complex<double>> a(sz), b(sz);
  fftw_plan p = fftw_plan_dft_3d(
      n, n, n, reinterpret_cast<fftw_complex *>(a.data()),
      reinterpret_cast<fftw_complex *>(b.data()), sign,
      FFTW_ESTIMATE | FFTW_UNALIGNED);
  require(p != nullptr, "fft_plan: FFTW plan creation failed");
  cache.emplace(key, p);
  return p;
}

inline void execute_fft(int n, int sign, std::complex<double> *in, std::complex<double> *out) {
  fftw_execute_dft(fft_plan(n, sign), reinterpret_cast<fftw_complex *>(in),
                   reinterpret_cast<fftw_complex *>(out));
}

// (-1)^(k1+k2+k3) twiddle converting between FFTW's index-0-based phases and
// phases referenced to the centered coordinates x_j = (j - n/2) h. Valid for
// even n, where (-1)^{k~} = (-1)^k.
inline void apply_center_phase(int n, std::complex<double> *data) {
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k, ++idx)
        if ((i + j + k) & 1) data[idx] = -data[idx];
}

} // namespace detail

inline SpectralField forward_transform(const Field &f) {
  f.grid.validate();
  require(f.values.size() == f.grid.size(), "forward_transform: bad field");
  const int n = f.grid.n;
  std::vector<std::complex<double>> in(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) in[i] = f.values[i];
  SpectralField out(f.grid);
  detail::execute_fft(n, FFTW_FORWARD, in.data(), out.modes.data());
  detail::apply_center_phase(n, out.modes.data());
  return out;
}

// Inverse of forward_transform. Rejects mode sets that do not represent a
// real field (imaginary residue above 1e-8 of the field scale).
inline Field inverse_transform(const SpectralField &F) {
  F.grid.validate();
  require(F.modes.size() == F.grid.size(), "inverse_transform: bad mode array");
  const int n = F.grid.n;
  const std::size_t sz = F.size();
  std::vector<std::complex<double>> in(F.modes);
  detail::apply_center_phase(n, in.data());
  std::vector<std::complex<double>> out(sz);
  detail::execute_fft(n, FFTW_BACKWARD, in.data(), out.data());
  const double inv = 1.0 / static_cast<double>(sz);
  double max_re = 0.0, max_im = 0.0;
  Field f(F.grid);
  for (std::size_t i = 0; i < sz; ++i) {
    f.values[i] = out[i].real() * inv;
    max_re = std::max(max_re, std::abs(out[i].real()));
    max_im = std::max(max_im, std::abs(out[i].imag()));
  }
  require(max_im <= 1e-8 * std::max(max_re, 1e-300),
          "inverse_transform: modes violate conjugate symmetry (non-real field)");
  return f;
}

// Rectangle rule on the torus: spectrally accurate for smooth periodic integrands.
inline double integrate(const Field &f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return s * f.grid.cell_volume();
}

inline double inner(const Field &f, const Field &g) {
  require(f.grid == g.grid, "inner: grid mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f.values[i] * g.values[i];
  return s * f.grid.cell_volume();
}

inline double max_abs(const Field &f) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

inline Field multiply(const Field &f, const Field &g) {
  require(f.grid == g.grid, "multiply: grid mismatch");
  Field r(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) r.values[i] = f.values[i] * g.values[i];
  return r;
}

inline Field add(const Field &f, const Field &g) {
  require(f.grid == g.grid, "add: grid mismatch");
  Field r(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) r.values[i] = f.values[i] + g.values[i];
  return r;
}

inline Field scale(const Field &f, double c) {
  Field r(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) r.values[i] = c * f.values[i];
  return r;
}

// axpy convenience: f + c g
inline Field add_scaled(const Field &f, double c, const Field &g) {
  require(f.grid == g.grid, "add_scaled: grid mismatch");
  Field r(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) r.values[i] = f.values[i] + c * g.values[i];
  return r;
}

// |u|^q, elementwise
inline Field abs_power(const Field &f, double q) {
  Field r(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double a = std::abs(f.values[i]);
    r.values[i] = a > 0.0 ? std::pow(a, q) : 0.0;
  }
  return r;
}

// |u|^{p-1} u, the sign-preserving power realizing the nonlinearity; maps 0 to 0.
inline Field abs_power_signed(const Field &f, double p) {
  Field r(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double v = f.values[i];
    const double a = std::abs(v);
    r.values[i] = a > 0.0 ? std::copysign(std::pow(a, p), v) : 0.0;
  }
  return r;
}

enum class PointwiseOp { multiply, add, scale, power, abs_power_signed };

inline Field pointwise(PointwiseOp op, const Field &f, const Field &g) {
  switch (op) {
  case PointwiseOp::multiply: return multiply(f, g);
  case PointwiseOp::add: return add(f, g);
  default: throw error("pointwise: op requires a scalar argument");
  }
}

inline Field pointwise(PointwiseOp op, const Field &f, double arg) {
  switch (op) {
  case PointwiseOp::scale: return scale(f, arg);
  case PointwiseOp::power: return abs_power(f, arg);
  case PointwiseOp::abs_power_signed: return abs_power_signed(f, arg);
  default: throw error("pointwise: op requires a field argument");
  }
}

// circular shift by whole cells: r(i) = f(i - off), periodic per axis
inline Field circular_shift(const Field &f, const std::array<int, 3> &off) {
  const int n = f.grid.n;
  auto wrap = [n](int i) { int r = i % n; return r < 0 ? r + n : r; };
  Field r(f.grid);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        r.values[f.grid.flat(i, j, k)] =
            f.values[f.grid.flat(wrap(i - off[0]), wrap(j - off[1]), wrap(k - off[2]))];
  return r;
}

// Fraction of the mass integral carried by the outer 10% shell of the box
// (samples with max_d |x_d| >= 0.9 L/2); the finite-box contamination monitor.
inline double boundary_mass_fraction(const Field &u) {
  const int n = u.grid.n;
  const double edge = 0.9 * 0.5 * u.grid.L;
  double total = 0.0, shell = 0.0;
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k, ++idx) {
        const double m = u.values[idx] * u.values[idx];
        total += m;
        const double ax = std::abs(u.grid.coord(i));
        const double ay = std::abs(u.grid.coord(j));
        const double az = std::abs(u.grid.coord(k));
        if (std::max(ax, std::max(ay, az)) >= edge) shell += m;
      }
  return total > 0.0 ? shell / total : 0.0;
}

// --- field file format -------------------------------------------------------
// Binary, little-endian: magic "FSPG", u32 version = 1, u32 n, f64 L,
// then n^3 f64 values row-major. No compression.

inline void write_field(const Field &f, const std::string &path) {
  f.validate();
  std::FILE *fp = std::fopen(path.c_str(), "wb");
  require(fp != nullptr, "write_field: cannot open " + path);
  const char magic[4] = {'F', 'S', 'P', 'G'};
  const std::uint32_t version = 1;
  const std::uint32_t n = static_cast<std::uint32_t>(f.grid.n);
  bool ok = std::fwrite(magic, 1, 4, fp) == 4 &&
            std::fwrite(&version, sizeof version, 1, fp) == 1 &&
            std::fwrite(&n, sizeof n, 1, fp) == 1 &&
            std::fwrite(&f.grid.L, sizeof(double), 1, fp) == 1 &&
            std::fwrite(f.values.data(), sizeof(double), f.values.size(), fp) ==
                f.values.size();
  std::fclose(fp);
  require(ok, "write_field: short write to " + path);
}

inline Field read_field(const std::string &path) {
  std::FILE *fp = std::fopen(path.c_str(), "rb");
  require(fp != nullptr, "read_field: cannot open " + path);
  auto fail = [&](const std::string &msg) {
    std::fclose(fp);
    throw error("read_field: " + msg + " (" + path + ")");
  };
  char magic[4];
  if (std::fread(magic, 1, 4, fp) != 4) fail("truncated header");
  if (std::memcmp(magic, "FSPG", 4) != 0) fail("bad magic");
  std::uint32_t version = 0, n = 0;
  double L = 0.0;
  if (std::fread(&version, sizeof version, 1, fp) != 1) fail("truncated header");
  if (version != 1) fail("unsupported format version");
  if (std::fread(&n, sizeof n, 1, fp) != 1) fail("truncated header");
  if (std::fread(&L, sizeof L, 1, fp) != 1) fail("truncated header");
  if (n < 4 || n % 2 != 0) fail("n must be even and >= 4");
  if (!(L > 0.0) || !std::isfinite(L)) fail("bad box length");
  Field f(GridSpec{static_cast<int>(n), L});
  if (std::fread(f.values.data(), sizeof(double), f.values.size(), fp) != f.values.size())
    fail("truncated payload");
  std::fclose(fp);
  return f;
}

} // namespace fspg

#endif

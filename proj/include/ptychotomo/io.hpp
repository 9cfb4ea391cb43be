#pragma once

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ptychotomo/baseline.hpp"
#include "ptychotomo/forward_model.hpp"
#include "ptychotomo/solver.hpp"

namespace ptychotomo {

/// Shortest decimal form that round-trips an IEEE double exactly.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline void put_f64_le(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

inline double get_f64_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return std::bit_cast<double>(bits);
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return buf;
}

inline void write_file_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

/// Line-oriented view over an in-memory file that reports byte offsets on error.
struct LineCursor {
  const std::string& buf;
  const std::string what;
  std::size_t pos = 0;

  [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
    throw parse_error(what + ": " + msg + " at byte offset " + std::to_string(at));
  }

  std::string line() {
    if (pos >= buf.size()) fail("unexpected end of file", buf.size());
    const std::size_t start = pos;
    const std::size_t nl = buf.find('\n', start);
    if (nl == std::string::npos) fail("unterminated line", buf.size());
    pos = nl + 1;
    return buf.substr(start, nl - start);
  }

  std::string expect_value(const std::string& key) {
    const std::size_t at = pos;
    const std::string ln = line();
    const std::string prefix = key + " = ";
    if (ln.rfind(prefix, 0) != 0) fail("expected '" + key + " = ...', got '" + ln + "'", at);
    return ln.substr(prefix.size());
  }

  double parse_f64(const std::string& text, std::size_t at) const {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0') fail("invalid number '" + text + "'", at);
    return v;
  }

  long long parse_i64(const std::string& text, std::size_t at) const {
    char* end = nullptr;
    const long long v = std::strtoll(text.c_str(), &end, 10);
    if (end == text.c_str() || *end != '\0') fail("invalid integer '" + text + "'", at);
    return v;
  }

  double f64(const std::string& key) {
    const std::size_t at = pos;
    return parse_f64(expect_value(key), at);
  }

  long long i64(const std::string& key) {
    const std::size_t at = pos;
    return parse_i64(expect_value(key), at);
  }
};

}  // namespace detail

inline constexpr const char* kMeasurementMagic = "ptychotomo-measurements-v1";

/**
 * One self-contained file per measurement set: a line-oriented text header
 * (geometry, angles, acquisition parameters) followed by every frame as raw
 * little-endian binaries. Numbers are written so that reading the file back
 * reproduces the input bit for bit.
 */
inline void write_measurements(const std::filesystem::path& path, const MeasurementSet& ms) {
  validate_measurements(ms);
  std::string out;
  out += kMeasurementMagic;
  out += '\n';
  out += "n = " + std::to_string(ms.geom.n) + '\n';
  out += "window = " + std::to_string(ms.geom.window) + '\n';
  out += "stepsize = " + std::to_string(ms.stepsize) + '\n';
  out += "eta = " + (ms.eta ? format_double(*ms.eta) : std::string("none")) + '\n';
  out += "seed = " + std::to_string(ms.seed) + '\n';
  out += "angles = " + std::to_string(ms.angles.angles.size()) + '\n';
  for (double a : ms.angles.angles) out += format_double(a) + '\n';
  out += "positions = " + std::to_string(ms.geom.positions.size()) + '\n';
  for (const auto& p : ms.geom.positions)
    out += std::to_string(p[0]) + ' ' + std::to_string(p[1]) + '\n';
  out += "frames = " + std::to_string(ms.frames.size()) + '\n';
  out += "payload = f64-le\n";
  const std::size_t per_frame = static_cast<std::size_t>(ms.geom.window) * ms.geom.window;
  out.reserve(out.size() + ms.frames.size() * per_frame * 8);
  for (const auto& f : ms.frames)
    for (std::size_t i = 0; i < f.size(); ++i) detail::put_f64_le(out, f[i]);
  detail::write_file_bytes(path, out);
}

inline MeasurementSet read_measurements(const std::filesystem::path& path) {
  const std::string buf = detail::read_file_bytes(path);
  detail::LineCursor cur{buf, "measurement archive " + path.string()};

  {
    const std::size_t at = cur.pos;
    const std::string magic = cur.line();
    if (magic != kMeasurementMagic) cur.fail("unrecognized magic line '" + magic + "'", at);
  }

  MeasurementSet ms;
  ms.geom.n = static_cast<int>(cur.i64("n"));
  ms.geom.window = static_cast<int>(cur.i64("window"));
  ms.stepsize = static_cast<int>(cur.i64("stepsize"));
  {
    const std::size_t at = cur.pos;
    const std::string eta = cur.expect_value("eta");
    if (eta != "none") ms.eta = cur.parse_f64(eta, at);
  }
  ms.seed = static_cast<std::uint64_t>(cur.i64("seed"));

  const long long n_angles = cur.i64("angles");
  if (n_angles < 0) cur.fail("negative angle count", cur.pos);
  for (long long t = 0; t < n_angles; ++t) {
    const std::size_t at = cur.pos;
    ms.angles.angles.push_back(cur.parse_f64(cur.line(), at));
  }

  const long long n_pos = cur.i64("positions");
  if (n_pos < 0) cur.fail("negative position count", cur.pos);
  for (long long j = 0; j < n_pos; ++j) {
    const std::size_t at = cur.pos;
    const std::string ln = cur.line();
    const std::size_t sp = ln.find(' ');
    if (sp == std::string::npos) cur.fail("expected 'row col', got '" + ln + "'", at);
    ms.geom.positions.push_back({static_cast<int>(cur.parse_i64(ln.substr(0, sp), at)),
                                 static_cast<int>(cur.parse_i64(ln.substr(sp + 1), at))});
  }

  const long long declared = cur.i64("frames");
  const long long expected = n_angles * n_pos;
  if (declared != expected)
    cur.fail("frame count mismatch: header declares " + std::to_string(declared) +
                 " frames, geometry implies " + std::to_string(expected),
             cur.pos);
  {
    const std::size_t at = cur.pos;
    const std::string payload = cur.expect_value("payload");
    if (payload != "f64-le") cur.fail("unsupported payload encoding '" + payload + "'", at);
  }

  if (ms.geom.window <= 0) cur.fail("window must be positive", cur.pos);
  const std::size_t per_frame = static_cast<std::size_t>(ms.geom.window) * ms.geom.window;
  const std::size_t avail = buf.size() - cur.pos;
  const std::size_t need = static_cast<std::size_t>(expected) * per_frame * 8;
  if (avail != need) {
    const std::size_t whole = avail / (per_frame * 8);
    cur.fail("payload holds " + std::to_string(whole) + " complete frames, expected " +
                 std::to_string(expected) +
                 (avail < need ? " (truncated payload)" : " (trailing bytes)"),
             buf.size());
  }

  const auto* p = reinterpret_cast<const unsigned char*>(buf.data()) + cur.pos;
  ms.frames.reserve(static_cast<std::size_t>(expected));
  for (long long i = 0; i < expected; ++i) {
    Grid2<double> f(ms.geom.window, ms.geom.window);
    for (std::size_t px = 0; px < per_frame; ++px, p += 8) f[px] = detail::get_f64_le(p);
    ms.frames.push_back(std::move(f));
  }
  validate_measurements(ms);
  return ms;
}

/**
 * Raw complex volume: one text header line `n=<n> layout=zyx-ri`, then
 * little-endian doubles interleaved (real, imag) with z the slowest axis.
 */
inline void write_volume(const std::filesystem::path& path, const ComplexVolume& u) {
  std::string out = "n=" + std::to_string(u.n()) + " layout=zyx-ri\n";
  out.reserve(out.size() + u.size() * 16);
  for (std::size_t i = 0; i < u.size(); ++i) {
    detail::put_f64_le(out, u[i].real());
    detail::put_f64_le(out, u[i].imag());
  }
  detail::write_file_bytes(path, out);
}

inline ComplexVolume read_volume(const std::filesystem::path& path) {
  const std::string buf = detail::read_file_bytes(path);
  detail::LineCursor cur{buf, "volume file " + path.string()};
  const std::size_t at = cur.pos;
  const std::string header = cur.line();
  int n = 0;
  char layout[32] = {0};
  if (std::sscanf(header.c_str(), "n=%d layout=%31s", &n, layout) != 2 || n <= 0 ||
      std::string(layout) != "zyx-ri")
    cur.fail("bad header '" + header + "'", at);
  const std::size_t voxels = static_cast<std::size_t>(n) * n * n;
  if (buf.size() - cur.pos != voxels * 16)
    cur.fail("payload holds " + std::to_string((buf.size() - cur.pos) / 16) +
                 " voxels, expected " + std::to_string(voxels),
             buf.size());
  ComplexVolume u(n);
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data()) + cur.pos;
  for (std::size_t i = 0; i < voxels; ++i, p += 16)
    u[i] = cdouble(detail::get_f64_le(p), detail::get_f64_le(p + 8));
  return u;
}

/**
 * 16-bit binary portable graymap of a real image, values mapped linearly from
 * [min, max] onto [0, 65535]; the map is recorded in a sidecar text file so
 * physical values can be recovered. A constant image maps to all zeros.
 */
inline void write_pgm16(const std::filesystem::path& path, const RealImage& img,
                        const std::filesystem::path& sidecar) {
  detail::require(img.rows() > 0 && img.cols() > 0, "pgm: empty image");
  double lo = img[0], hi = img[0];
  for (std::size_t i = 0; i < img.size(); ++i) {
    lo = std::min(lo, img[i]);
    hi = std::max(hi, img[i]);
  }
  const double span = hi - lo;
  std::string out =
      "P5\n" + std::to_string(img.cols()) + " " + std::to_string(img.rows()) + "\n65535\n";
  out.reserve(out.size() + img.size() * 2);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double t = span > 0.0 ? (img[i] - lo) / span : 0.0;
    const auto q = static_cast<std::uint16_t>(std::lround(t * 65535.0));
    out.push_back(static_cast<char>(q >> 8));
    out.push_back(static_cast<char>(q & 0xff));
  }
  detail::write_file_bytes(path, out);
  detail::write_file_bytes(sidecar, "min = " + format_double(lo) + "\nmax = " +
                                        format_double(hi) + "\nlevels = 65536\n");
}

inline std::string convergence_csv(const ConvergenceRecord& rec) {
  std::string out = "k,rel_change,r_factor,objective,wall_time_s\n";
  for (const auto& row : rec.rows) {
    out += std::to_string(row.k) + ',' + format_double(row.rel_change) + ',' +
           format_double(row.r_factor) + ',' + format_double(row.objective) + ',' +
           format_double(row.wall_time_s) + '\n';
  }
  return out;
}

struct MetricRow {
  std::string name;
  double value = 0.0;
  std::string flags;
};

/// Caps infinite dB values at ±300 and records why in the flags column.
inline MetricRow db_metric_row(std::string name, double db) {
  MetricRow row{std::move(name), db, ""};
  if (std::isinf(db)) {
    row.value = db > 0 ? 300.0 : -300.0;
    row.flags = db > 0 ? "exact" : "degenerate";
  }
  return row;
}

inline std::string metrics_csv(const std::vector<MetricRow>& rows) {
  std::string out = "metric,value,flags\n";
  for (const auto& row : rows)
    out += row.name + ',' + format_double(row.value) + ',' + row.flags + '\n';
  return out;
}

inline std::string per_angle_csv(const std::vector<AngleReport>& rows) {
  std::string out = "theta,converged,r_factor_2d,iters\n";
  for (const auto& row : rows)
    out += format_double(row.theta) + ',' + (row.converged ? "1" : "0") + ',' +
           format_double(row.r_factor_2d) + ',' + std::to_string(row.iters) + '\n';
  return out;
}

}  // namespace ptychotomo

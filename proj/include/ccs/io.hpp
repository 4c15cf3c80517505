#ifndef CCS_IO_HPP
#define CCS_IO_HPP

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ccs/codec.hpp"
#include "ccs/core.hpp"

namespace ccs {

// ---------------------------------------------------------------------------
// Little-endian byte streams

class ByteWriter {
 public:
  void raw(const char* s, std::size_t n) { buf_.insert(buf_.end(), s, s + n); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  /// Row-major.
  void matrix(const Mat& m) {
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) f64(m(r, c));
  }
  const std::vector<unsigned char>& bytes() const { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<unsigned char>& b) : b_(b) {}
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw IoError("unexpected end of file");
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s(b_.begin() + static_cast<std::ptrdiff_t>(pos_), b_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  Mat matrix(Index rows, Index cols) {
    need(static_cast<std::size_t>(rows * cols) * 8);
    Mat m(rows, cols);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) m(r, c) = f64();
    return m;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  const std::vector<unsigned char>& b_;
  std::size_t pos_ = 0;
};

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

// ---------------------------------------------------------------------------
// Model files
//
// "CCSM", u32 version, u32 M N L0 K kappa, f64 alpha beta nu1 nu2 nu3 nu4 b,
// u32 n_ite, u64 seed, then Phi and Psi_1..Psi_K as row-major f64.

constexpr std::uint32_t kModelVersion = 1;

inline std::vector<unsigned char> serialize_model(const CcsModel& m) {
  m.validate_dimensions();
  const DesignConfig& c = m.config;
  ByteWriter w;
  w.raw("CCSM", 4);
  w.u32(kModelVersion);
  for (Index v : {c.M, c.N, c.L0, c.K, c.kappa}) w.u32(static_cast<std::uint32_t>(v));
  for (double v : {c.alpha, c.beta, c.nu1, c.nu2, c.nu3, c.nu4, c.b.value_or(0.0)}) w.f64(v);
  w.u32(static_cast<std::uint32_t>(c.n_ite));
  w.u64(c.seed);
  w.matrix(m.phi.matrix());
  for (const auto& d : m.dictionaries) w.matrix(d.matrix());
  return w.bytes();
}

/// Parses a model file; with require_tight the sensing matrix must be a unit tight frame.
inline CcsModel deserialize_model(const std::vector<unsigned char>& bytes, bool require_tight = true) {
  ByteReader r(bytes);
  if (bytes.size() < 4 || r.raw(4) != "CCSM") throw IoError("model: bad magic");
  if (r.u32() != kModelVersion) throw IoError("model: unsupported version");
  CcsModel m;
  DesignConfig& c = m.config;
  c.M = r.u32();
  c.N = r.u32();
  c.L0 = r.u32();
  c.K = r.u32();
  c.kappa = r.u32();
  if (c.M < 1 || c.N < 1 || c.L0 < 1 || c.K < 1 || c.N > 4096 || c.L0 > 65536 || c.K > 1024 || c.M > c.N)
    throw IoError("model: implausible dimensions");
  c.alpha = r.f64();
  c.beta = r.f64();
  c.nu1 = r.f64();
  c.nu2 = r.f64();
  c.nu3 = r.f64();
  c.nu4 = r.f64();
  const double b = r.f64();
  if (b > 0.0) c.b = b;
  c.n_ite = static_cast<int>(r.u32());
  c.seed = r.u64();
  const std::size_t expect = static_cast<std::size_t>(c.M * c.N + c.K * c.N * c.L0) * 8;
  r.need(expect);
  Mat phi = r.matrix(c.M, c.N);
  std::vector<Mat> psis;
  for (Index i = 0; i < c.K; ++i) psis.push_back(r.matrix(c.N, c.L0));
  if (!r.done()) throw IoError("model: trailing bytes");
  m.phi = SensingMatrix(std::move(phi));
  if (require_tight && !(m.phi.tight_frame_error() <= 1e-8))
    throw InfeasibleError("model: sensing matrix is not a unit tight frame");
  for (auto& p : psis) m.dictionaries.emplace_back(std::move(p));
  return m;
}

inline void save_model(const std::string& path, const CcsModel& m) { write_file(path, serialize_model(m)); }

inline CcsModel load_model(const std::string& path, bool require_tight = true) {
  return deserialize_model(read_file(path), require_tight);
}

// ---------------------------------------------------------------------------
// Measurement files
//
// "CCSY", u32 version, u32 M p rows cols height width, then one row of M f64
// values per patch in raster order.

struct Measurements {
  Mat Y;  // M x J
  PatchGrid grid;
};

inline void save_measurements(const std::string& path, const Measurements& m) {
  ByteWriter w;
  w.raw("CCSY", 4);
  w.u32(1);
  for (Index v : {m.Y.rows(), m.grid.p, m.grid.rows, m.grid.cols, m.grid.height, m.grid.width})
    w.u32(static_cast<std::uint32_t>(v));
  w.matrix(m.Y.transpose());
  write_file(path, w.bytes());
}

inline Measurements load_measurements(const std::string& path) {
  const auto bytes = read_file(path);
  ByteReader r(bytes);
  if (bytes.size() < 4 || r.raw(4) != "CCSY") throw IoError("measurements: bad magic");
  if (r.u32() != 1) throw IoError("measurements: unsupported version");
  Measurements m;
  const Index M = r.u32();
  m.grid.p = r.u32();
  m.grid.rows = r.u32();
  m.grid.cols = r.u32();
  m.grid.height = r.u32();
  m.grid.width = r.u32();
  if (M < 1 || m.grid.p < 1 || m.grid.count() < 1 || m.grid.count() > (1 << 24))
    throw IoError("measurements: implausible header");
  m.Y = r.matrix(m.grid.count(), M).transpose();
  if (!r.done()) throw IoError("measurements: trailing bytes");
  return m;
}

// ---------------------------------------------------------------------------
// Configuration: flat key=value lines, '#' comments.

struct TrainSettings {
  DesignConfig design;
  Index j0 = 0;  // patches per branch; 0 uses all available
  bool early_stop = false;
};

namespace detail {
inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double parse_real(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(x))
    throw ConfigError("config: '" + key + "' expects a real number, got '" + v + "'");
  return x;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  return x;
}
}  // namespace detail

/// Unknown keys, duplicate keys and malformed values are errors. `nu4` and `b`
/// accept `auto`. The result is validated.
inline TrainSettings parse_config(const std::string& text) {
  TrainSettings s;
  DesignConfig& c = s.design;
  bool nu4_auto = true;
  std::map<std::string, bool> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (seen[key]) throw ConfigError("config: duplicate key '" + key + "'");
    seen[key] = true;
    using detail::parse_int;
    using detail::parse_real;
    if (key == "M") c.M = parse_int(key, val);
    else if (key == "N") c.N = parse_int(key, val);
    else if (key == "L0") c.L0 = parse_int(key, val);
    else if (key == "K") c.K = parse_int(key, val);
    else if (key == "kappa") c.kappa = parse_int(key, val);
    else if (key == "alpha") c.alpha = parse_real(key, val);
    else if (key == "beta") c.beta = parse_real(key, val);
    else if (key == "nu1") c.nu1 = parse_real(key, val);
    else if (key == "nu2") c.nu2 = parse_real(key, val);
    else if (key == "nu3") c.nu3 = parse_real(key, val);
    else if (key == "nu4") {
      nu4_auto = val == "auto";
      if (!nu4_auto) c.nu4 = parse_real(key, val);
    } else if (key == "b") {
      if (val == "auto") c.b.reset();
      else c.b = parse_real(key, val);
    } else if (key == "n_ite") c.n_ite = static_cast<int>(parse_int(key, val));
    else if (key == "seed") {
      const long long v = parse_int(key, val);
      if (v < 0) throw ConfigError("config: seed must be nonnegative");
      c.seed = static_cast<std::uint64_t>(v);
    } else if (key == "j0") {
      s.j0 = parse_int(key, val);
      if (s.j0 < 0) throw ConfigError("config: j0 must be nonnegative");
    } else if (key == "early_stop") {
      if (val == "true" || val == "1") s.early_stop = true;
      else if (val == "false" || val == "0") s.early_stop = false;
      else throw ConfigError("config: early_stop expects true or false");
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
  if (nu4_auto) c.nu4 = c.default_step();
  c.validate();
  return s;
}

inline TrainSettings load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << v;
  return os.str();
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw IoError("cannot write " + path);
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
    if (!out_) throw IoError("csv write failed");
  }

 private:
  std::ofstream out_;
};

/// Header c0..c{n-1}, one matrix row per line.
inline void write_matrix_csv(const std::string& path, const Mat& m) {
  std::vector<std::string> header;
  for (Index j = 0; j < m.cols(); ++j) header.push_back("c" + std::to_string(j));
  CsvWriter w(path, header);
  for (Index i = 0; i < m.rows(); ++i) {
    std::vector<std::string> cells;
    for (Index j = 0; j < m.cols(); ++j) cells.push_back(format_real(m(i, j)));
    w.row(cells);
  }
}

/// Reads a numeric CSV written by write_matrix_csv (header row skipped).
inline Mat read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::vector<std::vector<double>> rows;
  bool first = true;
  while (std::getline(in, line)) {
    line = detail::trim(line);
    if (line.empty()) continue;
    if (first) {
      first = false;
      continue;
    }
    std::vector<double> r;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell = detail::trim(cell);
      double x = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), x);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) throw IoError("csv: bad number in " + path);
      r.push_back(x);
    }
    if (!rows.empty() && r.size() != rows.front().size()) throw IoError("csv: ragged rows in " + path);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw IoError("csv: no data in " + path);
  Mat m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

}  // namespace ccs

#endif

#pragma once

// Snapshot files and CSV output.
//
// Snapshot layout, all little-endian:
//   "BQCH" | u32 version | u32 nx1 | u32 nx2 | f64 time | u8 parity(w) | u8 parity(theta)
//   | f64 w[nx1 * nx2] | f64 theta[nx1 * nx2] | f64 c
// Arrays are row-major with x1 the slow index.  Parity tags: 0 odd, 1 even.

#include <bit>
#include <cassert>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <locale>
#include <sstream>
#include <string>
#include <vector>

#include "bqc/solver.hpp"

namespace bqc {

inline constexpr std::uint32_t kSnapshotVersion = 1;

class SnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(char((v >> (8 * k)) & 0xff));
}
inline void put_f64(std::string& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int k = 0; k < 8; ++k) out.push_back(char((v >> (8 * k)) & 0xff));
}

class ByteReader {
 public:
  ByteReader(const std::string& bytes, std::string path) : b_(bytes), path_(std::move(path)) {}
  void need(std::size_t n, const char* what) const {
    if (pos_ + n > b_.size())
      throw SnapshotError(path_ + ": truncated snapshot while reading " + what + " (" +
                          std::to_string(b_.size()) + " bytes)");
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return std::uint8_t(b_[pos_++]);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t(std::uint8_t(b_[pos_ + k])) << (8 * k);
    pos_ += 4;
    return v;
  }
  double f64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= std::uint64_t(std::uint8_t(b_[pos_ + k])) << (8 * k);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  const std::string& b_;
  std::string path_;
  std::size_t pos_ = 0;
};

inline std::uint8_t parity_tag(Parity p) { return p == Parity::odd ? 0 : 1; }

}  // namespace detail

inline std::string encode_snapshot(const State& s) {
  const Grid& g = *s.w.grid();
  std::string out = "BQCH";
  detail::put_u32(out, kSnapshotVersion);
  detail::put_u32(out, std::uint32_t(g.nx1()));
  detail::put_u32(out, std::uint32_t(g.nx2()));
  detail::put_f64(out, s.t);
  out.push_back(char(detail::parity_tag(s.w.parity())));
  out.push_back(char(detail::parity_tag(s.theta.parity())));
  for (double v : s.w.values()) detail::put_f64(out, v);
  for (double v : s.theta.values()) detail::put_f64(out, v);
  detail::put_f64(out, s.mean_coeff);
  return out;
}

inline void write_snapshot(const std::filesystem::path& path, const State& s) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw SnapshotError(path.string() + ": cannot open for writing");
  const std::string bytes = encode_snapshot(s);
  f.write(bytes.data(), std::streamsize(bytes.size()));
  if (!f) throw SnapshotError(path.string() + ": write failed");
}

// A grid of matching size is reused when given, otherwise one is made.
inline State decode_snapshot(const std::string& bytes, const std::string& name, GridPtr grid = nullptr) {
  detail::ByteReader r(bytes, name);
  r.need(4, "magic");
  if (bytes.compare(0, 4, "BQCH") != 0) throw SnapshotError(name + ": bad magic, not a BQCH snapshot");
  for (int k = 0; k < 4; ++k) r.u8("magic");
  const std::uint32_t version = r.u32("version");
  if (version != kSnapshotVersion)
    throw SnapshotError(name + ": snapshot version " + std::to_string(version) + ", expected " +
                        std::to_string(kSnapshotVersion));
  const std::uint32_t nx1 = r.u32("nx1"), nx2 = r.u32("nx2");
  const double t = r.f64("time");
  const std::uint8_t pw = r.u8("parity"), pt = r.u8("parity");
  if (pw != 0 || pt != 1) throw SnapshotError(name + ": parity tags must be odd (w) and even (theta)");
  if (nx1 < 2 || nx2 < 2 || nx2 % 2) throw SnapshotError(name + ": bad grid size");
  const std::size_t n = std::size_t(nx1) * nx2;
  r.need(8 * (2 * n + 1), "field data");
  if (!grid || grid->nx1() != int(nx1) || grid->nx2() != int(nx2)) grid = Grid::make(int(nx1), int(nx2));
  State s = State::zero(grid, t);
  for (auto& v : s.w.values()) v = r.f64("w");
  for (auto& v : s.theta.values()) v = r.f64("theta");
  s.mean_coeff = r.f64("c");
  if (r.remaining() != 0) throw SnapshotError(name + ": trailing bytes after the snapshot");
  return s;
}

inline State read_snapshot(const std::filesystem::path& path, GridPtr grid = nullptr) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw SnapshotError(path.string() + ": cannot open snapshot");
  std::ostringstream ss;
  ss << f.rdbuf();
  return decode_snapshot(ss.str(), path.string(), std::move(grid));
}

// CSV with a fixed header; numbers carry 17 significant digits.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : f_(path), cols_(header.size()), path_(path.string()) {
    if (!f_) throw std::runtime_error(path_ + ": cannot open for writing");
    f_.imbue(std::locale::classic());
    f_ << std::setprecision(17);
    for (std::size_t k = 0; k < header.size(); ++k) f_ << (k ? "," : "") << header[k];
    f_ << '\n';
  }

  class Row {
   public:
    explicit Row(CsvWriter& w) : w_(w) {}
    Row& operator<<(double v) { return put(v); }
    Row& operator<<(int v) { return put(v); }
    Row& operator<<(std::size_t v) { return put(v); }
    Row& operator<<(const std::string& v) { return put(v); }
    Row& operator<<(const char* v) { return put(v); }
    ~Row() {
      assert(n_ == w_.cols_);
      w_.f_ << '\n';
    }

   private:
    template <class T>
    Row& put(const T& v) {
      w_.f_ << (n_++ ? "," : "") << v;
      return *this;
    }
    CsvWriter& w_;
    std::size_t n_ = 0;
  };

  Row row() { return Row(*this); }

 private:
  std::ofstream f_;
  std::size_t cols_;
  std::string path_;
};

}  // namespace bqc

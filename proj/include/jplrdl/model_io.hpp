#pragma once

// Binary model container: magic "JPLRDL1", a version byte, then unsigned
// 64-bit little-endian counts and IEEE-754 little-endian doubles. Matrices
// carry explicit row/column headers and column-major payloads. Numbers are
// moved through their raw bit patterns, so a save/load round-trip
// reproduces every value bit for bit. Loading validates the magic, the
// version, every dimension, and the reassembled model; any failure throws
// before a model is returned, so a truncated or tampered file never yields
// a partial model.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "jplrdl/errors.hpp"
#include "jplrdl/pipeline.hpp"

namespace jplrdl {

namespace detail {

constexpr char kModelMagic[7] = {'J', 'P', 'L', 'R', 'D', 'L', '1'};
constexpr std::uint8_t kModelVersion = 1;

class ModelWriter {
 public:
  explicit ModelWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("model save: cannot open " + path + " for writing");
  }

  void u64(std::uint64_t v) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(bytes, 8);
  }

  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void raw(const char* data, std::streamsize n) { out_.write(data, n); }

  void matrix(const Matrix& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Index c = 0; c < m.cols(); ++c) {
      for (Index r = 0; r < m.rows(); ++r) f64(m(r, c));
    }
  }

  void ranges(const std::vector<ClassRange>& rs) {
    for (const ClassRange& r : rs) {
      u64(static_cast<std::uint64_t>(r.begin));
      u64(static_cast<std::uint64_t>(r.count));
    }
  }

  void finish() {
    out_.flush();
    if (!out_) throw std::runtime_error("model save: write to " + path_ + " failed");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class ModelReader {
 public:
  explicit ModelReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw parse_error("model load: cannot open " + path);
  }

  std::uint64_t u64() {
    char bytes[8];
    in_.read(bytes, 8);
    if (!in_) throw parse_error("model load: " + path_ + " is truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
    }
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  /// Counts bound every allocation; anything beyond this cap cannot come
  /// from a sane writer and is treated as corruption, not as a request.
  Index count(const char* what, std::uint64_t cap = (1ull << 32)) {
    std::uint64_t v = u64();
    if (v > cap) {
      throw parse_error("model load: " + path_ + " declares an implausible " + what + " count");
    }
    return static_cast<Index>(v);
  }

  Matrix matrix(const char* what) {
    const Index rows = count(what);
    const Index cols = count(what);
    Matrix m(rows, cols);
    for (Index c = 0; c < cols; ++c) {
      for (Index r = 0; r < rows; ++r) m(r, c) = f64();
    }
    return m;
  }

  std::vector<ClassRange> ranges(Index k, const char* what) {
    std::vector<ClassRange> rs;
    rs.reserve(static_cast<size_t>(k));
    for (Index i = 0; i < k; ++i) {
      ClassRange r;
      r.begin = count(what);
      r.count = count(what);
      rs.push_back(r);
    }
    return rs;
  }

  void expect_header() {
    char magic[7];
    in_.read(magic, 7);
    if (!in_ || !std::equal(magic, magic + 7, kModelMagic)) {
      throw parse_error("model load: " + path_ + " is not a model container (bad magic)");
    }
    char version = 0;
    in_.read(&version, 1);
    if (!in_ || static_cast<std::uint8_t>(version) != kModelVersion) {
      throw parse_error("model load: " + path_ + " has an unsupported container version");
    }
  }

  void expect_eof() {
    in_.peek();
    if (!in_.eof()) {
      throw parse_error("model load: " + path_ + " has trailing bytes after the model");
    }
  }

 private:
  std::string path_;
  std::ifstream in_;
};

}  // namespace detail

inline void save_model(const Model& model, const std::string& path) {
  validate(model);
  detail::ModelWriter w(path);
  w.raw(detail::kModelMagic, 7);
  const char version = static_cast<char>(detail::kModelVersion);
  w.raw(&version, 1);

  const TrainConfig& cfg = model.config;
  w.f64(cfg.lambda1);
  w.f64(cfg.lambda2);
  w.f64(cfg.lambda3);
  w.f64(cfg.delta);
  w.f64(cfg.beta);
  w.f64(cfg.lambda_r);
  w.f64(cfg.gamma);
  w.f64(cfg.eta);
  w.f64(cfg.xi);
  w.f64(cfg.omega);
  w.f64(cfg.eps_inner);
  w.f64(cfg.outer_tol);
  w.u64(static_cast<std::uint64_t>(cfg.k1));
  w.u64(static_cast<std::uint64_t>(cfg.k2));
  w.u64(static_cast<std::uint64_t>(cfg.d));
  w.u64(static_cast<std::uint64_t>(cfg.atoms_per_class));
  w.u64(static_cast<std::uint64_t>(cfg.outer_max_iter));
  w.u64(static_cast<std::uint64_t>(cfg.inner_max_iter));
  w.u64(cfg.seed);
  w.u64(cfg.eig_select == EigSelect::largest ? 1 : 0);

  w.u64(static_cast<std::uint64_t>(model.dictionary.num_classes()));
  w.ranges(model.dictionary.ranges);
  w.ranges(model.sample_ranges);
  w.matrix(model.projection);
  w.matrix(model.dictionary.atoms);
  w.matrix(model.coefficients);
  for (const Vector& m : model.class_means) {
    w.u64(static_cast<std::uint64_t>(m.size()));
    for (Index j = 0; j < m.size(); ++j) w.f64(m(j));
  }
  w.u64(static_cast<std::uint64_t>(model.objective_trace.size()));
  for (double v : model.objective_trace) w.f64(v);
  w.finish();
}

inline Model load_model(const std::string& path) {
  detail::ModelReader r(path);
  r.expect_header();

  Model model;
  TrainConfig& cfg = model.config;
  cfg.lambda1 = r.f64();
  cfg.lambda2 = r.f64();
  cfg.lambda3 = r.f64();
  cfg.delta = r.f64();
  cfg.beta = r.f64();
  cfg.lambda_r = r.f64();
  cfg.gamma = r.f64();
  cfg.eta = r.f64();
  cfg.xi = r.f64();
  cfg.omega = r.f64();
  cfg.eps_inner = r.f64();
  cfg.outer_tol = r.f64();
  cfg.k1 = static_cast<int>(r.count("k1"));
  cfg.k2 = static_cast<int>(r.count("k2"));
  cfg.d = static_cast<int>(r.count("d"));
  cfg.atoms_per_class = static_cast<int>(r.count("atoms_per_class"));
  cfg.outer_max_iter = static_cast<int>(r.count("outer_max_iter"));
  cfg.inner_max_iter = static_cast<int>(r.count("inner_max_iter"));
  cfg.seed = r.u64();
  const std::uint64_t eig = r.u64();
  if (eig > 1) throw parse_error("model load: " + path + " has an unknown eig_select value");
  cfg.eig_select = eig == 1 ? EigSelect::largest : EigSelect::smallest;

  const Index k = r.count("class");
  model.dictionary.ranges = r.ranges(k, "atom range");
  model.sample_ranges = r.ranges(k, "sample range");
  model.projection = r.matrix("projection");
  model.dictionary.atoms = r.matrix("atom");
  model.coefficients = r.matrix("coefficient");
  model.class_means.reserve(static_cast<size_t>(k));
  for (Index i = 0; i < k; ++i) {
    const Index len = r.count("class mean");
    Vector m(len);
    for (Index j = 0; j < len; ++j) m(j) = r.f64();
    model.class_means.push_back(std::move(m));
  }
  const Index trace_len = r.count("objective trace");
  model.objective_trace.reserve(static_cast<size_t>(trace_len));
  for (Index t = 0; t < trace_len; ++t) model.objective_trace.push_back(r.f64());
  r.expect_eof();

  validate(model);
  return model;
}

}  // namespace jplrdl

#pragma once

// Labeled sample matrices and the file plumbing around them: text/CSV
// loaders, train/test splitting, and the corruption generators used to
// stress the robustness path. Columns are samples; for image data the
// pixel order is column-major with height varying fastest. All randomized
// operations are pure functions of their seed.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "jplrdl/dictionary.hpp"
#include "jplrdl/errors.hpp"
#include "jplrdl/linalg.hpp"
#include "jplrdl/rng.hpp"

namespace jplrdl {

struct ImageShape {
  Index height = 0;
  Index width = 0;
};

struct LabeledDataset {
  Matrix x;                // m x N, columns are samples
  std::vector<int> labels; // 1..K, non-decreasing
  // class_ranges[i] spans the columns carrying label i + 1
  std::vector<ClassRange> class_ranges;
  std::optional<ImageShape> image_shape;
  double value_max = 255.0;
  // column of the source behind each column; identity for freshly built
  // datasets, the sorting permutation for loaded ones
  std::vector<Index> source_order;

  Index dim() const { return x.rows(); }
  Index size() const { return x.cols(); }
  Index num_classes() const { return static_cast<Index>(class_ranges.size()); }

  auto class_block(Index class_i) const {
    return x.middleCols(class_ranges[static_cast<size_t>(class_i)].begin,
                        class_ranges[static_cast<size_t>(class_i)].count);
  }

  /// Zero-based class index per column, the convention of the solver layers.
  std::vector<int> class_of() const {
    std::vector<int> out(labels.size());
    for (size_t p = 0; p < labels.size(); ++p) out[p] = labels[p] - 1;
    return out;
  }
};

struct DatasetOptions {
  double value_max = 255.0;
  std::optional<ImageShape> image_shape;
};

enum class CorruptionKind { pixel, block, uniform };

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::pixel;
  double fraction = 0.0;
  std::uint64_t seed = 0;
  // optional block texture; empty selects a seeded pseudo-random fill
  Matrix patch;
};

inline void validate(const LabeledDataset& ds) {
  require_finite(ds.x, "dataset");
  const Index n = ds.x.cols();
  if (n < 1) throw std::invalid_argument("dataset: no samples");
  if (static_cast<Index>(ds.labels.size()) != n) {
    throw std::invalid_argument("dataset: label count must match the sample count");
  }
  if (static_cast<Index>(ds.source_order.size()) != n) {
    throw std::invalid_argument("dataset: source_order must cover every column");
  }
  if (ds.class_ranges.empty()) throw std::invalid_argument("dataset: no classes");
  Index at = 0;
  for (size_t c = 0; c < ds.class_ranges.size(); ++c) {
    const ClassRange& r = ds.class_ranges[c];
    if (r.begin != at || r.count < 1) {
      throw std::invalid_argument("dataset: class ranges must partition the columns");
    }
    for (Index p = r.begin; p < r.begin + r.count; ++p) {
      if (ds.labels[static_cast<size_t>(p)] != static_cast<int>(c) + 1) {
        throw std::invalid_argument("dataset: labels disagree with class ranges");
      }
    }
    at += r.count;
  }
  if (at != n) throw std::invalid_argument("dataset: class ranges must cover every column");
  if (ds.value_max <= 0.0) throw std::invalid_argument("dataset: value_max must be positive");
  if (ds.image_shape) {
    if (ds.image_shape->height < 1 || ds.image_shape->width < 1 ||
        ds.image_shape->height * ds.image_shape->width != ds.x.rows()) {
      std::ostringstream msg;
      msg << "dataset: image shape " << ds.image_shape->height << "x" << ds.image_shape->width
          << " does not match the " << ds.x.rows() << "-dim samples";
      throw std::invalid_argument(msg.str());
    }
  }
}

/// Sorts columns by label (stable, so within-class order is preserved),
/// derives the class ranges, and validates every invariant. Labels must be
/// 1..K with no gaps.
inline LabeledDataset make_dataset(Matrix x, std::vector<int> labels, DatasetOptions opts = {}) {
  const Index n = x.cols();
  if (n < 1) throw std::invalid_argument("dataset: no samples");
  if (static_cast<Index>(labels.size()) != n) {
    throw std::invalid_argument("dataset: label count must match the sample count");
  }
  int k = 0;
  for (int lab : labels) {
    if (lab < 1) throw std::invalid_argument("dataset: labels must start at 1");
    k = std::max(k, lab);
  }
  std::vector<Index> counts(static_cast<size_t>(k), 0);
  for (int lab : labels) ++counts[static_cast<size_t>(lab - 1)];
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<size_t>(c)] == 0) {
      std::ostringstream msg;
      msg << "dataset: labels reach " << k << " but class " << c + 1 << " has no samples";
      throw std::invalid_argument(msg.str());
    }
  }

  std::vector<Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return labels[static_cast<size_t>(a)] < labels[static_cast<size_t>(b)];
  });

  LabeledDataset ds;
  ds.x.resize(x.rows(), n);
  ds.labels.resize(static_cast<size_t>(n));
  for (Index p = 0; p < n; ++p) {
    ds.x.col(p) = x.col(order[static_cast<size_t>(p)]);
    ds.labels[static_cast<size_t>(p)] = labels[static_cast<size_t>(order[static_cast<size_t>(p)])];
  }
  ds.source_order = std::move(order);
  Index at = 0;
  for (int c = 0; c < k; ++c) {
    ds.class_ranges.push_back({at, counts[static_cast<size_t>(c)]});
    at += counts[static_cast<size_t>(c)];
  }
  ds.image_shape = opts.image_shape;
  ds.value_max = opts.value_max;
  validate(ds);
  return ds;
}

namespace detail {

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline bool has_csv_extension(const std::string& path) {
  if (path.size() < 4) return false;
  std::string tail = path.substr(path.size() - 4);
  for (char& ch : tail) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return tail == ".csv";
}

struct Token {
  std::string_view text;
  Index column = 0;  // 1-based byte offset in the line
};

inline std::vector<Token> split_tokens(std::string_view line, bool csv) {
  std::vector<Token> out;
  if (csv) {
    size_t start = 0;
    while (true) {
      size_t comma = line.find(',', start);
      size_t end = comma == std::string_view::npos ? line.size() : comma;
      size_t a = start;
      while (a < end && (line[a] == ' ' || line[a] == '\t' || line[a] == '\r')) ++a;
      size_t b = end;
      while (b > a && (line[b - 1] == ' ' || line[b - 1] == '\t' || line[b - 1] == '\r')) --b;
      out.push_back({line.substr(a, b - a), static_cast<Index>(a) + 1});
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    // a fully blank line yields no tokens rather than one empty field
    if (out.size() == 1 && out[0].text.empty()) out.clear();
  } else {
    size_t p = 0;
    while (p < line.size()) {
      while (p < line.size() && (line[p] == ' ' || line[p] == '\t' || line[p] == '\r')) ++p;
      size_t start = p;
      while (p < line.size() && line[p] != ' ' && line[p] != '\t' && line[p] != '\r') ++p;
      if (p > start) out.push_back({line.substr(start, p - start), static_cast<Index>(start) + 1});
    }
  }
  return out;
}

[[noreturn]] inline void token_error(const std::string& path, Index line, const Token& tok,
                                     const char* what) {
  std::ostringstream msg;
  msg << path << ":" << line << ":" << tok.column << ": " << what << " '" << tok.text << "'";
  throw parse_error(msg.str());
}

inline double parse_double(const std::string& path, Index line, const Token& tok) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), v);
  if (ec != std::errc{} || p != tok.text.data() + tok.text.size()) {
    token_error(path, line, tok, "not a number:");
  }
  if (!std::isfinite(v)) token_error(path, line, tok, "non-finite value");
  return v;
}

inline long long parse_int(const std::string& path, Index line, const Token& tok) {
  long long v = 0;
  auto [p, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), v);
  if (ec != std::errc{} || p != tok.text.data() + tok.text.size()) {
    token_error(path, line, tok, "not an integer:");
  }
  return v;
}

/// Splits on '\n'; the per-line parsers strip any '\r'.
inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  size_t start = 0;
  while (start <= text.size()) {
    size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

inline void append_number(std::string& out, double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, static_cast<size_t>(p - buf));
}

}  // namespace detail

/// Text format: a "rows cols" header line, then one whitespace-separated
/// row per line. Files ending in .csv instead hold comma-separated rows
/// with no header; dimensions are inferred.
inline Matrix load_matrix(const std::string& path) {
  const std::string text = detail::read_text_file(path);
  const std::vector<std::string_view> lines = detail::split_lines(text);
  const bool csv = detail::has_csv_extension(path);

  auto require_blank_tail = [&](size_t from) {
    for (size_t l = from; l < lines.size(); ++l) {
      std::vector<detail::Token> toks = detail::split_tokens(lines[l], csv);
      if (!toks.empty()) {
        detail::token_error(path, static_cast<Index>(l) + 1, toks[0], "unexpected content");
      }
    }
  };

  if (csv) {
    std::vector<std::vector<double>> rows;
    Index cols = -1;
    for (size_t l = 0; l < lines.size(); ++l) {
      std::vector<detail::Token> toks = detail::split_tokens(lines[l], true);
      if (toks.empty()) {
        require_blank_tail(l);
        break;
      }
      if (cols < 0) cols = static_cast<Index>(toks.size());
      if (static_cast<Index>(toks.size()) != cols) {
        std::ostringstream msg;
        msg << path << ":" << l + 1 << ": expected " << cols << " fields, got " << toks.size();
        throw parse_error(msg.str());
      }
      std::vector<double> row;
      row.reserve(toks.size());
      for (const detail::Token& t : toks) {
        row.push_back(detail::parse_double(path, static_cast<Index>(l) + 1, t));
      }
      rows.push_back(std::move(row));
    }
    if (rows.empty()) throw parse_error(path + ": no data rows");
    Matrix m(static_cast<Index>(rows.size()), cols);
    for (Index r = 0; r < m.rows(); ++r) {
      for (Index c = 0; c < cols; ++c) m(r, c) = rows[static_cast<size_t>(r)][static_cast<size_t>(c)];
    }
    return m;
  }

  if (lines.empty()) throw parse_error(path + ": empty file");
  std::vector<detail::Token> header = detail::split_tokens(lines[0], false);
  if (header.size() != 2) {
    throw parse_error(path + ":1: expected a 'rows cols' header line");
  }
  const long long rows = detail::parse_int(path, 1, header[0]);
  const long long cols = detail::parse_int(path, 1, header[1]);
  if (rows < 1 || cols < 1) {
    throw parse_error(path + ":1: dimensions must be positive");
  }
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (long long r = 0; r < rows; ++r) {
    const size_t l = static_cast<size_t>(r) + 1;
    if (l >= lines.size()) {
      std::ostringstream msg;
      msg << path << ": expected " << rows << " data rows, file ends after " << r;
      throw parse_error(msg.str());
    }
    std::vector<detail::Token> toks = detail::split_tokens(lines[l], false);
    if (static_cast<long long>(toks.size()) != cols) {
      std::ostringstream msg;
      msg << path << ":" << l + 1 << ": expected " << cols << " values, got " << toks.size();
      throw parse_error(msg.str());
    }
    for (long long c = 0; c < cols; ++c) {
      m(static_cast<Index>(r), static_cast<Index>(c)) =
          detail::parse_double(path, static_cast<Index>(l) + 1, toks[static_cast<size_t>(c)]);
    }
  }
  require_blank_tail(static_cast<size_t>(rows) + 1);
  return m;
}

/// Shortest round-trippable decimal output, so save followed by load
/// reproduces every entry bit for bit. Format follows the extension, as in
/// load_matrix.
inline void save_matrix(const Matrix& m, const std::string& path) {
  require_finite(m, "save_matrix");
  if (m.rows() < 1 || m.cols() < 1) throw std::invalid_argument("save_matrix: empty matrix");
  const bool csv = detail::has_csv_extension(path);
  std::string out;
  if (!csv) {
    out += std::to_string(m.rows());
    out += ' ';
    out += std::to_string(m.cols());
    out += '\n';
  }
  const char sep = csv ? ',' : ' ';
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out += sep;
      detail::append_number(out, m(r, c));
    }
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot open " + path + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::invalid_argument("write failed for " + path);
}

/// Labels file: one integer per line.
inline std::vector<int> load_labels(const std::string& path) {
  const std::string text = detail::read_text_file(path);
  const std::vector<std::string_view> lines = detail::split_lines(text);
  std::vector<int> labels;
  bool seen_blank = false;
  for (size_t l = 0; l < lines.size(); ++l) {
    std::vector<detail::Token> toks = detail::split_tokens(lines[l], false);
    if (toks.empty()) {
      seen_blank = true;
      continue;
    }
    if (seen_blank || toks.size() != 1) {
      detail::token_error(path, static_cast<Index>(l) + 1, toks[0], "expected one label per line:");
    }
    long long v = detail::parse_int(path, static_cast<Index>(l) + 1, toks[0]);
    if (v < 1 || v > std::numeric_limits<int>::max()) {
      detail::token_error(path, static_cast<Index>(l) + 1, toks[0], "label out of range:");
    }
    labels.push_back(static_cast<int>(v));
  }
  if (labels.empty()) throw parse_error(path + ": no labels");
  return labels;
}

inline void save_labels(const std::vector<int>& labels, const std::string& path) {
  if (labels.empty()) throw std::invalid_argument("save_labels: no labels");
  std::string out;
  for (int lab : labels) {
    out += std::to_string(lab);
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot open " + path + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::invalid_argument("write failed for " + path);
}

inline LabeledDataset load_dataset(const std::string& matrix_path, const std::string& labels_path,
                                   DatasetOptions opts = {}) {
  return make_dataset(load_matrix(matrix_path), load_labels(labels_path), std::move(opts));
}

inline void save_dataset(const LabeledDataset& ds, const std::string& matrix_path,
                         const std::string& labels_path) {
  validate(ds);
  save_matrix(ds.x, matrix_path);
  save_labels(ds.labels, labels_path);
}

inline void validate(const CorruptionSpec& spec, const LabeledDataset& ds) {
  if (!(spec.fraction >= 0.0 && spec.fraction <= 1.0)) {
    throw std::invalid_argument("corruption: fraction must lie in [0, 1]");
  }
  if (spec.kind == CorruptionKind::block && !ds.image_shape) {
    throw std::invalid_argument("corruption: block corruption needs the dataset's image shape");
  }
  if (spec.patch.size() > 0) require_finite(spec.patch, "corruption patch");
}

/// Pixel: round(fraction * m) distinct entries per column set to value_max.
/// Uniform: the same count, values drawn uniformly from [0, value_max).
/// Block: per image, a square of side round(sqrt(fraction * height * width))
/// (clipped to the image) at a uniform position, filled with a seeded
/// pseudo-random texture or the top-left corner of the supplied patch.
inline LabeledDataset apply_corruption(const LabeledDataset& ds, const CorruptionSpec& spec) {
  validate(ds);
  validate(spec, ds);
  LabeledDataset out = ds;
  const Index m = ds.dim();
  const Index n = ds.size();
  std::mt19937_64 gen(spec.seed);

  if (spec.kind == CorruptionKind::block) {
    const Index h = ds.image_shape->height;
    const Index w = ds.image_shape->width;
    Index side = static_cast<Index>(
        std::llround(std::sqrt(spec.fraction * static_cast<double>(h * w))));
    side = std::min(side, std::min(h, w));
    if (side == 0) return out;
    if (spec.patch.size() > 0 && (spec.patch.rows() < side || spec.patch.cols() < side)) {
      std::ostringstream msg;
      msg << "corruption: patch is " << spec.patch.rows() << "x" << spec.patch.cols()
          << " but the block side is " << side;
      throw std::invalid_argument(msg.str());
    }
    for (Index p = 0; p < n; ++p) {
      const Index r0 = static_cast<Index>(draw_below(gen, static_cast<std::uint64_t>(h - side + 1)));
      const Index c0 = static_cast<Index>(draw_below(gen, static_cast<std::uint64_t>(w - side + 1)));
      for (Index bc = 0; bc < side; ++bc) {
        for (Index br = 0; br < side; ++br) {
          const double v = spec.patch.size() > 0 ? spec.patch(br, bc)
                                                 : draw_unit(gen) * ds.value_max;
          out.x((c0 + bc) * h + (r0 + br), p) = v;
        }
      }
    }
    return out;
  }

  const Index k = static_cast<Index>(std::llround(spec.fraction * static_cast<double>(m)));
  if (k == 0) return out;
  std::vector<Index> rows(static_cast<size_t>(m));
  for (Index p = 0; p < n; ++p) {
    std::iota(rows.begin(), rows.end(), Index{0});
    sample_prefix(rows, k, gen);
    for (Index i = 0; i < k; ++i) {
      out.x(rows[static_cast<size_t>(i)], p) =
          spec.kind == CorruptionKind::pixel ? ds.value_max : draw_unit(gen) * ds.value_max;
    }
  }
  return out;
}

struct SplitResult {
  LabeledDataset train;
  LabeledDataset test;
};

/// Per class, a seeded uniform sample without replacement of
/// per_class_train columns goes to train; the rest go to test. Both sides
/// keep ascending column order, so labels stay sorted.
inline SplitResult split(const LabeledDataset& ds, Index per_class_train, std::uint64_t seed) {
  validate(ds);
  for (const ClassRange& r : ds.class_ranges) {
    if (per_class_train < 1 || per_class_train >= r.count) {
      std::ostringstream msg;
      msg << "split: per_class_train = " << per_class_train
          << " must lie in [1, smallest class size) and a class has " << r.count << " samples";
      throw std::invalid_argument(msg.str());
    }
  }

  std::mt19937_64 gen(seed);
  std::vector<Index> train_cols;
  std::vector<Index> test_cols;
  for (const ClassRange& r : ds.class_ranges) {
    std::vector<Index> members(static_cast<size_t>(r.count));
    std::iota(members.begin(), members.end(), r.begin);
    sample_prefix(members, per_class_train, gen);
    std::sort(members.begin(), members.begin() + per_class_train);
    std::sort(members.begin() + per_class_train, members.end());
    train_cols.insert(train_cols.end(), members.begin(), members.begin() + per_class_train);
    test_cols.insert(test_cols.end(), members.begin() + per_class_train, members.end());
  }

  auto take = [&](const std::vector<Index>& cols) {
    LabeledDataset part;
    part.x.resize(ds.dim(), static_cast<Index>(cols.size()));
    part.labels.resize(cols.size());
    for (size_t j = 0; j < cols.size(); ++j) {
      part.x.col(static_cast<Index>(j)) = ds.x.col(cols[j]);
      part.labels[j] = ds.labels[static_cast<size_t>(cols[j])];
    }
    part.source_order = cols;
    Index at = 0;
    for (size_t c = 0; c < ds.class_ranges.size(); ++c) {
      Index count = 0;
      for (size_t j = 0; j < cols.size(); ++j) {
        if (part.labels[j] == static_cast<int>(c) + 1) ++count;
      }
      part.class_ranges.push_back({at, count});
      at += count;
    }
    part.image_shape = ds.image_shape;
    part.value_max = ds.value_max;
    validate(part);
    return part;
  };

  return {take(train_cols), take(test_cols)};
}

}  // namespace jplrdl

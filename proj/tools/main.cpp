// jplrdl: command-line workflow around the library.
//
//   train     fit a model from labeled samples; writes the model container
//             and train_metrics.json (objective trace, timings, warnings)
//   eval      score a model on labeled samples; writes eval_metrics.json
//             (overall, per-class, and mean per-class accuracy, confusion)
//   classify  label unlabeled samples; writes predictions.json and a labels
//             file
//   corrupt   apply a seeded corruption to a dataset; writes the corrupted
//             matrix and labels in the input column order
//   split     deterministic per-class train/test partition; writes four files
//   diag      export per-class robust-PCA factors or the sample graphs and
//             Laplacians as matrix files
//
// Options resolve as flag > config key > built-in default. The config is one
// JSON object; unknown keys are rejected so typos fail loudly. Exit codes:
// 0 success, 1 validation or parse failure, 2 numeric failure inside a
// solver.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "jplrdl/jplrdl.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using jplrdl::Index;
using jplrdl::Matrix;
using jplrdl::Vector;

// ---------------------------------------------------------------------------
// config document

json load_config_document(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("config: cannot open " + path);
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::exception& e) {
    throw jplrdl::parse_error(path + ": " + e.what());
  }
  if (!doc.is_object()) throw jplrdl::parse_error(path + ": config must be a JSON object");
  return doc;
}

void check_known_keys(const json& cfg) {
  static const std::set<std::string> known = {
      // training hyper-parameters, mirroring TrainConfig
      "lambda1", "lambda2", "lambda3", "delta", "beta", "lambda_r", "gamma", "eta", "xi",
      "omega", "k1", "k2", "d", "atoms_per_class", "outer_max_iter", "inner_max_iter",
      "eps_inner", "outer_tol", "seed", "eig_select",
      // dataset interpretation
      "value_max", "image_height", "image_width",
      // paths
      "train_matrix", "train_labels", "test_matrix", "test_labels", "matrix", "labels",
      "model", "out",
      // command options
      "per_class_train", "which", "corrupt"};
  for (const auto& item : cfg.items()) {
    if (known.find(item.key()) == known.end()) {
      throw std::invalid_argument("config: unknown key \"" + item.key() + "\"");
    }
  }
  if (cfg.contains("corrupt")) {
    const json& c = cfg.at("corrupt");
    if (!c.is_object()) throw std::invalid_argument("config: \"corrupt\" must be an object");
    static const std::set<std::string> corrupt_known = {"kind", "fraction", "seed", "patch"};
    for (const auto& item : c.items()) {
      if (corrupt_known.find(item.key()) == corrupt_known.end()) {
        throw std::invalid_argument("config: unknown key \"corrupt." + item.key() + "\"");
      }
    }
  }
}

double get_number(const json& cfg, const char* key, double fallback) {
  if (!cfg.contains(key)) return fallback;
  const json& v = cfg.at(key);
  if (!v.is_number()) {
    throw std::invalid_argument(std::string("config: \"") + key + "\" must be a number");
  }
  return v.get<double>();
}

long long get_integer(const json& cfg, const char* key, long long fallback) {
  if (!cfg.contains(key)) return fallback;
  const json& v = cfg.at(key);
  if (!v.is_number_integer()) {
    throw std::invalid_argument(std::string("config: \"") + key + "\" must be an integer");
  }
  return v.get<long long>();
}

std::string get_string(const json& cfg, const char* key, const std::string& fallback) {
  if (!cfg.contains(key)) return fallback;
  const json& v = cfg.at(key);
  if (!v.is_string()) {
    throw std::invalid_argument(std::string("config: \"") + key + "\" must be a string");
  }
  return v.get<std::string>();
}

int get_int(const json& cfg, const char* key, int fallback) {
  const long long v = get_integer(cfg, key, fallback);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw std::invalid_argument(std::string("config: \"") + key + "\" is out of range");
  }
  return static_cast<int>(v);
}

std::uint64_t get_seed(const json& cfg, const char* key, std::uint64_t fallback) {
  const long long v = get_integer(cfg, key, static_cast<long long>(fallback));
  if (v < 0) {
    throw std::invalid_argument(std::string("config: \"") + key + "\" must be >= 0");
  }
  return static_cast<std::uint64_t>(v);
}

jplrdl::TrainConfig train_config_from(const json& cfg) {
  jplrdl::TrainConfig tc;
  tc.lambda1 = get_number(cfg, "lambda1", tc.lambda1);
  tc.lambda2 = get_number(cfg, "lambda2", tc.lambda2);
  tc.lambda3 = get_number(cfg, "lambda3", tc.lambda3);
  tc.delta = get_number(cfg, "delta", tc.delta);
  tc.beta = get_number(cfg, "beta", tc.beta);
  tc.lambda_r = get_number(cfg, "lambda_r", tc.lambda_r);
  tc.gamma = get_number(cfg, "gamma", tc.gamma);
  tc.eta = get_number(cfg, "eta", tc.eta);
  tc.xi = get_number(cfg, "xi", tc.xi);
  tc.omega = get_number(cfg, "omega", tc.omega);
  tc.k1 = get_int(cfg, "k1", tc.k1);
  tc.k2 = get_int(cfg, "k2", tc.k2);
  tc.d = get_int(cfg, "d", tc.d);
  tc.atoms_per_class = get_int(cfg, "atoms_per_class", tc.atoms_per_class);
  tc.outer_max_iter = get_int(cfg, "outer_max_iter", tc.outer_max_iter);
  tc.inner_max_iter = get_int(cfg, "inner_max_iter", tc.inner_max_iter);
  tc.eps_inner = get_number(cfg, "eps_inner", tc.eps_inner);
  tc.outer_tol = get_number(cfg, "outer_tol", tc.outer_tol);
  tc.seed = get_seed(cfg, "seed", tc.seed);
  const std::string which = get_string(cfg, "eig_select", "smallest");
  if (which == "smallest") {
    tc.eig_select = jplrdl::EigSelect::smallest;
  } else if (which == "largest") {
    tc.eig_select = jplrdl::EigSelect::largest;
  } else {
    throw std::invalid_argument("config: \"eig_select\" must be \"smallest\" or \"largest\"");
  }
  return tc;
}

jplrdl::DatasetOptions dataset_options_from(const json& cfg) {
  jplrdl::DatasetOptions opts;
  opts.value_max = get_number(cfg, "value_max", opts.value_max);
  const bool has_h = cfg.contains("image_height");
  const bool has_w = cfg.contains("image_width");
  if (has_h != has_w) {
    throw std::invalid_argument("config: image_height and image_width must be given together");
  }
  if (has_h) {
    jplrdl::ImageShape shape;
    shape.height = get_integer(cfg, "image_height", 0);
    shape.width = get_integer(cfg, "image_width", 0);
    opts.image_shape = shape;
  }
  return opts;
}

// ---------------------------------------------------------------------------
// shared plumbing

std::string resolve_path(const std::string& flag_value, const json& cfg, const char* key,
                         const std::string& flag_name, const std::string& what) {
  if (!flag_value.empty()) return flag_value;
  const std::string from_cfg = get_string(cfg, key, "");
  if (!from_cfg.empty()) return from_cfg;
  throw std::invalid_argument(what + " not given; pass " + flag_name + " or set \"" + key +
                              "\" in the config");
}

void write_json_file(const fs::path& path, const json& doc) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot open " + path.string() + " for writing");
  f << doc.dump(2) << '\n';
  if (!f) throw std::invalid_argument("write failed for " + path.string());
}

double seconds_between(std::chrono::steady_clock::time_point a,
                       std::chrono::steady_clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

void report_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

// Arguments shared by every command; each subcommand binds the subset it
// uses. count() on the subcommand distinguishes "flag given" from defaults.
struct Args {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool quiet = false;
  std::string matrix;
  std::string labels;
  std::string model;
  std::string kind;
  std::string which;
  double fraction = 0.0;
  long long per_class_train = 0;
};

// ---------------------------------------------------------------------------
// commands

int cmd_train(const Args& a, const json& cfg, const fs::path& out_dir, bool seed_given) {
  using clock = std::chrono::steady_clock;
  const std::string matrix_path =
      resolve_path(a.matrix, cfg, "train_matrix", "--matrix", "train: training matrix");
  const std::string labels_path =
      resolve_path(a.labels, cfg, "train_labels", "--labels", "train: training labels");
  jplrdl::TrainConfig tc = train_config_from(cfg);
  if (seed_given) tc.seed = a.seed;

  const auto t0 = clock::now();
  const jplrdl::LabeledDataset data =
      jplrdl::load_dataset(matrix_path, labels_path, dataset_options_from(cfg));
  const auto t1 = clock::now();
  jplrdl::TrainOutput out = jplrdl::train(data, tc);
  const auto t2 = clock::now();

  fs::path model_path = a.model.empty() ? fs::path(get_string(cfg, "model", "")) : fs::path(a.model);
  if (model_path.empty()) model_path = out_dir / "model.jpl";
  jplrdl::save_model(out.model, model_path.string());
  const auto t3 = clock::now();

  const std::vector<double>& trace = out.report.objective_trace;
  json metrics = {
      {"command", "train"},
      {"classes", out.model.dictionary.num_classes()},
      {"samples", data.size()},
      {"ambient_dim", data.dim()},
      {"projected_dim", out.model.projection.cols()},
      {"atoms", out.model.dictionary.total_atoms()},
      {"converged", out.report.converged},
      {"objective_trace", trace},
      {"per_iteration_seconds", out.report.per_iteration_seconds},
      {"warnings", out.report.warnings},
      {"timings",
       {{"load_seconds", seconds_between(t0, t1)},
        {"train_seconds", seconds_between(t1, t2)},
        {"save_seconds", seconds_between(t2, t3)}}},
      {"model", model_path.string()},
  };
  write_json_file(out_dir / "train_metrics.json", metrics);

  report_warnings(out.report.warnings);
  if (!a.quiet) {
    std::cout << "trained " << out.model.dictionary.num_classes() << " classes on " << data.size()
              << " samples; objective " << trace.front() << " -> " << trace.back() << " over "
              << trace.size() << (trace.size() == 1 ? " iteration" : " iterations")
              << (out.report.converged ? "" : " (iteration cap reached)") << "\n"
              << "model: " << model_path.string() << "\n"
              << "metrics: " << (out_dir / "train_metrics.json").string() << "\n";
  }
  return 0;
}

int cmd_eval(const Args& a, const json& cfg, const fs::path& out_dir) {
  const std::string model_path = resolve_path(a.model, cfg, "model", "--model", "eval: model file");
  const std::string matrix_path =
      resolve_path(a.matrix, cfg, "test_matrix", "--matrix", "eval: test matrix");
  const std::string labels_path =
      resolve_path(a.labels, cfg, "test_labels", "--labels", "eval: test labels");

  const jplrdl::Model model = jplrdl::load_model(model_path);
  const jplrdl::LabeledDataset data =
      jplrdl::load_dataset(matrix_path, labels_path, dataset_options_from(cfg));

  const Index k = std::max(model.dictionary.num_classes(), data.num_classes());
  std::vector<std::vector<long long>> confusion(static_cast<size_t>(k),
                                                std::vector<long long>(static_cast<size_t>(k), 0));
  long long correct = 0;
  for (Index p = 0; p < data.size(); ++p) {
    const jplrdl::Classification c = jplrdl::classify(data.x.col(p), model);
    const int truth = data.labels[static_cast<size_t>(p)];
    ++confusion[static_cast<size_t>(truth - 1)][static_cast<size_t>(c.label - 1)];
    if (c.label == truth) ++correct;
  }

  json per_class = json::array();
  double per_class_sum = 0.0;
  for (Index i = 0; i < data.num_classes(); ++i) {
    const jplrdl::ClassRange& r = data.class_ranges[static_cast<size_t>(i)];
    long long hits = confusion[static_cast<size_t>(i)][static_cast<size_t>(i)];
    const double acc = static_cast<double>(hits) / static_cast<double>(r.count);
    per_class.push_back(acc);
    per_class_sum += acc;
  }
  const double overall = static_cast<double>(correct) / static_cast<double>(data.size());
  const double mean_per_class = per_class_sum / static_cast<double>(data.num_classes());

  json metrics = {
      {"command", "eval"},
      {"samples", data.size()},
      {"classes", k},
      {"overall_accuracy", overall},
      {"per_class_accuracy", per_class},
      {"mean_per_class_accuracy", mean_per_class},
      // confusion[i][j] counts true class i+1 predicted as class j+1
      {"confusion", confusion},
      {"model", model_path},
  };
  write_json_file(out_dir / "eval_metrics.json", metrics);

  if (!a.quiet) {
    std::cout << "evaluated " << data.size() << " samples: overall accuracy " << overall
              << ", mean per-class accuracy " << mean_per_class << "\n"
              << "metrics: " << (out_dir / "eval_metrics.json").string() << "\n";
  }
  return 0;
}

int cmd_classify(const Args& a, const json& cfg, const fs::path& out_dir) {
  const std::string model_path =
      resolve_path(a.model, cfg, "model", "--model", "classify: model file");
  const std::string matrix_path =
      resolve_path(a.matrix, cfg, "matrix", "--matrix", "classify: sample matrix");

  const jplrdl::Model model = jplrdl::load_model(model_path);
  const Matrix x = jplrdl::load_matrix(matrix_path);

  std::vector<int> labels;
  json residuals = json::array();
  labels.reserve(static_cast<size_t>(x.cols()));
  for (Index p = 0; p < x.cols(); ++p) {
    const jplrdl::Classification c = jplrdl::classify(x.col(p), model);
    labels.push_back(c.label);
    residuals.push_back(std::vector<double>(c.residuals.data(), c.residuals.data() + c.residuals.size()));
  }

  json predictions = {
      {"command", "classify"},
      {"samples", x.cols()},
      {"labels", labels},
      // residuals[p][i] scores sample p against class i+1; labels pick the
      // minimum, ties to the lowest class
      {"residuals", residuals},
      {"model", model_path},
  };
  write_json_file(out_dir / "predictions.json", predictions);
  jplrdl::save_labels(labels, (out_dir / "predicted_labels.txt").string());

  if (!a.quiet) {
    std::cout << "classified " << x.cols() << " samples\n"
              << "predictions: " << (out_dir / "predictions.json").string() << "\n"
              << "labels: " << (out_dir / "predicted_labels.txt").string() << "\n";
  }
  return 0;
}

int cmd_corrupt(const Args& a, const json& cfg, const fs::path& out_dir, bool seed_given,
                bool fraction_given) {
  const std::string matrix_path =
      resolve_path(a.matrix, cfg, "matrix", "--matrix", "corrupt: sample matrix");
  const std::string labels_path =
      resolve_path(a.labels, cfg, "labels", "--labels", "corrupt: labels");
  const jplrdl::LabeledDataset data =
      jplrdl::load_dataset(matrix_path, labels_path, dataset_options_from(cfg));

  const json ccfg = cfg.contains("corrupt") ? cfg.at("corrupt") : json::object();
  jplrdl::CorruptionSpec spec;
  const std::string kind = a.kind.empty() ? get_string(ccfg, "kind", "pixel") : a.kind;
  if (kind == "pixel") {
    spec.kind = jplrdl::CorruptionKind::pixel;
  } else if (kind == "block") {
    spec.kind = jplrdl::CorruptionKind::block;
  } else if (kind == "uniform") {
    spec.kind = jplrdl::CorruptionKind::uniform;
  } else {
    throw std::invalid_argument("corrupt: unknown kind \"" + kind +
                                "\"; expected pixel, block, or uniform");
  }
  spec.fraction = fraction_given ? a.fraction : get_number(ccfg, "fraction", 0.0);
  spec.seed = seed_given ? a.seed : get_seed(ccfg, "seed", 0);
  const std::string patch_path = get_string(ccfg, "patch", "");
  if (!patch_path.empty()) spec.patch = jplrdl::load_matrix(patch_path);

  const jplrdl::LabeledDataset corrupted = jplrdl::apply_corruption(data, spec);

  // emit columns in the input file's order, not the label-sorted order the
  // dataset uses internally, so a zero-fraction pass is the identity
  Matrix x_out(corrupted.x.rows(), corrupted.x.cols());
  std::vector<int> labels_out(corrupted.labels.size());
  for (Index p = 0; p < corrupted.x.cols(); ++p) {
    const Index src = corrupted.source_order[static_cast<size_t>(p)];
    x_out.col(src) = corrupted.x.col(p);
    labels_out[static_cast<size_t>(src)] = corrupted.labels[static_cast<size_t>(p)];
  }
  jplrdl::save_matrix(x_out, (out_dir / "corrupted_matrix.txt").string());
  jplrdl::save_labels(labels_out, (out_dir / "corrupted_labels.txt").string());

  if (!a.quiet) {
    std::cout << "corrupted " << corrupted.x.cols() << " samples (" << kind << ", fraction "
              << spec.fraction << ", seed " << spec.seed << ")\n"
              << "matrix: " << (out_dir / "corrupted_matrix.txt").string() << "\n"
              << "labels: " << (out_dir / "corrupted_labels.txt").string() << "\n";
  }
  return 0;
}

int cmd_split(const Args& a, const json& cfg, const fs::path& out_dir, bool seed_given,
              bool pct_given) {
  const std::string matrix_path =
      resolve_path(a.matrix, cfg, "matrix", "--matrix", "split: sample matrix");
  const std::string labels_path =
      resolve_path(a.labels, cfg, "labels", "--labels", "split: labels");
  const jplrdl::LabeledDataset data =
      jplrdl::load_dataset(matrix_path, labels_path, dataset_options_from(cfg));

  const long long per_class =
      pct_given ? a.per_class_train : get_integer(cfg, "per_class_train", 0);
  if (per_class < 1) {
    throw std::invalid_argument(
        "split: per-class training count not given; pass --per-class-train or set "
        "\"per_class_train\" in the config");
  }
  const std::uint64_t seed = seed_given ? a.seed : get_seed(cfg, "seed", 0);

  const jplrdl::SplitResult parts = jplrdl::split(data, static_cast<Index>(per_class), seed);
  jplrdl::save_dataset(parts.train, (out_dir / "train_matrix.txt").string(),
                       (out_dir / "train_labels.txt").string());
  jplrdl::save_dataset(parts.test, (out_dir / "test_matrix.txt").string(),
                       (out_dir / "test_labels.txt").string());

  if (!a.quiet) {
    std::cout << "split " << data.size() << " samples into " << parts.train.size() << " train / "
              << parts.test.size() << " test (" << per_class << " per class, seed " << seed
              << ")\n"
              << "train: " << (out_dir / "train_matrix.txt").string() << ", "
              << (out_dir / "train_labels.txt").string() << "\n"
              << "test: " << (out_dir / "test_matrix.txt").string() << ", "
              << (out_dir / "test_labels.txt").string() << "\n";
  }
  return 0;
}

int cmd_diag(const Args& a, const json& cfg, const fs::path& out_dir) {
  const std::string matrix_path =
      resolve_path(a.matrix, cfg, "matrix", "--matrix", "diag: sample matrix");
  const std::string labels_path =
      resolve_path(a.labels, cfg, "labels", "--labels", "diag: labels");
  const std::string which = a.which.empty() ? get_string(cfg, "which", "") : a.which;
  if (which != "rpca" && which != "graphs") {
    throw std::invalid_argument("diag: unknown export \"" + which +
                                "\"; pass --which rpca or --which graphs");
  }

  const jplrdl::LabeledDataset data =
      jplrdl::load_dataset(matrix_path, labels_path, dataset_options_from(cfg));
  const jplrdl::TrainConfig tc = train_config_from(cfg);
  jplrdl::RpcaConfig rc;
  rc.eta = tc.eta;

  if (which == "rpca") {
    for (Index i = 0; i < data.num_classes(); ++i) {
      const jplrdl::RpcaResult res = jplrdl::rpca_decompose(data.class_block(i), rc);
      const std::string tag = "_class_" + std::to_string(i + 1) + ".txt";
      jplrdl::save_matrix(res.low_rank, (out_dir / ("rpca_low_rank" + tag)).string());
      jplrdl::save_matrix(res.sparse, (out_dir / ("rpca_sparse" + tag)).string());
      if (!res.converged) {
        std::cerr << "warning: class " << i + 1 << " robust PCA stopped at residual "
                  << res.final_residual << " after " << res.iterations << " iterations\n";
      }
      if (!a.quiet) {
        std::cout << "class " << i + 1 << ": low-rank and sparse parts written ("
                  << res.iterations << " iterations, residual " << res.final_residual << ")\n";
      }
    }
    return 0;
  }

  // graphs are built on the per-class low-rank parts, matching training
  Matrix lr(data.dim(), data.size());
  for (Index i = 0; i < data.num_classes(); ++i) {
    const jplrdl::ClassRange& r = data.class_ranges[static_cast<size_t>(i)];
    lr.middleCols(r.begin, r.count) = jplrdl::rpca_decompose(data.class_block(i), rc).low_rank;
  }
  jplrdl::NeighborhoodConfig nb;
  nb.k1 = tc.k1;
  nb.k2 = tc.k2;
  const std::vector<int> class0 = data.class_of();
  const jplrdl::GraphWeights wc = jplrdl::build_coefficient_graph(lr, class0, nb);
  const jplrdl::GraphWeights wp = jplrdl::build_projection_graph(lr, class0, nb);
  report_warnings(wc.warnings);
  report_warnings(wp.warnings);
  const jplrdl::LaplacianPair lap = jplrdl::laplacians(wc, wp);

  jplrdl::save_matrix(wc.w, (out_dir / "graph_coefficient.txt").string());
  jplrdl::save_matrix(wp.w, (out_dir / "graph_projection.txt").string());
  jplrdl::save_matrix(lap.l_c, (out_dir / "laplacian_signed.txt").string());
  jplrdl::save_matrix(lap.l_c_norm, (out_dir / "laplacian_coefficient_normalized.txt").string());
  jplrdl::save_matrix(lap.l_p_norm, (out_dir / "laplacian_projection_normalized.txt").string());

  if (!a.quiet) {
    std::cout << "graphs over " << data.size() << " samples written to " << out_dir.string()
              << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Args a;
  CLI::App app{"joint projection and class-structured low-rank dictionary learning"};
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", a.config_path, "JSON config file; flags override its keys");
    sub->add_option("--seed", a.seed, "random seed, overrides the config");
    sub->add_option("--out", a.out_dir, "output directory (default \".\")");
    sub->add_flag("--quiet", a.quiet, "suppress the stdout summary");
    return sub;
  };

  CLI::App* train_cmd = add_common(app.add_subcommand("train", "fit a model from labeled samples"));
  train_cmd->add_option("--matrix", a.matrix, "training matrix file");
  train_cmd->add_option("--labels", a.labels, "training labels file");
  train_cmd->add_option("--model", a.model, "where to write the model (default OUT/model.jpl)");

  CLI::App* eval_cmd = add_common(app.add_subcommand("eval", "score a model on labeled samples"));
  eval_cmd->add_option("--model", a.model, "model file");
  eval_cmd->add_option("--matrix", a.matrix, "test matrix file");
  eval_cmd->add_option("--labels", a.labels, "test labels file");

  CLI::App* classify_cmd =
      add_common(app.add_subcommand("classify", "label unlabeled samples with a model"));
  classify_cmd->add_option("--model", a.model, "model file");
  classify_cmd->add_option("--matrix", a.matrix, "sample matrix file");

  CLI::App* corrupt_cmd =
      add_common(app.add_subcommand("corrupt", "apply a seeded corruption to a dataset"));
  corrupt_cmd->add_option("--matrix", a.matrix, "sample matrix file");
  corrupt_cmd->add_option("--labels", a.labels, "labels file");
  corrupt_cmd->add_option("--kind", a.kind, "pixel, block, or uniform");
  corrupt_cmd->add_option("--fraction", a.fraction, "corrupted fraction in [0, 1]");

  CLI::App* split_cmd =
      add_common(app.add_subcommand("split", "deterministic per-class train/test partition"));
  split_cmd->add_option("--matrix", a.matrix, "sample matrix file");
  split_cmd->add_option("--labels", a.labels, "labels file");
  split_cmd->add_option("--per-class-train", a.per_class_train,
                        "training samples drawn from each class");

  CLI::App* diag_cmd =
      add_common(app.add_subcommand("diag", "export robust-PCA factors or sample graphs"));
  diag_cmd->add_option("--matrix", a.matrix, "sample matrix file");
  diag_cmd->add_option("--labels", a.labels, "labels file");
  diag_cmd->add_option("--which", a.which, "rpca or graphs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    const json cfg = load_config_document(a.config_path);
    check_known_keys(cfg);
    fs::path out_dir = a.out_dir.empty() ? fs::path(get_string(cfg, "out", ".")) : fs::path(a.out_dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
      throw std::invalid_argument("cannot create output directory " + out_dir.string() + ": " +
                                  ec.message());
    }
    const bool seed_given = sub->count("--seed") > 0;

    if (sub == train_cmd) return cmd_train(a, cfg, out_dir, seed_given);
    if (sub == eval_cmd) return cmd_eval(a, cfg, out_dir);
    if (sub == classify_cmd) return cmd_classify(a, cfg, out_dir);
    if (sub == corrupt_cmd) {
      return cmd_corrupt(a, cfg, out_dir, seed_given, sub->count("--fraction") > 0);
    }
    if (sub == split_cmd) {
      return cmd_split(a, cfg, out_dir, seed_given, sub->count("--per-class-train") > 0);
    }
    return cmd_diag(a, cfg, out_dir);
  } catch (const jplrdl::numeric_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

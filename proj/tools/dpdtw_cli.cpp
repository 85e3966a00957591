// dpdtw: train and evaluate DTW prototype models from the command line.
#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dpdtw/errors.hpp"
#include "dpdtw/io.hpp"
#include "dpdtw/optim.hpp"
#include "dpdtw/seg.hpp"
#include "dpdtw/tsc.hpp"

namespace fs = std::filesystem;
using namespace dpdtw;

namespace {

constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kNumeric = 3;

// Thrown for bad flag combinations discovered after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void check_config(const auto& config) {
  try {
    config.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

/// Re-index a split's labels onto a model vocabulary by class name.
TscDataset with_vocabulary(TscDataset data, const std::vector<std::string>& vocab) {
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < vocab.size(); ++k) index[vocab[k]] = k;
  for (auto& y : data.labels) {
    const auto it = index.find(data.class_names[y]);
    if (it == index.end()) throw DataError("label '" + data.class_names[y] + "' is not known to the model");
    y = it->second;
  }
  data.class_names = vocab;
  return data;
}

Model load_model_of(const fs::path& path, ModelMode mode) {
  Model m = load_model(path);
  if (m.mode != mode) {
    throw DataError("'" + path.string() + "' is a " + (m.mode == ModelMode::tsc ? "tsc" : "segmentation") +
                    " model");
  }
  return m;
}

std::optional<std::size_t> background_index(int background) {
  if (background <= 0) return std::nullopt;
  return static_cast<std::size_t>(background - 1);
}

// ---------------------------------------------------------------- tsc

struct TrainTscArgs {
  std::string data, out;
  TscConfig config;
  std::size_t window = 0;
  bool use_window = false;
};

int run_train_tsc(const TrainTscArgs& a) {
  TscConfig cfg = a.config;
  if (a.use_window) cfg.band = BandConstraint::sakoe_chiba(a.window);
  check_config(cfg);
  const auto splits = load_ucr_dir(a.data);
  const auto t0 = std::chrono::steady_clock::now();
  const Model model = train_tsc(splits.train, cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& r : model.history) {
    std::cout << "epoch=" << r.step << " loss=" << fmt(r.total) << " ce=" << fmt(r.primary)
              << " distance=" << fmt(r.distance) << '\n';
  }
  const auto& chosen = std::get<TscConfig>(model.config);
  std::cout << "lr=" << fmt(chosen.learning_rate) << " lambda=" << fmt(chosen.lambda)
            << " step_size=" << fmt(model.learning_rate)
            << " train_accuracy=" << fmt(tsc_accuracy(model.prototypes, splits.train, cfg.band))
            << " seconds=" << fmt(secs) << '\n';
  save_model(model, a.out);
  return 0;
}

int run_eval_tsc(const std::string& model_path, const std::string& data) {
  const Model m = load_model_of(model_path, ModelMode::tsc);
  const auto splits = load_ucr_dir(data);
  const TscDataset test = with_vocabulary(splits.test, m.class_names);
  const auto& band = std::get<TscConfig>(m.config).band;
  std::cout << "dataset=" << splits.test.name << " accuracy=" << fmt(tsc_accuracy(m.prototypes, test, band))
            << '\n';
  return 0;
}

int run_baseline(const std::string& data, const std::string& method, std::optional<std::size_t> window) {
  const auto splits = load_ucr_dir(data);
  std::vector<std::size_t> predictions;
  std::string extra;
  if (method == "dba") {
    const PrototypeSet protos = dba_prototypes(splits.train);
    for (const auto& s : splits.test.sequences) predictions.push_back(predict(s, protos));
  } else {
    const NnMetric metric =
        method == "ed" ? NnMetric::euclidean : (method == "dtw" ? NnMetric::dtw : NnMetric::dtw_windowed);
    const auto r = knn1_baseline(splits.test.sequences, splits.train, metric, window);
    predictions = r.predictions;
    if (metric == NnMetric::dtw_windowed) extra = " window=" + std::to_string(r.window);
  }
  std::cout << "dataset=" << splits.test.name << " method=" << method
            << " accuracy=" << fmt(accuracy(predictions, splits.test.labels)) << extra << '\n';
  return 0;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

AccuracyTable read_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  AccuracyTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_csv(line);
    if (t.methods.empty()) {
      if (cells.size() < 3) throw DataError(path.string() + ":1: header needs a dataset column and two methods");
      t.methods.assign(cells.begin() + 1, cells.end());
      continue;
    }
    if (cells.size() != t.methods.size() + 1) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(t.methods.size() + 1) + " cells");
    }
    t.datasets.push_back(cells[0]);
    std::vector<double> row;
    for (std::size_t i = 1; i < cells.size(); ++i) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cells[i], &used));
        if (used != cells[i].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": '" + cells[i] + "' is not a number");
      }
    }
    t.accuracy.push_back(std::move(row));
  }
  if (t.datasets.empty()) throw DataError(path.string() + ": no dataset rows");
  return t;
}

int run_report(const std::string& table_path) {
  const AccuracyTable t = read_table(table_path);
  const ComparisonReport r = comparison_report(t);
  std::cout << "method,mean_rank";
  for (const auto& m : r.methods) std::cout << ",no_worse_than_" << m;
  std::cout << '\n';
  for (std::size_t a = 0; a < r.methods.size(); ++a) {
    std::cout << r.methods[a] << ',' << fmt(r.mean_ranks[a]);
    for (std::size_t b = 0; b < r.methods.size(); ++b) std::cout << ',' << fmt(r.no_worse[a][b]);
    std::cout << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- segmentation

std::pair<Encoder::Kind, std::size_t> parse_encoder(const std::string& spec) {
  if (spec == "identity") return {Encoder::Kind::identity, 1};
  if (spec == "affine") return {Encoder::Kind::affine, 1};
  if (spec.rfind("window:", 0) == 0) {
    const std::string w = spec.substr(7);
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(w, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == w.size() && v >= 1) return {Encoder::Kind::window_linear, v};
  }
  throw UsageError("--encoder must be identity, affine or window:<w>, got '" + spec + "'");
}

struct TrainSegArgs {
  std::string data, out, encoder = "identity";
  SegConfig config;
};

int run_train_seg(const TrainSegArgs& a) {
  SegConfig cfg = a.config;
  std::tie(cfg.encoder, cfg.encoder_window) = parse_encoder(a.encoder);
  check_config(cfg);
  const auto train = load_seg_corpus(corpus_split_path(a.data, "train"));
  const auto t0 = std::chrono::steady_clock::now();
  const Model model = train_seg(train, cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& r : model.history) {
    std::cout << "step=" << r.step << " loss=" << fmt(r.total) << " hinge=" << fmt(r.primary)
              << " distance=" << fmt(r.distance) << '\n';
  }
  std::cout << "references=" << model.references.size() << " seconds=" << fmt(secs) << '\n';
  save_model(model, a.out);
  return 0;
}

void write_labels(const fs::path& dir, const std::string& id, const std::vector<std::size_t>& labels) {
  std::ofstream out(dir / (id + ".txt"));
  if (!out) throw DataError("cannot write labels for '" + id + "' in '" + dir.string() + "'");
  for (std::size_t k : labels) out << k + 1 << '\n';
}

struct EvalSegArgs {
  std::string model, data, setting = "segmentation", split = "test", labels_out;
  int background = 0;
};

int run_eval_seg(const EvalSegArgs& a) {
  const Model m = load_model_of(a.model, ModelMode::segmentation);
  const auto bg = background_index(a.background);
  const auto samples = load_seg_corpus(corpus_split_path(a.data, a.split), bg);
  if (!a.labels_out.empty()) fs::create_directories(a.labels_out);
  MetricAccumulator acc(bg);
  for (const auto& s : samples) {
    const SegPrediction p = a.setting == "alignment" ? infer(m, s.frames, &s.transcript) : infer(m, s.frames);
    if (!s.labels.empty()) acc.add(p.frames.labels, s.labels);
    if (!a.labels_out.empty()) write_labels(a.labels_out, s.id, p.frames.labels);
  }
  std::cout << "setting=" << a.setting << " videos=" << samples.size();
  if (acc.videos() > 0) {
    const SegMetrics r = acc.result();
    std::cout << " f_acc=" << fmt(r.f_acc) << " iou=" << fmt(r.iou) << " iod=" << fmt(r.iod);
  }
  std::cout << '\n';
  return 0;
}

int run_summarize(const std::string& model_path, const std::string& data, const std::string& split,
                  const std::string& out_path) {
  const Model m = load_model_of(model_path, ModelMode::segmentation);
  const auto samples = load_seg_corpus(corpus_split_path(data, split));
  const std::size_t tau = m.prototypes.length();
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw DataError("cannot write '" + out_path + "'");
  }
  std::ostream& out = out_path.empty() ? std::cout : file;
  double hits = 0.0, uniform_hits = 0.0, total = 0.0;
  for (const auto& s : samples) {
    const Sequence enc = encode(s.frames, m.encoder);
    const auto keys = summarize(enc, s.transcript, m.prototypes);
    out << s.id;
    for (std::size_t k : keys) out << ' ' << k + 1;
    out << '\n';
    if (!s.labels.empty()) {
      const auto uni = uniform_summary(s.frames.length(), keys.size());
      hits += summary_accuracy(keys, s.labels, s.transcript, tau) * keys.size();
      uniform_hits += summary_accuracy(uni, s.labels, s.transcript, tau) * keys.size();
      total += keys.size();
    }
  }
  if (total > 0) {
    std::cout << "matching_rate=" << fmt(hits / total) << " uniform_rate=" << fmt(uniform_hits / total) << '\n';
  }
  return 0;
}

int run_synth_gen(const SynthConfig& c, const std::string& out) {
  check_config(c);
  const SynthCorpus corpus = gen_synthetic(c);
  fs::create_directories(out);
  write_seg_corpus(fs::path(out) / "train.jsonl", corpus.train);
  write_seg_corpus(fs::path(out) / "test.jsonl", corpus.test);
  std::cout << "train=" << corpus.train.size() << " test=" << corpus.test.size() << " classes=" << c.num_classes
            << " out=" << out << '\n';
  return 0;
}

void common(CLI::App* sub, std::uint64_t& seed) {
  sub->add_option("--seed", seed, "Random seed")->capture_default_str();
  sub->set_config("--config", "", "Read options from a TOML/INI file");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discriminative prototype DTW: classification and weakly supervised segmentation"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (0: all cores)");

  // train-tsc
  TrainTscArgs tt;
  auto* train_tsc_cmd = app.add_subcommand("train-tsc", "Learn class prototypes on a UCR dataset directory");
  train_tsc_cmd->add_option("--data", tt.data, "Dataset directory with *_TRAIN / *_TEST files")->required();
  train_tsc_cmd->add_option("--out", tt.out, "Model file to write")->required();
  train_tsc_cmd->add_option("--lambda", tt.config.lambda, "Fixed weight of the distance term (skips the grid)");
  train_tsc_cmd->add_option("--lambda-grid", tt.config.lambda_grid, "Lambda values searched by cross-validation")
      ->delimiter(',');
  train_tsc_cmd->add_option("--temperature", tt.config.temperature, "Softmax temperature")->capture_default_str();
  train_tsc_cmd->add_option("--epochs", tt.config.epochs)->capture_default_str();
  train_tsc_cmd->add_option("--batch-fraction", tt.config.batch_fraction)->capture_default_str();
  train_tsc_cmd->add_option("--lr", tt.config.learning_rate, "Adam learning rate (0: pick from the grid)")
      ->capture_default_str();
  train_tsc_cmd->add_option("--lr-grid", tt.config.learning_rate_grid)->delimiter(',');
  train_tsc_cmd->add_flag("!--absolute-lr", tt.config.relative_learning_rate,
                          "Use rates as given instead of scaling by the data spread");
  train_tsc_cmd->add_option("--folds", tt.config.cv_folds, "Cross-validation folds for the grid search")
      ->capture_default_str();
  train_tsc_cmd->add_option("--window", tt.window, "Sakoe-Chiba width used in training and prediction");
  common(train_tsc_cmd, tt.config.seed);

  // eval-tsc
  std::string model_path, data_path;
  std::uint64_t unused_seed = 0;
  auto* eval_tsc_cmd = app.add_subcommand("eval-tsc", "Test accuracy of a trained prototype model");
  eval_tsc_cmd->add_option("--model", model_path)->required();
  eval_tsc_cmd->add_option("--data", data_path)->required();
  common(eval_tsc_cmd, unused_seed);

  // baseline
  std::string method;
  std::optional<std::size_t> window;
  auto* baseline_cmd = app.add_subcommand("baseline", "1-NN and DBA baselines");
  baseline_cmd->add_option("--data", data_path)->required();
  baseline_cmd->add_option("--method", method)->required()->check(CLI::IsMember({"ed", "dtw", "dtww", "dba"}));
  baseline_cmd->add_option("--window", window, "Fixed width for dtww (default: leave-one-out search)");
  common(baseline_cmd, unused_seed);

  // report
  std::string table;
  auto* report_cmd = app.add_subcommand("report", "Average ranks and pairwise no-worse rates");
  report_cmd->add_option("--table", table, "CSV: dataset,<method>,<method>,...")->required();
  common(report_cmd, unused_seed);

  // train-seg
  TrainSegArgs ts;
  auto* train_seg_cmd = app.add_subcommand("train-seg", "Learn action prototypes from transcripts");
  train_seg_cmd->add_option("--data", ts.data, "Corpus directory or JSONL file")->required();
  train_seg_cmd->add_option("--out", ts.out)->required();
  train_seg_cmd->add_option("--lambda", ts.config.lambda)->capture_default_str();
  train_seg_cmd->add_option("--delta", ts.config.delta, "Hinge margin")->capture_default_str();
  train_seg_cmd->add_option("--q", ts.config.negatives, "Negative transcripts per sample")->capture_default_str();
  train_seg_cmd->add_option("--tau-p", ts.config.prototype_length, "Prototype length")->capture_default_str();
  train_seg_cmd->add_option("--encoder", ts.encoder, "identity, affine or window:<w>")->capture_default_str();
  train_seg_cmd->add_option("--encoder-dim", ts.config.encoder_dim, "Output width of linear encoders");
  train_seg_cmd->add_option("--steps", ts.config.steps)->capture_default_str();
  train_seg_cmd->add_option("--batch", ts.config.batch_size)->capture_default_str();
  train_seg_cmd->add_option("--lr", ts.config.learning_rate)->capture_default_str();
  train_seg_cmd->add_option("--log-every", ts.config.log_every)->capture_default_str();
  common(train_seg_cmd, ts.config.seed);

  // eval-seg
  EvalSegArgs es;
  auto* eval_seg_cmd = app.add_subcommand("eval-seg", "Frame labels and F-acc / IoU / IoD");
  eval_seg_cmd->add_option("--model", es.model)->required();
  eval_seg_cmd->add_option("--data", es.data)->required();
  eval_seg_cmd->add_option("--setting", es.setting)
      ->check(CLI::IsMember({"segmentation", "alignment"}))
      ->capture_default_str();
  eval_seg_cmd->add_option("--split", es.split, "Split of a corpus directory")->capture_default_str();
  eval_seg_cmd->add_option("--labels-out", es.labels_out, "Directory for per-video label files");
  eval_seg_cmd->add_option("--background", es.background, "Background class id (excluded from IoU/IoD)");
  common(eval_seg_cmd, unused_seed);

  // summarize
  std::string split = "test", out_path;
  auto* summarize_cmd = app.add_subcommand("summarize", "Action-based key frames and their matching rate");
  summarize_cmd->add_option("--model", model_path)->required();
  summarize_cmd->add_option("--data", data_path)->required();
  summarize_cmd->add_option("--split", split)->capture_default_str();
  summarize_cmd->add_option("--out", out_path, "Write key frame lists here instead of stdout");
  common(summarize_cmd, unused_seed);

  // synth-gen
  SynthConfig sc;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth-gen", "Generate a synthetic segmentation corpus");
  synth_cmd->add_option("--k", sc.num_classes, "Number of classes")->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "Output directory (train.jsonl, test.jsonl)")->required();
  synth_cmd->add_option("--dim", sc.dim)->capture_default_str();
  synth_cmd->add_option("--template-length", sc.template_length)->capture_default_str();
  synth_cmd->add_option("--min-segments", sc.min_segments)->capture_default_str();
  synth_cmd->add_option("--max-segments", sc.max_segments)->capture_default_str();
  synth_cmd->add_option("--min-duration", sc.min_duration)->capture_default_str();
  synth_cmd->add_option("--max-duration", sc.max_duration)->capture_default_str();
  synth_cmd->add_option("--warp", sc.warp)->capture_default_str();
  synth_cmd->add_option("--noise", sc.noise)->capture_default_str();
  synth_cmd->add_option("--separation", sc.separation)->capture_default_str();
  synth_cmd->add_option("--pool", sc.transcript_pool, "Distinct transcripts (0: independent)")->capture_default_str();
  synth_cmd->add_option("--train", sc.train_size)->capture_default_str();
  synth_cmd->add_option("--test", sc.test_size)->capture_default_str();
  common(synth_cmd, sc.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    set_default_workers(threads);
    tt.use_window = train_tsc_cmd->count("--window") > 0;
    if (train_tsc_cmd->count("--lambda") > 0) tt.config.lambda_grid.clear();
    if (*train_tsc_cmd) return run_train_tsc(tt);
    if (*eval_tsc_cmd) return run_eval_tsc(model_path, data_path);
    if (*baseline_cmd) {
      if (window && method != "dtww") throw UsageError("--window only applies to --method dtww");
      return run_baseline(data_path, method, window);
    }
    if (*report_cmd) return run_report(table);
    if (*train_seg_cmd) return run_train_seg(ts);
    if (*eval_seg_cmd) return run_eval_seg(es);
    if (*summarize_cmd) return run_summarize(model_path, data_path, split, out_path);
    if (*synth_cmd) return run_synth_gen(sc, synth_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}

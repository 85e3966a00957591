#include "dpdtw/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dpdtw/errors.hpp"
#include "dpdtw/optim.hpp"

namespace dpdtw {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw DataError("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

// ---------------------------------------------------------------- UCR

TscDataset load_ucr_tsv(const std::filesystem::path& path, const std::vector<std::string>* vocabulary) {
  const std::string text = read_file(path);
  const std::string where = path.string();
  std::vector<std::string> raw_labels;
  std::vector<Sequence> series;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    const char delim = line.find('\t') != std::string_view::npos ? '\t' : ',';
    std::vector<std::string_view> fields;
    std::size_t fpos = 0;
    while (true) {
      const std::size_t fend = line.find(delim, fpos);
      fields.push_back(line.substr(fpos, fend == std::string_view::npos ? std::string_view::npos : fend - fpos));
      if (fend == std::string_view::npos) break;
      fpos = fend + 1;
    }
    // tolerate a trailing delimiter
    if (fields.size() > 1 && trim(fields.back()).empty()) fields.pop_back();
    if (fields.size() < 2) throw DataError(where + ":" + std::to_string(line_no) + ": no values after the label");
    const std::string label(trim(fields[0]));
    if (label.empty()) throw DataError(where + ":" + std::to_string(line_no) + ": empty label");
    std::vector<double> values;
    values.reserve(fields.size() - 1);
    for (std::size_t f = 1; f < fields.size(); ++f) {
      const auto v = parse_double(fields[f]);
      if (!v) {
        throw DataError(where + ":" + std::to_string(line_no) + ": value " + std::to_string(f) +
                        " is missing or not a finite number");
      }
      values.push_back(*v);
    }
    if (!series.empty() && values.size() != series.front().length()) {
      throw DataError(where + ":" + std::to_string(line_no) + ": series has " + std::to_string(values.size()) +
                      " values, expected " + std::to_string(series.front().length()));
    }
    raw_labels.push_back(label);
    series.push_back(Sequence::from_values(values));
  }
  if (series.empty()) throw DataError(where + ": empty dataset");

  TscDataset data;
  data.name = path.stem().string();
  if (vocabulary) {
    data.class_names = *vocabulary;
  } else {
    std::set<std::string> unique(raw_labels.begin(), raw_labels.end());
    data.class_names.assign(unique.begin(), unique.end());
    const bool numeric = std::all_of(data.class_names.begin(), data.class_names.end(),
                                     [](const std::string& s) { return parse_double(s).has_value(); });
    if (numeric) {
      std::stable_sort(data.class_names.begin(), data.class_names.end(),
                       [](const std::string& a, const std::string& b) { return *parse_double(a) < *parse_double(b); });
    }
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < data.class_names.size(); ++k) index.emplace(data.class_names[k], k);
  for (std::size_t n = 0; n < raw_labels.size(); ++n) {
    const auto it = index.find(raw_labels[n]);
    if (it == index.end()) throw DataError(where + ": label '" + raw_labels[n] + "' does not occur in the training split");
    data.labels.push_back(it->second);
  }
  data.sequences = std::move(series);
  return data;
}

void write_ucr_tsv(const std::filesystem::path& path, const TscDataset& data) {
  std::string out;
  for (std::size_t n = 0; n < data.size(); ++n) {
    out += data.class_names.at(data.labels[n]);
    for (double v : data.sequences[n].values()) {
      out += '\t';
      out += format_double(v);
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

UcrSplits load_ucr_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("'" + dir.string() + "' is not a directory");
  auto find = [&](const std::string& split) {
    std::vector<std::filesystem::path> hits;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      const std::string stem = entry.path().stem().string();
      const std::string ext = entry.path().extension().string();
      const bool ext_ok = ext == ".tsv" || ext == ".txt" || ext == ".csv";
      if (ext_ok && stem.size() > split.size() + 1 && stem.ends_with("_" + split)) hits.push_back(entry.path());
    }
    if (hits.empty()) throw DataError("no *_" + split + " file in '" + dir.string() + "'");
    std::sort(hits.begin(), hits.end());
    return hits.front();
  };
  UcrSplits s;
  s.train = load_ucr_tsv(find("TRAIN"));
  s.test = load_ucr_tsv(find("TEST"), &s.train.class_names);
  const std::string name = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
  s.train.name = name;
  s.test.name = name;
  if (s.test.sequences.front().length() != s.train.sequences.front().length()) {
    throw DataError("'" + dir.string() + "': train and test series lengths differ");
  }
  return s;
}

// ---------------------------------------------------------------- corpora

namespace {

std::vector<std::size_t> parse_ids(const json& arr, const std::string& field, const std::string& where) {
  if (!arr.is_array()) throw DataError(where + ": '" + field + "' must be an array");
  std::vector<std::size_t> out;
  for (const auto& v : arr) {
    if (!v.is_number_integer()) throw DataError(where + ": '" + field + "' entries must be integers");
    const auto id = v.get<std::int64_t>();
    if (id < 1) throw DataError(where + ": '" + field + "' ids are 1-based, got " + std::to_string(id));
    out.push_back(static_cast<std::size_t>(id - 1));
  }
  return out;
}

json ids_to_json(const std::vector<std::size_t>& ids) {
  json arr = json::array();
  for (std::size_t k : ids) arr.push_back(k + 1);
  return arr;
}

}  // namespace

std::vector<SegSample> load_seg_corpus(const std::filesystem::path& path, std::optional<std::size_t> background) {
  const std::string text = read_file(path);
  std::vector<SegSample> out;
  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = path.string() + ": record " + std::to_string(out.size() + 1) + " (line " +
                              std::to_string(line_no) + ")";
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!rec.is_object()) throw DataError(where + ": expected an object");
    for (const char* field : {"id", "frames", "transcript"}) {
      if (!rec.contains(field)) throw DataError(where + ": missing '" + field + "'");
    }
    SegSample s;
    if (!rec["id"].is_string()) throw DataError(where + ": 'id' must be a string");
    s.id = rec["id"].get<std::string>();
    const json& frames = rec["frames"];
    if (!frames.is_array() || frames.empty()) throw DataError(where + ": 'frames' must be a nonempty array");
    std::vector<std::vector<double>> rows;
    for (const auto& f : frames) {
      if (!f.is_array() || f.empty()) throw DataError(where + ": each frame must be a nonempty array");
      std::vector<double> row;
      for (const auto& v : f) {
        if (!v.is_number()) throw DataError(where + ": frame values must be numbers");
        row.push_back(v.get<double>());
      }
      rows.push_back(std::move(row));
    }
    s.transcript = parse_ids(rec["transcript"], "transcript", where);
    if (rec.contains("labels") && !rec["labels"].is_null()) s.labels = parse_ids(rec["labels"], "labels", where);
    try {
      s.frames = Sequence::from_frames(rows);
      s.validate(background);
    } catch (const InvalidArgument& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!out.empty() && s.frames.dim() != out.front().frames.dim()) {
      throw DataError(where + ": frame width differs from earlier records");
    }
    out.push_back(std::move(s));
  }
  if (out.empty()) throw DataError(path.string() + ": empty corpus");
  return out;
}

void write_seg_corpus(const std::filesystem::path& path, const std::vector<SegSample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    json rec;
    rec["id"] = s.id;
    json frames = json::array();
    for (std::size_t t = 0; t < s.frames.length(); ++t) {
      const auto f = s.frames.frame(t);
      frames.push_back(std::vector<double>(f.begin(), f.end()));
    }
    rec["frames"] = std::move(frames);
    rec["transcript"] = ids_to_json(s.transcript);
    if (!s.labels.empty()) rec["labels"] = ids_to_json(s.labels);
    out += rec.dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::filesystem::path corpus_split_path(const std::filesystem::path& corpus, const std::string& split) {
  if (std::filesystem::is_directory(corpus)) return corpus / (split + ".jsonl");
  return corpus;
}

// ---------------------------------------------------------------- synthetic corpora

void SynthConfig::validate() const {
  if (num_classes == 0 || dim == 0 || template_length == 0) {
    throw InvalidArgument("synthetic corpus needs classes, features and a template length");
  }
  if (min_segments == 0 || min_segments > max_segments) throw InvalidArgument("invalid segment count range");
  if (min_duration == 0 || min_duration > max_duration) throw InvalidArgument("invalid duration range");
  if (num_classes < 2 && max_segments > 1) {
    throw InvalidArgument("transcripts without consecutive repeats need at least two classes");
  }
  if (!(warp >= 0.0 && warp < 1.0)) throw InvalidArgument("warp must be in [0, 1)");
  if (!(noise >= 0.0)) throw InvalidArgument("noise must be >= 0");
  if (!(separation >= 0.0)) throw InvalidArgument("separation must be >= 0");
  if (train_size == 0) throw InvalidArgument("training split must be nonempty");
}

namespace {

Sequence random_template(const SynthConfig& c, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Sequence walk(c.template_length, c.dim);
  for (std::size_t d = 0; d < c.dim; ++d) {
    double x = normal(rng);
    for (std::size_t t = 0; t < c.template_length; ++t) {
      walk.at(t, d) = x;
      x += 0.6 * normal(rng);
    }
  }
  // three-tap smoothing
  Sequence smooth(c.template_length, c.dim);
  for (std::size_t t = 0; t < c.template_length; ++t) {
    const std::size_t lo = t == 0 ? 0 : t - 1;
    const std::size_t hi = std::min(t + 1, c.template_length - 1);
    for (std::size_t d = 0; d < c.dim; ++d) {
      double acc = 0.0;
      for (std::size_t u = lo; u <= hi; ++u) acc += walk.at(u, d);
      smooth.at(t, d) = acc / static_cast<double>(hi - lo + 1);
    }
  }
  return smooth;
}

double rms_distance(const Sequence& a, const Sequence& b) {
  return euclidean(a, b) / std::sqrt(static_cast<double>(a.length()));
}

Transcript random_transcript(const SynthConfig& c, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> count(c.min_segments, c.max_segments);
  std::uniform_int_distribution<std::size_t> cls(0, c.num_classes - 1);
  Transcript t(count(rng));
  for (std::size_t i = 0; i < t.size(); ++i) {
    do {
      t[i] = cls(rng);
    } while (i > 0 && t[i] == t[i - 1]);
  }
  return t;
}

SegSample realise(const SynthConfig& c, const std::vector<Sequence>& templates, const Transcript& transcript,
                  std::string id, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> duration(c.min_duration, c.max_duration);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::vector<double>> frames;
  SegSample s;
  s.id = std::move(id);
  s.transcript = transcript;
  const double last = static_cast<double>(c.template_length - 1);
  for (std::size_t k : transcript) {
    const std::size_t d = duration(rng);
    std::vector<double> cum(d, 0.0);
    for (std::size_t i = 1; i < d; ++i) cum[i] = cum[i - 1] + 1.0 + c.warp * jitter(rng);
    const Sequence& tmpl = templates[k];
    for (std::size_t i = 0; i < d; ++i) {
      const double pos = d == 1 ? last / 2.0 : cum[i] * last / cum[d - 1];
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const std::size_t hi = std::min(lo + 1, c.template_length - 1);
      const double w = pos - static_cast<double>(lo);
      std::vector<double> f(c.dim);
      for (std::size_t j = 0; j < c.dim; ++j) {
        f[j] = (1.0 - w) * tmpl.at(lo, j) + w * tmpl.at(hi, j);
        if (c.noise > 0.0) f[j] += c.noise * noise(rng);
      }
      frames.push_back(std::move(f));
      s.labels.push_back(k);
    }
  }
  s.frames = Sequence::from_frames(frames);
  return s;
}

}  // namespace

SynthCorpus gen_synthetic(const SynthConfig& c) {
  c.validate();
  SynthCorpus corpus;
  auto tmpl_rng = make_stream(c.seed, 0x746d706cULL);
  constexpr std::size_t kRetries = 1000;
  for (std::size_t k = 0; k < c.num_classes; ++k) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < kRetries && !placed; ++attempt) {
      Sequence cand = random_template(c, tmpl_rng);
      placed = std::all_of(corpus.templates.begin(), corpus.templates.end(),
                           [&](const Sequence& t) { return rms_distance(t, cand) >= c.separation; });
      if (placed) corpus.templates.push_back(std::move(cand));
    }
    if (!placed) {
      throw NumericError("could not place template " + std::to_string(k + 1) + " at separation " +
                         std::to_string(c.separation) + " after " + std::to_string(kRetries) + " attempts");
    }
  }

  auto script_rng = make_stream(c.seed, 0x73637270ULL);
  std::vector<Transcript> pool;
  if (c.transcript_pool > 0) {
    std::set<Transcript> seen;
    for (std::size_t attempt = 0; pool.size() < c.transcript_pool && attempt < 100 * c.transcript_pool; ++attempt) {
      Transcript t = random_transcript(c, script_rng);
      if (seen.insert(t).second) pool.push_back(std::move(t));
    }
  }

  auto draw = [&](std::size_t i, std::mt19937_64& rng) {
    if (pool.empty()) return random_transcript(c, rng);
    // the first pass walks the pool in order so every script reaches training
    if (i < pool.size()) return pool[i];
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    return pool[pick(rng)];
  };
  auto train_rng = make_stream(c.seed, 0x747261696eULL);
  for (std::size_t i = 0; i < c.train_size; ++i) {
    const Transcript t = draw(i, train_rng);
    corpus.train.push_back(realise(c, corpus.templates, t, "train_" + std::to_string(i), train_rng));
  }
  auto test_rng = make_stream(c.seed, 0x74657374ULL);
  for (std::size_t i = 0; i < c.test_size; ++i) {
    const Transcript t = draw(pool.size() + i, test_rng);
    corpus.test.push_back(realise(c, corpus.templates, t, "test_" + std::to_string(i), test_rng));
  }
  return corpus;
}

// ---------------------------------------------------------------- models

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void Model::validate() const {
  if (version != kFormatVersion) throw InvalidArgument("unsupported model version " + std::to_string(version));
  if (prototypes.empty()) throw InvalidArgument("model has no prototypes");
  if (class_names.size() != prototypes.num_classes()) throw InvalidArgument("class names do not match prototypes");
  if (encoder.output_dim() != prototypes.dim()) throw InvalidArgument("encoder output width differs from prototypes");
  if (mode == ModelMode::segmentation && references.empty()) {
    throw InvalidArgument("segmentation model without reference transcripts");
  }
  for (const auto& t : references) {
    for (std::size_t k : t) {
      if (k >= prototypes.num_classes()) throw InvalidArgument("reference transcript names an unknown class");
    }
  }
}

namespace {

constexpr std::string_view kChecksumTag = "#checksum fnv1a64 ";

const char* band_kind_name(BandConstraint::Kind k) {
  return k == BandConstraint::Kind::none ? "none" : "sakoe_chiba";
}

json config_to_json(const TscConfig& c) {
  return {{"lambda", c.lambda},
          {"lambda_grid", c.lambda_grid},
          {"temperature", c.temperature},
          {"epochs", c.epochs},
          {"batch_fraction", c.batch_fraction},
          {"learning_rate", c.learning_rate},
          {"learning_rate_grid", c.learning_rate_grid},
          {"relative_learning_rate", c.relative_learning_rate},
          {"cv_folds", c.cv_folds},
          {"seed", c.seed},
          {"band", {{"kind", band_kind_name(c.band.kind)}, {"width", c.band.width}}}};
}

json config_to_json(const SegConfig& c) {
  return {{"delta", c.delta},
          {"lambda", c.lambda},
          {"negatives", c.negatives},
          {"prototype_length", c.prototype_length},
          {"steps", c.steps},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"seed", c.seed},
          {"encoder", to_string(c.encoder)},
          {"encoder_window", c.encoder_window},
          {"encoder_dim", c.encoder_dim},
          {"log_every", c.log_every}};
}

TscConfig tsc_config_from_json(const json& j) {
  TscConfig c;
  c.lambda = j.at("lambda").get<double>();
  c.temperature = j.at("temperature").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_fraction = j.at("batch_fraction").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.learning_rate_grid = j.at("learning_rate_grid").get<std::vector<double>>();
  c.relative_learning_rate = j.at("relative_learning_rate").get<bool>();
  c.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
  c.cv_folds = j.at("cv_folds").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  const auto& band = j.at("band");
  c.band.kind = band.at("kind").get<std::string>() == "none" ? BandConstraint::Kind::none
                                                              : BandConstraint::Kind::sakoe_chiba;
  c.band.width = band.at("width").get<std::size_t>();
  return c;
}

SegConfig seg_config_from_json(const json& j) {
  SegConfig c;
  c.delta = j.at("delta").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.negatives = j.at("negatives").get<std::size_t>();
  c.prototype_length = j.at("prototype_length").get<std::size_t>();
  c.steps = j.at("steps").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.encoder = encoder_kind_from_string(j.at("encoder").get<std::string>());
  c.encoder_window = j.at("encoder_window").get<std::size_t>();
  c.encoder_dim = j.at("encoder_dim").get<std::size_t>();
  c.log_every = j.at("log_every").get<std::size_t>();
  return c;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string serialize_model(const Model& model) {
  model.validate();
  json body;
  body["format"] = "dpdtw-model";
  body["version"] = model.version;
  body["mode"] = model.mode == ModelMode::tsc ? "tsc" : "segmentation";
  body["classes"] = model.class_names;
  json protos = json::array();
  for (const auto& p : model.prototypes.prototypes()) {
    protos.push_back(std::vector<double>(p.values().begin(), p.values().end()));
  }
  body["prototypes"] = {{"length", model.prototypes.length()}, {"dim", model.prototypes.dim()}, {"data", protos}};
  const auto params = model.encoder.parameters();
  body["encoder"] = {{"kind", to_string(model.encoder.kind())},
                     {"input_dim", model.encoder.input_dim()},
                     {"output_dim", model.encoder.output_dim()},
                     {"window", model.encoder.window()},
                     {"params", std::vector<double>(params.begin(), params.end())}};
  body["config"] = std::visit([](const auto& c) { return config_to_json(c); }, model.config);
  json refs = json::array();
  for (const auto& t : model.references) refs.push_back(ids_to_json(t));
  body["references"] = std::move(refs);
  json hist = json::array();
  for (const auto& r : model.history) hist.push_back({r.step, r.total, r.primary, r.distance});
  body["history"] = std::move(hist);
  body["learning_rate"] = model.learning_rate;

  std::string text = body.dump(1);
  text += '\n';
  const std::uint64_t sum = fnv1a64(text);
  text += kChecksumTag;
  text += hex64(sum);
  text += '\n';
  return text;
}

Model parse_model(std::string_view text) {
  const std::size_t tag = text.rfind(kChecksumTag);
  if (tag == std::string_view::npos) throw DataError("model file is truncated: checksum trailer missing");
  const std::string_view body = text.substr(0, tag);
  std::string_view stored = text.substr(tag + kChecksumTag.size());
  stored = trim(stored);
  if (stored != hex64(fnv1a64(body))) throw DataError("model file checksum mismatch (corrupted or truncated)");

  try {
    const json j = json::parse(body);
    if (j.at("format").get<std::string>() != "dpdtw-model") throw DataError("not a dpdtw model file");
    Model m;
    m.version = j.at("version").get<int>();
    if (m.version != Model::kFormatVersion) {
      throw DataError("model format version " + std::to_string(m.version) + " is not supported (expected " +
                      std::to_string(Model::kFormatVersion) + ")");
    }
    const std::string mode = j.at("mode").get<std::string>();
    if (mode != "tsc" && mode != "segmentation") throw DataError("unknown model mode '" + mode + "'");
    m.mode = mode == "tsc" ? ModelMode::tsc : ModelMode::segmentation;
    m.class_names = j.at("classes").get<std::vector<std::string>>();
    const auto& pj = j.at("prototypes");
    const auto len = pj.at("length").get<std::size_t>();
    const auto dim = pj.at("dim").get<std::size_t>();
    std::vector<Sequence> protos;
    for (const auto& row : pj.at("data")) {
      const auto values = row.get<std::vector<double>>();
      if (values.size() != len * dim) throw DataError("prototype has the wrong number of values");
      Sequence s(len, dim);
      std::copy(values.begin(), values.end(), s.values().begin());
      protos.push_back(std::move(s));
    }
    m.prototypes = PrototypeSet(std::move(protos));
    const auto& ej = j.at("encoder");
    m.encoder = Encoder::from_parts(encoder_kind_from_string(ej.at("kind").get<std::string>()),
                                    ej.at("input_dim").get<std::size_t>(), ej.at("output_dim").get<std::size_t>(),
                                    ej.at("window").get<std::size_t>(), ej.at("params").get<std::vector<double>>());
    if (m.mode == ModelMode::tsc) {
      m.config = tsc_config_from_json(j.at("config"));
    } else {
      m.config = seg_config_from_json(j.at("config"));
    }
    for (const auto& t : j.at("references")) m.references.push_back(parse_ids(t, "references", "model"));
    for (const auto& r : j.at("history")) {
      m.history.push_back({r.at(0).get<std::size_t>(), r.at(1).get<double>(), r.at(2).get<double>(),
                           r.at(3).get<double>()});
    }
    m.learning_rate = j.at("learning_rate").get<double>();
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("inconsistent model file: ") + e.what());
  }
}

void save_model(const Model& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

Model load_model(const std::filesystem::path& path) { return parse_model(read_file(path)); }

}  // namespace dpdtw

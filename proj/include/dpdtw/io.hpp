#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dpdtw/model.hpp"
#include "dpdtw/seg.hpp"
#include "dpdtw/tsc.hpp"

namespace dpdtw {

// ---------------------------------------------------------------- UCR archive

/// One series per line: label, then values, tab- or comma-separated.
/// Labels are mapped to dense indices; with `vocabulary` (e.g. from the
/// training split) unknown labels are rejected, otherwise the vocabulary is
/// built from the file, sorted numerically when every label is a number.
TscDataset load_ucr_tsv(const std::filesystem::path& path,
                        const std::vector<std::string>* vocabulary = nullptr);

void write_ucr_tsv(const std::filesystem::path& path, const TscDataset& data);

struct UcrSplits {
  TscDataset train;
  TscDataset test;
};

/// Loads <dir>/<name>_TRAIN.{tsv,txt,csv} and the matching _TEST file.
UcrSplits load_ucr_dir(const std::filesystem::path& dir);

// ---------------------------------------------------------------- segmentation corpora

/// JSON lines, one record per line:
/// {"id": str, "frames": [[f, ...], ...], "transcript": [int, ...], "labels": [int, ...]}
/// Class ids in the file are 1-based; "labels" is optional.
std::vector<SegSample> load_seg_corpus(const std::filesystem::path& path,
                                       std::optional<std::size_t> background = std::nullopt);

void write_seg_corpus(const std::filesystem::path& path, const std::vector<SegSample>& samples);

/// A corpus location is either a JSONL file or a directory holding
/// train.jsonl and test.jsonl.
std::filesystem::path corpus_split_path(const std::filesystem::path& corpus, const std::string& split);

struct SynthConfig {
  std::size_t num_classes = 5;
  std::size_t dim = 4;
  std::size_t template_length = 12;
  std::size_t min_segments = 3;
  std::size_t max_segments = 6;
  std::size_t min_duration = 12;
  std::size_t max_duration = 36;
  /// Relative jitter of the per-frame warping increments, in [0, 1).
  double warp = 0.3;
  double noise = 0.3;
  /// Minimum per-frame RMS distance between any two class templates.
  double separation = 1.0;
  /// Number of distinct transcripts shared by both splits (0: independent draws).
  std::size_t transcript_pool = 20;
  std::size_t train_size = 200;
  std::size_t test_size = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthCorpus {
  std::vector<Sequence> templates;
  std::vector<SegSample> train;
  std::vector<SegSample> test;
};

/// Smooth random-walk class templates; each sample concatenates randomly
/// warped, noisy realisations along its transcript.
SynthCorpus gen_synthetic(const SynthConfig& config);

// ---------------------------------------------------------------- models

/// Text container: a JSON body followed by a "#checksum fnv1a64 <hex>" line.
std::string serialize_model(const Model& model);
Model parse_model(std::string_view text);

/// Writes to a temporary file then renames it into place.
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace dpdtw

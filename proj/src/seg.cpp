#include "dpdtw/seg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>

#include "dpdtw/errors.hpp"
#include "dpdtw/optim.hpp"

namespace dpdtw {

void SegConfig::validate() const {
  if (!(delta >= 0.0)) throw InvalidArgument("margin delta must be >= 0");
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
  if (negatives == 0) throw InvalidArgument("need at least one negative per step");
  if (prototype_length == 0) throw InvalidArgument("prototype length must be positive");
  if (batch_size == 0) throw InvalidArgument("batch size must be positive");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be > 0");
  if (encoder_window == 0) throw InvalidArgument("encoder window must be at least 1");
  if (log_every == 0) throw InvalidArgument("log interval must be positive");
}

void SegSample::validate(std::optional<std::size_t> background) const {
  const std::string where = "sample '" + id + "'";
  frames.validate(where.c_str());
  if (transcript.empty()) throw InvalidArgument(where + ": empty transcript");
  if (labels.empty()) return;
  if (labels.size() != frames.length()) {
    throw InvalidArgument(where + ": " + std::to_string(labels.size()) + " labels for " +
                          std::to_string(frames.length()) + " frames");
  }
  std::vector<std::size_t> collapsed;
  for (std::size_t k : labels) {
    if (background && k == *background) continue;
    if (collapsed.empty() || collapsed.back() != k) collapsed.push_back(k);
  }
  std::vector<std::size_t> expected;
  for (std::size_t k : transcript) {
    if (background && k == *background) continue;
    if (expected.empty() || expected.back() != k) expected.push_back(k);
  }
  if (collapsed != expected) throw InvalidArgument(where + ": labels do not follow the transcript order");
}

ReferenceSet build_reference_set(std::span<const SegSample> train) {
  if (train.empty()) throw InvalidArgument("reference set of an empty training split");
  ReferenceSet refs;
  std::set<Transcript> seen;
  for (const auto& s : train) {
    if (seen.insert(s.transcript).second) refs.push_back(s.transcript);
  }
  return refs;
}

std::vector<Transcript> sample_negatives(const ReferenceSet& references, const Transcript& positive,
                                         std::size_t count, std::mt19937_64& rng) {
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < references.size(); ++i) {
    if (references[i] != positive) pool.push_back(i);
  }
  const std::size_t take = std::min(count, pool.size());
  // partial Fisher-Yates
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  std::vector<Transcript> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(references[pool[i]]);
  return out;
}

namespace {

std::uint64_t alignment_signature(std::uint64_t h, const Alignment& a) {
  h = hash_combine(h, a.size());
  for (const auto& [i, j] : a) h = hash_combine(h, (static_cast<std::uint64_t>(i) << 32) ^ j);
  return h;
}

// Adds coef * (dd/dP) of one ordering sequence onto the prototype gradients
// and coef * (dd/ds) onto the encoded-frame gradient.
void accumulate(const OrderingSequence& ordering, const Sequence& s, const Alignment& alignment,
                double coef, std::vector<Sequence>& proto_grads, Sequence& s_grad) {
  const DtwGradient g = dtw_subgradient(ordering.data, s, alignment);
  const std::size_t len = ordering.prototype_length;
  for (std::size_t t = 0; t < ordering.data.length(); ++t) {
    const auto src = g.first.frame(t);
    auto dst = proto_grads[ordering.source[t / len]].frame(t % len);
    for (std::size_t d = 0; d < src.size(); ++d) dst[d] += coef * src[d];
  }
  auto ds = s_grad.values();
  const auto gs = g.second.values();
  for (std::size_t k = 0; k < ds.size(); ++k) ds[k] += coef * gs[k];
}

}  // namespace

SegLoss seg_loss(const Sequence& frames, const Transcript& positive,
                 std::span<const Transcript> negatives, const PrototypeSet& prototypes,
                 const Encoder& encoder, const SegConfig& config) {
  const Sequence s = encode(frames, encoder);
  if (s.dim() != prototypes.dim()) {
    throw InvalidArgument("encoded frames have " + std::to_string(s.dim()) + " features, prototypes have " +
                          std::to_string(prototypes.dim()));
  }
  const OrderingSequence pos = temp_cat(positive, prototypes);
  const DtwResult pos_r = dtw(pos.data, s);

  SegLoss loss;
  loss.distance = pos_r.discrepancy;
  loss.signature = alignment_signature(0xcbf29ce484222325ULL, pos_r.alignment);

  std::vector<OrderingSequence> neg_orders;
  std::vector<DtwResult> neg_r;
  std::vector<bool> active;
  for (const auto& o : negatives) {
    neg_orders.push_back(temp_cat(o, prototypes));
    neg_r.push_back(dtw(neg_orders.back().data, s));
    const double margin = pos_r.discrepancy - neg_r.back().discrepancy + config.delta;
    active.push_back(margin > 0.0);
    if (margin > 0.0) {
      loss.hinge += margin;
      ++loss.active;
      loss.signature = alignment_signature(loss.signature, neg_r.back().alignment);
    }
    loss.signature = hash_combine(loss.signature, margin > 0.0 ? 1 : 0);
  }
  loss.total = loss.hinge + config.lambda * loss.distance;

  loss.prototype_gradients.assign(prototypes.num_classes(), Sequence(prototypes.length(), prototypes.dim()));
  Sequence s_grad(s.length(), s.dim());
  const double pos_coef = static_cast<double>(loss.active) + config.lambda;
  if (pos_coef != 0.0) accumulate(pos, s, pos_r.alignment, pos_coef, loss.prototype_gradients, s_grad);
  for (std::size_t q = 0; q < neg_orders.size(); ++q) {
    if (active[q]) accumulate(neg_orders[q], s, neg_r[q].alignment, -1.0, loss.prototype_gradients, s_grad);
  }
  loss.encoder_gradient = encoder_backward(frames, encoder, s_grad);
  return loss;
}

std::size_t corpus_num_classes(std::span<const SegSample> samples) {
  std::size_t k = 0;
  for (const auto& s : samples) {
    for (std::size_t c : s.transcript) k = std::max(k, c + 1);
    for (std::size_t c : s.labels) k = std::max(k, c + 1);
  }
  return k;
}

PrototypeSet init_segment_prototypes(std::span<const Sequence> encoded,
                                     std::span<const SegSample> samples, std::size_t num_classes,
                                     std::size_t prototype_length) {
  std::vector<Sequence> pieces;
  std::vector<std::size_t> labels;
  for (std::size_t n = 0; n < samples.size(); ++n) {
    const Sequence& s = encoded[n];
    const std::size_t l = samples[n].transcript.size();
    for (std::size_t i = 0; i < l; ++i) {
      std::size_t begin = i * s.length() / l;
      std::size_t end = (i + 1) * s.length() / l;
      if (end <= begin) {
        begin = std::min(begin, s.length() - 1);
        end = begin + 1;
      }
      Sequence piece(end - begin, s.dim());
      for (std::size_t t = begin; t < end; ++t) {
        std::copy(s.frame(t).begin(), s.frame(t).end(), piece.frame(t - begin).begin());
      }
      pieces.push_back(resample_linear(piece, prototype_length));
      labels.push_back(samples[n].transcript[i]);
    }
  }
  return init_medoid_prototypes(pieces, labels, num_classes, prototype_length);
}

namespace {

constexpr std::uint64_t kEvalStream = 0x6576616cULL;

LossRecord seg_evaluate(std::span<const SegSample> train, const ReferenceSet& refs,
                        const PrototypeSet& protos, const Encoder& encoder, const SegConfig& config) {
  std::vector<SegLoss> per(train.size());
  parallel_for(train.size(), [&](std::size_t i) {
    auto rng = make_stream(config.seed ^ kEvalStream, 0, i);
    const auto negs = sample_negatives(refs, train[i].transcript, config.negatives, rng);
    per[i] = seg_loss(train[i].frames, train[i].transcript, negs, protos, encoder, config);
  });
  LossRecord rec;
  for (const auto& l : per) {
    rec.total += l.total;
    rec.primary += l.hinge;
    rec.distance += l.distance;
  }
  const double inv = 1.0 / static_cast<double>(train.size());
  rec.total *= inv;
  rec.primary *= inv;
  rec.distance *= inv;
  if (!std::isfinite(rec.total)) throw NumericError("segmentation loss is not finite");
  return rec;
}

Encoder make_encoder(const SegConfig& config, std::size_t input_dim) {
  const std::size_t out = config.encoder_dim == 0 ? input_dim : config.encoder_dim;
  Encoder e;
  switch (config.encoder) {
    case Encoder::Kind::identity:
      if (out != input_dim) throw InvalidArgument("identity encoder cannot change the feature width");
      e = Encoder::identity(input_dim);
      break;
    case Encoder::Kind::affine:
      e = Encoder::affine(input_dim, out);
      break;
    case Encoder::Kind::window_linear:
      e = Encoder::window_linear(input_dim, out, config.encoder_window);
      break;
  }
  e.initialize(config.seed);
  return e;
}

}  // namespace

Model train_seg(std::span<const SegSample> train, const SegConfig& config) {
  config.validate();
  if (train.empty()) throw InvalidArgument("empty training split");
  const std::size_t input_dim = train.front().frames.dim();
  for (const auto& s : train) {
    s.validate();
    if (s.frames.dim() != input_dim) throw InvalidArgument("sample '" + s.id + "': mixed feature widths");
  }
  const std::size_t num_classes = corpus_num_classes(train);
  const ReferenceSet refs = build_reference_set(train);

  Encoder encoder = make_encoder(config, input_dim);
  std::vector<Sequence> encoded(train.size());
  parallel_for(train.size(), [&](std::size_t i) { encoded[i] = encode(train[i].frames, encoder); });
  PrototypeSet protos = init_segment_prototypes(encoded, train, num_classes, config.prototype_length);
  encoded.clear();

  std::vector<std::size_t> sizes(num_classes, protos.length() * protos.dim());
  const bool train_encoder = encoder.num_parameters() > 0;
  if (train_encoder) sizes.push_back(encoder.num_parameters());
  AdamState adam(AdamOptions{config.learning_rate}, sizes);

  Model model;
  model.history.push_back(seg_evaluate(train, refs, protos, encoder, config));

  const BatchSpec spec = BatchSpec::of_count(config.batch_size, config.seed);
  std::vector<std::vector<std::size_t>> batches;
  std::size_t epoch = 0;
  std::size_t next_batch = 0;
  for (std::size_t step = 1; step <= config.steps; ++step) {
    if (next_batch == batches.size()) {
      batches = minibatch_iter(train.size(), spec, epoch++);
      next_batch = 0;
    }
    const auto& batch = batches[next_batch++];
    std::vector<SegLoss> losses(batch.size());
    parallel_for(batch.size(), [&](std::size_t b) {
      const std::size_t i = batch[b];
      auto rng = make_stream(config.seed, step, i);
      const auto negs = sample_negatives(refs, train[i].transcript, config.negatives, rng);
      losses[b] = seg_loss(train[i].frames, train[i].transcript, negs, protos, encoder, config);
    });

    const double inv = 1.0 / static_cast<double>(batch.size());
    std::vector<std::vector<double>> grads;
    for (std::size_t n : sizes) grads.emplace_back(n, 0.0);
    for (const auto& l : losses) {
      for (std::size_t k = 0; k < num_classes; ++k) {
        const auto g = l.prototype_gradients[k].values();
        for (std::size_t j = 0; j < g.size(); ++j) grads[k][j] += g[j] * inv;
      }
      if (train_encoder) {
        for (std::size_t j = 0; j < l.encoder_gradient.size(); ++j) grads.back()[j] += l.encoder_gradient[j] * inv;
      }
    }
    std::vector<std::span<double>> params;
    std::vector<std::span<const double>> grad_views;
    for (std::size_t k = 0; k < num_classes; ++k) params.push_back(protos.parameters(k));
    if (train_encoder) params.push_back(encoder.parameters());
    for (const auto& g : grads) grad_views.emplace_back(g);
    adam_step(params, grad_views, adam);

    if (step % config.log_every == 0 || step == config.steps) {
      LossRecord rec = seg_evaluate(train, refs, protos, encoder, config);
      rec.step = step;
      model.history.push_back(rec);
    }
  }

  model.mode = ModelMode::segmentation;
  for (std::size_t k = 0; k < num_classes; ++k) model.class_names.push_back(std::to_string(k + 1));
  model.prototypes = std::move(protos);
  model.encoder = std::move(encoder);
  model.config = config;
  model.references = refs;
  model.learning_rate = config.learning_rate;
  return model;
}

Retrieval retrieve_transcript(const Sequence& s, const ReferenceSet& references,
                              const PrototypeSet& prototypes) {
  if (references.empty()) throw InvalidArgument("cannot retrieve from an empty reference set");
  std::vector<double> d(references.size());
  parallel_for(references.size(), [&](std::size_t i) {
    d[i] = dtw_discrepancy(temp_cat(references[i], prototypes).data, s);
  });
  Retrieval best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] < best.discrepancy) best = {i, d[i]};
  }
  return best;
}

FrameLabels label_frames(const Sequence& s, const Transcript& transcript, const PrototypeSet& prototypes) {
  const OrderingSequence ordering = temp_cat(transcript, prototypes);
  if (s.dim() != ordering.data.dim()) throw InvalidArgument("label_frames: feature dimension mismatch");
  const DtwResult r = dtw(ordering.data, s);
  FrameLabels out;
  out.positions.assign(s.length(), 0);
  std::vector<double> best(s.length(), std::numeric_limits<double>::infinity());
  for (const auto& [t1, t2] : r.alignment) {
    const double dist = frame_distance(ordering.data.frame(t1), s.frame(t2));
    if (dist < best[t2]) {
      best[t2] = dist;
      out.positions[t2] = t1;
    }
  }
  out.labels.reserve(s.length());
  for (std::size_t p : out.positions) out.labels.push_back(position_to_action(p, transcript, ordering.prototype_length));
  return out;
}

SegPrediction infer(const Model& model, const Sequence& frames, const Transcript* given) {
  const Sequence s = encode(frames, model.encoder);
  SegPrediction out;
  if (given) {
    out.transcript = *given;
    out.discrepancy = dtw_discrepancy(temp_cat(*given, model.prototypes).data, s);
  } else {
    const Retrieval r = retrieve_transcript(s, model.references, model.prototypes);
    out.transcript = model.references[r.index];
    out.discrepancy = r.discrepancy;
  }
  out.frames = label_frames(s, out.transcript, model.prototypes);
  return out;
}

namespace {

struct VideoScores {
  std::size_t correct = 0;
  std::size_t classes = 0;
  double iou_sum = 0.0;
  double iod_sum = 0.0;
};

VideoScores score_video(std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
                        std::optional<std::size_t> background) {
  if (predicted.size() != truth.size()) {
    throw InvalidArgument("evaluate: " + std::to_string(predicted.size()) + " predictions for " +
                          std::to_string(truth.size()) + " frames");
  }
  VideoScores v;
  std::set<std::size_t> present;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    v.correct += predicted[t] == truth[t] ? 1 : 0;
    if (!background || truth[t] != *background) present.insert(truth[t]);
  }
  for (std::size_t c : present) {
    std::size_t inter = 0;
    std::size_t uni = 0;
    std::size_t detected = 0;
    for (std::size_t t = 0; t < truth.size(); ++t) {
      const bool p = predicted[t] == c;
      const bool g = truth[t] == c;
      inter += (p && g) ? 1 : 0;
      uni += (p || g) ? 1 : 0;
      detected += p ? 1 : 0;
    }
    v.iou_sum += static_cast<double>(inter) / static_cast<double>(uni);
    v.iod_sum += detected == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(detected);
    ++v.classes;
  }
  return v;
}

}  // namespace

SegMetrics evaluate(std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
                    std::optional<std::size_t> background) {
  const VideoScores v = score_video(predicted, truth, background);
  SegMetrics m;
  m.f_acc = truth.empty() ? 1.0 : static_cast<double>(v.correct) / static_cast<double>(truth.size());
  m.iou = v.classes == 0 ? 1.0 : v.iou_sum / static_cast<double>(v.classes);
  m.iod = v.classes == 0 ? 1.0 : v.iod_sum / static_cast<double>(v.classes);
  return m;
}

void MetricAccumulator::add(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
  const VideoScores v = score_video(predicted, truth, background_);
  ++videos_;
  frames_ += truth.size();
  correct_ += v.correct;
  pairs_ += v.classes;
  iou_sum_ += v.iou_sum;
  iod_sum_ += v.iod_sum;
}

SegMetrics MetricAccumulator::result() const {
  SegMetrics m;
  m.f_acc = frames_ == 0 ? 1.0 : static_cast<double>(correct_) / static_cast<double>(frames_);
  m.iou = pairs_ == 0 ? 1.0 : iou_sum_ / static_cast<double>(pairs_);
  m.iod = pairs_ == 0 ? 1.0 : iod_sum_ / static_cast<double>(pairs_);
  return m;
}

std::vector<std::size_t> summarize(const Sequence& s, const Transcript& transcript,
                                   const PrototypeSet& prototypes) {
  const OrderingSequence ordering = temp_cat(transcript, prototypes);
  if (s.dim() != ordering.data.dim()) throw InvalidArgument("summarize: feature dimension mismatch");
  const DtwResult r = dtw(ordering.data, s);
  std::vector<std::size_t> key(ordering.data.length(), 0);
  std::vector<double> best(ordering.data.length(), std::numeric_limits<double>::infinity());
  for (const auto& [t1, t2] : r.alignment) {
    const double dist = frame_distance(ordering.data.frame(t1), s.frame(t2));
    if (dist < best[t1]) {
      best[t1] = dist;
      key[t1] = t2;
    }
  }
  return key;
}

std::vector<std::size_t> uniform_summary(std::size_t length, std::size_t count) {
  std::vector<std::size_t> key(count);
  for (std::size_t i = 0; i < count; ++i) key[i] = (2 * i + 1) * length / (2 * count);
  return key;
}

double summary_accuracy(std::span<const std::size_t> key_frames, std::span<const std::size_t> truth,
                        const Transcript& transcript, std::size_t prototype_length) {
  if (key_frames.size() != transcript.size() * prototype_length) {
    throw InvalidArgument("summary has " + std::to_string(key_frames.size()) + " key frames, expected " +
                          std::to_string(transcript.size() * prototype_length));
  }
  if (key_frames.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < key_frames.size(); ++i) {
    if (key_frames[i] >= truth.size()) {
      throw InvalidArgument("key frame " + std::to_string(key_frames[i]) + " outside the video");
    }
    hits += truth[key_frames[i]] == transcript[i / prototype_length] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(key_frames.size());
}

}  // namespace dpdtw

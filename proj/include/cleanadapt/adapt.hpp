// cleanadapt/adapt.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cleanadapt/data.hpp"
#include "cleanadapt/eval.hpp"
#include "cleanadapt/model.hpp"
#include "cleanadapt/numerics.hpp"
#include "cleanadapt/rng.hpp"
#include "cleanadapt/selection.hpp"

namespace cleanadapt {

enum class AdaptMode { kCleanAdapt, kCleanAdaptTs, kFinetuneAll, kHighLossAblation };

struct AdaptConfig {
  double tau = 0.6;
  double epsilon = 0.99;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  LrSchedule lr_schedule{1e-2, {10, 20}, 0.1};
  double momentum = 0.9;
  AugmentationSpec augmentation;
  std::size_t hidden_dim = 64;  // used when a fresh model is initialized
  std::uint64_t seed = 0;
  AdaptMode mode = AdaptMode::kCleanAdapt;
  StreamMode stream_mode = StreamMode::kTwoStream;

  void Validate() const {
    if (!(tau > 0.0 && tau <= 1.0)) Fail(ErrorCode::kInvalidArgument, "config: tau must lie in (0,1]");
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
      Fail(ErrorCode::kInvalidArgument, "config: epsilon must lie in [0,1]");
    if (batch_size == 0) Fail(ErrorCode::kInvalidArgument, "config: batch_size must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0))
      Fail(ErrorCode::kInvalidArgument, "config: momentum must lie in [0,1)");
    if (hidden_dim == 0) Fail(ErrorCode::kInvalidArgument, "config: hidden_dim must be positive");
    lr_schedule.Validate();
    augmentation.Validate();
  }
};

// Sub-stream tags distinguishing the shuffles of the two training phases.
inline constexpr std::uint64_t kPretrainPhase = 0;
inline constexpr std::uint64_t kAdaptPhase = 1;

/// One labeled training example as seen by the optimizer loop.
struct TrainExample {
  Vector x_a;
  Vector x_m;
  std::size_t label = 0;
};

/// One epoch of minibatch SGD over `ids`. The ids are put in ascending order,
/// shuffled with the (seed, phase, epoch) stream and cut into batches; each
/// batch gradient is the mean per-sample gradient accumulated in ascending id
/// order. `after_step` runs after every optimizer step. Returns the mean
/// pre-step loss. lr == 0 leaves parameters and velocity untouched.
inline double TrainEpoch(TwoStreamModel &model, TwoStreamModel &velocity,
                         std::vector<std::size_t> ids,
                         const std::function<TrainExample(std::size_t)> &example,
                         const AdaptConfig &cfg, double lr, std::uint64_t phase,
                         std::size_t epoch,
                         const std::function<void(const TwoStreamModel &)> &after_step = {}) {
  std::sort(ids.begin(), ids.end());
  Rng shuffle = Rng::For(cfg.seed, Stream::kShuffle, phase, epoch);
  shuffle.Shuffle(std::span<std::size_t>(ids));
  TwoStreamModel grad = model.ZerosLike();
  double total = 0.0;
  for (std::size_t start = 0; start < ids.size(); start += cfg.batch_size) {
    const std::size_t end = std::min(ids.size(), start + cfg.batch_size);
    std::vector<std::size_t> batch(ids.begin() + static_cast<std::ptrdiff_t>(start),
                                   ids.begin() + static_cast<std::ptrdiff_t>(end));
    std::sort(batch.begin(), batch.end());
    for (auto &s : grad.streams) s.SetZero();
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (std::size_t id : batch) {
      const TrainExample ex = example(id);
      total += AccumulateLossGradient(model, ex.x_a, ex.x_m, ex.label, cfg.stream_mode, scale, grad);
    }
    if (lr > 0.0) {
      SgdMomentumStep(model, grad, velocity, lr, cfg.momentum);
      if (after_step) after_step(model);
    }
  }
  return ids.empty() ? 0.0 : total / static_cast<double>(ids.size());
}

struct PretrainResult {
  TwoStreamModel model;
  Vector epoch_losses;
};

/// Supervised training on the labeled source domain. The initial model is
/// drawn from the (seed, init) stream, so epochs == 0 returns that fresh
/// initialization.
inline PretrainResult PretrainSource(const Dataset &source, const AdaptConfig &cfg) {
  cfg.Validate();
  source.Validate();
  if (source.size() == 0) Fail(ErrorCode::kEmpty, "pretrain: empty source dataset");
  if (!source.AllLabeled()) Fail(ErrorCode::kUnlabeled, "unlabeled source");
  Rng init = Rng::For(cfg.seed, Stream::kInit);
  PretrainResult r{InitModel(source.num_classes, source.dim_a, source.dim_m, cfg.hidden_dim, init), {}};
  TwoStreamModel velocity = r.model.ZerosLike();
  std::vector<std::size_t> ids(source.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  auto example = [&](std::size_t id) {
    const auto &s = source.samples[id];
    return TrainExample{s.x_a, s.x_m, *s.label};
  };
  for (std::size_t e = 0; e < cfg.epochs; ++e)
    r.epoch_losses.push_back(TrainEpoch(r.model, velocity, ids, example, cfg,
                                        LrAt(cfg.lr_schedule, e), kPretrainPhase, e));
  return r;
}

inline void CheckCompatible(const TwoStreamModel &m, const UnlabeledDataset &target) {
  if (m.num_classes() != target.num_classes() || m.appearance().input_dim() != target.dim_a() ||
      m.motion().input_dim() != target.dim_m())
    Fail(ErrorCode::kDimMismatch, "model dimensions do not match the target dataset");
}

/// Pseudo-label = argmax of the prediction, loss = CE against it
/// (i.e. -ln max prob).
inline PseudoLabelStore GeneratePseudoLabels(const TwoStreamModel &m,
                                             const UnlabeledDataset &target,
                                             StreamMode mode = StreamMode::kTwoStream) {
  if (target.empty()) Fail(ErrorCode::kEmpty, "pseudo-labeling: empty target dataset");
  CheckCompatible(m, target);
  PseudoLabelStore store;
  store.num_classes = m.num_classes();
  store.labels.resize(target.size());
  store.losses.resize(target.size());
  store.selected.assign(target.size(), false);
  ParallelFor(target.size(), [&](std::size_t i) {
    const auto &s = target[i];
    const Vector p = Predict(m, s.x_a, s.x_m, mode);
    store.labels[i] = Argmax(p);
    store.losses[i] = CrossEntropy(p, store.labels[i]);
  });
  return store;
}

/// Same, evaluated on one weak-augmentation draw per sample taken from the
/// (seed, weak, id, epoch) stream.
inline PseudoLabelStore GeneratePseudoLabelsWeak(const TwoStreamModel &teacher,
                                                 const UnlabeledDataset &target,
                                                 const AugmentationSpec &aug,
                                                 std::uint64_t seed, std::size_t epoch,
                                                 StreamMode mode = StreamMode::kTwoStream) {
  if (target.empty()) Fail(ErrorCode::kEmpty, "pseudo-labeling: empty target dataset");
  CheckCompatible(teacher, target);
  PseudoLabelStore store;
  store.num_classes = teacher.num_classes();
  store.labels.resize(target.size());
  store.losses.resize(target.size());
  store.selected.assign(target.size(), false);
  ParallelFor(target.size(), [&](std::size_t i) {
    const auto &s = target[i];
    Rng rng = Rng::For(seed, Stream::kWeakAugment, s.id, epoch);
    const auto [a, m] = WeakAugmentPair(s.x_a, s.x_m, aug, rng);
    const Vector p = Predict(teacher, a, m, mode);
    store.labels[i] = Argmax(p);
    store.losses[i] = CrossEntropy(p, store.labels[i]);
  });
  return store;
}

/// One SGD pass over the kept ids with their pseudo-labels on unaugmented
/// features.
inline void FinetuneEpoch(TwoStreamModel &model, TwoStreamModel &velocity,
                          const UnlabeledDataset &target, const PseudoLabelStore &store,
                          const SelectionResult &selection, const AdaptConfig &cfg,
                          std::size_t epoch) {
  const auto ids = selection.SelectedIds();
  if (ids.empty()) Fail(ErrorCode::kEmpty, "no clean samples");
  auto example = [&](std::size_t id) {
    const auto &s = target[id];
    return TrainExample{s.x_a, s.x_m, store.labels[id]};
  };
  TrainEpoch(model, velocity, ids, example, cfg, LrAt(cfg.lr_schedule, epoch), kAdaptPhase, epoch);
}

/// Ground truth for diagnostics only. The adaptation loops never read it to
/// make decisions; it fills the label-dependent EpochRecord fields.
struct EvalMonitor {
  std::span<const std::size_t> target_labels;
  const Dataset *validation = nullptr;  // defaults to the target itself
};

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  std::optional<double> target_val_accuracy;   // after this epoch's update
  std::optional<double> student_val_accuracy;  // teacher-student runs only
  std::optional<double> pseudo_label_accuracy;  // at selection time
  std::optional<double> selection_precision;
  std::optional<double> mean_loss_clean_true;
  std::optional<double> mean_loss_noisy_true;
  std::size_t num_selected = 0;
};

struct AdaptResult {
  TwoStreamModel model;                  // evaluated model (teacher in TS mode)
  std::optional<TwoStreamModel> student;  // TS mode only
  std::vector<EpochRecord> records;
  PseudoLabelStore final_store;
};

namespace detail {

inline double AccuracyOn(const TwoStreamModel &m, const UnlabeledDataset &target,
                         const EvalMonitor &monitor, StreamMode mode) {
  if (monitor.validation) return Top1Accuracy(m, *monitor.validation, mode);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const auto &s = target[i];
    hits += Argmax(ForwardTwoStream(m, s.x_a, s.x_m, mode).logits) == monitor.target_labels[i];
  }
  return static_cast<double>(hits) / static_cast<double>(target.size());
}

inline bool Monitoring(const EvalMonitor *monitor, const UnlabeledDataset &target) {
  if (!monitor) return false;
  if (monitor->target_labels.size() != target.size())
    Fail(ErrorCode::kShapeMismatch, "eval monitor: label count does not match target");
  return true;
}

inline void RecordSelection(EpochRecord &rec, const PseudoLabelStore &store,
                            const SelectionResult &sel, std::span<const std::size_t> truth) {
  rec.pseudo_label_accuracy = PseudoLabelAccuracy(store, truth);
  rec.selection_precision = SelectionQualityOf(sel, store, truth).precision;
  const LossSplit split = LossSeparation(store, truth);
  rec.mean_loss_clean_true = split.clean_mean;
  rec.mean_loss_noisy_true = split.noisy_mean;
}

inline SelectionPolicy PolicyFor(AdaptMode mode) {
  switch (mode) {
    case AdaptMode::kHighLossAblation: return SelectionPolicy::kHighLoss;
    case AdaptMode::kFinetuneAll: return SelectionPolicy::kAll;
    default: return SelectionPolicy::kLowLoss;
  }
}

/// Shared loop for the single-model modes: refresh pseudo-labels and losses
/// over the full target set, select, fine-tune, record.
inline AdaptResult RunSingleModel(const TwoStreamModel &source_model,
                                  const UnlabeledDataset &target, const AdaptConfig &cfg,
                                  const EvalMonitor *monitor) {
  cfg.Validate();
  CheckCompatible(source_model, target);
  const bool monitoring = Monitoring(monitor, target);
  const SelectionPolicy policy = PolicyFor(cfg.mode);
  AdaptResult r{Snapshot(source_model), std::nullopt, {}, {}};
  TwoStreamModel velocity = r.model.ZerosLike();
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    PseudoLabelStore store = GeneratePseudoLabels(r.model, target, cfg.stream_mode);
    const SelectionResult sel = Select(store, cfg.tau, policy);
    MarkSelected(store, sel);
    EpochRecord rec;
    rec.epoch = e;
    rec.lr = LrAt(cfg.lr_schedule, e);
    rec.num_selected = sel.num_selected();
    if (monitoring) RecordSelection(rec, store, sel, monitor->target_labels);
    FinetuneEpoch(r.model, velocity, target, store, sel, cfg, e);
    if (monitoring) rec.target_val_accuracy = AccuracyOn(r.model, target, *monitor, cfg.stream_mode);
    r.records.push_back(rec);
    r.final_store = std::move(store);
  }
  return r;
}

inline void RequireMode(const AdaptConfig &cfg, AdaptMode mode, const char *entry) {
  if (cfg.mode != mode)
    Fail(ErrorCode::kInvalidArgument, std::string(entry) + ": config mode does not match entry point");
}

}  // namespace detail

// The adaptation entry points take the pre-trained parameters and a
// label-stripped target view. No source data can cross this boundary.

inline AdaptResult RunCleanAdapt(const TwoStreamModel &source_model, const UnlabeledDataset &target,
                                 const AdaptConfig &cfg, const EvalMonitor *monitor = nullptr) {
  detail::RequireMode(cfg, AdaptMode::kCleanAdapt, "cleanadapt");
  return detail::RunSingleModel(source_model, target, cfg, monitor);
}

/// Baseline that fine-tunes on every pseudo-labeled sample.
inline AdaptResult RunFinetuneAll(const TwoStreamModel &source_model, const UnlabeledDataset &target,
                                  const AdaptConfig &cfg, const EvalMonitor *monitor = nullptr) {
  detail::RequireMode(cfg, AdaptMode::kFinetuneAll, "finetune_all");
  return detail::RunSingleModel(source_model, target, cfg, monitor);
}

/// Ablation that keeps the per-class highest-loss samples instead.
inline AdaptResult RunHighLossAblation(const TwoStreamModel &source_model,
                                       const UnlabeledDataset &target, const AdaptConfig &cfg,
                                       const EvalMonitor *monitor = nullptr) {
  detail::RequireMode(cfg, AdaptMode::kHighLossAblation, "highloss_ablation");
  return detail::RunSingleModel(source_model, target, cfg, monitor);
}

/// Teacher-student variant. Each epoch the teacher labels one weak
/// augmentation draw per sample, the low-loss split is taken per class, and
/// the student trains on strong augmentations of the kept samples. The
/// teacher follows the student by EMA after every optimizer step and is the
/// reported model.
inline AdaptResult RunCleanAdaptTs(const TwoStreamModel &source_model,
                                   const UnlabeledDataset &target, const AdaptConfig &cfg,
                                   const EvalMonitor *monitor = nullptr) {
  detail::RequireMode(cfg, AdaptMode::kCleanAdaptTs, "cleanadapt_ts");
  cfg.Validate();
  CheckCompatible(source_model, target);
  const bool monitoring = detail::Monitoring(monitor, target);
  TeacherStudentPair pair{Snapshot(source_model), Snapshot(source_model), cfg.epsilon};
  TwoStreamModel velocity = pair.student.ZerosLike();
  AdaptResult r;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    PseudoLabelStore store =
        GeneratePseudoLabelsWeak(pair.teacher, target, cfg.augmentation, cfg.seed, e, cfg.stream_mode);
    const SelectionResult sel = SelectClean(store, cfg.tau);
    MarkSelected(store, sel);
    EpochRecord rec;
    rec.epoch = e;
    rec.lr = LrAt(cfg.lr_schedule, e);
    rec.num_selected = sel.num_selected();
    if (monitoring) detail::RecordSelection(rec, store, sel, monitor->target_labels);

    const auto ids = sel.SelectedIds();
    if (ids.empty()) Fail(ErrorCode::kEmpty, "no clean samples");
    auto example = [&](std::size_t id) {
      const auto &s = target[id];
      Rng rng = Rng::For(cfg.seed, Stream::kStrongAugment, s.id, e);
      auto [a, m] = StrongAugmentPair(s.x_a, s.x_m, cfg.augmentation, rng);
      return TrainExample{std::move(a), std::move(m), store.labels[id]};
    };
    TrainEpoch(pair.student, velocity, ids, example, cfg, rec.lr, kAdaptPhase, e,
               [&](const TwoStreamModel &) { EmaUpdate(pair); });
    if (monitoring) {
      rec.target_val_accuracy = detail::AccuracyOn(pair.teacher, target, *monitor, cfg.stream_mode);
      rec.student_val_accuracy = detail::AccuracyOn(pair.student, target, *monitor, cfg.stream_mode);
    }
    r.records.push_back(rec);
    r.final_store = std::move(store);
  }
  r.model = std::move(pair.teacher);
  r.student = std::move(pair.student);
  return r;
}

/// Dispatches on cfg.mode.
inline AdaptResult RunAdaptation(const TwoStreamModel &source_model, const UnlabeledDataset &target,
                                 const AdaptConfig &cfg, const EvalMonitor *monitor = nullptr) {
  switch (cfg.mode) {
    case AdaptMode::kCleanAdapt: return RunCleanAdapt(source_model, target, cfg, monitor);
    case AdaptMode::kCleanAdaptTs: return RunCleanAdaptTs(source_model, target, cfg, monitor);
    case AdaptMode::kFinetuneAll: return RunFinetuneAll(source_model, target, cfg, monitor);
    case AdaptMode::kHighLossAblation: return RunHighLossAblation(source_model, target, cfg, monitor);
  }
  Fail(ErrorCode::kInvalidArgument, "unknown adaptation mode");
}

}  // namespace cleanadapt

// cleanadapt/eval.hpp

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

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "cleanadapt/data.hpp"
#include "cleanadapt/model.hpp"
#include "cleanadapt/selection.hpp"

namespace cleanadapt {

inline std::vector<std::size_t> PredictLabels(const TwoStreamModel &m, const Dataset &d,
                                              StreamMode mode = StreamMode::kTwoStream) {
  std::vector<std::size_t> out(d.size());
  ParallelFor(d.size(), [&](std::size_t i) {
    const auto &s = d.samples[i];
    out[i] = Argmax(ForwardTwoStream(m, s.x_a, s.x_m, mode).logits);
  });
  return out;
}

/// Fraction of samples whose argmax prediction matches the label.
inline double Top1Accuracy(const TwoStreamModel &m, const Dataset &d,
                           StreamMode mode = StreamMode::kTwoStream) {
  const auto labels = TrueLabels(d);
  if (labels.empty()) Fail(ErrorCode::kEmpty, "accuracy: empty dataset");
  const auto pred = PredictLabels(m, d, mode);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += pred[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

inline double PseudoLabelAccuracy(const PseudoLabelStore &store,
                                  std::span<const std::size_t> truth) {
  if (truth.size() != store.size())
    Fail(ErrorCode::kShapeMismatch, "pseudo-label accuracy: label count mismatch");
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += store.labels[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

struct SelectionQuality {
  double precision = 0.0;   // selected samples whose pseudo-label is correct
  double recall = 0.0;      // correctly pseudo-labeled samples that got selected
  double clean_rate = 0.0;  // overall pseudo-label accuracy
};

inline SelectionQuality SelectionQualityOf(const SelectionResult &sel,
                                           const PseudoLabelStore &store,
                                           std::span<const std::size_t> truth) {
  if (truth.size() != store.size())
    Fail(ErrorCode::kShapeMismatch, "selection quality: label count mismatch");
  std::vector<bool> chosen(store.size(), false);
  for (const auto &c : sel.clean)
    for (std::size_t id : c) chosen[id] = true;
  std::size_t selected = 0, selected_clean = 0, clean = 0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    const bool ok = store.labels[i] == truth[i];
    clean += ok;
    selected += chosen[i];
    selected_clean += chosen[i] && ok;
  }
  SelectionQuality q;
  q.precision = selected ? static_cast<double>(selected_clean) / static_cast<double>(selected) : 0.0;
  // No correctly labeled samples at all: nothing could be missed.
  q.recall = clean ? static_cast<double>(selected_clean) / static_cast<double>(clean) : 1.0;
  q.clean_rate = store.size() ? static_cast<double>(clean) / static_cast<double>(store.size()) : 0.0;
  return q;
}

/// Mean pseudo-label loss over samples whose pseudo-label is right (clean) and
/// wrong (noisy). An empty partition yields nullopt.
struct LossSplit {
  std::optional<double> clean_mean;
  std::optional<double> noisy_mean;
};

inline LossSplit LossSeparation(std::span<const double> losses,
                                std::span<const std::size_t> pseudo,
                                std::span<const std::size_t> truth) {
  if (truth.size() != pseudo.size() || losses.size() != pseudo.size())
    Fail(ErrorCode::kShapeMismatch, "loss separation: size mismatch");
  double sum_clean = 0.0, sum_noisy = 0.0;
  std::size_t n_clean = 0, n_noisy = 0;
  for (std::size_t i = 0; i < pseudo.size(); ++i) {
    if (pseudo[i] == truth[i]) {
      sum_clean += losses[i];
      ++n_clean;
    } else {
      sum_noisy += losses[i];
      ++n_noisy;
    }
  }
  LossSplit r;
  if (n_clean) r.clean_mean = sum_clean / static_cast<double>(n_clean);
  if (n_noisy) r.noisy_mean = sum_noisy / static_cast<double>(n_noisy);
  return r;
}

inline LossSplit LossSeparation(const PseudoLabelStore &store,
                                std::span<const std::size_t> truth) {
  return LossSeparation(store.losses, store.labels, truth);
}

/// Recomputes each sample's CE against its pseudo-label with `m` on clean
/// (unaugmented) inputs before splitting.
inline LossSplit LossSeparation(const TwoStreamModel &m, const UnlabeledDataset &target,
                                const PseudoLabelStore &store,
                                std::span<const std::size_t> truth,
                                StreamMode mode = StreamMode::kTwoStream) {
  Vector losses(target.size());
  ParallelFor(target.size(), [&](std::size_t i) {
    const auto &s = target[i];
    losses[i] = CrossEntropy(Predict(m, s.x_a, s.x_m, mode), store.labels[i]);
  });
  return LossSeparation(losses, store.labels, truth);
}

// ---------------------------------------------------------------------------
// Cross-domain retrieval.

struct RetrievalReport {
  std::map<std::size_t, double> recall_at;
  std::size_t num_queries = 0;
};

/// Cosine similarity; defined as -1 whenever either vector is zero.
inline double CosineSimilarity(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return -1.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

struct Embedding {
  Vector appearance;
  Vector motion;
};

inline std::vector<Embedding> Embed(const TwoStreamModel &m, const Dataset &d) {
  std::vector<Embedding> out(d.size());
  ParallelFor(d.size(), [&](std::size_t i) {
    const auto &s = d.samples[i];
    out[i] = {ForwardStream(m.appearance(), s.x_a).hidden,
              ForwardStream(m.motion(), s.x_m).hidden};
  });
  return out;
}

/// Per-query rank (0-based) of the first same-class gallery item when the
/// gallery is ordered by descending similarity, ties by ascending gallery id.
/// Returns gallery.size() if no same-class item exists.
inline std::size_t FirstRelevantRank(std::span<const double> sims,
                                     std::span<const std::size_t> gallery_labels,
                                     std::size_t query_label) {
  std::size_t best = sims.size();
  for (std::size_t g = 0; g < sims.size(); ++g)
    if (gallery_labels[g] == query_label && (best == sims.size() || sims[g] > sims[best]))
      best = g;
  if (best == sims.size()) return best;
  std::size_t rank = 0;
  for (std::size_t g = 0; g < sims.size(); ++g)
    if (sims[g] > sims[best] || (sims[g] == sims[best] && g < best)) ++rank;
  return rank;
}

/// Queries come from the target domain, the gallery from the source domain.
/// Similarity is the per-modality cosine of penultimate features averaged
/// over the two streams. R@k is the fraction of queries with at least one
/// same-class gallery item among the top k.
inline RetrievalReport CrossDomainRetrieval(const TwoStreamModel &m, const Dataset &queries,
                                            const Dataset &gallery,
                                            std::span<const std::size_t> ks = {}) {
  static constexpr std::size_t kDefaultKs[] = {1, 5, 10};
  if (ks.empty()) ks = kDefaultKs;
  const auto query_labels = TrueLabels(queries);
  const auto gallery_labels = TrueLabels(gallery);
  if (queries.size() == 0) Fail(ErrorCode::kEmpty, "retrieval: no queries");
  for (std::size_t k : ks)
    if (k == 0 || k > gallery.size())
      Fail(ErrorCode::kInvalidArgument, "retrieval: k=" + std::to_string(k) +
                                            " exceeds gallery size " + std::to_string(gallery.size()));
  const auto qe = Embed(m, queries);
  const auto ge = Embed(m, gallery);
  std::vector<std::size_t> ranks(queries.size());
  ParallelFor(queries.size(), [&](std::size_t q) {
    Vector sims(gallery.size());
    for (std::size_t g = 0; g < gallery.size(); ++g)
      sims[g] = 0.5 * (CosineSimilarity(qe[q].appearance, ge[g].appearance) +
                       CosineSimilarity(qe[q].motion, ge[g].motion));
    ranks[q] = FirstRelevantRank(sims, gallery_labels, query_labels[q]);
  });
  RetrievalReport report;
  report.num_queries = queries.size();
  for (std::size_t k : ks) {
    std::size_t hits = 0;
    for (std::size_t r : ranks) hits += r < k;
    report.recall_at[k] = static_cast<double>(hits) / static_cast<double>(queries.size());
  }
  return report;
}

}  // namespace cleanadapt

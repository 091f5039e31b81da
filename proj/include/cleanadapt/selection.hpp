// cleanadapt/selection.hpp

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
#include <cstddef>
#include <vector>

#include "cleanadapt/error.hpp"
#include "cleanadapt/numerics.hpp"

namespace cleanadapt {

/// Per-sample pseudo-label, its CE loss under the predicting model, and
/// whether the current selection keeps the sample. Indexed by sample id.
struct PseudoLabelStore {
  std::vector<std::size_t> labels;
  Vector losses;
  std::vector<bool> selected;
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
};

/// Per pseudo-class split into kept (clean) and discarded (noisy) ids. Both
/// lists are ordered by ascending (loss, id).
struct SelectionResult {
  std::vector<std::vector<std::size_t>> clean;
  std::vector<std::vector<std::size_t>> noisy;
  std::vector<std::size_t> class_counts;
  double tau = 1.0;

  std::size_t num_selected() const {
    std::size_t n = 0;
    for (const auto &c : clean) n += c.size();
    return n;
  }

  /// All kept ids in ascending id order.
  std::vector<std::size_t> SelectedIds() const {
    std::vector<std::size_t> ids;
    for (const auto &c : clean) ids.insert(ids.end(), c.begin(), c.end());
    std::sort(ids.begin(), ids.end());
    return ids;
  }
};

/// max(1, floor(tau * n)) for n > 0. The 1e-9 nudge keeps products such as
/// 0.29 * 100 from flooring to 28.
inline std::size_t KeepCount(double tau, std::size_t n) {
  if (n == 0) return 0;
  const auto k = static_cast<std::size_t>(std::floor(tau * static_cast<double>(n) + 1e-9));
  return std::clamp<std::size_t>(k, 1, n);
}

enum class SelectionPolicy { kLowLoss, kHighLoss, kAll };

namespace detail {

inline std::vector<std::vector<std::size_t>> RankedGroups(const PseudoLabelStore &store) {
  std::vector<std::vector<std::size_t>> groups(store.num_classes);
  for (std::size_t id = 0; id < store.size(); ++id) {
    if (store.labels[id] >= store.num_classes)
      Fail(ErrorCode::kLabelOutOfRange, "pseudo-label out of range");
    groups[store.labels[id]].push_back(id);
  }
  for (auto &g : groups)
    std::stable_sort(g.begin(), g.end(), [&](std::size_t a, std::size_t b) {
      return store.losses[a] < store.losses[b];  // ids already ascending
    });
  return groups;
}

}  // namespace detail

/// Groups ids by pseudo-class, ranks each group by ascending (loss, id), and
/// keeps KeepCount(tau, n_c) of them: the head for kLowLoss, the tail for
/// kHighLoss, everything for kAll.
inline SelectionResult Select(const PseudoLabelStore &store, double tau,
                              SelectionPolicy policy) {
  if (!(tau > 0.0 && tau <= 1.0)) Fail(ErrorCode::kInvalidArgument, "keep-rate tau must lie in (0,1]");
  if (store.size() == 0) Fail(ErrorCode::kEmpty, "selection: empty pseudo-label store");
  if (store.losses.size() != store.size())
    Fail(ErrorCode::kShapeMismatch, "selection: losses/labels size mismatch");
  SelectionResult r;
  r.tau = policy == SelectionPolicy::kAll ? 1.0 : tau;
  r.clean.resize(store.num_classes);
  r.noisy.resize(store.num_classes);
  r.class_counts.resize(store.num_classes);
  auto groups = detail::RankedGroups(store);
  for (std::size_t c = 0; c < groups.size(); ++c) {
    const auto &g = groups[c];
    r.class_counts[c] = g.size();
    const std::size_t keep = policy == SelectionPolicy::kAll ? g.size() : KeepCount(tau, g.size());
    if (policy == SelectionPolicy::kHighLoss) {
      r.noisy[c].assign(g.begin(), g.end() - static_cast<std::ptrdiff_t>(keep));
      r.clean[c].assign(g.end() - static_cast<std::ptrdiff_t>(keep), g.end());
    } else {
      r.clean[c].assign(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(keep));
      r.noisy[c].assign(g.begin() + static_cast<std::ptrdiff_t>(keep), g.end());
    }
  }
  return r;
}

inline SelectionResult SelectClean(const PseudoLabelStore &store, double tau) {
  return Select(store, tau, SelectionPolicy::kLowLoss);
}

inline SelectionResult SelectHighLoss(const PseudoLabelStore &store, double tau) {
  return Select(store, tau, SelectionPolicy::kHighLoss);
}

inline void MarkSelected(PseudoLabelStore &store, const SelectionResult &sel) {
  store.selected.assign(store.size(), false);
  for (const auto &c : sel.clean)
    for (std::size_t id : c) store.selected[id] = true;
}

}  // namespace cleanadapt

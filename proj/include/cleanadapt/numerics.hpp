// cleanadapt/numerics.hpp

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
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "cleanadapt/error.hpp"

namespace cleanadapt {

using Vector = std::vector<double>;

/// Row-major dense matrix of doubles. Biases are stored as (n x 1) matrices so
/// every trainable tensor shares one type.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }

  double &operator()(std::size_t r, std::size_t c) {
    return values_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return values_[r * cols_ + c];
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * cols_, cols_);
  }

  bool SameShape(const DenseMatrix &other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  void SetZero() { std::fill(values_.begin(), values_.end(), 0.0); }

  bool AllFinite() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](double v) { return std::isfinite(v); });
  }

  bool operator==(const DenseMatrix &) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Index of the largest element; ties go to the lowest index.
inline std::size_t Argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

inline Vector Softmax(std::span<const double> logits) {
  if (logits.empty()) Fail(ErrorCode::kInvalidArgument, "empty logits");
  for (double x : logits)
    if (!std::isfinite(x)) Fail(ErrorCode::kNonFinite, "non-finite logits");
  const double max = logits[Argmax(logits)];
  Vector probs(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - max);
    sum += probs[i];
  }
  for (double &p : probs) p /= sum;
  return probs;
}

/// Floor added inside the log so saturated predictions never yield -ln 0.
inline constexpr double kLogFloor = 1e-12;

inline double CrossEntropy(std::span<const double> probs, std::size_t label) {
  if (label >= probs.size())
    Fail(ErrorCode::kLabelOutOfRange,
         "label " + std::to_string(label) + " out of range for " +
             std::to_string(probs.size()) + " classes");
  return -std::log(probs[label] + kLogFloor);
}

/// d/dlogits of CrossEntropy(Softmax(logits), label): softmax - one_hot.
inline Vector CeSoftmaxGradient(std::span<const double> logits,
                                std::size_t label) {
  if (label >= logits.size())
    Fail(ErrorCode::kLabelOutOfRange,
         "label " + std::to_string(label) + " out of range for " +
             std::to_string(logits.size()) + " classes");
  Vector grad = Softmax(logits);
  grad[label] -= 1.0;
  return grad;
}

/// v <- momentum * v + g;  theta <- theta - lr * v.
inline void SgdMomentumStep(DenseMatrix &param, const DenseMatrix &grad,
                            DenseMatrix &velocity, double lr, double momentum) {
  if (!param.SameShape(grad) || !param.SameShape(velocity))
    Fail(ErrorCode::kShapeMismatch, "sgd step: tensor shapes differ");
  auto p = param.values();
  auto g = grad.values();
  auto v = velocity.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    v[i] = momentum * v[i] + g[i];
    p[i] -= lr * v[i];
  }
}

inline void SgdMomentumStep(std::span<DenseMatrix> params,
                            std::span<const DenseMatrix> grads,
                            std::span<DenseMatrix> velocity, double lr,
                            double momentum) {
  if (params.size() != grads.size() || params.size() != velocity.size())
    Fail(ErrorCode::kShapeMismatch, "sgd step: tensor set sizes differ");
  if (!(lr > 0.0) || momentum < 0.0 || momentum >= 1.0)
    Fail(ErrorCode::kInvalidArgument, "sgd step: need lr > 0, momentum in [0,1)");
  for (std::size_t i = 0; i < params.size(); ++i)
    SgdMomentumStep(params[i], grads[i], velocity[i], lr, momentum);
}

/// Step decay: base_lr * decay_factor^(number of decay epochs <= epoch).
struct LrSchedule {
  double base_lr = 1e-2;
  std::vector<std::size_t> decay_epochs;
  double decay_factor = 0.1;

  void Validate() const {
    if (!(base_lr > 0.0) || !(decay_factor > 0.0))
      Fail(ErrorCode::kInvalidArgument, "lr schedule: rates must be positive");
    for (std::size_t i = 1; i < decay_epochs.size(); ++i)
      if (decay_epochs[i] <= decay_epochs[i - 1])
        Fail(ErrorCode::kInvalidArgument,
             "lr schedule: decay epochs must be strictly increasing");
  }
};

inline double LrAt(const LrSchedule &schedule, std::size_t epoch) {
  double lr = schedule.base_lr;
  for (std::size_t e : schedule.decay_epochs)
    if (e <= epoch) lr *= schedule.decay_factor;
  return lr;
}

// Worker-thread cap for the embarrassingly parallel evaluation passes. Work
// is split into contiguous index ranges and every result is written by
// index, so output does not depend on the thread count.
inline std::atomic<unsigned> &WorkerThreads() {
  static std::atomic<unsigned> threads{1};
  return threads;
}

template <typename Fn>
void ParallelFor(std::size_t n, Fn &&fn) {
  const unsigned threads =
      std::max(1u, std::min<unsigned>(WorkerThreads().load(),
                                      static_cast<unsigned>(std::max<std::size_t>(n / 64, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk, end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, &errors, t, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto &th : pool) th.join();
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace cleanadapt

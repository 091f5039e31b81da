// cleanadapt/model.hpp

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

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>

#include "cleanadapt/binary_io.hpp"
#include "cleanadapt/numerics.hpp"
#include "cleanadapt/rng.hpp"

namespace cleanadapt {

enum class StreamId { kAppearance = 0, kMotion = 1 };

/// Which stream logits enter the prediction.
enum class StreamMode { kTwoStream, kAppearanceOnly, kMotionOnly };

/// input_dim -> hidden_dim (tanh) -> num_classes logits.
///
/// tensors[0] hidden weight (hidden x input), tensors[1] hidden bias
/// (hidden x 1), tensors[2] output weight (classes x hidden), tensors[3]
/// output bias (classes x 1). The same type doubles as a gradient or
/// momentum buffer of matching shape.
struct StreamClassifier {
  std::array<DenseMatrix, 4> tensors;

  StreamClassifier() = default;
  StreamClassifier(std::size_t input_dim, std::size_t hidden_dim,
                   std::size_t num_classes)
      : tensors{DenseMatrix(hidden_dim, input_dim), DenseMatrix(hidden_dim, 1),
                DenseMatrix(num_classes, hidden_dim), DenseMatrix(num_classes, 1)} {}

  std::size_t input_dim() const { return tensors[0].cols(); }
  std::size_t hidden_dim() const { return tensors[0].rows(); }
  std::size_t num_classes() const { return tensors[2].rows(); }

  DenseMatrix &hidden_weight() { return tensors[0]; }
  DenseMatrix &hidden_bias() { return tensors[1]; }
  DenseMatrix &output_weight() { return tensors[2]; }
  DenseMatrix &output_bias() { return tensors[3]; }
  const DenseMatrix &hidden_weight() const { return tensors[0]; }
  const DenseMatrix &hidden_bias() const { return tensors[1]; }
  const DenseMatrix &output_weight() const { return tensors[2]; }
  const DenseMatrix &output_bias() const { return tensors[3]; }

  bool SameArchitecture(const StreamClassifier &o) const {
    for (std::size_t i = 0; i < tensors.size(); ++i)
      if (!tensors[i].SameShape(o.tensors[i])) return false;
    return true;
  }

  void SetZero() {
    for (auto &t : tensors) t.SetZero();
  }

  bool operator==(const StreamClassifier &) const = default;
};

struct StreamOutput {
  Vector logits;
  Vector hidden;  // penultimate (tanh) activations
};

inline StreamOutput ForwardStream(const StreamClassifier &c,
                                  std::span<const double> x) {
  if (x.size() != c.input_dim())
    Fail(ErrorCode::kDimMismatch, "stream input has " + std::to_string(x.size()) +
                                      " features, classifier expects " +
                                      std::to_string(c.input_dim()));
  const std::size_t h = c.hidden_dim(), k = c.num_classes();
  StreamOutput out{Vector(k), Vector(h)};
  for (std::size_t j = 0; j < h; ++j) {
    auto w = c.hidden_weight().row(j);
    double acc = c.hidden_bias()(j, 0);
    for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * x[i];
    out.hidden[j] = std::tanh(acc);
  }
  for (std::size_t r = 0; r < k; ++r) {
    auto w = c.output_weight().row(r);
    double acc = c.output_bias()(r, 0);
    for (std::size_t j = 0; j < h; ++j) acc += w[j] * out.hidden[j];
    out.logits[r] = acc;
  }
  return out;
}

/// grad += scale * d(loss)/d(params), given the forward pass and
/// d(loss)/d(logits).
inline void BackwardStream(const StreamClassifier &c, std::span<const double> x,
                           const StreamOutput &fwd,
                           std::span<const double> dlogits, double scale,
                           StreamClassifier &grad) {
  const std::size_t h = c.hidden_dim(), k = c.num_classes(), d = c.input_dim();
  Vector dpre(h, 0.0);
  for (std::size_t r = 0; r < k; ++r) {
    const double g = scale * dlogits[r];
    grad.output_bias()(r, 0) += g;
    for (std::size_t j = 0; j < h; ++j) {
      grad.output_weight()(r, j) += g * fwd.hidden[j];
      dpre[j] += g * c.output_weight()(r, j);
    }
  }
  for (std::size_t j = 0; j < h; ++j) {
    const double g = dpre[j] * (1.0 - fwd.hidden[j] * fwd.hidden[j]);
    grad.hidden_bias()(j, 0) += g;
    for (std::size_t i = 0; i < d; ++i) grad.hidden_weight()(j, i) += g * x[i];
  }
}

struct TwoStreamModel {
  std::array<StreamClassifier, 2> streams;

  TwoStreamModel() = default;
  TwoStreamModel(std::size_t num_classes, std::size_t dim_a, std::size_t dim_m,
                 std::size_t hidden_dim)
      : streams{StreamClassifier(dim_a, hidden_dim, num_classes),
                StreamClassifier(dim_m, hidden_dim, num_classes)} {}

  StreamClassifier &stream(StreamId s) { return streams[static_cast<int>(s)]; }
  const StreamClassifier &stream(StreamId s) const {
    return streams[static_cast<int>(s)];
  }
  StreamClassifier &appearance() { return streams[0]; }
  StreamClassifier &motion() { return streams[1]; }
  const StreamClassifier &appearance() const { return streams[0]; }
  const StreamClassifier &motion() const { return streams[1]; }

  std::size_t num_classes() const { return streams[0].num_classes(); }

  bool SameArchitecture(const TwoStreamModel &o) const {
    return streams[0].SameArchitecture(o.streams[0]) &&
           streams[1].SameArchitecture(o.streams[1]);
  }

  /// Zero-valued model with the same shapes (gradient / velocity buffer).
  TwoStreamModel ZerosLike() const {
    TwoStreamModel z = *this;
    for (auto &s : z.streams) s.SetZero();
    return z;
  }

  bool operator==(const TwoStreamModel &) const = default;
};

/// Deep copy. TwoStreamModel is a value type, so this is a plain copy; the
/// named function marks the points where a snapshot is semantically taken.
inline TwoStreamModel Snapshot(const TwoStreamModel &m) { return m; }

/// Glorot-uniform weights, zero biases.
inline TwoStreamModel InitModel(std::size_t num_classes, std::size_t dim_a,
                                std::size_t dim_m, std::size_t hidden_dim,
                                Rng &rng) {
  if (num_classes < 2 || dim_a == 0 || dim_m == 0 || hidden_dim == 0)
    Fail(ErrorCode::kInvalidArgument, "model: all dimensions must be positive, classes >= 2");
  TwoStreamModel m(num_classes, dim_a, dim_m, hidden_dim);
  for (auto &s : m.streams) {
    for (DenseMatrix *w : {&s.hidden_weight(), &s.output_weight()}) {
      const double a = std::sqrt(6.0 / static_cast<double>(w->rows() + w->cols()));
      for (double &v : w->values()) v = rng.Uniform(-a, a);
    }
  }
  return m;
}

struct TwoStreamOutput {
  StreamOutput appearance;
  StreamOutput motion;
  Vector logits;  // logits entering the softmax for the chosen mode
};

inline TwoStreamOutput ForwardTwoStream(const TwoStreamModel &m,
                                        std::span<const double> x_a,
                                        std::span<const double> x_m,
                                        StreamMode mode = StreamMode::kTwoStream) {
  TwoStreamOutput out;
  if (mode != StreamMode::kMotionOnly) out.appearance = ForwardStream(m.appearance(), x_a);
  if (mode != StreamMode::kAppearanceOnly) out.motion = ForwardStream(m.motion(), x_m);
  switch (mode) {
    case StreamMode::kTwoStream:
      out.logits = out.appearance.logits;
      for (std::size_t i = 0; i < out.logits.size(); ++i)
        out.logits[i] += out.motion.logits[i];
      break;
    case StreamMode::kAppearanceOnly: out.logits = out.appearance.logits; break;
    case StreamMode::kMotionOnly: out.logits = out.motion.logits; break;
  }
  return out;
}

/// softmax(f_a(x_a) + f_m(x_m)).
inline Vector FusePredict(const TwoStreamModel &m, std::span<const double> x_a,
                          std::span<const double> x_m) {
  return Softmax(ForwardTwoStream(m, x_a, x_m).logits);
}

inline Vector FusePredictSingle(const TwoStreamModel &m, StreamId stream,
                                std::span<const double> x) {
  return Softmax(ForwardStream(m.stream(stream), x).logits);
}

inline Vector Predict(const TwoStreamModel &m, std::span<const double> x_a,
                      std::span<const double> x_m, StreamMode mode) {
  return Softmax(ForwardTwoStream(m, x_a, x_m, mode).logits);
}

/// Adds scale * gradient of CE(softmax(logits), label) to grad and returns the
/// unscaled loss. In two-stream mode the fused-logit gradient flows to both
/// streams unchanged; single-stream modes touch only their own stream.
inline double AccumulateLossGradient(const TwoStreamModel &m,
                                     std::span<const double> x_a,
                                     std::span<const double> x_m,
                                     std::size_t label, StreamMode mode,
                                     double scale, TwoStreamModel &grad) {
  const TwoStreamOutput fwd = ForwardTwoStream(m, x_a, x_m, mode);
  const Vector dlogits = CeSoftmaxGradient(fwd.logits, label);
  const double loss = CrossEntropy(Softmax(fwd.logits), label);
  if (mode != StreamMode::kMotionOnly)
    BackwardStream(m.appearance(), x_a, fwd.appearance, dlogits, scale, grad.appearance());
  if (mode != StreamMode::kAppearanceOnly)
    BackwardStream(m.motion(), x_m, fwd.motion, dlogits, scale, grad.motion());
  return loss;
}

inline void SgdMomentumStep(TwoStreamModel &params, const TwoStreamModel &grads,
                            TwoStreamModel &velocity, double lr, double momentum) {
  if (!params.SameArchitecture(grads) || !params.SameArchitecture(velocity))
    Fail(ErrorCode::kShapeMismatch, "sgd step: model architectures differ");
  for (std::size_t s = 0; s < 2; ++s)
    SgdMomentumStep(std::span<DenseMatrix>(params.streams[s].tensors),
                    std::span<const DenseMatrix>(grads.streams[s].tensors),
                    std::span<DenseMatrix>(velocity.streams[s].tensors), lr, momentum);
}

struct TeacherStudentPair {
  TwoStreamModel teacher;
  TwoStreamModel student;
  double epsilon = 0.99;
};

/// teacher <- epsilon * teacher + (1 - epsilon) * student, elementwise.
inline void EmaUpdate(TwoStreamModel &teacher, const TwoStreamModel &student,
                      double epsilon) {
  if (!teacher.SameArchitecture(student))
    Fail(ErrorCode::kShapeMismatch, "ema update: teacher and student architectures differ");
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    Fail(ErrorCode::kInvalidArgument, "ema update: epsilon must lie in [0,1]");
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t t = 0; t < 4; ++t) {
      auto dst = teacher.streams[s].tensors[t].values();
      auto src = student.streams[s].tensors[t].values();
      for (std::size_t i = 0; i < dst.size(); ++i)
        dst[i] = epsilon * dst[i] + (1.0 - epsilon) * src[i];
    }
}

inline void EmaUpdate(TeacherStudentPair &pair) {
  EmaUpdate(pair.teacher, pair.student, pair.epsilon);
}

// Checkpoint layout (little-endian):
//   "CADP1"                                       5 bytes
//   u32 num_classes
//   u32 appearance input_dim, u32 appearance hidden_dim
//   u32 motion input_dim,     u32 motion hidden_dim
//   f64 parameters: appearance stream then motion stream, each as
//       hidden weight (row-major), hidden bias, output weight, output bias
inline constexpr std::string_view kCheckpointMagic = "CADP1";

inline std::string SerializeModel(const TwoStreamModel &m) {
  std::string out(kCheckpointMagic);
  PutU32(out, static_cast<std::uint32_t>(m.num_classes()));
  for (const auto &s : m.streams) {
    PutU32(out, static_cast<std::uint32_t>(s.input_dim()));
    PutU32(out, static_cast<std::uint32_t>(s.hidden_dim()));
  }
  for (const auto &s : m.streams)
    for (const auto &t : s.tensors)
      for (double v : t.values()) PutF64(out, v);
  return out;
}

inline TwoStreamModel DeserializeModel(std::string_view bytes,
                                       const std::string &what = "checkpoint") {
  ByteReader in(bytes, what);
  in.ExpectMagic(kCheckpointMagic);
  const std::uint32_t classes = in.U32();
  const std::uint32_t da = in.U32(), ha = in.U32();
  const std::uint32_t dm = in.U32(), hm = in.U32();
  if (classes < 2 || da == 0 || ha == 0 || dm == 0 || hm == 0)
    Fail(ErrorCode::kDimMismatch, what + ": invalid dimensions in header");
  TwoStreamModel m;
  m.streams[0] = StreamClassifier(da, ha, classes);
  m.streams[1] = StreamClassifier(dm, hm, classes);
  for (auto &s : m.streams)
    for (auto &t : s.tensors)
      for (double &v : t.values()) v = in.F64();
  if (!in.AtEnd())
    Fail(ErrorCode::kDimMismatch, what + ": trailing bytes after parameters");
  for (const auto &s : m.streams)
    for (const auto &t : s.tensors)
      if (!t.AllFinite()) Fail(ErrorCode::kNonFinite, what + ": non-finite parameter");
  return m;
}

inline void WriteCheckpoint(const TwoStreamModel &m, const std::string &path) {
  WriteFileBytes(path, SerializeModel(m));
}

inline TwoStreamModel ReadCheckpoint(const std::string &path) {
  return DeserializeModel(ReadFileBytes(path), path);
}

}  // namespace cleanadapt

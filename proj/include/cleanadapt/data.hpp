// cleanadapt/data.hpp

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
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cleanadapt/binary_io.hpp"
#include "cleanadapt/numerics.hpp"
#include "cleanadapt/rng.hpp"

namespace cleanadapt {

enum class Domain { kSource, kTarget };

struct TwoStreamSample {
  std::size_t id = 0;
  Vector x_a;
  Vector x_m;
  std::optional<std::size_t> label;

  bool operator==(const TwoStreamSample &) const = default;
};

struct Dataset {
  std::vector<TwoStreamSample> samples;
  std::size_t num_classes = 0;
  std::size_t dim_a = 0;
  std::size_t dim_m = 0;
  Domain domain = Domain::kTarget;

  std::size_t size() const { return samples.size(); }

  bool AllLabeled() const {
    return std::all_of(samples.begin(), samples.end(),
                       [](const TwoStreamSample &s) { return s.label.has_value(); });
  }
  bool AnyLabeled() const {
    return std::any_of(samples.begin(), samples.end(),
                       [](const TwoStreamSample &s) { return s.label.has_value(); });
  }

  /// Checks id density, dimension consistency, finite features and label
  /// range.
  void Validate() const {
    if (num_classes < 2) Fail(ErrorCode::kInvalidArgument, "dataset: need at least 2 classes");
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto &s = samples[i];
      if (s.id != i)
        Fail(ErrorCode::kInvalidArgument, "dataset: ids must be dense 0..n-1 in order");
      if (s.x_a.size() != dim_a || s.x_m.size() != dim_m)
        Fail(ErrorCode::kDimMismatch, "dataset: sample " + std::to_string(i) +
                                          " has inconsistent feature dimensions");
      for (double v : s.x_a)
        if (!std::isfinite(v)) Fail(ErrorCode::kNonFinite, "dataset: non-finite feature");
      for (double v : s.x_m)
        if (!std::isfinite(v)) Fail(ErrorCode::kNonFinite, "dataset: non-finite feature");
      if (s.label && *s.label >= num_classes)
        Fail(ErrorCode::kLabelOutOfRange, "dataset: sample " + std::to_string(i) +
                                              " label out of range");
    }
  }

  bool operator==(const Dataset &) const = default;
};

struct UnlabeledSample {
  std::size_t id = 0;
  Vector x_a;
  Vector x_m;
};

/// Feature-only view of a target dataset. Adaptation entry points take this
/// type, so ground truth cannot reach them.
class UnlabeledDataset {
 public:
  UnlabeledDataset() = default;
  explicit UnlabeledDataset(const Dataset &d)
      : num_classes_(d.num_classes), dim_a_(d.dim_a), dim_m_(d.dim_m) {
    samples_.reserve(d.size());
    for (const auto &s : d.samples) samples_.push_back({s.id, s.x_a, s.x_m});
  }

  const std::vector<UnlabeledSample> &samples() const { return samples_; }
  const UnlabeledSample &operator[](std::size_t i) const { return samples_[i]; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  std::size_t num_classes() const { return num_classes_; }
  std::size_t dim_a() const { return dim_a_; }
  std::size_t dim_m() const { return dim_m_; }

 private:
  std::vector<UnlabeledSample> samples_;
  std::size_t num_classes_ = 0, dim_a_ = 0, dim_m_ = 0;
};

inline UnlabeledDataset StripLabels(const Dataset &d) { return UnlabeledDataset(d); }

/// Ground-truth labels in id order; every sample must be labeled.
inline std::vector<std::size_t> TrueLabels(const Dataset &d) {
  std::vector<std::size_t> labels;
  labels.reserve(d.size());
  for (const auto &s : d.samples) {
    if (!s.label) Fail(ErrorCode::kUnlabeled, "dataset has unlabeled samples");
    labels.push_back(*s.label);
  }
  return labels;
}

// ---------------------------------------------------------------------------
// Synthetic two-domain generator.
//
// Class means sit on a circle of radius 3 in latent dims (0, 1). Target means
// are the source means rotated by `rotation` radians and then translated.
// With latent_dim >= 4 the rotation tilts the class circle out of its plane
// (planes (0,2) and (1,3) turn together), so the class ordering around the
// circle survives while the geometry shifts; with latent_dim < 4 the rotation
// acts inside the (0,1) plane. Either way rotation = pi maps every mean to
// its antipode.
//
// Each stream observes a fixed random linear projection of the latent plus
// independent view noise. With probability mirror_probability a sample is
// mirrored: the designated flip half of both feature vectors is negated (see
// FlipHalfBegin). This gives the data the same label-preserving flip symmetry
// that the weak augmentation exercises.

struct ShiftSpec {
  std::size_t num_classes = 8;
  std::size_t source_per_class = 200;
  std::size_t target_per_class = 200;
  std::size_t latent_dim = 8;
  std::size_t dim_a = 16;
  std::size_t dim_m = 16;
  double rotation = 0.5;
  Vector translation;  // padded with zeros to latent_dim
  double noise_std = 1.0;
  double view_noise_std = 0.3;
  double mirror_probability = 0.5;
  std::uint64_t seed = 0;

  void Validate() const {
    if (num_classes < 2) Fail(ErrorCode::kInvalidArgument, "shift spec: num_classes must be >= 2");
    if (source_per_class == 0 || target_per_class == 0)
      Fail(ErrorCode::kInvalidArgument, "shift spec: samples_per_class must be positive");
    if (latent_dim < 2) Fail(ErrorCode::kInvalidArgument, "shift spec: latent_dim must be >= 2");
    if (dim_a == 0 || dim_m == 0)
      Fail(ErrorCode::kInvalidArgument, "shift spec: feature dims must be positive");
    if (!(noise_std >= 0.0) || !(view_noise_std >= 0.0))
      Fail(ErrorCode::kInvalidArgument, "shift spec: noise stds must be >= 0");
    if (!(mirror_probability >= 0.0 && mirror_probability <= 1.0))
      Fail(ErrorCode::kInvalidArgument, "shift spec: mirror_probability must lie in [0,1]");
    if (translation.size() > latent_dim)
      Fail(ErrorCode::kInvalidArgument, "shift spec: translation longer than latent_dim");
    if (!std::isfinite(rotation)) Fail(ErrorCode::kNonFinite, "shift spec: rotation");
  }
};

/// First index of the designated flip half: coordinates [dim - dim/2, dim).
inline std::size_t FlipHalfBegin(std::size_t dim) { return dim - dim / 2; }

inline void NegateFlipHalf(Vector &x) {
  for (std::size_t i = FlipHalfBegin(x.size()); i < x.size(); ++i) x[i] = -x[i];
}

struct ShiftGeometry {
  std::vector<Vector> source_means;
  std::vector<Vector> target_means;
  DenseMatrix projection_a;  // dim_a x latent_dim
  DenseMatrix projection_m;  // dim_m x latent_dim
};

inline Vector RotateLatent(const Vector &v, double angle) {
  Vector out = v;
  const double c = std::cos(angle), s = std::sin(angle);
  auto turn = [&](std::size_t i, std::size_t j) {
    out[i] = c * v[i] - s * v[j];
    out[j] = s * v[i] + c * v[j];
  };
  if (v.size() >= 4) {
    turn(0, 2);
    turn(1, 3);
  } else {
    turn(0, 1);
  }
  return out;
}

inline ShiftGeometry MakeShiftGeometry(const ShiftSpec &spec) {
  spec.Validate();
  ShiftGeometry g;
  const std::size_t k = spec.num_classes, l = spec.latent_dim;
  for (std::size_t c = 0; c < k; ++c) {
    const double angle = 2.0 * M_PI * static_cast<double>(c) / static_cast<double>(k);
    Vector mu(l, 0.0);
    mu[0] = 3.0 * std::cos(angle);
    mu[1] = 3.0 * std::sin(angle);
    Vector tmu = RotateLatent(mu, spec.rotation);
    for (std::size_t i = 0; i < spec.translation.size(); ++i) tmu[i] += spec.translation[i];
    g.source_means.push_back(std::move(mu));
    g.target_means.push_back(std::move(tmu));
  }
  Rng rng = Rng::For(spec.seed, Stream::kDataStructure);
  const double scale = 1.0 / std::sqrt(static_cast<double>(l));
  g.projection_a = DenseMatrix(spec.dim_a, l);
  g.projection_m = DenseMatrix(spec.dim_m, l);
  for (double &v : g.projection_a.values()) v = rng.Normal(0.0, scale);
  for (double &v : g.projection_m.values()) v = rng.Normal(0.0, scale);
  return g;
}

/// Draws one domain. `split` selects an independent sample draw from the same
/// distributions (split 0 is the adaptation/training split).
inline Dataset SampleDomain(const ShiftSpec &spec, const ShiftGeometry &g,
                            Domain domain, std::uint64_t split = 0) {
  const auto &means = domain == Domain::kSource ? g.source_means : g.target_means;
  const std::size_t per_class =
      domain == Domain::kSource ? spec.source_per_class : spec.target_per_class;
  Dataset d;
  d.num_classes = spec.num_classes;
  d.dim_a = spec.dim_a;
  d.dim_m = spec.dim_m;
  d.domain = domain;
  Rng rng = Rng::For(spec.seed, Stream::kDataSamples,
                     domain == Domain::kSource ? 0 : 1, split);
  auto project = [&](const DenseMatrix &p, const Vector &z) {
    Vector x(p.rows());
    for (std::size_t r = 0; r < p.rows(); ++r) {
      double acc = 0.0;
      for (std::size_t j = 0; j < z.size(); ++j) acc += p(r, j) * z[j];
      x[r] = acc + rng.Normal(0.0, spec.view_noise_std);
    }
    return x;
  };
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
      Vector z = means[c];
      for (double &v : z) v += rng.Normal(0.0, spec.noise_std);
      TwoStreamSample s;
      s.id = d.samples.size();
      s.x_a = project(g.projection_a, z);
      s.x_m = project(g.projection_m, z);
      if (rng.Bernoulli(spec.mirror_probability)) {
        NegateFlipHalf(s.x_a);
        NegateFlipHalf(s.x_m);
      }
      s.label = c;
      d.samples.push_back(std::move(s));
    }
  }
  return d;
}

struct DomainPair {
  Dataset source;
  Dataset target;
};

inline DomainPair GenerateShiftPair(const ShiftSpec &spec, std::uint64_t split = 0) {
  const ShiftGeometry g = MakeShiftGeometry(spec);
  return {SampleDomain(spec, g, Domain::kSource, split),
          SampleDomain(spec, g, Domain::kTarget, split)};
}

// ---------------------------------------------------------------------------
// Feature-space augmentations.

struct AugmentationSpec {
  double weak_noise_std = 0.05;
  double flip_probability = 0.5;
  double strong_noise_std = 0.2;
  double dropout_fraction = 0.3;
  double scale_lo = 0.8;
  double scale_hi = 1.2;
  std::size_t strong_transforms = 2;

  static constexpr std::size_t kNumStrongTransforms = 3;

  void Validate() const {
    if (!(weak_noise_std >= 0.0) || !(strong_noise_std >= 0.0))
      Fail(ErrorCode::kInvalidArgument, "augmentation: noise stds must be >= 0");
    if (!(flip_probability >= 0.0 && flip_probability <= 1.0))
      Fail(ErrorCode::kInvalidArgument, "augmentation: flip_probability must lie in [0,1]");
    if (!(dropout_fraction >= 0.0 && dropout_fraction < 1.0))
      Fail(ErrorCode::kInvalidArgument, "augmentation: dropout_fraction must lie in [0,1)");
    if (!(scale_lo <= scale_hi))
      Fail(ErrorCode::kInvalidArgument, "augmentation: scale_lo must not exceed scale_hi");
    if (strong_transforms > kNumStrongTransforms)
      Fail(ErrorCode::kInvalidArgument, "augmentation: at most 3 strong transforms");
  }
};

enum class StrongTransform { kGaussianNoise = 0, kCoordinateDropout = 1, kGlobalScale = 2 };

/// Weak augmentation for one vector: gaussian jitter, plus negation of the
/// flip half with probability flip_probability.
inline Vector WeakAugment(std::span<const double> x, const AugmentationSpec &spec, Rng &rng) {
  const bool flip = rng.Bernoulli(spec.flip_probability);
  Vector out(x.begin(), x.end());
  if (spec.weak_noise_std > 0.0)
    for (double &v : out) v += rng.Normal(0.0, spec.weak_noise_std);
  if (flip) NegateFlipHalf(out);
  return out;
}

/// Weak augmentation of both streams of one sample; the flip decision is
/// shared across streams.
inline std::pair<Vector, Vector> WeakAugmentPair(std::span<const double> x_a,
                                                 std::span<const double> x_m,
                                                 const AugmentationSpec &spec, Rng &rng) {
  const bool flip = rng.Bernoulli(spec.flip_probability);
  Vector a(x_a.begin(), x_a.end()), m(x_m.begin(), x_m.end());
  if (spec.weak_noise_std > 0.0) {
    for (double &v : a) v += rng.Normal(0.0, spec.weak_noise_std);
    for (double &v : m) v += rng.Normal(0.0, spec.weak_noise_std);
  }
  if (flip) {
    NegateFlipHalf(a);
    NegateFlipHalf(m);
  }
  return {std::move(a), std::move(m)};
}

/// Uniformly random strong_transforms-subset of the three transforms, in
/// list order.
inline std::vector<StrongTransform> DrawStrongTransforms(const AugmentationSpec &spec,
                                                         Rng &rng) {
  std::array<int, AugmentationSpec::kNumStrongTransforms> all{0, 1, 2};
  for (std::size_t i = 0; i < spec.strong_transforms; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.UniformInt(all.size() - i));
    std::swap(all[i], all[j]);
  }
  std::sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(spec.strong_transforms));
  std::vector<StrongTransform> picked;
  for (std::size_t i = 0; i < spec.strong_transforms; ++i)
    picked.push_back(static_cast<StrongTransform>(all[i]));
  return picked;
}

inline std::size_t DropoutCount(double fraction, std::size_t dim) {
  // Nudge below the exact product so 0.3 * 10 does not ceil to 4.
  const double raw = fraction * static_cast<double>(dim);
  return std::min(dim, static_cast<std::size_t>(std::ceil(raw - 1e-9)));
}

inline void ApplyStrongTransform(StrongTransform t, Vector &x, double scale,
                                 const AugmentationSpec &spec, Rng &rng) {
  switch (t) {
    case StrongTransform::kGaussianNoise:
      if (spec.strong_noise_std > 0.0)
        for (double &v : x) v += rng.Normal(0.0, spec.strong_noise_std);
      break;
    case StrongTransform::kCoordinateDropout: {
      const std::size_t count = DropoutCount(spec.dropout_fraction, x.size());
      std::vector<std::size_t> idx(x.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.UniformInt(idx.size() - i));
        std::swap(idx[i], idx[j]);
        x[idx[i]] = 0.0;
      }
      break;
    }
    case StrongTransform::kGlobalScale:
      for (double &v : x) v *= scale;
      break;
  }
}

inline Vector StrongAugment(std::span<const double> x, const AugmentationSpec &spec, Rng &rng) {
  const auto picked = DrawStrongTransforms(spec, rng);
  const double scale = rng.Uniform(spec.scale_lo, spec.scale_hi);
  Vector out(x.begin(), x.end());
  for (auto t : picked) ApplyStrongTransform(t, out, scale, spec, rng);
  return out;
}

/// Strong augmentation of both streams: one transform selection and one
/// scale factor per sample, independent noise and dropout masks per stream.
inline std::pair<Vector, Vector> StrongAugmentPair(std::span<const double> x_a,
                                                   std::span<const double> x_m,
                                                   const AugmentationSpec &spec, Rng &rng) {
  const auto picked = DrawStrongTransforms(spec, rng);
  const double scale = rng.Uniform(spec.scale_lo, spec.scale_hi);
  Vector a(x_a.begin(), x_a.end()), m(x_m.begin(), x_m.end());
  for (auto t : picked) {
    ApplyStrongTransform(t, a, scale, spec, rng);
    ApplyStrongTransform(t, m, scale, spec, rng);
  }
  return {std::move(a), std::move(m)};
}

// ---------------------------------------------------------------------------
// Binary dataset file (little-endian):
//   "CADD1"
//   u32 n, u32 num_classes, u32 dim_a, u32 dim_m, u32 labels_present
//   per sample: dim_a f64, dim_m f64, then (if labels_present) u32 label
// A label of 0xffffffff marks an individual missing label.

inline constexpr std::string_view kDatasetMagic = "CADD1";
inline constexpr std::uint32_t kMissingLabel = 0xffffffffu;

inline std::string SerializeDataset(const Dataset &d) {
  d.Validate();
  std::string out(kDatasetMagic);
  const bool labels = d.AnyLabeled();
  PutU32(out, static_cast<std::uint32_t>(d.size()));
  PutU32(out, static_cast<std::uint32_t>(d.num_classes));
  PutU32(out, static_cast<std::uint32_t>(d.dim_a));
  PutU32(out, static_cast<std::uint32_t>(d.dim_m));
  PutU32(out, labels ? 1u : 0u);
  for (const auto &s : d.samples) {
    for (double v : s.x_a) PutF64(out, v);
    for (double v : s.x_m) PutF64(out, v);
    if (labels) PutU32(out, s.label ? static_cast<std::uint32_t>(*s.label) : kMissingLabel);
  }
  return out;
}

inline Dataset DeserializeDataset(std::string_view bytes, Domain domain,
                                  const std::string &what = "dataset") {
  ByteReader in(bytes, what);
  in.ExpectMagic(kDatasetMagic);
  const std::uint32_t n = in.U32(), classes = in.U32(), da = in.U32(), dm = in.U32();
  const std::uint32_t flag = in.U32();
  if (flag > 1) Fail(ErrorCode::kParse, what + ": labels_present flag must be 0 or 1");
  if (classes < 2 || da == 0 || dm == 0)
    Fail(ErrorCode::kDimMismatch, what + ": invalid header dimensions");
  const std::size_t per_sample = 8ull * (da + dm) + (flag ? 4 : 0);
  if (in.remaining() < per_sample * n)
    Fail(ErrorCode::kTruncated, what + ": truncated (header announces " +
                                    std::to_string(n) + " samples)");
  if (in.remaining() > per_sample * n)
    Fail(ErrorCode::kDimMismatch, what + ": payload size inconsistent with header dims");
  Dataset d;
  d.num_classes = classes;
  d.dim_a = da;
  d.dim_m = dm;
  d.domain = domain;
  d.samples.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    auto &s = d.samples[i];
    s.id = i;
    s.x_a.resize(da);
    s.x_m.resize(dm);
    for (double &v : s.x_a) v = in.F64();
    for (double &v : s.x_m) v = in.F64();
    if (flag) {
      const std::uint32_t label = in.U32();
      if (label != kMissingLabel) s.label = label;
    }
  }
  d.Validate();
  return d;
}

inline void WriteDataset(const Dataset &d, const std::string &path) {
  WriteFileBytes(path, SerializeDataset(d));
}

inline Dataset ReadDataset(const std::string &path, Domain domain = Domain::kTarget) {
  return DeserializeDataset(ReadFileBytes(path), domain, path);
}

/// CSV with header `id,label,a_0..a_{d_a-1},m_0..m_{d_m-1}`; label -1 means
/// absent. Rows may come in any order but ids must be a permutation of
/// 0..n-1. num_classes == 0 infers it as max label + 1.
inline Dataset ParseDatasetCsv(std::istream &in, std::size_t num_classes, Domain domain,
                               const std::string &what = "csv") {
  auto split = [](const std::string &line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      cells.push_back(cell);
    }
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) Fail(ErrorCode::kEmpty, what + ": empty csv");
  const auto header = split(line);
  if (header.size() < 4 || header[0] != "id" || header[1] != "label")
    Fail(ErrorCode::kParse, what + ": header must start with id,label");
  std::size_t da = 0, dm = 0;
  for (std::size_t i = 2; i < header.size(); ++i) {
    const std::string expect_a = "a_" + std::to_string(da);
    const std::string expect_m = "m_" + std::to_string(dm);
    if (dm == 0 && header[i] == expect_a) ++da;
    else if (header[i] == expect_m) ++dm;
    else Fail(ErrorCode::kParse, what + ": unexpected header column '" + header[i] + "'");
  }
  if (da == 0 || dm == 0) Fail(ErrorCode::kParse, what + ": need a_* and m_* columns");

  Dataset d;
  d.dim_a = da;
  d.dim_m = dm;
  d.domain = domain;
  std::vector<std::optional<TwoStreamSample>> rows;
  std::size_t max_label = 0;
  bool any_label = false;
  std::size_t line_no = 1;
  auto number = [&](const std::string &cell) {
    try {
      std::size_t used = 0;
      const double v = std::stod(cell, &used);
      if (used != cell.size()) throw std::invalid_argument(cell);
      return v;
    } catch (const std::exception &) {
      Fail(ErrorCode::kParse, what + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      Fail(ErrorCode::kDimMismatch, what + ":" + std::to_string(line_no) + ": expected " +
                                        std::to_string(header.size()) + " columns");
    const double id = number(cells[0]);
    const double label = number(cells[1]);
    if (id < 0 || id != std::floor(id))
      Fail(ErrorCode::kParse, what + ":" + std::to_string(line_no) + ": bad id");
    TwoStreamSample s;
    s.id = static_cast<std::size_t>(id);
    if (label != -1.0) {
      if (label < 0 || label != std::floor(label))
        Fail(ErrorCode::kParse, what + ":" + std::to_string(line_no) + ": bad label");
      s.label = static_cast<std::size_t>(label);
      max_label = std::max(max_label, *s.label);
      any_label = true;
    }
    for (std::size_t i = 0; i < da; ++i) s.x_a.push_back(number(cells[2 + i]));
    for (std::size_t i = 0; i < dm; ++i) s.x_m.push_back(number(cells[2 + da + i]));
    if (s.id >= rows.size()) rows.resize(s.id + 1);
    if (rows[s.id]) Fail(ErrorCode::kParse, what + ": duplicate id " + std::to_string(s.id));
    rows[s.id] = std::move(s);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i]) Fail(ErrorCode::kParse, what + ": ids are not dense (missing " + std::to_string(i) + ")");
    d.samples.push_back(std::move(*rows[i]));
  }
  if (num_classes == 0) {
    if (!any_label) Fail(ErrorCode::kUnlabeled, what + ": cannot infer num_classes without labels");
    num_classes = max_label + 1;
  }
  d.num_classes = num_classes;
  d.Validate();
  return d;
}

inline Dataset ReadDatasetCsv(const std::string &path, std::size_t num_classes,
                              Domain domain = Domain::kTarget) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path + " for reading");
  return ParseDatasetCsv(in, num_classes, domain, path);
}

inline std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void WriteDatasetCsv(const Dataset &d, std::ostream &out) {
  out << "id,label";
  for (std::size_t i = 0; i < d.dim_a; ++i) out << ",a_" << i;
  for (std::size_t i = 0; i < d.dim_m; ++i) out << ",m_" << i;
  out << '\n';
  for (const auto &s : d.samples) {
    out << s.id << ',' << (s.label ? std::to_string(*s.label) : std::string("-1"));
    for (double v : s.x_a) out << ',' << FormatDouble(v);
    for (double v : s.x_m) out << ',' << FormatDouble(v);
    out << '\n';
  }
}

}  // namespace cleanadapt

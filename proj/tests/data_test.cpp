// tests/data_test.cpp

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

#include <cmath>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "cleanadapt/adapt.hpp"
#include "cleanadapt/data.hpp"
#include "cleanadapt/eval.hpp"

namespace cleanadapt {
namespace {

ShiftSpec SmallSpec(std::uint64_t seed = 3) {
  ShiftSpec s;
  s.num_classes = 4;
  s.source_per_class = 20;
  s.target_per_class = 15;
  s.latent_dim = 6;
  s.dim_a = 8;
  s.dim_m = 5;
  s.translation = {0.5, 0.0, 0.3};
  s.seed = seed;
  return s;
}

ErrorCode CodeOf(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kInvalidArgument;
}

TEST(GenerateShiftPair, PureFunctionOfSpec) {
  const auto a = GenerateShiftPair(SmallSpec()), b = GenerateShiftPair(SmallSpec());
  EXPECT_EQ(a.source, b.source);
  EXPECT_EQ(a.target, b.target);
  EXPECT_EQ(SerializeDataset(a.target), SerializeDataset(b.target));
  EXPECT_NE(GenerateShiftPair(SmallSpec(4)).source, a.source);
}

TEST(GenerateShiftPair, ShapesLabelsAndDensity) {
  const auto p = GenerateShiftPair(SmallSpec());
  EXPECT_EQ(p.source.size(), 80u);
  EXPECT_EQ(p.target.size(), 60u);
  EXPECT_EQ(p.source.domain, Domain::kSource);
  EXPECT_EQ(p.target.domain, Domain::kTarget);
  for (const Dataset *d : {&p.source, &p.target}) {
    EXPECT_NO_THROW(d->Validate());
    EXPECT_TRUE(d->AllLabeled());
    std::map<std::size_t, int> counts;
    for (const auto &s : d->samples) ++counts[*s.label];
    EXPECT_EQ(counts.size(), 4u);
    for (auto [c, n] : counts) EXPECT_EQ(n * 4, static_cast<int>(d->size()));
    EXPECT_EQ(d->samples[0].x_a.size(), 8u);
    EXPECT_EQ(d->samples[0].x_m.size(), 5u);
  }
}

TEST(GenerateShiftPair, SplitsAreIndependentDraws) {
  const auto a = GenerateShiftPair(SmallSpec(), 0), b = GenerateShiftPair(SmallSpec(), 1);
  EXPECT_NE(a.target.samples[0].x_a, b.target.samples[0].x_a);
  EXPECT_EQ(TrueLabels(a.target), TrueLabels(b.target));
}

TEST(GenerateShiftPair, InvalidSpecs) {
  ShiftSpec s = SmallSpec();
  s.source_per_class = 0;
  EXPECT_EQ(CodeOf([&] { GenerateShiftPair(s); }), ErrorCode::kInvalidArgument);
  s = SmallSpec();
  s.target_per_class = 0;
  EXPECT_EQ(CodeOf([&] { GenerateShiftPair(s); }), ErrorCode::kInvalidArgument);
  s = SmallSpec();
  s.num_classes = 1;
  EXPECT_EQ(CodeOf([&] { GenerateShiftPair(s); }), ErrorCode::kInvalidArgument);
  s = SmallSpec();
  s.noise_std = -0.1;
  EXPECT_EQ(CodeOf([&] { GenerateShiftPair(s); }), ErrorCode::kInvalidArgument);
  s = SmallSpec();
  s.translation.assign(7, 1.0);
  EXPECT_EQ(CodeOf([&] { GenerateShiftPair(s); }), ErrorCode::kInvalidArgument);
}

TEST(ShiftGeometry, MeansOnRadiusThreeCircleAndRotationIsometry) {
  ShiftSpec s = SmallSpec();
  s.translation.clear();
  const ShiftGeometry g = MakeShiftGeometry(s);
  for (std::size_t c = 0; c < s.num_classes; ++c) {
    double ns = 0, nt = 0;
    for (double v : g.source_means[c]) ns += v * v;
    for (double v : g.target_means[c]) nt += v * v;
    EXPECT_NEAR(std::sqrt(ns), 3.0, 1e-12);
    EXPECT_NEAR(std::sqrt(nt), 3.0, 1e-12);
  }
}

TEST(ShiftGeometry, HalfTurnMapsToAntipodes) {
  for (std::size_t latent : {2u, 6u}) {
    ShiftSpec s = SmallSpec();
    s.latent_dim = latent;
    s.translation.clear();
    s.rotation = M_PI;
    const ShiftGeometry g = MakeShiftGeometry(s);
    for (std::size_t c = 0; c < s.num_classes; ++c)
      for (std::size_t i = 0; i < latent; ++i)
        EXPECT_NEAR(g.target_means[c][i], -g.source_means[c][i], 1e-12);
  }
}

// Nearest-centroid classification in feature space, fitted on the source.
double CentroidAccuracy(const Dataset &source, const Dataset &target) {
  const std::size_t dim = source.dim_a + source.dim_m;
  std::vector<Vector> centroid(source.num_classes, Vector(dim, 0.0));
  std::vector<double> count(source.num_classes, 0.0);
  auto features = [&](const TwoStreamSample &s) {
    Vector f = s.x_a;
    f.insert(f.end(), s.x_m.begin(), s.x_m.end());
    return f;
  };
  for (const auto &s : source.samples) {
    const Vector f = features(s);
    for (std::size_t i = 0; i < dim; ++i) centroid[*s.label][i] += f[i];
    count[*s.label] += 1;
  }
  for (std::size_t c = 0; c < centroid.size(); ++c)
    for (double &v : centroid[c]) v /= count[c];
  std::size_t hits = 0;
  for (const auto &s : target.samples) {
    const Vector f = features(s);
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t c = 0; c < centroid.size(); ++c) {
      double d = 0;
      for (std::size_t i = 0; i < dim; ++i) d += (f[i] - centroid[c][i]) * (f[i] - centroid[c][i]);
      if (d < best_d) best_d = d, best = c;
    }
    hits += best == *s.label;
  }
  return static_cast<double>(hits) / static_cast<double>(target.size());
}

TEST(GenerateShiftPair, HalfTurnFlipsTwoOppositeClasses) {
  ShiftSpec s;
  s.num_classes = 2;
  s.source_per_class = 200;
  s.target_per_class = 200;
  s.latent_dim = 4;
  s.dim_a = 6;
  s.dim_m = 6;
  s.rotation = M_PI;
  s.noise_std = 0.5;
  s.mirror_probability = 0.0;
  s.seed = 11;
  const auto p = GenerateShiftPair(s);
  EXPECT_GE(CentroidAccuracy(p.source, p.source), 0.97);
  EXPECT_LE(CentroidAccuracy(p.source, p.target), 0.03);
}

TEST(GenerateShiftPair, NoShiftMeansIndistinguishableDomains) {
  double diff = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ShiftSpec s;
    s.num_classes = 4;
    s.source_per_class = 400;
    s.target_per_class = 400;
    s.latent_dim = 6;
    s.dim_a = 8;
    s.dim_m = 8;
    s.rotation = 0.0;
    s.noise_std = 1.2;
    s.seed = seed;
    const auto train = GenerateShiftPair(s, 0);
    const auto test = GenerateShiftPair(s, 1);
    AdaptConfig cfg;
    cfg.seed = seed;
    cfg.epochs = 8;
    cfg.hidden_dim = 16;
    cfg.lr_schedule = {1e-2, {6}, 0.1};
    const TwoStreamModel m = PretrainSource(train.source, cfg).model;
    diff += Top1Accuracy(m, test.source) - Top1Accuracy(m, test.target);
  }
  EXPECT_LE(std::abs(diff / 5.0), 0.02);
}

TEST(GenerateShiftPair, MirrorNegatesFlipHalfOnly) {
  ShiftSpec s = SmallSpec();
  s.view_noise_std = 0.0;
  s.noise_std = 0.0;
  s.mirror_probability = 0.5;
  const auto p = GenerateShiftPair(s);
  // Zero noise: every sample equals its class prototype up to the mirror.
  int mirrored = 0;
  for (const auto &x : p.source.samples) {
    const auto &ref = p.source.samples[*x.label];
    const std::size_t h = FlipHalfBegin(8);
    for (std::size_t i = 0; i < h; ++i) EXPECT_NEAR(x.x_a[i], ref.x_a[i], 1e-12);
    const bool same = std::abs(x.x_a[h] - ref.x_a[h]) < 1e-12;
    mirrored += !same;
    for (std::size_t i = h; i < 8; ++i)
      EXPECT_NEAR(std::abs(x.x_a[i]), std::abs(ref.x_a[i]), 1e-12);
  }
  EXPECT_GT(mirrored, 10);
  EXPECT_LT(mirrored, 70);
}

TEST(FlipHalf, Layout) {
  EXPECT_EQ(FlipHalfBegin(10), 5u);
  EXPECT_EQ(FlipHalfBegin(5), 3u);
  Vector x{1, 2, 3, 4, 5};
  NegateFlipHalf(x);
  EXPECT_EQ(x, (Vector{1, 2, 3, -4, -5}));
}

TEST(WeakAugment, IdentityWithoutNoiseOrFlip) {
  AugmentationSpec a;
  a.weak_noise_std = 0.0;
  a.flip_probability = 0.0;
  Rng rng(5);
  const Vector x{1.5, -2.0, 0.25, 7.0};
  EXPECT_EQ(WeakAugment(x, a, rng), x);
  const auto [pa, pm] = WeakAugmentPair(x, Vector{3.0}, a, rng);
  EXPECT_EQ(pa, x);
  EXPECT_EQ(pm, Vector{3.0});
}

TEST(WeakAugment, MonteCarloMean) {
  AugmentationSpec a;
  a.flip_probability = 0.0;
  const Vector x{1.0, -0.5, 2.0, 0.0, 3.0, -4.0};
  const int n = 10000;
  Vector mean(x.size(), 0.0);
  Rng rng = Rng::For(9, Stream::kTest);
  for (int k = 0; k < n; ++k) {
    const Vector y = WeakAugment(x, a, rng);
    ASSERT_EQ(y.size(), x.size());
    for (std::size_t i = 0; i < x.size(); ++i) mean[i] += y[i] / n;
  }
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_LE(std::abs(mean[i] - x[i]), 3.0 * a.weak_noise_std / std::sqrt(n));
}

TEST(WeakAugment, FlipRateAndDeterminism) {
  AugmentationSpec a;
  a.weak_noise_std = 0.0;
  const Vector x{1, 1, 1, 1};
  Rng rng(21);
  int flips = 0;
  for (int k = 0; k < 10000; ++k) flips += WeakAugment(x, a, rng)[3] < 0;
  EXPECT_NEAR(flips / 10000.0, 0.5, 0.02);
  Rng r1(77), r2(77);
  EXPECT_EQ(WeakAugment(x, AugmentationSpec{}, r1), WeakAugment(x, AugmentationSpec{}, r2));
}

TEST(WeakAugmentPair, SharedFlip) {
  AugmentationSpec a;
  a.weak_noise_std = 0.0;
  Rng rng(8);
  for (int k = 0; k < 200; ++k) {
    const auto [pa, pm] = WeakAugmentPair(Vector{1, 1}, Vector{1, 1, 1}, a, rng);
    EXPECT_EQ(pa[1] < 0, pm[2] < 0);
  }
}

TEST(StrongAugment, IdentityWhenTransformsAreNeutral) {
  AugmentationSpec a;
  a.strong_noise_std = 0.0;
  a.dropout_fraction = 0.0;
  a.scale_lo = a.scale_hi = 1.0;
  a.strong_transforms = 3;
  Rng rng(4);
  const Vector x{0.5, -1.0, 2.0};
  for (int k = 0; k < 20; ++k) EXPECT_EQ(StrongAugment(x, a, rng), x);
}

TEST(StrongAugment, DropoutZeroesExactCount) {
  AugmentationSpec a;
  a.dropout_fraction = 0.5;
  Rng rng(6);
  for (int k = 0; k < 100; ++k) {
    Vector x(10, 1.0);
    ApplyStrongTransform(StrongTransform::kCoordinateDropout, x, 1.0, a, rng);
    EXPECT_EQ(std::count(x.begin(), x.end(), 0.0), 5);
  }
  EXPECT_EQ(DropoutCount(0.3, 10), 3u);
  EXPECT_EQ(DropoutCount(0.25, 10), 3u);
  EXPECT_EQ(DropoutCount(0.0, 10), 0u);
  EXPECT_EQ(DropoutCount(0.3, 16), 5u);
}

TEST(StrongAugment, ScaleOnlyNormExpectation) {
  AugmentationSpec a;
  a.strong_transforms = 1;
  a.strong_noise_std = 0.0;
  a.dropout_fraction = 0.0;
  const Vector x{3.0, 4.0};  // norm 5
  Rng rng(12);
  const int n = 10000;
  double sum = 0;
  for (int k = 0; k < n; ++k) {
    Vector y = x;
    ApplyStrongTransform(StrongTransform::kGlobalScale, y, rng.Uniform(a.scale_lo, a.scale_hi), a, rng);
    sum += std::hypot(y[0], y[1]);
  }
  // Uniform on [0.8, 1.2] has sd 0.4/sqrt(12).
  const double se = 5.0 * 0.4 / std::sqrt(12.0) / std::sqrt(n);
  EXPECT_NEAR(sum / n, 5.0 * 1.0, 4 * se);
}

TEST(StrongAugment, SelectionUniformOverSubsets) {
  AugmentationSpec a;  // 2 of 3: three subsets
  Rng rng = Rng::For(2, Stream::kTest);
  std::map<std::vector<StrongTransform>, int> counts;
  const int n = 10000;
  for (int k = 0; k < n; ++k) {
    const auto picked = DrawStrongTransforms(a, rng);
    ASSERT_EQ(picked.size(), 2u);
    ASSERT_TRUE(std::is_sorted(picked.begin(), picked.end()));
    ASSERT_NE(picked[0], picked[1]);
    ++counts[picked];
  }
  ASSERT_EQ(counts.size(), 3u);
  double chi2 = 0;
  for (auto &[k, c] : counts) chi2 += (c - n / 3.0) * (c - n / 3.0) / (n / 3.0);
  // Chi-square with 2 dof: P(X > 13.82) = 0.001.
  EXPECT_LT(chi2, 13.82);
}

TEST(StrongAugment, PreservesDimensionAndDeterminism) {
  const AugmentationSpec a;
  const Vector x(7, 1.0);
  Rng r1(3), r2(3);
  const Vector y = StrongAugment(x, a, r1);
  EXPECT_EQ(y.size(), 7u);
  EXPECT_EQ(y, StrongAugment(x, a, r2));
  const auto [pa, pm] = StrongAugmentPair(x, Vector(3, 1.0), a, r1);
  EXPECT_EQ(pa.size(), 7u);
  EXPECT_EQ(pm.size(), 3u);
}

TEST(AugmentationSpec, Validation) {
  AugmentationSpec a;
  a.dropout_fraction = 1.0;
  EXPECT_EQ(CodeOf([&] { a.Validate(); }), ErrorCode::kInvalidArgument);
  a = {};
  a.scale_lo = 2.0;
  EXPECT_EQ(CodeOf([&] { a.Validate(); }), ErrorCode::kInvalidArgument);
  a = {};
  a.strong_transforms = 4;
  EXPECT_EQ(CodeOf([&] { a.Validate(); }), ErrorCode::kInvalidArgument);
  a = {};
  a.weak_noise_std = -1.0;
  EXPECT_EQ(CodeOf([&] { a.Validate(); }), ErrorCode::kInvalidArgument);
}

TEST(DatasetFile, RoundTripByteIdentical) {
  const auto p = GenerateShiftPair(SmallSpec());
  const std::string bytes = SerializeDataset(p.target);
  EXPECT_EQ(bytes.substr(0, 5), "CADD1");
  EXPECT_EQ(bytes.size(), 5 + 5 * 4 + 60 * (8 * 13 + 4));
  const Dataset back = DeserializeDataset(bytes, Domain::kTarget);
  EXPECT_EQ(back, p.target);
  EXPECT_EQ(SerializeDataset(back), bytes);
}

TEST(DatasetFile, FileRoundTrip) {
  const auto p = GenerateShiftPair(SmallSpec());
  const std::string path = ::testing::TempDir() + "/roundtrip.cadd";
  WriteDataset(p.source, path);
  EXPECT_EQ(ReadDataset(path, Domain::kSource), p.source);
}

TEST(DatasetFile, LabelsAbsent) {
  Dataset d = GenerateShiftPair(SmallSpec()).target;
  for (auto &s : d.samples) s.label.reset();
  const std::string bytes = SerializeDataset(d);
  EXPECT_EQ(bytes.size(), 5 + 5 * 4 + 60 * 8 * 13);
  const Dataset back = DeserializeDataset(bytes, Domain::kTarget);
  EXPECT_FALSE(back.AnyLabeled());
  EXPECT_EQ(CodeOf([&] { TrueLabels(back); }), ErrorCode::kUnlabeled);
}

TEST(DatasetFile, PartialLabelsUseSentinel) {
  Dataset d = GenerateShiftPair(SmallSpec()).target;
  d.samples[3].label.reset();
  const Dataset back = DeserializeDataset(SerializeDataset(d), Domain::kTarget);
  EXPECT_FALSE(back.samples[3].label.has_value());
  EXPECT_EQ(back.samples[4].label, d.samples[4].label);
}

TEST(DatasetFile, DistinctErrorCodes) {
  const std::string good = SerializeDataset(GenerateShiftPair(SmallSpec()).target);
  EXPECT_EQ(CodeOf([&] { DeserializeDataset("CADX1" + good.substr(5), Domain::kTarget); }),
            ErrorCode::kBadMagic);
  EXPECT_EQ(CodeOf([&] { DeserializeDataset(good.substr(0, good.size() - 1), Domain::kTarget); }),
            ErrorCode::kTruncated);
  EXPECT_EQ(CodeOf([&] { DeserializeDataset(good.substr(0, 12), Domain::kTarget); }),
            ErrorCode::kTruncated);
  EXPECT_EQ(CodeOf([&] { DeserializeDataset(good + std::string(8, '\0'), Domain::kTarget); }),
            ErrorCode::kDimMismatch);
  EXPECT_EQ(CodeOf([&] { ReadDataset("/nonexistent/x.cadd"); }), ErrorCode::kIo);
}

TEST(DatasetFile, WriterRejectsInconsistentDims) {
  Dataset d = GenerateShiftPair(SmallSpec()).target;
  d.samples[2].x_m.push_back(0.0);
  EXPECT_EQ(CodeOf([&] { SerializeDataset(d); }), ErrorCode::kDimMismatch);
  d = GenerateShiftPair(SmallSpec()).target;
  d.samples[2].label = 9;
  EXPECT_EQ(CodeOf([&] { SerializeDataset(d); }), ErrorCode::kLabelOutOfRange);
}

TEST(DatasetCsv, RoundTripThroughCsv) {
  const Dataset d = GenerateShiftPair(SmallSpec()).target;
  std::stringstream ss;
  WriteDatasetCsv(d, ss);
  const Dataset back = ParseDatasetCsv(ss, d.num_classes, Domain::kTarget);
  EXPECT_EQ(back, d);
}

TEST(DatasetCsv, ShuffledRowsAndMissingLabels) {
  std::istringstream in(
      "id,label,a_0,a_1,m_0\n"
      "1,-1,0.5,0.25,3\n"
      "0,2,1,2,-1e-3\n");
  const Dataset d = ParseDatasetCsv(in, 0, Domain::kTarget);
  EXPECT_EQ(d.num_classes, 3u);
  EXPECT_EQ(d.dim_a, 2u);
  EXPECT_EQ(d.dim_m, 1u);
  EXPECT_EQ(d.samples[0].label, 2u);
  EXPECT_FALSE(d.samples[1].label);
  EXPECT_EQ(d.samples[1].x_a, (Vector{0.5, 0.25}));
}

TEST(DatasetCsv, Errors) {
  auto parse = [](const std::string &text) {
    std::istringstream in(text);
    return ParseDatasetCsv(in, 3, Domain::kTarget);
  };
  EXPECT_EQ(CodeOf([&] { parse(""); }), ErrorCode::kEmpty);
  EXPECT_EQ(CodeOf([&] { parse("id,lab,a_0,m_0\n"); }), ErrorCode::kParse);
  EXPECT_EQ(CodeOf([&] { parse("id,label,a_0,m_0\n0,1,2\n"); }), ErrorCode::kDimMismatch);
  EXPECT_EQ(CodeOf([&] { parse("id,label,a_0,m_0\n0,1,x,2\n"); }), ErrorCode::kParse);
  EXPECT_EQ(CodeOf([&] { parse("id,label,a_0,m_0\n1,1,1,2\n"); }), ErrorCode::kParse);
  EXPECT_EQ(CodeOf([&] { parse("id,label,a_0,m_0\n0,5,1,2\n"); }), ErrorCode::kLabelOutOfRange);
  EXPECT_EQ(CodeOf([&] { parse("id,label,a_0,m_0\n0,1,nan,2\n"); }), ErrorCode::kNonFinite);
}

TEST(UnlabeledDataset, CarriesFeaturesOnly) {
  const Dataset d = GenerateShiftPair(SmallSpec()).target;
  const UnlabeledDataset u = StripLabels(d);
  EXPECT_EQ(u.size(), d.size());
  EXPECT_EQ(u.num_classes(), 4u);
  EXPECT_EQ(u[7].x_a, d.samples[7].x_a);
  EXPECT_EQ(u[7].id, 7u);
}

}  // namespace
}  // namespace cleanadapt

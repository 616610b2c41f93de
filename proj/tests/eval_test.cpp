// Copyright 2026 The IID Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>

#include "iid/eval.hpp"
#include "oracles.hpp"
#include "support.hpp"

namespace iid {
namespace {

using testing::lmse_oracle;

TEST(Lmse, IdenticalIsZero) {
  const LinearImage a = testing::random_image(40, 30, 1);
  EXPECT_NEAR(lmse(a, a), 0.0, 1e-14);
}

TEST(Lmse, GlobalScaleIsAbsorbed) {
  const LinearImage a = testing::random_image(40, 30, 1);
  LinearImage b = a;
  for (auto& p : b.pixels()) p = 3.0 * p;
  EXPECT_NEAR(lmse(b, a), 0.0, 1e-14);
}

TEST(Lmse, MatchesNestedLoopOracle) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const LinearImage a = testing::random_image(64, 64, 2 * s), b = testing::random_image(64, 64, 2 * s + 1);
    const double want = lmse_oracle(a, b, 20);
    EXPECT_NEAR(lmse(a, b), want, 1e-10 * want);
  }
}

TEST(Lmse, OracleAgreesOnOddSizesWindowsAndMasks) {
  std::mt19937_64 rng(3);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const int w = 7 + s * 5, h = 11 + s * 3;
    const LinearImage a = testing::random_image(w, h, 10 + s), b = testing::random_image(w, h, 50 + s);
    BinaryMask m(w, h, 0);
    for (auto& v : m.pixels()) v = rng() % 4 != 0;
    for (int win : {2, 5, 20}) {
      const double want = lmse_oracle(a, b, win, &m);
      EXPECT_NEAR(lmse(a, b, win, &m), want, 1e-10 * want);
    }
  }
}

TEST(Lmse, ScaleInvariantAndNonNegative) {
  const LinearImage a = testing::random_image(33, 21, 7), b = testing::random_image(33, 21, 8);
  LinearImage c = a;
  for (auto& p : c.pixels()) p = 0.123 * p;
  EXPECT_NEAR(lmse(a, b), lmse(c, b), 1e-9);
  EXPECT_GE(lmse(a, b), 0.0);
  EXPECT_LE(lmse(a, b), 1.0);
}

TEST(Lmse, MaskedIdentityIsZero) {
  const LinearImage a = testing::random_image(30, 30, 2);
  LinearImage b = a;
  BinaryMask m(30, 30, 1);
  for (int x = 0; x < 30; ++x) {
    m.at(x, 0) = 0;
    b.at(x, 0) = {0.9, 0.0, 0.9};
  }
  EXPECT_NEAR(lmse(b, a, 20, &m), 0.0, 1e-14);
  EXPECT_GT(lmse(b, a), 0.0);
}

TEST(Lmse, Errors) {
  EXPECT_THROW(lmse(LinearImage(4, 4), LinearImage(4, 5)), InvalidInput);
  EXPECT_THROW(lmse(LinearImage(4, 4), LinearImage(4, 4), 1), InvalidParameter);
  BinaryMask m(3, 3, 1);
  EXPECT_THROW(lmse(LinearImage(4, 4), LinearImage(4, 4), 20, &m), InvalidInput);
}

// Reflectance whose left half is dark (0.2) and right half bright (0.8).
LinearImage two_tone() {
  LinearImage r(10, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) r.at(x, y) = x < 5 ? Rgb{0.2, 0.2, 0.2} : Rgb{0.8, 0.8, 0.8};
  return r;
}

const Judgment kLeftDarker{0.1, 0.5, 0.9, 0.5, Darker::A, 1.0};
const Judgment kSame{0.1, 0.1, 0.2, 0.9, Darker::EQUAL, 1.0};
const Judgment kRightDarker{0.9, 0.5, 0.1, 0.5, Darker::A, 1.0};

TEST(Whdr, AllAgreeAndAllDisagree) {
  const LinearImage r = two_tone();
  const std::vector<Judgment> agree{kLeftDarker, kSame};
  EXPECT_EQ(whdr(r, agree), 0.0);
  Judgment wrong_same = kSame;
  wrong_same.darker = Darker::B;
  const std::vector<Judgment> disagree{kRightDarker, wrong_same};
  EXPECT_EQ(whdr(r, disagree), 1.0);
}

TEST(Whdr, WeightedCount) {
  Judgment a = kLeftDarker, b = kRightDarker, c = kSame;
  a.weight = 1;
  b.weight = 1;
  c.weight = 2;
  const std::vector<Judgment> js{a, b, c};
  EXPECT_EQ(whdr(two_tone(), js), 0.25);
}

TEST(Whdr, DeltaBoundaries) {
  LinearImage r(2, 1);
  r[0] = {1.0, 1.0, 1.0};
  r[1] = {1.05, 1.05, 1.05};  // within 10%: equal
  const Judgment j{0.0, 0.0, 0.75, 0.0, Darker::EQUAL, 1.0};
  EXPECT_EQ(predicted_relation(r, j), Darker::EQUAL);
  r[1] = {1.2, 1.2, 1.2};
  EXPECT_EQ(predicted_relation(r, j), Darker::A);
  r[1] = {0.8, 0.8, 0.8};
  EXPECT_EQ(predicted_relation(r, j), Darker::B);
}

TEST(Whdr, ScaleInvariantAndBounded) {
  const LinearImage r = testing::random_image(16, 16, 4);
  LinearImage s = r;
  for (auto& p : s.pixels()) p = 7.0 * p;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Judgment> js;
  for (int i = 0; i < 200; ++i)
    js.push_back({u(rng), u(rng), u(rng), u(rng), static_cast<Darker>(rng() % 3), 0.1 + u(rng)});
  const double a = whdr(r, js);
  EXPECT_EQ(a, whdr(s, js));
  EXPECT_GE(a, 0.0);
  EXPECT_LE(a, 1.0);
}

TEST(Whdr, EmptyJudgmentsRejected) { EXPECT_THROW(whdr(two_tone(), std::vector<Judgment>{}), InvalidInput); }

TEST(CentralTendency, Examples) {
  const std::vector<double> one{5};
  const MetricSummary s1 = central_tendency(one);
  EXPECT_EQ(s1.mean, 5);
  EXPECT_EQ(s1.median, 5);
  EXPECT_EQ(s1.trimean, 5);
  const std::vector<double> seven{1, 2, 3, 4, 5, 6, 7};
  const MetricSummary s7 = central_tendency(seven);
  EXPECT_EQ(s7.mean, 4);
  EXPECT_EQ(s7.median, 4);
  EXPECT_EQ(s7.trimean, 4);
  const std::vector<double> c(9, 0.37);
  const MetricSummary sc = central_tendency(c);
  EXPECT_DOUBLE_EQ(sc.mean, 0.37);
  EXPECT_DOUBLE_EQ(sc.median, 0.37);
  EXPECT_DOUBLE_EQ(sc.trimean, 0.37);
}

TEST(CentralTendency, EvenCountAndOrdering) {
  const std::vector<double> v{4, 1, 3, 2};
  const MetricSummary s = central_tendency(v);
  EXPECT_DOUBLE_EQ(s.median, 2.5);
  // Quartiles 1.75 and 3.25 by linear interpolation.
  EXPECT_DOUBLE_EQ(s.trimean, (1.75 + 5.0 + 3.25) / 4);
  EXPECT_THROW(central_tendency(std::vector<double>{}), InvalidInput);
}

TEST(CentralTendency, TrimeanWithinQuartilesProperty) {
  std::mt19937_64 rng(2);
  std::exponential_distribution<double> e(1.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(1 + rng() % 30);
    for (double& x : v) x = e(rng);
    const MetricSummary s = central_tendency(v);
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_GE(s.trimean, quantile_sorted(sorted, 0.25) - 1e-12);
    EXPECT_LE(s.trimean, quantile_sorted(sorted, 0.75) + 1e-12);
    EXPECT_GE(s.median, sorted.front());
    EXPECT_LE(s.median, sorted.back());
  }
}

const char* kDoc = R"({
  "intrinsic_points": [
    {"id": 1, "x": 0.25, "y": 0.5, "opaque": true},
    {"id": 2, "x": 0.75, "y": 0.5, "opaque": true},
    {"id": 3, "x": 0.5, "y": 0.1, "opaque": false}
  ],
  "intrinsic_comparisons": [
    {"point1": 1, "point2": 2, "darker": "1", "darker_score": 0.8},
    {"point1": 2, "point2": 3, "darker": "E", "darker_score": 0.9},
    {"point1": 2, "point2": 1, "darker": "2", "darker_score": 0.0}
  ]
})";

TEST(IiwJudgments, ParsesReferencedPointsAndSkipsUnusable) {
  const auto js = parse_iiw_judgments(kDoc);
  ASSERT_EQ(js.size(), 1u);
  EXPECT_EQ(js[0], (Judgment{0.25, 0.5, 0.75, 0.5, Darker::A, 0.8}));
}

TEST(IiwJudgments, EmptyComparisonList) {
  EXPECT_TRUE(parse_iiw_judgments(R"({"intrinsic_points": [], "intrinsic_comparisons": []})").empty());
}

TEST(IiwJudgments, RoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Judgment> js;
  for (int i = 0; i < 50; ++i) js.push_back({u(rng), u(rng), u(rng), u(rng), static_cast<Darker>(rng() % 3), 0.05 + u(rng)});
  EXPECT_EQ(parse_iiw_judgments(serialize_iiw_judgments(js)), js);
}

TEST(IiwJudgments, MalformedDocumentsReportLocation) {
  auto message = [](const std::string& text) {
    try {
      parse_iiw_judgments(text, "doc.json");
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("{not json").find("doc.json"), std::string::npos);
  EXPECT_NE(message("[]").find("$"), std::string::npos);
  const std::string unknown = message(R"({"intrinsic_points": [{"id": 1, "x": 0, "y": 0}],
      "intrinsic_comparisons": [{"point1": 1, "point2": 9, "darker": "1", "darker_score": 1}]})");
  EXPECT_NE(unknown.find("intrinsic_comparisons[0]"), std::string::npos) << unknown;
  const std::string bad_darker = message(R"({"intrinsic_points": [{"id": 1, "x": 0, "y": 0}],
      "intrinsic_comparisons": [{"point1": 1, "point2": 1, "darker": "X", "darker_score": 1}]})");
  EXPECT_NE(bad_darker.find("darker"), std::string::npos);
  const std::string bad_point = message(R"({"intrinsic_points": [{"id": 1, "x": 2, "y": 0}]})");
  EXPECT_NE(bad_point.find("intrinsic_points[0]"), std::string::npos);
}

}  // namespace
}  // namespace iid

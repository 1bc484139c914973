#include <doctest.h>

#include <cmath>
#include <random>

#include "driftlab/errors.hpp"
#include "driftlab/eval.hpp"
#include "test_support.hpp"

using namespace driftlab;

TEST_CASE("classify_fv_svm: argmax with tie to the lowest class") {
  std::vector<LinearSvm> svms(3);
  // decisions for x = (1): -1, 2, 0
  svms[0].w = {-1.0};
  svms[1].w = {2.0};
  svms[2].w = {0.0};
  std::vector<double> x = {1.0};
  CHECK(classify_fv_svm(svms, x) == 1);

  for (auto& s : svms) {
    s.w = {0.0};
    s.b = 0.5;
  }
  CHECK(classify_fv_svm(svms, x) == 0);  // all equal -> class 0
}

TEST_CASE("classify_fv_svm matches a brute-force scan") {
  std::mt19937_64 rng(55);
  auto u = [&] { return static_cast<double>(rng() % 2000) / 500.0 - 2.0; };
  for (int t = 0; t < 60; ++t) {
    std::vector<LinearSvm> svms(4);
    for (auto& s : svms) {
      s.w = {u(), u(), u()};
      s.b = u();
    }
    std::vector<double> x = {u(), u(),
                           u()};
    int best = 0;
    double best_v = -1e300;
    for (int c = 0; c < 4; ++c) {
      const double v = svms[c].w[0] * x[0] + svms[c].w[1] * x[1] + svms[c].w[2] * x[2] + svms[c].b;
      if (v > best_v) {
        best_v = v;
        best = c;
      }
    }
    CHECK(classify_fv_svm(svms, x) == best);
  }
}

TEST_CASE("metrics: reference F-score recomputation") {
  // a synthetic confusion yielding p = 11/15 = .733..., r = 11/12 = .9166...
  std::vector<int> truth, pred;
  for (int i = 0; i < 11; ++i) { truth.push_back(0); pred.push_back(0); }  // tp
  truth.push_back(0); pred.push_back(1);                                   // fn
  for (int i = 0; i < 4; ++i) { truth.push_back(1); pred.push_back(0); }   // fp
  for (int i = 0; i < 10; ++i) { truth.push_back(1); pred.push_back(1); }

  const auto m = metrics(pred, truth, 0);
  CHECK(m.precision == doctest::Approx(0.733).epsilon(1e-3));
  CHECK(m.recall == doctest::Approx(0.9166).epsilon(1e-3));
  // 2pr/(p+r) with p=.733, r=.916 lands on .814
  CHECK(m.f_score == doctest::Approx(0.814).epsilon(2e-3));
  CHECK(m.tp == 11);
  CHECK(m.fp == 4);
  CHECK(m.fn == 1);
}

TEST_CASE("metrics: perfect and degenerate cases") {
  std::vector<int> truth = {0, 1, 0, 1};
  CHECK(metrics(truth, truth, 0).precision == 1.0);
  CHECK(metrics(truth, truth, 0).recall == 1.0);
  CHECK(metrics(truth, truth, 0).f_score == 1.0);

  // no predicted positives: sentinel zeros, no division blowup
  std::vector<int> none = {1, 1, 1, 1};
  const auto m = metrics(none, truth, 0);
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.f_score == 0.0);

  CHECK_THROWS_AS(metrics({0}, {0, 1}, 0), ContractError);
}

TEST_CASE("metrics: tp+fn equals the true class support, order-invariant") {
  std::mt19937_64 rng(66);
  for (int t = 0; t < 30; ++t) {
    const int n = 1 + static_cast<int>(rng() % 40);
    std::vector<int> truth(n), pred(n);
    for (int i = 0; i < n; ++i) {
      truth[i] = static_cast<int>(rng() % 3);
      pred[i] = static_cast<int>(rng() % 3);
    }
    const auto m = metrics(pred, truth, 1);
    long support = 0;
    for (int v : truth) support += v == 1;
    CHECK(m.tp + m.fn == support);

    // permuting samples changes nothing
    std::vector<std::size_t> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> truth2(n), pred2(n);
    for (int i = 0; i < n; ++i) {
      truth2[i] = truth[perm[i]];
      pred2[i] = pred[perm[i]];
    }
    const auto m2 = metrics(pred2, truth2, 1);
    CHECK(m.precision == m2.precision);
    CHECK(m.recall == m2.recall);
    CHECK(m.tp == m2.tp);
  }
}

TEST_CASE("roc: separating and constant scores") {
  const auto perfect = roc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0});
  CHECK(perfect.auc == doctest::Approx(1.0));
  CHECK(perfect.points.front() == std::array<double, 2>{0.0, 0.0});
  CHECK(perfect.points.back() == std::array<double, 2>{1.0, 1.0});

  const auto flat = roc({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0});
  CHECK(flat.auc == doctest::Approx(0.5));
  CHECK(flat.points.size() == 2);  // one diagonal step

  CHECK_THROWS_AS(roc({0.1, 0.2}, {1, 1}), ContractError);
}

TEST_CASE("roc: AUC equals exhaustive pair counting on small instances") {
  std::mt19937_64 rng(99);
  int checked = 0;
  for (int n = 2; n <= 10; ++n) {
    for (int trial = 0; trial < 60; ++trial) {
      std::vector<int> truth(n);
      bool has_pos = false, has_neg = false;
      for (auto& t : truth) {
        t = static_cast<int>(rng() % 2);
        (t ? has_pos : has_neg) = true;
      }
      if (!has_pos || !has_neg) continue;
      std::vector<double> scores(n);
      for (auto& s : scores) s = static_cast<double>(rng() % 4);  // ties likely
      const auto curve = roc(scores, truth);
      const double want = testsupport::auc_pair_counting(scores, truth);
      CHECK(curve.auc == doctest::Approx(want).epsilon(1e-12));
      ++checked;
    }
  }
  CHECK(checked > 300);
}

TEST_CASE("roc: curve is monotone and well-formed") {
  std::mt19937_64 rng(7);
  std::vector<double> scores;
  std::vector<int> truth;
  for (int i = 0; i < 50; ++i) {
    scores.push_back(static_cast<double>(rng() % 10));
    truth.push_back(static_cast<int>(rng() % 2));
  }
  truth[0] = 1;
  truth[1] = 0;
  const auto curve = roc(scores, truth);
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    CHECK(curve.points[i][0] >= curve.points[i - 1][0]);
    CHECK(curve.points[i][1] >= curve.points[i - 1][1]);
  }
  CHECK(curve.auc >= 0.0);
  CHECK(curve.auc <= 1.0);
}

TEST_CASE("pca: planar data keeps pairwise distances") {
  std::mt19937_64 rng(17);
  auto u = [&] { return static_cast<double>(rng() % 2000) / 1000.0 - 1.0; };
  // orthonormal pair in 6 dimensions
  std::vector<double> e1 = {1, 0, 0, 0, 0, 0}, e2 = {0, 0, 1, 0, 0, 0};
  std::vector<std::vector<double>> data;
  std::vector<std::array<double, 2>> plane_coords;
  for (int i = 0; i < 40; ++i) {
    const double a = 3.0 * u(), b = 1.0 * u();
    plane_coords.push_back({a, b});
    std::vector<double> v(6, 0.0);
    for (int j = 0; j < 6; ++j) v[j] = a * e1[j] + b * e2[j] + 0.5;  // constant offset
    data.push_back(v);
  }
  const auto proj = pca_project_2d(data);
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t j = i + 1; j < data.size(); ++j) {
      const double orig = std::hypot(plane_coords[i][0] - plane_coords[j][0],
                                     plane_coords[i][1] - plane_coords[j][1]);
      const double got = std::hypot(proj[i][0] - proj[j][0], proj[i][1] - proj[j][1]);
      CHECK(got == doctest::Approx(orig).epsilon(1e-6));
    }
}

TEST_CASE("pca: duplicated dataset projects identically (sign-canonical)") {
  std::mt19937_64 rng(23);
  std::vector<std::vector<double>> data;
  for (int i = 0; i < 15; ++i) {
    std::vector<double> v(4);
    for (auto& x : v) x = static_cast<double>(rng() % 1000) / 100.0;
    data.push_back(v);
  }
  auto doubled = data;
  doubled.insert(doubled.end(), data.begin(), data.end());
  const auto p1 = pca_project_2d(data);
  const auto p2 = pca_project_2d(doubled);
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(p1[i][0] == doctest::Approx(p2[i][0]).epsilon(1e-6));
    CHECK(p1[i][1] == doctest::Approx(p2[i][1]).epsilon(1e-6));
  }
}

TEST_CASE("pca: a single repeated point projects to the origin") {
  std::vector<std::vector<double>> data(5, std::vector<double>{3.0, 1.0, 4.0});
  const auto proj = pca_project_2d(data);
  for (const auto& p : proj) {
    CHECK(p[0] == 0.0);
    CHECK(p[1] == 0.0);
  }
}

TEST_CASE("anchor_score is monotone in distance") {
  auto net = init_net(2, 2, 2, 0.0, 1);
  net.b2 = {0.0, 0.0};
  ClassAnchors anchors;
  anchors.d_w = 2;
  anchors.vectors = {{1.0, 0.0}, {5.0, 0.0}};
  std::vector<double> x = {0.0, 0.0};
  CHECK(anchor_score(net, x, anchors, 0) > anchor_score(net, x, anchors, 1));
  CHECK(anchor_score(net, x, anchors, 0) == doctest::Approx(-1.0));
}

TEST_CASE("csv serializers") {
  RocCurve curve;
  curve.points = {{0, 0}, {0.5, 1.0}, {1, 1}};
  curve.auc = 0.75;
  const auto csv = roc_csv(curve);
  CHECK(csv.find("# auc=0.75") == 0);
  CHECK(csv.find("fpr,tpr") != std::string::npos);
  CHECK(csv.find("0.5,1") != std::string::npos);

  std::vector<ScatterPoint> pts = {{1.5, -2.0, 3, "auxiliary"}, {0.0, 0.25, 1, "target_train"}};
  const auto scsv = scatter_csv(pts);
  CHECK(scsv.find("x,y,label,domain") == 0);
  CHECK(scsv.find("1.5,-2,3,auxiliary") != std::string::npos);
  const auto svg = scatter_svg(pts);
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("circle") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("macro_average") {
  std::vector<ClassMetrics> per_class(2);
  per_class[0].precision = 1.0;
  per_class[0].recall = 0.5;
  per_class[0].f_score = 2.0 / 3.0;
  per_class[1].precision = 0.5;
  per_class[1].recall = 1.0;
  per_class[1].f_score = 2.0 / 3.0;
  const auto macro = macro_average(per_class);
  CHECK(macro.precision == doctest::Approx(0.75));
  CHECK(macro.recall == doctest::Approx(0.75));
  CHECK(macro.f_score == doctest::Approx(2.0 / 3.0));
}

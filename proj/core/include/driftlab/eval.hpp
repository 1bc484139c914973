#pragma once

#include <array>
#include <string>
#include <vector>

#include "driftlab/dataset.hpp"
#include "driftlab/embed.hpp"
#include "driftlab/svm.hpp"

namespace driftlab {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  long tp = 0;
  long fp = 0;
  long fn = 0;
};

struct MacroMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
};

struct RocCurve {
  std::vector<std::array<double, 2>> points;  // (fpr, tpr), (0,0) .. (1,1)
  double auc = 0.0;
};

// Highest decision value wins; ties go to the lowest class index.
int classify_fv_svm(const std::vector<LinearSvm>& svms, FeatureView x);

// One-vs-rest counts for class c. Empty denominators yield 0.
ClassMetrics metrics(const std::vector<int>& predictions, const std::vector<int>& truth,
                     int class_id);

MacroMetrics macro_average(const std::vector<ClassMetrics>& per_class);

// Threshold sweep over the sorted unique scores, equal scores grouped into
// one step, trapezoidal AUC. Needs at least one positive and one negative.
RocCurve roc(const std::vector<double>& scores, const std::vector<int>& truth01);

// Score convention for nearest-anchor classifiers: negative L2 distance to
// the class anchor (monotone in "how confidently c").
double anchor_score(const EmbeddingNet& net, FeatureView x, const ClassAnchors& anchors,
                    int class_id);

// Projection onto the top-2 principal components (power iteration with
// deflation, tolerance 1e-9, fixed deterministic start). Components are
// sign-canonicalized: first loading of nonzero magnitude is positive.
// Zero-variance input projects everything to (0,0) and warns on stderr.
std::vector<std::array<double, 2>> pca_project_2d(const std::vector<std::vector<double>>& vectors);

std::string roc_csv(const RocCurve& curve);

struct ScatterPoint {
  double x = 0.0;
  double y = 0.0;
  int label = 0;
  std::string domain;
};

std::string scatter_csv(const std::vector<ScatterPoint>& points);
std::string scatter_svg(const std::vector<ScatterPoint>& points);

}  // namespace driftlab

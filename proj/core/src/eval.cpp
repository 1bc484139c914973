#include "driftlab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>

#include "driftlab/errors.hpp"

namespace driftlab {

int classify_fv_svm(const std::vector<LinearSvm>& svms, FeatureView x) {
  if (svms.empty()) throw ContractError("classify_fv_svm: no machines");
  int best = 0;
  double best_val = svm_decision(svms[0], x);
  for (int c = 1; c < static_cast<int>(svms.size()); ++c) {
    const double v = svm_decision(svms[static_cast<std::size_t>(c)], x);
    if (v > best_val) {
      best_val = v;
      best = c;
    }
  }
  return best;
}

ClassMetrics metrics(const std::vector<int>& predictions, const std::vector<int>& truth,
                     int class_id) {
  if (predictions.size() != truth.size())
    throw ContractError("metrics: predictions and truth must align");
  ClassMetrics m;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool pred_c = predictions[i] == class_id;
    const bool true_c = truth[i] == class_id;
    if (pred_c && true_c)
      ++m.tp;
    else if (pred_c)
      ++m.fp;
    else if (true_c)
      ++m.fn;
  }
  m.precision = m.tp + m.fp > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
  m.recall = m.tp + m.fn > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
  m.f_score = m.precision + m.recall > 0.0
                  ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                  : 0.0;
  return m;
}

MacroMetrics macro_average(const std::vector<ClassMetrics>& per_class) {
  MacroMetrics macro;
  if (per_class.empty()) return macro;
  for (const auto& m : per_class) {
    macro.precision += m.precision;
    macro.recall += m.recall;
    macro.f_score += m.f_score;
  }
  const double n = static_cast<double>(per_class.size());
  macro.precision /= n;
  macro.recall /= n;
  macro.f_score /= n;
  return macro;
}

RocCurve roc(const std::vector<double>& scores, const std::vector<int>& truth01) {
  if (scores.size() != truth01.size()) throw ContractError("roc: scores and truth must align");
  long pos = 0, neg = 0;
  for (int t : truth01) (t ? pos : neg)++;
  if (pos == 0 || neg == 0)
    throw ContractError("roc: need at least one positive and one negative");

  // group equal scores into one sweep step
  std::map<double, std::pair<long, long>, std::greater<double>> groups;  // score -> (pos, neg)
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto& g = groups[scores[i]];
    if (truth01[i])
      ++g.first;
    else
      ++g.second;
  }

  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  double tp = 0, fp = 0, auc = 0.0;
  for (const auto& [score, counts] : groups) {
    const double prev_fpr = fp / static_cast<double>(neg);
    const double prev_tpr = tp / static_cast<double>(pos);
    tp += static_cast<double>(counts.first);
    fp += static_cast<double>(counts.second);
    const double fpr = fp / static_cast<double>(neg);
    const double tpr = tp / static_cast<double>(pos);
    auc += (fpr - prev_fpr) * (tpr + prev_tpr) * 0.5;
    curve.points.push_back({fpr, tpr});
  }
  curve.auc = auc;
  return curve;
}

double anchor_score(const EmbeddingNet& net, FeatureView x, const ClassAnchors& anchors,
                    int class_id) {
  const auto e = embed(net, x);
  const auto& a = anchors.vectors[static_cast<std::size_t>(class_id)];
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = e[i] - a[i];
    d2 += diff * diff;
  }
  return -std::sqrt(d2);
}

namespace {

// deterministic pseudo-random start vector, fixed across runs
std::vector<double> power_start(std::size_t dim) {
  std::vector<double> v(dim);
  std::uint64_t s = 0x2545f4914f6cdd1dULL;
  double norm2 = 0.0;
  for (auto& x : v) {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    x = static_cast<double>(s >> 11) * 0x1.0p-53 - 0.5;
    norm2 += x * x;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& x : v) x *= inv;
  return v;
}

}  // namespace

std::vector<std::array<double, 2>> pca_project_2d(
    const std::vector<std::vector<double>>& vectors) {
  if (vectors.size() < 2) throw ContractError("pca_project_2d: need at least two vectors");
  const std::size_t n = vectors.size();
  const std::size_t d = vectors.front().size();
  for (const auto& v : vectors)
    if (v.size() != d) throw ContractError("pca_project_2d: ragged input");

  std::vector<double> mean(d, 0.0);
  for (const auto& v : vectors)
    for (std::size_t i = 0; i < d; ++i) mean[i] += v[i];
  for (auto& m : mean) m /= static_cast<double>(n);

  std::vector<std::vector<double>> centered(n, std::vector<double>(d));
  double total_var = 0.0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < d; ++i) {
      centered[r][i] = vectors[r][i] - mean[i];
      total_var += centered[r][i] * centered[r][i];
    }

  std::vector<std::array<double, 2>> out(n, {0.0, 0.0});
  if (total_var <= 1e-24) {
    std::cerr << "warning: pca_project_2d on zero-variance data, projecting to the origin\n";
    return out;
  }

  // scatter matrix S = X^T X
  std::vector<double> scatter(d * d, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < d; ++i) {
      const double xi = centered[r][i];
      if (xi == 0.0) continue;
      for (std::size_t j = 0; j < d; ++j) scatter[i * d + j] += xi * centered[r][j];
    }

  auto mat_vec = [&](const std::vector<double>& v) {
    std::vector<double> out_v(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      const double* row = &scatter[i * d];
      for (std::size_t j = 0; j < d; ++j) s += row[j] * v[j];
      out_v[i] = s;
    }
    return out_v;
  };

  std::vector<std::vector<double>> components;
  for (int comp = 0; comp < 2; ++comp) {
    std::vector<double> v = power_start(d);
    // deflate against components already found
    auto orthogonalize = [&](std::vector<double>& u) {
      for (const auto& c : components) {
        double proj = 0.0;
        for (std::size_t i = 0; i < d; ++i) proj += u[i] * c[i];
        for (std::size_t i = 0; i < d; ++i) u[i] -= proj * c[i];
      }
    };
    orthogonalize(v);
    double norm2 = 0.0;
    for (double x : v) norm2 += x * x;
    if (norm2 <= 1e-24) {
      components.push_back(std::vector<double>(d, 0.0));
      continue;
    }
    for (auto& x : v) x /= std::sqrt(norm2);

    for (int it = 0; it < 10000; ++it) {
      auto next = mat_vec(v);
      orthogonalize(next);
      double nn = 0.0;
      for (double x : next) nn += x * x;
      if (nn <= 1e-300) {
        next.assign(d, 0.0);
        v = next;
        break;
      }
      const double inv = 1.0 / std::sqrt(nn);
      for (auto& x : next) x *= inv;
      double delta = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double diff = next[i] - v[i];
        delta += diff * diff;
      }
      v = std::move(next);
      if (delta < 1e-9 * 1e-9) break;
    }

    // sign canonicalization: first loading of nonzero magnitude is positive
    for (std::size_t i = 0; i < d; ++i) {
      if (std::abs(v[i]) > 1e-12) {
        if (v[i] < 0.0)
          for (auto& x : v) x = -x;
        break;
      }
    }
    components.push_back(std::move(v));
  }

  for (std::size_t r = 0; r < n; ++r)
    for (int comp = 0; comp < 2; ++comp) {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i)
        s += centered[r][i] * components[static_cast<std::size_t>(comp)][i];
      out[r][static_cast<std::size_t>(comp)] = s;
    }
  return out;
}

namespace {
std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}
}  // namespace

std::string roc_csv(const RocCurve& curve) {
  std::string out = "# auc=" + format_double(curve.auc) + "\nfpr,tpr\n";
  for (const auto& p : curve.points)
    out += format_double(p[0]) + "," + format_double(p[1]) + "\n";
  return out;
}

std::string scatter_csv(const std::vector<ScatterPoint>& points) {
  std::string out = "x,y,label,domain\n";
  for (const auto& p : points)
    out += format_double(p.x) + "," + format_double(p.y) + "," + std::to_string(p.label) + "," +
           p.domain + "\n";
  return out;
}

std::string scatter_svg(const std::vector<ScatterPoint>& points) {
  const int w = 640, h = 640, margin = 40;
  double min_x = 0, max_x = 1, min_y = 0, max_y = 1;
  if (!points.empty()) {
    min_x = max_x = points.front().x;
    min_y = max_y = points.front().y;
    for (const auto& p : points) {
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
  }
  const double span_x = std::max(max_x - min_x, 1e-12);
  const double span_y = std::max(max_y - min_y, 1e-12);
  static const char* palette[10] = {"#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4",
                                    "#46f0f0", "#f032e6", "#bcf60c", "#fabebe", "#008080"};

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) +
                    "\" height=\"" + std::to_string(h) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& p : points) {
    const double px = margin + (p.x - min_x) / span_x * (w - 2 * margin);
    const double py = h - margin - (p.y - min_y) / span_y * (h - 2 * margin);
    const char* color = p.label >= 0 ? palette[p.label % 10] : "#808080";
    // auxiliary samples drawn as filled dots, target samples as rings
    const bool aux = p.domain == "auxiliary";
    svg += "<circle cx=\"" + format_double(px) + "\" cy=\"" + format_double(py) + "\" r=\"" +
           (aux ? "3" : "2.5") + "\" fill=\"" + (aux ? color : "none") + "\" stroke=\"" + color +
           "\" stroke-width=\"1\" opacity=\"0.8\"/>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace driftlab

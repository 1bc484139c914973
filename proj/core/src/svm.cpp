#include "driftlab/svm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "driftlab/errors.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct Problem {
  // positives first, then negatives; y in {+1,-1}, alpha the per-sample
  // hinge weight (pos_weight or 1)
  std::vector<const std::vector<double>*> x;
  std::vector<double> y;
  std::vector<double> alpha;
  double C = 1.0;
  std::size_t dim = 0;

  double objective(const std::vector<double>& w, double b) const {
    double hinge = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double margin = 1.0 - y[i] * (dot(w, *x[i]) + b);
      if (margin > 0.0) hinge += alpha[i] * margin;
    }
    return 0.5 * dot(w, w) + C * hinge;
  }

  // Full-batch subgradient; returns squared norm of the subgradient.
  double subgradient(const std::vector<double>& w, double b, std::vector<double>& gw,
                     double& gb) const {
    gw = w;
    gb = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double margin = 1.0 - y[i] * (dot(w, *x[i]) + b);
      if (margin > 0.0) {
        const double coef = C * alpha[i] * y[i];
        const auto& xi = *x[i];
        for (std::size_t d = 0; d < dim; ++d) gw[d] -= coef * xi[d];
        gb -= coef;
      }
    }
    return dot(gw, gw) + gb * gb;
  }
};

struct Iterate {
  std::vector<double> w;
  double b = 0.0;
};

// Huber ramp standing in for max(0, m): zero below the kink, a quadratic
// ramp of width mu, then linear. Uniformly within mu/2 of the hinge.
double huber_hinge(double m, double mu) {
  if (m <= 0.0) return 0.0;
  if (m >= mu) return m - 0.5 * mu;
  return m * m / (2.0 * mu);
}

double huber_slope(double m, double mu) {
  if (m <= 0.0) return 0.0;
  if (m >= mu) return 1.0;
  return m / mu;
}

double smoothed_objective(const Problem& prob, const Iterate& x, double mu) {
  double hinge = 0.0;
  for (std::size_t i = 0; i < prob.x.size(); ++i) {
    const double m = 1.0 - prob.y[i] * (dot(x.w, *prob.x[i]) + x.b);
    hinge += prob.alpha[i] * huber_hinge(m, mu);
  }
  return 0.5 * dot(x.w, x.w) + prob.C * hinge;
}

// lower-triangular in-place Cholesky solve of (A + damping I) p = -g
bool solve_spd(std::vector<double> a, std::vector<double> g, std::size_t m, double damping,
               std::vector<double>& p) {
  for (std::size_t i = 0; i < m; ++i) a[i * m + i] += damping;
  for (std::size_t c = 0; c < m; ++c) {
    double d = a[c * m + c];
    for (std::size_t k = 0; k < c; ++k) d -= a[c * m + k] * a[c * m + k];
    if (d <= 0.0) return false;
    const double root = std::sqrt(d);
    a[c * m + c] = root;
    for (std::size_t r = c + 1; r < m; ++r) {
      double v = a[r * m + c];
      for (std::size_t k = 0; k < c; ++k) v -= a[r * m + k] * a[c * m + k];
      a[r * m + c] = v / root;
    }
  }
  p.assign(m, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    double v = -g[r];
    for (std::size_t k = 0; k < r; ++k) v -= a[r * m + k] * p[k];
    p[r] = v / a[r * m + r];
  }
  for (std::size_t r = m; r-- > 0;) {
    double v = p[r];
    for (std::size_t k = r + 1; k < m; ++k) v -= a[k * m + r] * p[k];
    p[r] = v / a[r * m + r];
  }
  return true;
}

// Damped Newton on the smoothed objective, with the smoothing width driven
// toward zero. Deterministic, no data-order dependence.
Iterate polish_newton(const Problem& prob, Iterate x) {
  const std::size_t dim = prob.dim;
  const std::size_t m = dim + 1;
  std::vector<double> grad(m), hess(m * m), p;

  for (double mu = 0.5; mu > 1e-12; mu *= 0.125) {
    double fx = smoothed_objective(prob, x, mu);
    for (int iter = 0; iter < 40; ++iter) {
      std::fill(grad.begin(), grad.end(), 0.0);
      std::fill(hess.begin(), hess.end(), 0.0);
      for (std::size_t d = 0; d < dim; ++d) {
        grad[d] = x.w[d];
        hess[d * m + d] = 1.0;
      }
      for (std::size_t i = 0; i < prob.x.size(); ++i) {
        const auto& xi = *prob.x[i];
        const double margin = 1.0 - prob.y[i] * (dot(x.w, xi) + x.b);
        const double slope = huber_slope(margin, mu);
        if (slope > 0.0) {
          const double coef = -prob.C * prob.alpha[i] * slope * prob.y[i];
          for (std::size_t d = 0; d < dim; ++d) grad[d] += coef * xi[d];
          grad[dim] += coef;
        }
        if (margin > 0.0 && margin < mu) {
          const double h = prob.C * prob.alpha[i] / mu;  // y^2 = 1
          for (std::size_t r = 0; r < dim; ++r) {
            for (std::size_t c = 0; c <= r; ++c) hess[r * m + c] += h * xi[r] * xi[c];
            hess[dim * m + r] += h * xi[r];
          }
          hess[dim * m + dim] += h;
        }
      }
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = r + 1; c < m; ++c) hess[r * m + c] = hess[c * m + r];

      double gnorm2 = 0.0;
      for (double v : grad) gnorm2 += v * v;
      if (gnorm2 <= 1e-24 * (1.0 + fx * fx)) break;

      double damping = 1e-10 * (1.0 + fx);
      bool solved = false;
      for (int attempt = 0; attempt < 6 && !solved; ++attempt, damping *= 100.0)
        solved = solve_spd(hess, grad, m, damping, p);
      if (!solved) break;

      double descent = 0.0;
      for (std::size_t r = 0; r < m; ++r) descent += grad[r] * p[r];
      if (descent >= 0.0) break;

      double t = 1.0;
      Iterate trial = x;
      double ft = fx;
      bool accepted = false;
      for (int bt = 0; bt < 60; ++bt) {
        for (std::size_t d = 0; d < dim; ++d) trial.w[d] = x.w[d] + t * p[d];
        trial.b = x.b + t * p[dim];
        ft = smoothed_objective(prob, trial, mu);
        if (std::isfinite(ft) && ft <= fx + 1e-4 * t * descent) {
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) break;
      x = trial;
      const bool converged = fx - ft <= 1e-15 * (1.0 + std::abs(fx));
      fx = ft;
      if (converged) break;
    }
  }
  return x;
}

}  // namespace

double svm_objective(const LinearSvm& svm, const std::vector<std::vector<double>>& positives,
                     const std::vector<std::vector<double>>& negatives) {
  double hinge = 0.0;
  for (const auto& x : positives) {
    const double m = 1.0 - (dot(svm.w, x) + svm.b);
    if (m > 0.0) hinge += svm.pos_weight * m;
  }
  for (const auto& x : negatives) {
    const double m = 1.0 + (dot(svm.w, x) + svm.b);
    if (m > 0.0) hinge += m;
  }
  return 0.5 * dot(svm.w, svm.w) + svm.C * hinge;
}

LinearSvm train_svm(const std::vector<std::vector<double>>& positives,
                    const std::vector<std::vector<double>>& negatives, double C,
                    double pos_weight, std::uint64_t seed) {
  if (positives.empty() || negatives.empty())
    throw ContractError("train_svm: both classes must be non-empty");
  const std::size_t dim = positives.front().size();

  Problem prob;
  prob.C = C;
  prob.dim = dim;
  for (const auto& x : positives) {
    if (x.size() != dim) throw ContractError("train_svm: inconsistent feature dimension");
    for (double v : x)
      if (!std::isfinite(v)) throw ValidationError("train_svm: non-finite feature value");
    prob.x.push_back(&x);
    prob.y.push_back(1.0);
    prob.alpha.push_back(pos_weight);
  }
  for (const auto& x : negatives) {
    if (x.size() != dim) throw ContractError("train_svm: inconsistent feature dimension");
    for (double v : x)
      if (!std::isfinite(v)) throw ValidationError("train_svm: non-finite feature value");
    prob.x.push_back(&x);
    prob.y.push_back(-1.0);
    prob.alpha.push_back(1.0);
  }

  const std::size_t n = prob.x.size();
  const double lambda = 1.0 / (C * static_cast<double>(n));

  Iterate cur{std::vector<double>(dim, 0.0), 0.0};
  Iterate avg = cur;
  Iterate best = cur;
  double best_obj = prob.objective(cur.w, cur.b);

  // Phase 1: stochastic subgradient over shuffled epochs, suffix-averaged.
  Rng rng(substream_seed(seed, "svm_shuffle"));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  const int max_epochs = 200;
  const double t0 = 2.0 * static_cast<double>(n);
  std::size_t t = 0;
  std::size_t avg_count = 0;
  double prev_obj = best_obj;
  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t s = 0; s < n; ++s) {
      ++t;
      const std::size_t i = order[s];
      const double eta = 1.0 / (lambda * (static_cast<double>(t) + t0));
      const double shrink = 1.0 - eta * lambda;
      const auto& xi = *prob.x[i];
      const double margin = 1.0 - prob.y[i] * (dot(cur.w, xi) + cur.b);
      for (std::size_t d = 0; d < dim; ++d) cur.w[d] *= shrink;
      if (margin > 0.0) {
        const double coef = eta * prob.alpha[i] * prob.y[i];
        for (std::size_t d = 0; d < dim; ++d) cur.w[d] += coef * xi[d];
        cur.b += coef;
      }
      if (epoch >= max_epochs / 5) {
        ++avg_count;
        const double f = 1.0 / static_cast<double>(avg_count);
        for (std::size_t d = 0; d < dim; ++d) avg.w[d] += f * (cur.w[d] - avg.w[d]);
        avg.b += f * (cur.b - avg.b);
      }
    }
    const double obj_cur = prob.objective(cur.w, cur.b);
    if (obj_cur < best_obj) {
      best_obj = obj_cur;
      best = cur;
    }
    if (avg_count > 0) {
      const double obj_avg = prob.objective(avg.w, avg.b);
      if (obj_avg < best_obj) {
        best_obj = obj_avg;
        best = avg;
      }
    }
    if (std::abs(prev_obj - best_obj) < 1e-6 * std::max(1.0, std::abs(prev_obj)) &&
        epoch > max_epochs / 5)
      break;
    prev_obj = best_obj;
  }

  // Phase 2: deterministic polish on a Huber-smoothed copy of the hinge,
  // driven to the kink-free limit by shrinking the smoothing width. Newton
  // steps make this essentially exact; they are affordable up to moderate
  // dimensions, which covers every place the optimality tolerances matter.
  if (dim + 1 <= 64) {
    Iterate polished = polish_newton(prob, best);
    const double obj = prob.objective(polished.w, polished.b);
    if (obj < best_obj) {
      best_obj = obj;
      best = std::move(polished);
    }
  }

  LinearSvm out;
  out.w = best.w;
  out.b = best.b;
  out.C = C;
  out.pos_weight = pos_weight;
  return out;
}

double svm_decision(const LinearSvm& svm, FeatureView x) {
  if (x.size() != svm.w.size()) throw ContractError("svm_decision: dimension mismatch");
  return dot(svm.w, x) + svm.b;
}

namespace {
double logistic(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}
}  // namespace

double svm_confidence(const LinearSvm& svm, FeatureView x) {
  return logistic(svm_decision(svm, x));
}

namespace {

void write_u32_le(std::ostream& out, std::uint32_t v) {
  unsigned char buf[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32_le(std::istream& in) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  return static_cast<std::uint32_t>(buf[0]) | (static_cast<std::uint32_t>(buf[1]) << 8) |
         (static_cast<std::uint32_t>(buf[2]) << 16) | (static_cast<std::uint32_t>(buf[3]) << 24);
}

void write_f32_le(std::ostream& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32_le(out, bits);
}

float read_f32_le(std::istream& in) {
  const std::uint32_t bits = read_u32_le(in);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

void save_svm(const LinearSvm& svm, std::ostream& out) {
  out.write("SVM1", 4);
  write_u32_le(out, static_cast<std::uint32_t>(svm.w.size()));
  for (double v : svm.w) write_f32_le(out, static_cast<float>(v));
  write_f32_le(out, static_cast<float>(svm.b));
  write_f32_le(out, static_cast<float>(svm.C));
  write_f32_le(out, static_cast<float>(svm.pos_weight));
}

void save_svm(const LinearSvm& svm, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open svm dump for writing: " + path);
  save_svm(svm, out);
}

LinearSvm load_svm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open svm dump: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "SVM1") throw FormatError("bad svm magic in " + path);
  const std::uint32_t dim = read_u32_le(in);
  LinearSvm svm;
  svm.w.resize(dim);
  for (auto& v : svm.w) v = read_f32_le(in);
  svm.b = read_f32_le(in);
  svm.C = read_f32_le(in);
  svm.pos_weight = read_f32_le(in);
  if (!in) throw FormatError("truncated svm dump: " + path);
  return svm;
}

}  // namespace driftlab

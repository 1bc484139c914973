#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace driftlab {

// One-vs-rest weighted hinge classifier. Positive-class hinge losses are
// scaled by pos_weight to compensate for the class imbalance.
struct LinearSvm {
  std::vector<double> w;
  double b = 0.0;
  double C = 1.0;
  double pos_weight = 7.0;
};

using FeatureView = std::span<const double>;

// J(w,b) = 0.5*||w||^2
//        + C * ( pos_weight * sum_P max(0, 1 - (w.x+b)) + sum_N max(0, 1 + (w.x+b)) )
double svm_objective(const LinearSvm& svm, const std::vector<std::vector<double>>& positives,
                     const std::vector<std::vector<double>>& negatives);

// Deterministic primal solver: stochastic projected subgradient with seeded
// shuffling and suffix averaging, followed by a full-batch polish with
// adaptive step lengths sized to the problem. Stops early once the relative
// objective change drops below 1e-6. The returned machine never scores
// worse than the zero vector.
LinearSvm train_svm(const std::vector<std::vector<double>>& positives,
                    const std::vector<std::vector<double>>& negatives, double C,
                    double pos_weight, std::uint64_t seed);

double svm_decision(const LinearSvm& svm, FeatureView x);

// Logistic squashing of the raw decision: bounded, strictly monotone, so
// ranking by confidence equals ranking by decision.
double svm_confidence(const LinearSvm& svm, FeatureView x);

// Binary dump: magic "SVM1", u32le dim, w float32le, b, C, pos_weight.
void save_svm(const LinearSvm& svm, const std::string& path);
void save_svm(const LinearSvm& svm, std::ostream& out);
LinearSvm load_svm(const std::string& path);

}  // namespace driftlab

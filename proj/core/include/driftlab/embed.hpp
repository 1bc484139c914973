#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "driftlab/dataset.hpp"

namespace driftlab {

// One tanh hidden layer, linear output:
//   f(x) = W2 * tanh(W1 x + b1) + b2
// mapping feature space (d_f) into the semantic space (d_w).
struct EmbeddingNet {
  int d_f = 0;
  int h = 0;
  int d_w = 0;
  std::vector<double> w1;  // h x d_f, row-major
  std::vector<double> b1;  // h
  std::vector<double> w2;  // d_w x h, row-major
  std::vector<double> b2;  // d_w
};

struct EmbedHyper {
  double learning_rate = 1e-2;  // applied to the mean per-sample gradient
  double momentum = 0.9;
  int max_epochs = 1000;
  double early_stop_rel_tol = 1e-6;  // relative loss decrease ...
  int early_stop_window = 10;        // ... over this many epochs
  double init_scale = 0.01;
  int hidden = 400;
  std::uint64_t seed = 1;
};

struct LabeledFeature {
  std::span<const double> feature;
  int class_id = 0;
};

// Entries i.i.d. uniform in [-init_scale, init_scale], biases zero.
EmbeddingNet init_net(int d_f, int h, int d_w, double init_scale, std::uint64_t seed);

std::vector<double> embed(const EmbeddingNet& net, std::span<const double> x);

// J = sum over labeled samples of || f(x) - anchor(class) ||^2, with the
// analytic partials of J packed into an EmbeddingNet-shaped container.
struct LossAndGrad {
  double loss = 0.0;
  EmbeddingNet grad;
};
LossAndGrad loss_and_grad(const EmbeddingNet& net, const std::vector<LabeledFeature>& labeled,
                          const ClassAnchors& anchors);

// Full-batch gradient descent with momentum. A proposed step that would
// increase the loss is rejected: the velocity is reset and a backtracked
// plain gradient step is taken instead, so accepted losses never increase.
// Stops after `early_stop_window` epochs of relative improvement below
// `early_stop_rel_tol`, or at max_epochs. Throws DivergenceError when a
// non-finite loss shows up.
struct TrainResult {
  EmbeddingNet net;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int epochs_run = 0;
};
TrainResult train_embedding(EmbeddingNet net, const std::vector<LabeledFeature>& labeled,
                            const ClassAnchors& anchors, const EmbedHyper& hyper);

// argmin over classes of || f(x) - anchor_c ||_2; ties go to the lowest
// class index.
int nearest_class(const EmbeddingNet& net, std::span<const double> x, const ClassAnchors& anchors);
int nearest_class_of_embedding(std::span<const double> e, const ClassAnchors& anchors);

// Checkpoint: magic "EMB1", u32le d_f/h/d_w, then W1,b1,W2,b2 float32le.
void save_net(const EmbeddingNet& net, const std::string& path);
void save_net(const EmbeddingNet& net, std::ostream& out);
EmbeddingNet load_net(const std::string& path);

}  // namespace driftlab

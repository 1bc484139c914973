#include "driftlab/embed.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "driftlab/errors.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

EmbeddingNet init_net(int d_f, int h, int d_w, double init_scale, std::uint64_t seed) {
  if (d_f < 1 || h < 1 || d_w < 1) throw ContractError("init_net: dimensions must be >= 1");
  EmbeddingNet net;
  net.d_f = d_f;
  net.h = h;
  net.d_w = d_w;
  net.w1.resize(static_cast<std::size_t>(h) * d_f);
  net.b1.assign(static_cast<std::size_t>(h), 0.0);
  net.w2.resize(static_cast<std::size_t>(d_w) * h);
  net.b2.assign(static_cast<std::size_t>(d_w), 0.0);
  Rng rng(substream_seed(seed, "net_init"));
  for (auto& v : net.w1) v = rng.uniform(-init_scale, init_scale);
  for (auto& v : net.w2) v = rng.uniform(-init_scale, init_scale);
  return net;
}

namespace {

void forward(const EmbeddingNet& net, std::span<const double> x, std::vector<double>& hidden,
             std::vector<double>& out) {
  hidden.assign(static_cast<std::size_t>(net.h), 0.0);
  for (int r = 0; r < net.h; ++r) {
    double s = net.b1[static_cast<std::size_t>(r)];
    const double* row = &net.w1[static_cast<std::size_t>(r) * net.d_f];
    for (int c = 0; c < net.d_f; ++c) s += row[c] * x[static_cast<std::size_t>(c)];
    hidden[static_cast<std::size_t>(r)] = std::tanh(s);
  }
  out.assign(static_cast<std::size_t>(net.d_w), 0.0);
  for (int r = 0; r < net.d_w; ++r) {
    double s = net.b2[static_cast<std::size_t>(r)];
    const double* row = &net.w2[static_cast<std::size_t>(r) * net.h];
    for (int c = 0; c < net.h; ++c) s += row[c] * hidden[static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(r)] = s;
  }
}

EmbeddingNet zero_like(const EmbeddingNet& net) {
  EmbeddingNet g;
  g.d_f = net.d_f;
  g.h = net.h;
  g.d_w = net.d_w;
  g.w1.assign(net.w1.size(), 0.0);
  g.b1.assign(net.b1.size(), 0.0);
  g.w2.assign(net.w2.size(), 0.0);
  g.b2.assign(net.b2.size(), 0.0);
  return g;
}

}  // namespace

std::vector<double> embed(const EmbeddingNet& net, std::span<const double> x) {
  if (static_cast<int>(x.size()) != net.d_f) throw ContractError("embed: dimension mismatch");
  std::vector<double> hidden, out;
  forward(net, x, hidden, out);
  return out;
}

LossAndGrad loss_and_grad(const EmbeddingNet& net, const std::vector<LabeledFeature>& labeled,
                          const ClassAnchors& anchors) {
  if (labeled.empty()) throw ContractError("loss_and_grad: labeled set must be non-empty");
  LossAndGrad result;
  result.grad = zero_like(net);
  std::vector<double> hidden, out, dout(static_cast<std::size_t>(net.d_w)),
      dhid(static_cast<std::size_t>(net.h));

  for (const auto& sample : labeled) {
    if (static_cast<int>(sample.feature.size()) != net.d_f)
      throw ContractError("loss_and_grad: feature dimension mismatch");
    const auto& anchor = anchors.vectors[static_cast<std::size_t>(sample.class_id)];
    forward(net, sample.feature, hidden, out);

    for (int r = 0; r < net.d_w; ++r) {
      const double diff = out[static_cast<std::size_t>(r)] - anchor[static_cast<std::size_t>(r)];
      result.loss += diff * diff;
      dout[static_cast<std::size_t>(r)] = 2.0 * diff;
    }

    for (int r = 0; r < net.d_w; ++r) {
      const double d = dout[static_cast<std::size_t>(r)];
      double* grow = &result.grad.w2[static_cast<std::size_t>(r) * net.h];
      for (int c = 0; c < net.h; ++c) grow[c] += d * hidden[static_cast<std::size_t>(c)];
      result.grad.b2[static_cast<std::size_t>(r)] += d;
    }

    for (int c = 0; c < net.h; ++c) {
      double s = 0.0;
      for (int r = 0; r < net.d_w; ++r)
        s += net.w2[static_cast<std::size_t>(r) * net.h + c] * dout[static_cast<std::size_t>(r)];
      const double a = hidden[static_cast<std::size_t>(c)];
      dhid[static_cast<std::size_t>(c)] = s * (1.0 - a * a);
    }

    for (int r = 0; r < net.h; ++r) {
      const double d = dhid[static_cast<std::size_t>(r)];
      double* grow = &result.grad.w1[static_cast<std::size_t>(r) * net.d_f];
      for (int c = 0; c < net.d_f; ++c)
        grow[c] += d * sample.feature[static_cast<std::size_t>(c)];
      result.grad.b1[static_cast<std::size_t>(r)] += d;
    }
  }
  return result;
}

namespace {

void axpy(std::vector<double>& y, double a, const std::vector<double>& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

double loss_only(const EmbeddingNet& net, const std::vector<LabeledFeature>& labeled,
                 const ClassAnchors& anchors) {
  double loss = 0.0;
  std::vector<double> hidden, out;
  for (const auto& sample : labeled) {
    forward(net, sample.feature, hidden, out);
    const auto& anchor = anchors.vectors[static_cast<std::size_t>(sample.class_id)];
    for (int r = 0; r < net.d_w; ++r) {
      const double diff = out[static_cast<std::size_t>(r)] - anchor[static_cast<std::size_t>(r)];
      loss += diff * diff;
    }
  }
  return loss;
}

}  // namespace

TrainResult train_embedding(EmbeddingNet net, const std::vector<LabeledFeature>& labeled,
                            const ClassAnchors& anchors, const EmbedHyper& hyper) {
  if (labeled.empty()) throw ContractError("train_embedding: labeled set must be non-empty");
  if (hyper.learning_rate <= 0.0) throw ConfigError("train_embedding: learning_rate must be > 0");
  if (hyper.max_epochs < 1) throw ConfigError("train_embedding: max_epochs must be >= 1");

  const double inv_n = 1.0 / static_cast<double>(labeled.size());
  EmbeddingNet velocity = zero_like(net);
  EmbeddingNet candidate = net;

  TrainResult result;
  std::vector<double> window;  // accepted losses, for the early-stop check

  double cur_loss = std::numeric_limits<double>::quiet_NaN();
  for (int epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
    auto lg = loss_and_grad(net, labeled, anchors);
    if (!std::isfinite(lg.loss))
      throw DivergenceError("train_embedding: non-finite loss", epoch);
    cur_loss = lg.loss;
    if (epoch == 1) result.initial_loss = cur_loss;

    // momentum proposal
    const double step = -hyper.learning_rate * inv_n;
    auto advance = [&](std::vector<double>& v, std::vector<double>& p, const std::vector<double>& g) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = hyper.momentum * v[i] + step * g[i];
        p[i] += v[i];
      }
    };
    candidate = net;
    advance(velocity.w1, candidate.w1, lg.grad.w1);
    advance(velocity.b1, candidate.b1, lg.grad.b1);
    advance(velocity.w2, candidate.w2, lg.grad.w2);
    advance(velocity.b2, candidate.b2, lg.grad.b2);

    double cand_loss = loss_only(candidate, labeled, anchors);
    if (!std::isfinite(cand_loss))
      throw DivergenceError("train_embedding: non-finite loss", epoch);

    if (cand_loss <= cur_loss) {
      net = std::move(candidate);
      cur_loss = cand_loss;
    } else {
      // overshoot: drop the velocity and backtrack a plain gradient step
      velocity = zero_like(net);
      double bt = hyper.learning_rate;
      bool accepted = false;
      for (int k = 0; k < 30; ++k) {
        candidate = net;
        const double s = -bt * inv_n;
        axpy(candidate.w1, s, lg.grad.w1);
        axpy(candidate.b1, s, lg.grad.b1);
        axpy(candidate.w2, s, lg.grad.w2);
        axpy(candidate.b2, s, lg.grad.b2);
        cand_loss = loss_only(candidate, labeled, anchors);
        if (std::isfinite(cand_loss) && cand_loss <= cur_loss) {
          net = std::move(candidate);
          cur_loss = cand_loss;
          accepted = true;
          break;
        }
        bt *= 0.5;
      }
      if (!accepted) {
        result.epochs_run = epoch;
        break;  // no descent direction left at this scale
      }
    }

    result.epochs_run = epoch;
    window.push_back(cur_loss);
    const int w = hyper.early_stop_window;
    if (static_cast<int>(window.size()) > w) {
      const double past = window[window.size() - static_cast<std::size_t>(w) - 1];
      const double rel = (past - cur_loss) / std::max(past, 1e-300);
      if (rel < hyper.early_stop_rel_tol) break;
    }
  }

  result.net = std::move(net);
  result.final_loss = cur_loss;
  return result;
}

int nearest_class_of_embedding(std::span<const double> e, const ClassAnchors& anchors) {
  int best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int c = 0; c < anchors.n_classes(); ++c) {
    const auto& a = anchors.vectors[static_cast<std::size_t>(c)];
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double diff = e[i] - a[i];
      d2 += diff * diff;
    }
    if (d2 < best_d2) {
      best_d2 = d2;
      best = c;
    }
  }
  return best;
}

int nearest_class(const EmbeddingNet& net, std::span<const double> x, const ClassAnchors& anchors) {
  const auto e = embed(net, x);
  return nearest_class_of_embedding(e, anchors);
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

void write_block_f32(std::ostream& out, const std::vector<double>& v) {
  for (double d : v) {
    const float f = static_cast<float>(d);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    write_u32_le(out, bits);
  }
}

void read_block_f32(std::istream& in, std::vector<double>& v) {
  for (auto& d : v) {
    const std::uint32_t bits = read_u32_le(in);
    float f;
    std::memcpy(&f, &bits, 4);
    d = f;
  }
}

}  // namespace

void save_net(const EmbeddingNet& net, std::ostream& out) {
  out.write("EMB1", 4);
  write_u32_le(out, static_cast<std::uint32_t>(net.d_f));
  write_u32_le(out, static_cast<std::uint32_t>(net.h));
  write_u32_le(out, static_cast<std::uint32_t>(net.d_w));
  write_block_f32(out, net.w1);
  write_block_f32(out, net.b1);
  write_block_f32(out, net.w2);
  write_block_f32(out, net.b2);
}

void save_net(const EmbeddingNet& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open checkpoint for writing: " + path);
  save_net(net, out);
}

EmbeddingNet load_net(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "EMB1") throw FormatError("bad checkpoint magic in " + path);
  EmbeddingNet net;
  net.d_f = static_cast<int>(read_u32_le(in));
  net.h = static_cast<int>(read_u32_le(in));
  net.d_w = static_cast<int>(read_u32_le(in));
  if (net.d_f < 1 || net.h < 1 || net.d_w < 1) throw FormatError("bad dims in " + path);
  net.w1.resize(static_cast<std::size_t>(net.h) * net.d_f);
  net.b1.resize(static_cast<std::size_t>(net.h));
  net.w2.resize(static_cast<std::size_t>(net.d_w) * net.h);
  net.b2.resize(static_cast<std::size_t>(net.d_w));
  read_block_f32(in, net.w1);
  read_block_f32(in, net.b1);
  read_block_f32(in, net.w2);
  read_block_f32(in, net.b2);
  if (!in) throw FormatError("truncated checkpoint: " + path);
  return net;
}

}  // namespace driftlab

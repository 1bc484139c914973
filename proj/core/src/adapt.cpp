#include "driftlab/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "driftlab/errors.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

using json = nlohmann::ordered_json;

std::string to_string(SamplingPolicy p) {
  return p == SamplingPolicy::with_replacement ? "with_replacement" : "without_replacement";
}

SamplingPolicy policy_from_string(const std::string& s) {
  if (s == "with_replacement" || s == "with") return SamplingPolicy::with_replacement;
  if (s == "without_replacement" || s == "without") return SamplingPolicy::without_replacement;
  throw ConfigError("unknown sampling policy: " + s);
}

void AdaptConfig::validate() const {
  if (!(k_fraction > 0.0 && k_fraction <= 1.0))
    throw ConfigError("adapt config: k_fraction must be in (0,1]");
  if (!(stop_fraction > 0.0 && stop_fraction <= 1.0))
    throw ConfigError("adapt config: stop_fraction must be in (0,1]");
  if (max_outer_iterations < 0)
    throw ConfigError("adapt config: max_outer_iterations must be >= 0");
  if (embed.learning_rate <= 0.0) throw ConfigError("adapt config: learning_rate must be > 0");
  if (embed.max_epochs < 1) throw ConfigError("adapt config: max_epochs must be >= 1");
  if (embed.hidden < 1) throw ConfigError("adapt config: hidden width must be >= 1");
  if (svm.C <= 0.0 || svm.pos_weight <= 0.0)
    throw ConfigError("adapt config: svm C and pos_weight must be > 0");
}

AdaptConfig adapt_config_from_json_text(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("adapt config: ") + e.what());
  }
  AdaptConfig cfg;
  try {
    cfg.k_fraction = j.value("k_fraction", cfg.k_fraction);
    cfg.stop_fraction = j.value("stop_fraction", cfg.stop_fraction);
    if (j.contains("policy")) cfg.policy = policy_from_string(j.at("policy").get<std::string>());
    cfg.max_outer_iterations = j.value("max_outer_iterations", cfg.max_outer_iterations);
    if (j.contains("embed")) {
      const auto& e = j.at("embed");
      cfg.embed.learning_rate = e.value("learning_rate", cfg.embed.learning_rate);
      cfg.embed.momentum = e.value("momentum", cfg.embed.momentum);
      cfg.embed.max_epochs = e.value("max_epochs", cfg.embed.max_epochs);
      cfg.embed.early_stop_rel_tol = e.value("early_stop_rel_tol", cfg.embed.early_stop_rel_tol);
      cfg.embed.early_stop_window = e.value("early_stop_window", cfg.embed.early_stop_window);
      cfg.embed.init_scale = e.value("init_scale", cfg.embed.init_scale);
      cfg.embed.hidden = e.value("hidden", cfg.embed.hidden);
      cfg.embed.seed = e.value("seed", cfg.embed.seed);
    }
    if (j.contains("svm")) {
      const auto& s = j.at("svm");
      cfg.svm.C = s.value("C", cfg.svm.C);
      cfg.svm.pos_weight = s.value("pos_weight", cfg.svm.pos_weight);
    }
    cfg.tag_score_clamp = j.value("tag_score_clamp", cfg.tag_score_clamp);
    cfg.warm_start = j.value("warm_start", cfg.warm_start);
    cfg.seed = j.value("seed", cfg.seed);
  } catch (const json::exception& e) {
    throw ParseError(std::string("adapt config: ") + e.what());
  }
  return cfg;
}

std::string adapt_config_to_json_text(const AdaptConfig& cfg) {
  json j;
  j["k_fraction"] = cfg.k_fraction;
  j["stop_fraction"] = cfg.stop_fraction;
  j["policy"] = to_string(cfg.policy);
  j["max_outer_iterations"] = cfg.max_outer_iterations;
  j["embed"] = {{"learning_rate", cfg.embed.learning_rate},
                {"momentum", cfg.embed.momentum},
                {"max_epochs", cfg.embed.max_epochs},
                {"early_stop_rel_tol", cfg.embed.early_stop_rel_tol},
                {"early_stop_window", cfg.embed.early_stop_window},
                {"init_scale", cfg.embed.init_scale},
                {"hidden", cfg.embed.hidden},
                {"seed", cfg.embed.seed}};
  j["svm"] = {{"C", cfg.svm.C}, {"pos_weight", cfg.svm.pos_weight}};
  j["tag_score_clamp"] = cfg.tag_score_clamp;
  j["warm_start"] = cfg.warm_start;
  j["seed"] = cfg.seed;
  return j.dump(2) + "\n";
}

int top_k_budget(double k_fraction, int initial_positive_count) {
  return static_cast<int>(std::ceil(k_fraction * static_cast<double>(initial_positive_count)));
}

double combined_score_iter(const TagVector& candidate_tags,
                           const std::vector<TagVector>& labeled_positive_tags,
                           const TagDictionary& dict, double svm_wv_confidence, bool clamp) {
  double st = tag_score(candidate_tags, labeled_positive_tags, dict);
  if (clamp) st = std::min(st, 1.0);
  return svm_wv_confidence * st;
}

std::vector<std::vector<std::string>> select_top_k(const std::vector<ScoredCandidate>& scored,
                                                   const std::vector<int>& k_per_class) {
  for (const auto& s : scored)
    if (!std::isfinite(s.score)) throw ContractError("select_top_k: non-finite score");

  // Award each id to its best class (ties: lower class index).
  std::unordered_map<std::string, std::pair<double, int>> award;
  for (const auto& s : scored) {
    auto it = award.find(s.id);
    if (it == award.end()) {
      award.emplace(s.id, std::make_pair(s.score, s.class_id));
    } else if (s.score > it->second.first ||
               (s.score == it->second.first && s.class_id < it->second.second)) {
      it->second = {s.score, s.class_id};
    }
  }

  const int nc = static_cast<int>(k_per_class.size());
  std::vector<std::vector<std::pair<double, std::string>>> per_class(
      static_cast<std::size_t>(nc));
  for (const auto& [id, best] : award) {
    if (best.second < 0 || best.second >= nc)
      throw ContractError("select_top_k: class index out of range");
    per_class[static_cast<std::size_t>(best.second)].emplace_back(best.first, id);
  }

  std::vector<std::vector<std::string>> out(static_cast<std::size_t>(nc));
  for (int c = 0; c < nc; ++c) {
    auto& cands = per_class[static_cast<std::size_t>(c)];
    std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    const std::size_t take =
        std::min<std::size_t>(cands.size(), static_cast<std::size_t>(std::max(0, k_per_class[static_cast<std::size_t>(c)])));
    auto& sel = out[static_cast<std::size_t>(c)];
    for (std::size_t i = 0; i < take; ++i) sel.push_back(cands[i].second);
    std::sort(sel.begin(), sel.end());
  }
  return out;
}

void update_sets(AdaptState& state, const std::vector<std::vector<std::string>>& newly_labeled,
                 SamplingPolicy policy, const std::set<std::string>& auxiliary_ids,
                 const ConfidenceLookup& confidence) {
  const int nc = static_cast<int>(state.classes.size());
  if (static_cast<int>(newly_labeled.size()) != nc)
    throw ContractError("update_sets: per-class label lists must match class count");

  for (int c = 0; c < nc; ++c) {
    auto& cls = state.classes[static_cast<std::size_t>(c)];
    for (const auto& id : newly_labeled[static_cast<std::size_t>(c)])
      if (!cls.unlabeled.count(id))
        throw ValidationError("update_sets: state corruption, id '" + id +
                              "' not in unlabeled set of class " + std::to_string(c));
  }

  // single transaction: positives, cross-class negatives, U shrink
  for (int c = 0; c < nc; ++c) {
    auto& cls = state.classes[static_cast<std::size_t>(c)];
    const auto& won = newly_labeled[static_cast<std::size_t>(c)];
    cls.positives.insert(won.begin(), won.end());
    cls.labeled_history.push_back(won);
    for (int o = 0; o < nc; ++o) {
      if (o == c) continue;
      auto& other = state.classes[static_cast<std::size_t>(o)];
      other.negatives.insert(won.begin(), won.end());
    }
  }
  for (int c = 0; c < nc; ++c) {
    for (auto& cls : state.classes)
      for (const auto& id : newly_labeled[static_cast<std::size_t>(c)]) cls.unlabeled.erase(id);
  }

  if (policy == SamplingPolicy::with_replacement) {
    for (int c = 0; c < nc; ++c) {
      auto& cls = state.classes[static_cast<std::size_t>(c)];
      const std::size_t gained = newly_labeled[static_cast<std::size_t>(c)].size();
      if (gained == 0) continue;
      std::vector<std::pair<double, std::string>> aux_pos;
      for (const auto& id : cls.positives)
        if (auxiliary_ids.count(id)) aux_pos.emplace_back(confidence(c, id), id);
      std::sort(aux_pos.begin(), aux_pos.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
      });
      const std::size_t evict = std::min(gained, aux_pos.size());
      for (std::size_t i = 0; i < evict; ++i) cls.positives.erase(aux_pos[i].second);
    }
  }
}

bool should_stop(const ClassState& cls, const AdaptConfig& cfg) {
  if (cls.unlabeled.empty()) return true;
  const auto needed = static_cast<std::size_t>(
      std::ceil(cfg.stop_fraction * static_cast<double>(cls.initial_positive_count)));
  return cls.total_labeled() >= needed;
}

namespace {

void parallel_for(int count, int n_threads, const std::function<void(int)>& fn) {
  if (n_threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  const int workers = std::min(n_threads, count);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < count; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

struct Corpus {
  std::vector<const Sample*> samples;  // auxiliary block first, then target
  std::unordered_map<std::string, std::size_t> index;

  const Sample& at(const std::string& id) const {
    auto it = index.find(id);
    if (it == index.end()) throw ValidationError("unknown sample id: " + id);
    return *samples[it->second];
  }
};

std::vector<std::vector<double>> embed_all(const EmbeddingNet& net, const Corpus& corpus,
                                           int n_threads) {
  std::vector<std::vector<double>> out(corpus.samples.size());
  const int blocks = n_threads <= 1 ? 1 : n_threads;
  parallel_for(blocks, blocks, [&](int b) {
    for (std::size_t i = static_cast<std::size_t>(b); i < out.size();
         i += static_cast<std::size_t>(blocks))
      out[i] = embed(net, std::span<const double>(corpus.samples[i]->feature));
  });
  return out;
}

std::vector<std::vector<double>> gather_embedded(const Corpus& corpus,
                                                 const std::vector<std::vector<double>>& emb,
                                                 const std::set<std::string>& ids) {
  std::vector<std::vector<double>> rows;
  rows.reserve(ids.size());
  for (const auto& id : ids) rows.push_back(emb[corpus.index.at(id)]);
  return rows;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

AdaptResult run_adaptation(const Dataset& aux, const Dataset& target_train,
                           const ClassAnchors& anchors, const AdaptConfig& cfg, int n_threads) {
  cfg.validate();
  aux.validate();
  target_train.validate();
  const int nc = aux.n_classes();
  if (nc < 2) throw ConfigError("adaptation needs at least two classes");
  if (target_train.n_classes() != nc || anchors.n_classes() != nc)
    throw ConfigError("class count mismatch between auxiliary, target and anchors");
  if (aux.d_f != target_train.d_f) throw ConfigError("feature dimension mismatch");

  Corpus corpus;
  for (const auto& s : aux.samples) {
    corpus.index.emplace(s.id, corpus.samples.size());
    corpus.samples.push_back(&s);
  }
  for (const auto& s : target_train.samples) {
    if (!corpus.index.emplace(s.id, corpus.samples.size()).second)
      throw ValidationError("sample id appears in both domains: " + s.id);
    corpus.samples.push_back(&s);
  }

  std::set<std::string> aux_ids;
  for (const auto& s : aux.samples) aux_ids.insert(s.id);

  // tag machinery is fixed for the whole run
  AdaptResult result;
  result.dictionary = build_dictionary(target_train);
  std::unordered_map<std::string, TagVector> tagvec;
  for (const auto& s : target_train.samples) tagvec.emplace(s.id, tag_feature(s, result.dictionary));

  AdaptState state;
  state.classes.resize(static_cast<std::size_t>(nc));
  for (int c = 0; c < nc; ++c) {
    auto& cls = state.classes[static_cast<std::size_t>(c)];
    cls.class_id = c;
    for (const auto& s : aux.samples) {
      if (*s.true_label == c)
        cls.positives.insert(s.id);
      else
        cls.negatives.insert(s.id);
    }
    for (const auto& s : target_train.samples)
      if (*s.hashtag_class == c) cls.unlabeled.insert(s.id);
    cls.initial_positive_count = static_cast<int>(cls.positives.size());
    if (cls.positives.empty())
      throw ConfigError("auxiliary set has no positives for class " + std::to_string(c));
  }

  std::vector<int> k_budget(static_cast<std::size_t>(nc));
  for (int c = 0; c < nc; ++c)
    k_budget[static_cast<std::size_t>(c)] =
        top_k_budget(cfg.k_fraction, state.classes[static_cast<std::size_t>(c)].initial_positive_count);

  EmbedHyper hyper = cfg.embed;

  // ---- initialization: embedding and both SVM families on auxiliary data
  std::vector<LabeledFeature> labeled;
  labeled.reserve(aux.samples.size());
  for (const auto& s : aux.samples)
    labeled.push_back({std::span<const double>(s.feature), *s.true_label});

  EmbeddingNet net = init_net(aux.d_f, hyper.hidden, anchors.d_w, hyper.init_scale,
                              substream_seed(cfg.seed, "net_init", 0));
  TrainResult tr;
  try {
    tr = train_embedding(std::move(net), labeled, anchors, hyper);
  } catch (const DivergenceError& e) {
    throw DivergenceError("embedding diverged during initialization", e.epoch());
  }
  net = std::move(tr.net);
  result.initial_net = net;

  auto emb = embed_all(net, corpus, n_threads);

  result.svm_fv.resize(static_cast<std::size_t>(nc));
  result.svm_wv.resize(static_cast<std::size_t>(nc));
  parallel_for(nc, n_threads, [&](int c) {
    const auto& cls = state.classes[static_cast<std::size_t>(c)];
    std::vector<std::vector<double>> pos_raw, neg_raw;
    for (const auto& id : cls.positives) {
      const auto& f = corpus.at(id).feature;
      pos_raw.emplace_back(f.begin(), f.end());
    }
    for (const auto& id : cls.negatives) {
      const auto& f = corpus.at(id).feature;
      neg_raw.emplace_back(f.begin(), f.end());
    }
    result.svm_fv[static_cast<std::size_t>(c)] =
        train_svm(pos_raw, neg_raw, cfg.svm.C, cfg.svm.pos_weight,
                  substream_seed(cfg.seed, "svm_fv", 0, static_cast<std::uint64_t>(c)));
    result.svm_wv[static_cast<std::size_t>(c)] =
        train_svm(gather_embedded(corpus, emb, cls.positives),
                  gather_embedded(corpus, emb, cls.negatives), cfg.svm.C, cfg.svm.pos_weight,
                  substream_seed(cfg.seed, "svm_wv", 0, static_cast<std::uint64_t>(c)));
  });

  auto wv_confidence = [&](int c, const std::string& id) {
    return svm_confidence(result.svm_wv[static_cast<std::size_t>(c)],
                          std::span<const double>(emb[corpus.index.at(id)]));
  };

  // Applies one iteration's selection as a single transaction, then records
  // the per-class log rows and ledger entries.
  auto apply_and_log = [&](int iteration, const std::vector<ScoredCandidate>& scored,
                           const std::vector<std::vector<std::string>>& selected,
                           const std::vector<bool>& participated, double embed_loss) {
    std::unordered_map<std::string, double> score_of;
    for (const auto& s : scored) score_of[std::to_string(s.class_id) + '\x1f' + s.id] = s.score;

    update_sets(state, selected, cfg.policy, aux_ids, wv_confidence);
    for (int c = 0; c < nc; ++c) {
      auto& cls = state.classes[static_cast<std::size_t>(c)];
      if (!cls.stopped) cls.stopped = should_stop(cls, cfg);
      IterationClassLog log;
      log.iteration = iteration;
      log.class_id = c;
      log.k_budget = k_budget[static_cast<std::size_t>(c)];
      const auto& sel = selected[static_cast<std::size_t>(c)];
      log.n_selected = static_cast<int>(sel.size());
      bool first = true;
      for (const auto& id : sel) {
        const double v = score_of.at(std::to_string(c) + '\x1f' + id);
        log.min_score = first ? v : std::min(log.min_score, v);
        log.max_score = first ? v : std::max(log.max_score, v);
        first = false;
      }
      log.embed_loss = embed_loss;
      log.stopped = cls.stopped;
      result.history.push_back(log);
      if (participated[static_cast<std::size_t>(c)]) {
        LedgerEntry entry;
        entry.iteration = iteration;
        entry.class_id = c;
        entry.ids = sel;
        result.ledger.push_back(std::move(entry));
      }
    }
  };

  // iteration-0 scoring: product of both machine confidences, no tag score
  std::vector<ScoredCandidate> scored;
  for (int c = 0; c < nc; ++c) {
    const auto& cls = state.classes[static_cast<std::size_t>(c)];
    for (const auto& id : cls.unlabeled) {
      const auto& s = corpus.at(id);
      const double conf_fv = svm_confidence(result.svm_fv[static_cast<std::size_t>(c)],
                                            std::span<const double>(s.feature));
      scored.push_back({id, c, conf_fv * wv_confidence(c, id)});
    }
  }
  auto selected = select_top_k(scored, k_budget);
  apply_and_log(0, scored, selected, std::vector<bool>(static_cast<std::size_t>(nc), true),
                tr.final_loss);

  // ---- iterative refinement
  int iteration = 0;
  while (iteration < cfg.max_outer_iterations) {
    bool any_active = false;
    for (const auto& cls : state.classes) any_active |= !cls.stopped;
    if (!any_active) break;
    ++iteration;

    labeled.clear();
    for (int c = 0; c < nc; ++c)
      for (const auto& id : state.classes[static_cast<std::size_t>(c)].positives)
        labeled.push_back({std::span<const double>(corpus.at(id).feature), c});

    EmbeddingNet start = cfg.warm_start
                             ? net
                             : init_net(aux.d_f, hyper.hidden, anchors.d_w, hyper.init_scale,
                                        substream_seed(cfg.seed, "net_init",
                                                       static_cast<std::uint64_t>(iteration)));
    try {
      tr = train_embedding(std::move(start), labeled, anchors, hyper);
    } catch (const DivergenceError& e) {
      throw DivergenceError("embedding diverged at iteration " + std::to_string(iteration),
                            e.epoch());
    }
    net = std::move(tr.net);
    emb = embed_all(net, corpus, n_threads);

    parallel_for(nc, n_threads, [&](int c) {
      const auto& cls = state.classes[static_cast<std::size_t>(c)];
      result.svm_wv[static_cast<std::size_t>(c)] = train_svm(
          gather_embedded(corpus, emb, cls.positives), gather_embedded(corpus, emb, cls.negatives),
          cfg.svm.C, cfg.svm.pos_weight,
          substream_seed(cfg.seed, "svm_wv", static_cast<std::uint64_t>(iteration),
                         static_cast<std::uint64_t>(c)));
    });

    // combined score against everything this class has labeled so far
    scored.clear();
    for (int c = 0; c < nc; ++c) {
      const auto& cls = state.classes[static_cast<std::size_t>(c)];
      if (cls.stopped) continue;
      std::vector<TagVector> union_tags;
      for (const auto& batch : cls.labeled_history)
        for (const auto& id : batch) union_tags.push_back(tagvec.at(id));
      for (const auto& id : cls.unlabeled)
        scored.push_back({id, c,
                          combined_score_iter(tagvec.at(id), union_tags, result.dictionary,
                                              wv_confidence(c, id), cfg.tag_score_clamp)});
    }

    selected = select_top_k(scored, k_budget);
    std::vector<bool> active(static_cast<std::size_t>(nc));
    for (int c = 0; c < nc; ++c)
      active[static_cast<std::size_t>(c)] = !state.classes[static_cast<std::size_t>(c)].stopped;
    apply_and_log(iteration, scored, selected, active, tr.final_loss);
  }

  result.final_net = std::move(net);
  result.final_states = state.classes;
  result.iterations_run = iteration;
  return result;
}

std::string history_csv(const AdaptResult& result) {
  std::string out = "iter,class,K,n_selected,min_score,max_score,embed_loss,stopped\n";
  for (const auto& log : result.history) {
    out += std::to_string(log.iteration) + ',' + std::to_string(log.class_id) + ',' +
           std::to_string(log.k_budget) + ',' + std::to_string(log.n_selected) + ',' +
           format_double(log.min_score) + ',' + format_double(log.max_score) + ',' +
           format_double(log.embed_loss) + ',' + (log.stopped ? "1" : "0") + '\n';
  }
  return out;
}

std::string ledger_jsonl(const AdaptResult& result) {
  std::string out;
  for (const auto& entry : result.ledger) {
    json j;
    j["iter"] = entry.iteration;
    j["class"] = entry.class_id;
    j["ids"] = entry.ids;
    out += j.dump() + "\n";
  }
  return out;
}

void save_history_csv(const AdaptResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open history csv for writing: " + path);
  out << history_csv(result);
}

void save_ledger(const AdaptResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open ledger for writing: " + path);
  out << ledger_jsonl(result);
}

}  // namespace driftlab

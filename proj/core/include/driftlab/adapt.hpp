#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "driftlab/dataset.hpp"
#include "driftlab/embed.hpp"
#include "driftlab/svm.hpp"
#include "driftlab/tags.hpp"

namespace driftlab {

enum class SamplingPolicy { with_replacement, without_replacement };

std::string to_string(SamplingPolicy p);
SamplingPolicy policy_from_string(const std::string& s);

struct SvmParams {
  double C = 1.0;
  double pos_weight = 7.0;
};

struct AdaptConfig {
  double k_fraction = 0.10;     // per-iteration batch, as a fraction of the
                                // initial auxiliary positive count (ceil)
  double stop_fraction = 0.50;  // stop once this fraction of it is labeled
  SamplingPolicy policy = SamplingPolicy::without_replacement;
  int max_outer_iterations = 50;  // safety cap; 0 runs initialization only
  EmbedHyper embed;
  SvmParams svm;
  bool tag_score_clamp = true;
  bool warm_start = true;  // false re-initializes the net every iteration
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigError
};

AdaptConfig adapt_config_from_json_text(const std::string& json_text);
std::string adapt_config_to_json_text(const AdaptConfig& cfg);

// Evolving per-class bookkeeping. P/N/U are id sets; L_history records the
// ids newly labeled at each iteration (index 0 = initialization).
struct ClassState {
  int class_id = 0;
  std::set<std::string> positives;
  std::set<std::string> negatives;
  std::set<std::string> unlabeled;
  std::vector<std::vector<std::string>> labeled_history;
  bool stopped = false;
  int initial_positive_count = 0;  // |P0|, before any target sample joined

  std::size_t total_labeled() const {
    std::size_t n = 0;
    for (const auto& l : labeled_history) n += l.size();
    return n;
  }
};

struct AdaptState {
  std::vector<ClassState> classes;
  int iteration = 0;  // iterations completed; 0 right after initialization
};

struct ScoredCandidate {
  std::string id;
  int class_id = 0;
  double score = 0.0;
};

struct IterationClassLog {
  int iteration = 0;
  int class_id = 0;
  int k_budget = 0;
  int n_selected = 0;
  double min_score = 0.0;
  double max_score = 0.0;
  double embed_loss = 0.0;
  bool stopped = false;
};

struct LedgerEntry {
  int iteration = 0;
  int class_id = 0;
  std::vector<std::string> ids;  // sorted lexicographically
};

struct AdaptResult {
  EmbeddingNet initial_net;  // trained on the auxiliary set only
  EmbeddingNet final_net;
  std::vector<LinearSvm> svm_fv;  // iteration-0 raw-feature machines
  std::vector<LinearSvm> svm_wv;  // final semantic machines
  std::vector<IterationClassLog> history;
  std::vector<LedgerEntry> ledger;
  std::vector<ClassState> final_states;
  TagDictionary dictionary;
  int iterations_run = 0;  // not counting initialization
};

// Per-class K = ceil(k_fraction * |P0|); selection exhausts U when smaller.
int top_k_budget(double k_fraction, int initial_positive_count);

// Combined confidence at iteration k >= 1: semantic SVM confidence times
// the tag score against every previously labeled positive of the class
// (initialization batch included), with the tag score clamped to [0,1]
// unless disabled.
double combined_score_iter(const TagVector& candidate_tags,
                           const std::vector<TagVector>& labeled_positive_tags,
                           const TagDictionary& dict, double svm_wv_confidence, bool clamp);

// Cross-class dedupe plus per-class top-K. A sample scored under several
// classes goes to its best-scoring class (ties: lower class index); within
// a class, candidates rank by score, ties broken by lexicographic id.
// Returned per-class lists are sorted lexicographically.
std::vector<std::vector<std::string>> select_top_k(const std::vector<ScoredCandidate>& scored,
                                                   const std::vector<int>& k_per_class);

// Applies one iteration's labels: winners join their class's positives and
// every other class's negatives; U shrinks by exactly the labeled ids. With
// replacement, each class that gained m positives evicts its m lowest-
// confidence auxiliary-origin positives (target-origin samples never leave).
using ConfidenceLookup = std::function<double(int class_id, const std::string& id)>;
void update_sets(AdaptState& state, const std::vector<std::vector<std::string>>& newly_labeled,
                 SamplingPolicy policy, const std::set<std::string>& auxiliary_ids,
                 const ConfidenceLookup& confidence);

// True once ceil(stop_fraction * |P0|) ids are labeled or U is exhausted.
bool should_stop(const ClassState& cls, const AdaptConfig& cfg);

// The full loop: initialization on the auxiliary set, then score / select /
// update with per-class stopping. Deterministic under cfg.seed; target
// true labels are never read. n_threads > 1 distributes the per-class SVM
// work; results are identical either way.
AdaptResult run_adaptation(const Dataset& aux, const Dataset& target_train,
                           const ClassAnchors& anchors, const AdaptConfig& cfg,
                           int n_threads = 0);

std::string history_csv(const AdaptResult& result);
std::string ledger_jsonl(const AdaptResult& result);
void save_history_csv(const AdaptResult& result, const std::string& path);
void save_ledger(const AdaptResult& result, const std::string& path);

}  // namespace driftlab

#include "driftlab/tags.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <fstream>
#include <map>
#include <set>

#include "driftlab/errors.hpp"
#include "driftlab/porter.hpp"

namespace driftlab {

std::uint64_t TagVector::intersection_count(const TagVector& other) const {
  const std::size_t n = std::min(blocks_.size(), other.blocks_.size());
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < n; ++i) total += std::popcount(blocks_[i] & other.blocks_[i]);
  return total;
}

std::uint64_t TagVector::count() const {
  std::uint64_t total = 0;
  for (auto b : blocks_) total += std::popcount(b);
  return total;
}

int TagDictionary::index_of(const std::string& stem) const {
  auto it = std::lower_bound(stems.begin(), stems.end(), stem);
  if (it == stems.end() || *it != stem) return -1;
  return static_cast<int>(it - stems.begin());
}

std::string normalize_tag(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  std::size_t start = (!raw.empty() && raw.front() == '#') ? 1 : 0;
  for (std::size_t i = start; i < raw.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(raw[i]);
    if (std::isalpha(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

namespace {

std::set<std::string> stemmed_tag_set(const Sample& s) {
  std::set<std::string> stems;
  for (const auto& raw : s.tags) {
    const std::string norm = normalize_tag(raw);
    if (norm.empty()) continue;
    stems.insert(porter_stem(norm));
  }
  return stems;
}

}  // namespace

TagDictionary build_dictionary(const Dataset& target_train) {
  TagDictionary dict;

  std::size_t total_raw_tags = 0;
  std::map<std::string, int> df;
  for (const auto& s : target_train.samples) {
    total_raw_tags += s.tags.size();
    for (const auto& stem : stemmed_tag_set(s)) ++df[stem];
  }

  for (const auto& [stem, freq] : df) {
    if (freq >= 2) {
      dict.stems.push_back(stem);
      dict.doc_freq.push_back(freq);
    }
  }
  dict.n_d = dict.stems.size();
  dict.n_bar_t = total_raw_tags == 0 || target_train.samples.empty()
                     ? 1.0
                     : static_cast<double>(total_raw_tags) /
                           static_cast<double>(target_train.samples.size());
  return dict;
}

TagVector tag_feature(const Sample& sample, const TagDictionary& dict) {
  TagVector v(dict.n_d);
  for (const auto& stem : stemmed_tag_set(sample)) {
    const int idx = dict.index_of(stem);
    if (idx >= 0) v.set(static_cast<std::size_t>(idx));
  }
  return v;
}

double tag_score(const TagVector& candidate, const std::vector<TagVector>& labeled_positives,
                 const TagDictionary& dict) {
  if (labeled_positives.empty())
    throw ContractError("tag_score: labeled positive set must be non-empty");
  std::uint64_t overlap = 0;
  for (const auto& p : labeled_positives) overlap += candidate.intersection_count(p);
  return static_cast<double>(overlap) /
         (static_cast<double>(labeled_positives.size()) * dict.n_bar_t);
}

void save_dictionary(const TagDictionary& dict, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open dictionary dump for writing: " + path);
  out << "#driftlab-tagdict v1 N_D=" << dict.n_d << " n_bar_t=" << dict.n_bar_t << "\n";
  for (std::size_t i = 0; i < dict.stems.size(); ++i)
    out << i << '\t' << dict.stems[i] << '\t' << dict.doc_freq[i] << '\n';
}

}  // namespace driftlab

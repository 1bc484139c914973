#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "driftlab/dataset.hpp"

namespace driftlab {

// Binary membership vector over the tag dictionary, packed into 64-bit
// blocks so intersections are popcounts.
class TagVector {
 public:
  TagVector() = default;
  explicit TagVector(std::size_t n_bits) : n_bits_(n_bits), blocks_((n_bits + 63) / 64, 0) {}

  std::size_t size() const { return n_bits_; }
  bool test(std::size_t i) const { return (blocks_[i >> 6] >> (i & 63)) & 1u; }
  void set(std::size_t i) { blocks_[i >> 6] |= (std::uint64_t{1} << (i & 63)); }

  // Number of positions set in both vectors.
  std::uint64_t intersection_count(const TagVector& other) const;

  std::uint64_t count() const;
  bool operator==(const TagVector& other) const = default;

 private:
  std::size_t n_bits_ = 0;
  std::vector<std::uint64_t> blocks_;
};

struct TagDictionary {
  std::vector<std::string> stems;    // sorted lexicographically; defines bit order
  std::vector<int> doc_freq;         // per stem, number of distinct samples
  std::size_t n_d = 0;               // == stems.size()
  double n_bar_t = 1.0;              // mean raw tag count per target_train sample

  int index_of(const std::string& stem) const;  // -1 when absent
};

// lowercase, strip a leading '#', drop everything non-alphabetic.
std::string normalize_tag(const std::string& raw);

// Stemmed dictionary over target_train tags. A stem survives only if it
// appears in the tag sets of at least two distinct samples; document
// frequency, not raw occurrence, is what counts. Tagless corpus yields an
// empty dictionary with n_bar_t = 1.
TagDictionary build_dictionary(const Dataset& target_train);

TagVector tag_feature(const Sample& sample, const TagDictionary& dict);

// Average co-occurring tag count between a candidate and the labeled
// positives, normalized by n_bar_t:
//   (1/|L|) (1/n_bar_t) * sum over positives of <candidate, positive>.
// No clamping here; the consumer decides. Throws ContractError when the
// positive set is empty.
double tag_score(const TagVector& candidate, const std::vector<TagVector>& labeled_positives,
                 const TagDictionary& dict);

// Audit dump: header with N_D and n_bar_t, then `index<TAB>stem<TAB>doc_freq`.
void save_dictionary(const TagDictionary& dict, const std::string& path);

}  // namespace driftlab

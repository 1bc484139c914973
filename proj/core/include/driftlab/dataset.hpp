#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace driftlab {

enum class Domain { auxiliary, target_train, target_test };

std::string to_string(Domain d);
Domain domain_from_string(const std::string& s);

// Sentinel for "retrieved under a class hashtag but showing none of the
// known classes". Only meaningful in true_label, only for target domains.
inline constexpr int kNoneOfTheAbove = -1;

// One video: an opaque feature vector plus weak metadata. Features are kept
// as float32 to match the on-disk representation bit for bit. true_label is
// generator/evaluation bookkeeping only; the adaptation loop never reads it
// for target samples.
struct Sample {
  std::string id;
  Domain domain = Domain::auxiliary;
  std::optional<int> hashtag_class;  // target domains only
  std::optional<int> true_label;     // class index or kNoneOfTheAbove
  std::vector<double> feature;
  std::vector<std::string> tags;  // target domains only; empty for auxiliary
};

struct Dataset {
  std::vector<Sample> samples;  // order is load order and is authoritative
  int d_f = 0;
  std::vector<std::string> class_names;

  int n_classes() const { return static_cast<int>(class_names.size()); }
  // Throws ValidationError on any broken invariant.
  void validate() const;
};

// Per-class unit-scale vectors in the semantic space; row c is the target
// the embedding pulls class-c samples toward.
struct ClassAnchors {
  std::vector<std::vector<double>> vectors;
  int d_w = 0;

  int n_classes() const { return static_cast<int>(vectors.size()); }
  void validate() const;
};

// Everything the synthetic generator needs. Counts calibrated per class;
// scalar fields in the JSON form broadcast to every class.
struct SynthConfig {
  int n_classes = 7;
  int d_f = 12;
  int d_w = 24;
  std::vector<int> aux_count;           // per class
  std::vector<int> target_train_count;  // per class
  std::vector<int> target_test_count;   // per class
  std::vector<double> true_positive_fraction;  // per class, in (0,1]
  double shift_rotation = 0.9;      // radians per mixing plane
  double shift_translation = 4.0;   // offset magnitude in feature space
  double shift_noise = 0.6;         // extra stddev added to shifted samples
  double class_separation = 6.0;    // distance scale between class means
  double feature_noise = 1.0;       // within-class stddev
  int tag_pool_size = 30;           // shared tag words per class
  double tags_per_sample_mean = 15.0;
  double distractor_tag_rate = 3.0;  // mean one-off junk tags per sample
  std::uint64_t seed = 1;
  std::vector<std::string> class_names;  // defaulted when empty

  void validate() const;  // throws ConfigError
};

struct SynthOutput {
  Dataset aux;
  Dataset target_train;
  Dataset target_test;
  ClassAnchors anchors;
};

// --- file IO ------------------------------------------------------------
//
// Manifest: header `#driftlab-manifest v1 d_f=<int> classes=<comma list>`,
// then per sample one tab-separated record
//   id  domain  hashtag_class|-  true_label|none|-  tags(comma-joined)|-  feature_row_index
// The feature file lives next to the manifest as `<stem>.fvec`:
// magic "FVEC", u32le count, u32le dim, count*dim float32le row-major.

Dataset load_manifest(const std::string& manifest_path);
void save_dataset(const Dataset& ds, const std::string& manifest_path);

// Anchors: UTF-8 text, `word v1 ... v_dw` per line. Every class name must
// be present; a duplicated word keeps its last occurrence (a warning is
// printed to stderr).
ClassAnchors load_anchors(const std::string& path, const std::vector<std::string>& class_names);
void save_anchors(const ClassAnchors& anchors, const std::vector<std::string>& class_names,
                  const std::string& path);

SynthOutput generate_synthetic(const SynthConfig& cfg);

// Zero vector maps to zero vector; anything else to unit norm.
std::vector<double> l2_normalize(const std::vector<double>& v);

// In-place variant applied to every sample of a dataset.
void l2_normalize_features(Dataset& ds);

SynthConfig synth_config_from_json_text(const std::string& json_text);
std::string synth_config_to_json_text(const SynthConfig& cfg);

// Seven action classes with per-class counts and hashtag-noise ratios that
// mirror a realistic crawl, sized so a full run finishes in desk time.
SynthConfig default_synth_config();

}  // namespace driftlab

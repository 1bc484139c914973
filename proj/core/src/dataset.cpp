#include "driftlab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "driftlab/errors.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

using json = nlohmann::ordered_json;

std::string to_string(Domain d) {
  switch (d) {
    case Domain::auxiliary: return "auxiliary";
    case Domain::target_train: return "target_train";
    case Domain::target_test: return "target_test";
  }
  return "auxiliary";
}

Domain domain_from_string(const std::string& s) {
  if (s == "auxiliary") return Domain::auxiliary;
  if (s == "target_train") return Domain::target_train;
  if (s == "target_test") return Domain::target_test;
  throw ParseError("unknown domain: " + s);
}

void Dataset::validate() const {
  std::set<std::string> ids;
  for (const auto& s : samples) {
    if (!ids.insert(s.id).second) throw ValidationError("duplicate sample id: " + s.id);
    if (static_cast<int>(s.feature.size()) != d_f)
      throw ValidationError("sample " + s.id + ": feature dimension " +
                            std::to_string(s.feature.size()) + " != d_f " + std::to_string(d_f));
    if (s.domain == Domain::auxiliary) {
      if (!s.tags.empty()) throw ValidationError("auxiliary sample " + s.id + " carries tags");
      if (!s.true_label || *s.true_label < 0)
        throw ValidationError("auxiliary sample " + s.id + " needs a class true_label");
    } else {
      if (!s.hashtag_class)
        throw ValidationError("target sample " + s.id + " is missing its hashtag class");
    }
    if (s.hashtag_class && (*s.hashtag_class < 0 || *s.hashtag_class >= n_classes()))
      throw ValidationError("sample " + s.id + ": hashtag_class out of range");
    if (s.true_label && *s.true_label >= n_classes())
      throw ValidationError("sample " + s.id + ": true_label out of range");
    if (s.true_label && *s.true_label < 0 && *s.true_label != kNoneOfTheAbove)
      throw ValidationError("sample " + s.id + ": bad true_label sentinel");
  }
}

void ClassAnchors::validate() const {
  for (int c = 0; c < n_classes(); ++c) {
    const auto& v = vectors[static_cast<std::size_t>(c)];
    if (static_cast<int>(v.size()) != d_w)
      throw ValidationError("anchor " + std::to_string(c) + " has wrong dimension");
    double norm2 = 0.0;
    for (double x : v) norm2 += x * x;
    if (norm2 <= 0.0)
      throw ValidationError("anchor " + std::to_string(c) + " has zero norm");
    for (int o = 0; o < c; ++o)
      if (vectors[static_cast<std::size_t>(o)] == v)
        throw ValidationError("anchors " + std::to_string(o) + " and " + std::to_string(c) +
                              " coincide");
  }
}

// --- FVEC ----------------------------------------------------------------

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

std::string fvec_path_for(const std::string& manifest_path) {
  const auto dot = manifest_path.find_last_of('.');
  const auto slash = manifest_path.find_last_of("/\\");
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? manifest_path.substr(0, dot) : manifest_path) + ".fvec";
}

std::vector<std::vector<double>> load_fvec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open feature file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "FVEC") throw FormatError("bad FVEC magic in " + path);
  const std::uint32_t count = read_u32_le(in);
  const std::uint32_t dim = read_u32_le(in);
  if (!in) throw FormatError("truncated FVEC header in " + path);
  std::vector<std::vector<double>> rows(count, std::vector<double>(dim));
  for (auto& row : rows) {
    for (auto& v : row) {
      const std::uint32_t bits = read_u32_le(in);
      float f;
      std::memcpy(&f, &bits, 4);
      v = f;
    }
  }
  if (!in) throw FormatError("truncated FVEC payload in " + path);
  return rows;
}

void save_fvec(const std::vector<const std::vector<double>*>& rows, std::uint32_t dim,
               const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open feature file for writing: " + path);
  out.write("FVEC", 4);
  write_u32_le(out, static_cast<std::uint32_t>(rows.size()));
  write_u32_le(out, dim);
  for (const auto* row : rows) {
    for (double v : *row) {
      const float f = static_cast<float>(v);
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      write_u32_le(out, bits);
    }
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

// --- manifest -------------------------------------------------------------

Dataset load_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw ValidationError("cannot open manifest: " + manifest_path);

  std::string header;
  if (!std::getline(in, header)) throw ParseError("empty manifest: " + manifest_path, 1);
  Dataset ds;
  {
    std::istringstream hs(header);
    std::string tag, version, df_kv, classes_kv;
    hs >> tag >> version >> df_kv >> classes_kv;
    if (tag != "#driftlab-manifest" || version != "v1" || df_kv.rfind("d_f=", 0) != 0 ||
        classes_kv.rfind("classes=", 0) != 0)
      throw ParseError("bad manifest header: " + header, 1);
    try {
      ds.d_f = std::stoi(df_kv.substr(4));
    } catch (const std::exception&) {
      throw ParseError("bad d_f in manifest header", 1);
    }
    ds.class_names = split(classes_kv.substr(8), ',');
    if (ds.class_names.size() == 1 && ds.class_names[0].empty()) ds.class_names.clear();
  }

  const auto rows = load_fvec(fvec_path_for(manifest_path));
  if (!rows.empty() && static_cast<int>(rows.front().size()) != ds.d_f)
    throw FormatError("feature file dim " + std::to_string(rows.front().size()) +
                      " != manifest d_f " + std::to_string(ds.d_f));

  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 6) throw ParseError("expected 6 tab-separated fields", line_no);
    Sample s;
    s.id = cols[0];
    s.domain = [&] {
      try {
        return domain_from_string(cols[1]);
      } catch (const ParseError& e) {
        throw ParseError(e.what(), line_no);
      }
    }();
    try {
      if (cols[2] != "-") s.hashtag_class = std::stoi(cols[2]);
      if (cols[3] == "none")
        s.true_label = kNoneOfTheAbove;
      else if (cols[3] != "-")
        s.true_label = std::stoi(cols[3]);
    } catch (const std::exception&) {
      throw ParseError("bad class index", line_no);
    }
    if (cols[4] != "-" && !cols[4].empty()) s.tags = split(cols[4], ',');
    std::size_t row_idx = 0;
    try {
      row_idx = std::stoul(cols[5]);
    } catch (const std::exception&) {
      throw ParseError("bad feature_row_index", line_no);
    }
    if (row_idx >= rows.size()) throw ParseError("feature_row_index out of range", line_no);
    s.feature = rows[row_idx];
    ds.samples.push_back(std::move(s));
  }
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& manifest_path) {
  ds.validate();
  std::ofstream out(manifest_path);
  if (!out) throw ValidationError("cannot open manifest for writing: " + manifest_path);
  out << "#driftlab-manifest v1 d_f=" << ds.d_f << " classes=";
  for (std::size_t i = 0; i < ds.class_names.size(); ++i) {
    if (i) out << ',';
    out << ds.class_names[i];
  }
  out << '\n';

  std::vector<const std::vector<double>*> rows;
  rows.reserve(ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& s = ds.samples[i];
    for (const auto& t : s.tags)
      if (t.empty() || t.find_first_of(",\t\n") != std::string::npos)
        throw ValidationError("sample " + s.id + ": tag not representable in manifest");
    if (s.id.find_first_of("\t\n") != std::string::npos)
      throw ValidationError("sample id not representable in manifest: " + s.id);
    out << s.id << '\t' << to_string(s.domain) << '\t';
    if (s.hashtag_class)
      out << *s.hashtag_class;
    else
      out << '-';
    out << '\t';
    if (!s.true_label)
      out << '-';
    else if (*s.true_label == kNoneOfTheAbove)
      out << "none";
    else
      out << *s.true_label;
    out << '\t';
    if (s.tags.empty()) {
      out << '-';
    } else {
      for (std::size_t t = 0; t < s.tags.size(); ++t) {
        if (t) out << ',';
        out << s.tags[t];
      }
    }
    out << '\t' << i << '\n';
    rows.push_back(&s.feature);
  }
  save_fvec(rows, static_cast<std::uint32_t>(ds.d_f), fvec_path_for(manifest_path));
}

// --- anchors ----------------------------------------------------------------

ClassAnchors load_anchors(const std::string& path, const std::vector<std::string>& class_names) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open anchors file: " + path);
  std::string line;
  std::size_t line_no = 0;
  int d_w = -1;
  std::vector<std::pair<std::string, std::vector<double>>> entries;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word.empty()) throw ParseError("missing word", line_no);
    std::vector<double> v;
    double x;
    while (ls >> x) v.push_back(x);
    if (v.empty()) throw ParseError("anchor line has no vector components", line_no);
    if (d_w == -1) d_w = static_cast<int>(v.size());
    if (static_cast<int>(v.size()) != d_w)
      throw FormatError("anchor dimension mismatch at line " + std::to_string(line_no));
    if (!seen.insert(word).second) {
      std::cerr << "warning: anchor word '" << word << "' duplicated, keeping last occurrence\n";
      for (auto& e : entries)
        if (e.first == word) e.second = v;
    } else {
      entries.emplace_back(word, std::move(v));
    }
  }
  ClassAnchors anchors;
  anchors.d_w = std::max(d_w, 0);
  for (const auto& name : class_names) {
    auto it = std::find_if(entries.begin(), entries.end(),
                           [&](const auto& e) { return e.first == name; });
    if (it == entries.end()) throw LookupError("class word not found in anchors file: " + name);
    anchors.vectors.push_back(it->second);
  }
  anchors.validate();
  return anchors;
}

void save_anchors(const ClassAnchors& anchors, const std::vector<std::string>& class_names,
                  const std::string& path) {
  if (class_names.size() != anchors.vectors.size())
    throw ContractError("save_anchors: class count mismatch");
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open anchors file for writing: " + path);
  out.precision(17);
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    out << class_names[c];
    for (double v : anchors.vectors[c]) out << ' ' << v;
    out << '\n';
  }
}

// --- synthetic generator ----------------------------------------------------

namespace {

const char* kDefaultClassWords[7] = {"billiards", "cycling",  "diving", "golf",
                                     "horseriding", "kayaking", "pushups"};

std::vector<double> random_unit(Rng& rng, int dim) {
  std::vector<double> v(static_cast<std::size_t>(dim));
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      norm2 += x * x;
    }
  } while (norm2 < 1e-12);
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& x : v) x *= inv;
  return v;
}

// Near-orthogonal directions: random vectors pushed through Gram-Schmidt
// against the ones already picked (skipped when dim < count).
std::vector<std::vector<double>> spread_directions(Rng& rng, int count, int dim) {
  std::vector<std::vector<double>> dirs;
  for (int c = 0; c < count; ++c) {
    auto v = random_unit(rng, dim);
    if (count <= dim) {
      for (const auto& u : dirs) {
        double proj = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) proj += v[i] * u[i];
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= proj * u[i];
      }
      double norm2 = 0.0;
      for (double x : v) norm2 += x * x;
      if (norm2 > 1e-12) {
        const double inv = 1.0 / std::sqrt(norm2);
        for (auto& x : v) x *= inv;
      }
    }
    dirs.push_back(std::move(v));
  }
  return dirs;
}

// Rotation as a sequence of Givens rotations in random coordinate planes.
struct PlaneRotation {
  std::vector<std::pair<int, int>> planes;
  std::vector<double> angles;

  void apply(std::vector<double>& v) const {
    for (std::size_t p = 0; p < planes.size(); ++p) {
      const auto [i, j] = planes[p];
      const double c = std::cos(angles[p]);
      const double s = std::sin(angles[p]);
      const double vi = v[static_cast<std::size_t>(i)];
      const double vj = v[static_cast<std::size_t>(j)];
      v[static_cast<std::size_t>(i)] = c * vi - s * vj;
      v[static_cast<std::size_t>(j)] = s * vi + c * vj;
    }
  }
};

PlaneRotation make_rotation(Rng& rng, int dim, double angle_scale) {
  PlaneRotation rot;
  if (dim < 2 || angle_scale == 0.0) return rot;
  const int n_planes = std::max(1, dim / 2);
  for (int p = 0; p < n_planes; ++p) {
    int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(dim)));
    int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(dim - 1)));
    if (j >= i) ++j;
    rot.planes.emplace_back(i, j);
    rot.angles.push_back(angle_scale * (0.5 + rng.uniform()));  // in [0.5, 1.5) * scale
  }
  return rot;
}

std::string synth_tag_word(Rng& rng) {
  const int len = 5 + static_cast<int>(rng.below(4));
  std::string w;
  for (int i = 0; i < len; ++i) w.push_back(static_cast<char>('a' + rng.below(26)));
  return w;
}

std::vector<int> broadcast_counts(const std::vector<int>& v, int n, const char* what) {
  if (static_cast<int>(v.size()) == n) return v;
  if (v.size() == 1) return std::vector<int>(static_cast<std::size_t>(n), v[0]);
  throw ConfigError(std::string("synth config: ") + what + " must have 1 or n_classes entries");
}

}  // namespace

void SynthConfig::validate() const {
  if (n_classes < 1) throw ConfigError("synth config: n_classes must be >= 1");
  if (d_f < 1 || d_w < 1) throw ConfigError("synth config: dimensions must be >= 1");
  auto check_counts = [&](const std::vector<int>& v, const char* what) {
    if (v.empty()) throw ConfigError(std::string("synth config: missing ") + what);
    if (static_cast<int>(v.size()) != 1 && static_cast<int>(v.size()) != n_classes)
      throw ConfigError(std::string("synth config: ") + what + " must have 1 or n_classes entries");
    for (int c : v)
      if (c < 1) throw ConfigError(std::string("synth config: ") + what + " entries must be >= 1");
  };
  check_counts(aux_count, "aux_count");
  check_counts(target_train_count, "target_train_count");
  check_counts(target_test_count, "target_test_count");
  if (true_positive_fraction.empty())
    throw ConfigError("synth config: missing true_positive_fraction");
  for (double f : true_positive_fraction)
    if (!(f > 0.0 && f <= 1.0))
      throw ConfigError("synth config: true_positive_fraction must be in (0,1]");
  if (shift_rotation < 0 || shift_translation < 0 || shift_noise < 0)
    throw ConfigError("synth config: shift magnitudes must be >= 0");
  if (tag_pool_size < 1) throw ConfigError("synth config: tag_pool_size must be >= 1");
  if (tags_per_sample_mean < 1.0)
    throw ConfigError("synth config: tags_per_sample_mean must be >= 1");
  if (distractor_tag_rate < 0.0)
    throw ConfigError("synth config: distractor_tag_rate must be >= 0");
  if (!class_names.empty() && static_cast<int>(class_names.size()) != n_classes)
    throw ConfigError("synth config: class_names must match n_classes");
}

SynthOutput generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  const int nc = cfg.n_classes;
  const auto aux_n = broadcast_counts(cfg.aux_count, nc, "aux_count");
  const auto tt_n = broadcast_counts(cfg.target_train_count, nc, "target_train_count");
  const auto te_n = broadcast_counts(cfg.target_test_count, nc, "target_test_count");
  std::vector<double> tp_frac = cfg.true_positive_fraction;
  if (static_cast<int>(tp_frac.size()) == 1)
    tp_frac.assign(static_cast<std::size_t>(nc), tp_frac[0]);
  if (static_cast<int>(tp_frac.size()) != nc)
    throw ConfigError("synth config: true_positive_fraction must have 1 or n_classes entries");

  std::vector<std::string> names = cfg.class_names;
  if (names.empty()) {
    for (int c = 0; c < nc; ++c)
      names.push_back(c < 7 ? kDefaultClassWords[c] : "action" + std::to_string(c));
  }

  Rng geo(substream_seed(cfg.seed, "synth_geometry"));
  const auto class_dirs = spread_directions(geo, nc, cfg.d_f);
  std::vector<std::vector<double>> means(static_cast<std::size_t>(nc));
  for (int c = 0; c < nc; ++c) {
    means[static_cast<std::size_t>(c)] = class_dirs[static_cast<std::size_t>(c)];
    for (auto& x : means[static_cast<std::size_t>(c)]) x *= cfg.class_separation;
  }
  const PlaneRotation rot = make_rotation(geo, cfg.d_f, cfg.shift_rotation);
  std::vector<double> shift_dir =
      cfg.shift_translation > 0 ? random_unit(geo, cfg.d_f) : std::vector<double>(cfg.d_f, 0.0);
  for (auto& x : shift_dir) x *= cfg.shift_translation;

  // Anchors: near-orthogonal unit vectors in the semantic space.
  Rng anc(substream_seed(cfg.seed, "synth_anchors"));
  ClassAnchors anchors;
  anchors.d_w = cfg.d_w;
  anchors.vectors = spread_directions(anc, nc, cfg.d_w);
  anchors.validate();

  // Tag pools. Pool words are shared across samples of a class; an extra
  // pool backs the none-of-the-above samples. Regenerate on the (unlikely)
  // stem collision so every pool word maps to a distinct dictionary stem.
  Rng tagrng(substream_seed(cfg.seed, "synth_tags"));
  std::vector<std::vector<std::string>> pools(static_cast<std::size_t>(nc) + 1);
  {
    std::set<std::string> used_stems;
    for (const auto& n : names) used_stems.insert(n);
    for (auto& pool : pools) {
      for (int i = 0; i < cfg.tag_pool_size; ++i) {
        std::string w = synth_tag_word(tagrng);
        int guard = 0;
        while (used_stems.count(w) && guard++ < 1000) w = synth_tag_word(tagrng);
        used_stems.insert(w);
        pool.push_back(w);
      }
    }
  }

  auto draw_feature = [&](Rng& rng, int true_class, bool shifted) {
    std::vector<double> v(static_cast<std::size_t>(cfg.d_f));
    if (true_class == kNoneOfTheAbove) {
      // background: broad blob around the origin
      for (auto& x : v) x = rng.normal() * cfg.class_separation * 0.7;
    } else {
      const auto& mu = means[static_cast<std::size_t>(true_class)];
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = mu[i] + rng.normal() * cfg.feature_noise;
    }
    if (shifted) {
      rot.apply(v);
      for (std::size_t i = 0; i < v.size(); ++i)
        v[i] += shift_dir[i] + rng.normal() * cfg.shift_noise;
    }
    // quantize through the on-disk precision so save/load round-trips exactly
    for (auto& x : v) x = static_cast<double>(static_cast<float>(x));
    return v;
  };

  auto draw_tags = [&](Rng& rng, int hashtag_class, int true_class) {
    std::vector<std::string> tags;
    tags.push_back(names[static_cast<std::size_t>(hashtag_class)]);
    const auto& pool = true_class == kNoneOfTheAbove ? pools[static_cast<std::size_t>(nc)]
                                                     : pools[static_cast<std::size_t>(true_class)];
    const int n_pool = rng.poisson(std::max(0.0, cfg.tags_per_sample_mean - 1.0 -
                                                     cfg.distractor_tag_rate));
    std::set<std::string> chosen;
    for (int i = 0; i < n_pool; ++i)
      chosen.insert(pool[rng.below(pool.size())]);
    tags.insert(tags.end(), chosen.begin(), chosen.end());
    const int n_junk = rng.poisson(cfg.distractor_tag_rate);
    for (int i = 0; i < n_junk; ++i) tags.push_back(synth_tag_word(rng));
    return tags;
  };

  SynthOutput out;
  out.anchors = std::move(anchors);
  out.aux.d_f = cfg.d_f;
  out.aux.class_names = names;
  out.target_train.d_f = cfg.d_f;
  out.target_train.class_names = names;
  out.target_test.d_f = cfg.d_f;
  out.target_test.class_names = names;

  Rng auxrng(substream_seed(cfg.seed, "synth_aux"));
  for (int c = 0; c < nc; ++c) {
    for (int i = 0; i < aux_n[static_cast<std::size_t>(c)]; ++i) {
      Sample s;
      s.id = "aux_" + names[static_cast<std::size_t>(c)] + "_" + std::to_string(i);
      s.domain = Domain::auxiliary;
      s.true_label = c;
      s.feature = draw_feature(auxrng, c, false);
      out.aux.samples.push_back(std::move(s));
    }
  }

  Rng ttrng(substream_seed(cfg.seed, "synth_target_train"));
  for (int c = 0; c < nc; ++c) {
    const int total = tt_n[static_cast<std::size_t>(c)];
    const int n_true =
        std::min(total, static_cast<int>(std::lround(tp_frac[static_cast<std::size_t>(c)] *
                                                     static_cast<double>(total))));
    for (int i = 0; i < total; ++i) {
      Sample s;
      s.id = "tt_" + names[static_cast<std::size_t>(c)] + "_" + std::to_string(i);
      s.domain = Domain::target_train;
      s.hashtag_class = c;
      int true_class;
      if (i < n_true) {
        true_class = c;
      } else if (nc > 1 && ttrng.uniform() < 0.5) {
        // related concept, wrong action: feature comes from another class
        int other = static_cast<int>(ttrng.below(static_cast<std::uint64_t>(nc - 1)));
        if (other >= c) ++other;
        true_class = other;
      } else {
        true_class = kNoneOfTheAbove;
      }
      s.true_label = true_class;
      s.feature = draw_feature(ttrng, true_class, true);
      s.tags = draw_tags(ttrng, c, true_class);
      out.target_train.samples.push_back(std::move(s));
    }
  }

  // Test samples mimic a hand-pruned set: true positives only.
  Rng terng(substream_seed(cfg.seed, "synth_target_test"));
  for (int c = 0; c < nc; ++c) {
    for (int i = 0; i < te_n[static_cast<std::size_t>(c)]; ++i) {
      Sample s;
      s.id = "te_" + names[static_cast<std::size_t>(c)] + "_" + std::to_string(i);
      s.domain = Domain::target_test;
      s.hashtag_class = c;
      s.true_label = c;
      s.feature = draw_feature(terng, c, true);
      s.tags = draw_tags(terng, c, c);
      out.target_test.samples.push_back(std::move(s));
    }
  }

  out.aux.validate();
  out.target_train.validate();
  out.target_test.validate();
  return out;
}

std::vector<double> l2_normalize(const std::vector<double>& v) {
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  if (norm2 <= 0.0) return v;
  const double inv = 1.0 / std::sqrt(norm2);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * inv;
  return out;
}

void l2_normalize_features(Dataset& ds) {
  for (auto& s : ds.samples) s.feature = l2_normalize(s.feature);
}

// --- config JSON ------------------------------------------------------------

namespace {

std::vector<int> counts_from_json(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  const auto& v = j.at(key);
  if (v.is_number_integer()) return {v.get<int>()};
  return v.get<std::vector<int>>();
}

}  // namespace

SynthConfig synth_config_from_json_text(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("synth config: ") + e.what());
  }
  SynthConfig cfg;
  try {
    cfg.n_classes = j.value("n_classes", cfg.n_classes);
    cfg.d_f = j.value("d_f", cfg.d_f);
    cfg.d_w = j.value("d_w", cfg.d_w);
    if (auto v = counts_from_json(j, "aux_count"); !v.empty()) cfg.aux_count = v;
    if (auto v = counts_from_json(j, "target_train_count"); !v.empty()) cfg.target_train_count = v;
    if (auto v = counts_from_json(j, "target_test_count"); !v.empty()) cfg.target_test_count = v;
    if (j.contains("true_positive_fraction")) {
      const auto& f = j.at("true_positive_fraction");
      if (f.is_number())
        cfg.true_positive_fraction = {f.get<double>()};
      else
        cfg.true_positive_fraction = f.get<std::vector<double>>();
    }
    cfg.shift_rotation = j.value("shift_rotation", cfg.shift_rotation);
    cfg.shift_translation = j.value("shift_translation", cfg.shift_translation);
    cfg.shift_noise = j.value("shift_noise", cfg.shift_noise);
    cfg.class_separation = j.value("class_separation", cfg.class_separation);
    cfg.feature_noise = j.value("feature_noise", cfg.feature_noise);
    cfg.tag_pool_size = j.value("tag_pool_size", cfg.tag_pool_size);
    cfg.tags_per_sample_mean = j.value("tags_per_sample_mean", cfg.tags_per_sample_mean);
    cfg.distractor_tag_rate = j.value("distractor_tag_rate", cfg.distractor_tag_rate);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("class_names")) cfg.class_names = j.at("class_names").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("synth config: ") + e.what());
  }
  return cfg;
}

SynthConfig default_synth_config() {
  SynthConfig cfg;
  cfg.n_classes = 7;
  cfg.d_f = 12;
  cfg.d_w = 24;
  cfg.aux_count = {129, 119, 124, 120, 169, 129, 90};
  cfg.target_train_count = {267, 280, 258, 268, 233, 284, 286};
  cfg.target_test_count = {24, 27, 39, 34, 29, 16, 40};
  cfg.true_positive_fraction = {100.0 / 267.0, 92.0 / 280.0,  133.0 / 258.0, 151.0 / 268.0,
                                106.0 / 233.0, 73.0 / 284.0, 178.0 / 286.0};
  cfg.shift_rotation = 0.9;
  cfg.shift_translation = 4.0;
  cfg.shift_noise = 0.6;
  cfg.seed = 20240501;
  return cfg;
}

std::string synth_config_to_json_text(const SynthConfig& cfg) {
  json j;
  j["n_classes"] = cfg.n_classes;
  j["d_f"] = cfg.d_f;
  j["d_w"] = cfg.d_w;
  j["aux_count"] = cfg.aux_count;
  j["target_train_count"] = cfg.target_train_count;
  j["target_test_count"] = cfg.target_test_count;
  j["true_positive_fraction"] = cfg.true_positive_fraction;
  j["shift_rotation"] = cfg.shift_rotation;
  j["shift_translation"] = cfg.shift_translation;
  j["shift_noise"] = cfg.shift_noise;
  j["class_separation"] = cfg.class_separation;
  j["feature_noise"] = cfg.feature_noise;
  j["tag_pool_size"] = cfg.tag_pool_size;
  j["tags_per_sample_mean"] = cfg.tags_per_sample_mean;
  j["distractor_tag_rate"] = cfg.distractor_tag_rate;
  j["seed"] = cfg.seed;
  if (!cfg.class_names.empty()) j["class_names"] = cfg.class_names;
  return j.dump(2) + "\n";
}

}  // namespace driftlab

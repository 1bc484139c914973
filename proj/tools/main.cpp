// driftlab command line: synth | run | eval | plot
//
// Exit codes: 0 ok, 1 runtime/data error, 2 refused precondition.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "driftlab/adapt.hpp"
#include "driftlab/dataset.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/eval.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// refused precondition -> exit 2
struct Refusal : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int env_threads() {
  const char* v = std::getenv("DRIFTLAB_THREADS");
  if (!v) return 0;
  try {
    return std::max(0, std::stoi(v));
  } catch (const std::exception&) {
    return 0;
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw driftlab::ValidationError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw driftlab::ValidationError("cannot write file: " + path.string());
  out << content;
}

void ensure_fresh_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_directory(dir))
    throw Refusal("output path exists and is not a directory: " + dir.string());
  if (fs::is_directory(dir) && !fs::is_empty(dir) && !force)
    throw Refusal("output directory not empty (use --force): " + dir.string());
  fs::create_directories(dir);
}

struct ExperimentConfig {
  std::optional<driftlab::SynthConfig> synth;
  std::string aux_manifest;
  std::string target_train_manifest;
  std::string anchors_path;
  driftlab::AdaptConfig adapt;
  std::string out_dir;
  bool l2_normalize_features = false;
};

ExperimentConfig load_experiment_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw driftlab::ParseError("experiment config: " + std::string(e.what()));
  }
  ExperimentConfig cfg;
  const bool has_synth = j.contains("synth");
  const bool has_data = j.contains("data");
  if (has_synth == has_data)
    throw driftlab::ConfigError(
        "experiment config must contain exactly one of \"synth\" or \"data\"");
  if (has_synth) {
    cfg.synth = driftlab::synth_config_from_json_text(j.at("synth").dump());
  } else {
    const auto& d = j.at("data");
    try {
      cfg.aux_manifest = d.at("aux_manifest").get<std::string>();
      cfg.target_train_manifest = d.at("target_train_manifest").get<std::string>();
      cfg.anchors_path = d.at("anchors").get<std::string>();
    } catch (const json::exception& e) {
      throw driftlab::ConfigError("experiment config data section: " + std::string(e.what()));
    }
  }
  if (j.contains("adapt"))
    cfg.adapt = driftlab::adapt_config_from_json_text(j.at("adapt").dump());
  cfg.out_dir = j.value("out", "");
  cfg.l2_normalize_features = j.value("l2_normalize_features", false);
  return cfg;
}

// ---- synth -----------------------------------------------------------------

void print_synth_stats(const driftlab::SynthOutput& data) {
  const auto& names = data.aux.class_names;
  const int nc = static_cast<int>(names.size());
  std::vector<long> train_total(nc, 0), train_true(nc, 0), test_count(nc, 0), aux_count(nc, 0);
  for (const auto& s : data.target_train.samples) {
    ++train_total[*s.hashtag_class];
    if (s.true_label && *s.true_label == *s.hashtag_class) ++train_true[*s.hashtag_class];
  }
  for (const auto& s : data.target_test.samples) ++test_count[*s.hashtag_class];
  for (const auto& s : data.aux.samples) ++aux_count[*s.true_label];

  std::size_t label_w = std::string("Train (true +ves)").size();
  auto print_row = [&](const std::string& label, const std::vector<long>& row) {
    std::cout << label << std::string(label_w + 2 - label.size(), ' ');
    for (int c = 0; c < nc; ++c) {
      const std::size_t w = std::max<std::size_t>(names[c].size(), 6) + 2;
      std::string v = std::to_string(row[c]);
      std::cout << v << std::string(w - v.size(), ' ');
    }
    std::cout << "\n";
  };
  std::cout << std::string(label_w + 2, ' ');
  for (int c = 0; c < nc; ++c) {
    const std::size_t w = std::max<std::size_t>(names[c].size(), 6) + 2;
    std::cout << names[c] << std::string(w - names[c].size(), ' ');
  }
  std::cout << "\n";
  print_row("Train (total)", train_total);
  print_row("Train (true +ves)", train_true);
  print_row("Test", test_count);
  print_row("Auxiliary", aux_count);
}

void write_synth_data(const driftlab::SynthOutput& data, const driftlab::SynthConfig& cfg,
                      const fs::path& dir) {
  driftlab::save_dataset(data.aux, (dir / "aux.manifest").string());
  driftlab::save_dataset(data.target_train, (dir / "target_train.manifest").string());
  driftlab::save_dataset(data.target_test, (dir / "target_test.manifest").string());
  driftlab::save_anchors(data.anchors, data.aux.class_names, (dir / "anchors.txt").string());
  write_file(dir / "synth_config.json", driftlab::synth_config_to_json_text(cfg));
}

int cmd_synth(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed, bool force) {
  driftlab::SynthConfig cfg = config_path.empty()
                                  ? driftlab::default_synth_config()
                                  : driftlab::synth_config_from_json_text(read_file(config_path));
  if (seed) cfg.seed = *seed;
  ensure_fresh_dir(out_dir, force);
  const auto data = driftlab::generate_synthetic(cfg);
  write_synth_data(data, cfg, out_dir);
  print_synth_stats(data);
  return 0;
}

// ---- run ---------------------------------------------------------------

int cmd_run(const std::string& config_path, const std::string& out_flag,
            std::optional<std::uint64_t> seed, const std::string& policy_flag,
            std::optional<int> max_iters, bool force) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (!out_flag.empty()) cfg.out_dir = out_flag;
  if (cfg.out_dir.empty())
    throw driftlab::ConfigError("no output directory (set \"out\" in the config or pass --out)");
  if (seed) {
    cfg.adapt.seed = *seed;
    if (cfg.synth) cfg.synth->seed = *seed;
  }
  if (!policy_flag.empty()) cfg.adapt.policy = driftlab::policy_from_string(policy_flag);
  if (max_iters) cfg.adapt.max_outer_iterations = *max_iters;
  cfg.adapt.validate();

  const fs::path out_dir = cfg.out_dir;
  ensure_fresh_dir(out_dir, force);

  // materialize data
  driftlab::Dataset aux, target_train;
  driftlab::ClassAnchors anchors;
  std::string aux_path, tt_path, anchors_path;
  if (cfg.synth) {
    const auto data = driftlab::generate_synthetic(*cfg.synth);
    fs::create_directories(out_dir / "data");
    write_synth_data(data, *cfg.synth, out_dir / "data");
    aux = data.aux;
    target_train = data.target_train;
    anchors = data.anchors;
    aux_path = "data/aux.manifest";
    tt_path = "data/target_train.manifest";
    anchors_path = "data/anchors.txt";
  } else {
    aux = driftlab::load_manifest(cfg.aux_manifest);
    target_train = driftlab::load_manifest(cfg.target_train_manifest);
    anchors = driftlab::load_anchors(cfg.anchors_path, aux.class_names);
    aux_path = fs::absolute(cfg.aux_manifest).string();
    tt_path = fs::absolute(cfg.target_train_manifest).string();
    anchors_path = fs::absolute(cfg.anchors_path).string();
  }
  if (cfg.l2_normalize_features) {
    driftlab::l2_normalize_features(aux);
    driftlab::l2_normalize_features(target_train);
  }

  // resolved config first, as .partial until the run lands
  json rc;
  rc["data"] = {{"aux_manifest", aux_path},
                {"target_train_manifest", tt_path},
                {"anchors", anchors_path}};
  rc["class_names"] = aux.class_names;
  rc["adapt"] = json::parse(driftlab::adapt_config_to_json_text(cfg.adapt));
  rc["l2_normalize_features"] = cfg.l2_normalize_features;
  write_file(out_dir / "run_config.json.partial", rc.dump(2) + "\n");

  const auto result =
      driftlab::run_adaptation(aux, target_train, anchors, cfg.adapt, env_threads());

  driftlab::save_history_csv(result, (out_dir / "history.csv").string());
  driftlab::save_ledger(result, (out_dir / "ledger.jsonl").string());
  driftlab::save_net(result.initial_net, (out_dir / "net_iter0.emb").string());
  driftlab::save_net(result.final_net, (out_dir / "net_final.emb").string());
  for (std::size_t c = 0; c < result.svm_fv.size(); ++c) {
    driftlab::save_svm(result.svm_fv[c], (out_dir / ("svm_fv_" + std::to_string(c) + ".svm")).string());
    driftlab::save_svm(result.svm_wv[c], (out_dir / ("svm_wv_" + std::to_string(c) + ".svm")).string());
  }
  driftlab::save_dictionary(result.dictionary, (out_dir / "tag_dictionary.tsv").string());
  fs::rename(out_dir / "run_config.json.partial", out_dir / "run_config.json");

  std::cout << "run complete: " << result.iterations_run << " iterations after initialization, "
            << "artifacts in " << out_dir.string() << "\n";
  return 0;
}

// ---- eval ---------------------------------------------------------------

struct RunArtifacts {
  json config;
  driftlab::EmbeddingNet net_iter0;
  driftlab::EmbeddingNet net_final;
  std::vector<driftlab::LinearSvm> svm_fv;
  std::string policy;
  std::vector<std::string> class_names;
  driftlab::ClassAnchors anchors;
  bool l2_normalize = false;
};

fs::path resolve_against(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

RunArtifacts load_run_dir(const fs::path& dir) {
  RunArtifacts art;
  const auto cfg_path = dir / "run_config.json";
  if (!fs::exists(cfg_path))
    throw driftlab::ValidationError("not a run directory (missing run_config.json): " +
                                    dir.string());
  art.config = json::parse(read_file(cfg_path));
  art.class_names = art.config.at("class_names").get<std::vector<std::string>>();
  art.policy = art.config.at("adapt").at("policy").get<std::string>();
  art.l2_normalize = art.config.value("l2_normalize_features", false);
  art.net_iter0 = driftlab::load_net((dir / "net_iter0.emb").string());
  art.net_final = driftlab::load_net((dir / "net_final.emb").string());
  for (std::size_t c = 0; c < art.class_names.size(); ++c) {
    const auto p = dir / ("svm_fv_" + std::to_string(c) + ".svm");
    if (!fs::exists(p)) throw driftlab::ValidationError("missing checkpoint: " + p.string());
    art.svm_fv.push_back(driftlab::load_svm(p.string()));
  }
  const auto anchors_file =
      resolve_against(dir, art.config.at("data").at("anchors").get<std::string>());
  art.anchors = driftlab::load_anchors(anchors_file.string(), art.class_names);
  return art;
}

json metrics_to_json(const std::vector<driftlab::ClassMetrics>& per_class,
                     const std::vector<std::string>& names) {
  json per;
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    const auto& m = per_class[c];
    per[names[c]] = {{"precision", m.precision}, {"recall", m.recall}, {"f_score", m.f_score},
                     {"tp", m.tp},               {"fp", m.fp},         {"fn", m.fn}};
  }
  const auto macro = driftlab::macro_average(per_class);
  return {{"per_class", per},
          {"macro",
           {{"precision", macro.precision}, {"recall", macro.recall}, {"f_score", macro.f_score}}}};
}

int cmd_eval(const std::vector<std::string>& run_dirs, const std::string& test_manifest,
             bool force) {
  std::vector<RunArtifacts> runs;
  for (const auto& d : run_dirs) runs.push_back(load_run_dir(d));
  if (runs.size() == 2 && runs[0].policy == runs[1].policy)
    throw driftlab::ConfigError("the two run directories use the same sampling policy");
  if (runs.size() == 2 && runs[0].class_names != runs[1].class_names)
    throw driftlab::ConfigError("the two run directories disagree on class names");

  driftlab::Dataset test = driftlab::load_manifest(test_manifest);
  if (test.samples.empty()) throw driftlab::ValidationError("test manifest has no samples");
  if (test.class_names != runs[0].class_names)
    throw driftlab::ConfigError("test manifest class names do not match the run");
  if (runs[0].l2_normalize) driftlab::l2_normalize_features(test);

  std::vector<int> truth;
  for (const auto& s : test.samples) {
    if (!s.true_label)
      throw driftlab::ValidationError("test sample " + s.id + " has no true label");
    truth.push_back(*s.true_label);
  }
  const auto& names = runs[0].class_names;
  const int nc = static_cast<int>(names.size());

  struct Method {
    std::string name;
    std::vector<int> predictions;
    // per class scores for ROC
    std::vector<std::vector<double>> scores;
  };
  std::vector<Method> methods;

  auto es_nn_method = [&](const std::string& name, const driftlab::EmbeddingNet& net,
                          const driftlab::ClassAnchors& anchors) {
    Method m;
    m.name = name;
    m.scores.resize(nc);
    for (const auto& s : test.samples) {
      m.predictions.push_back(driftlab::nearest_class(net, s.feature, anchors));
      for (int c = 0; c < nc; ++c)
        m.scores[c].push_back(driftlab::anchor_score(net, s.feature, anchors, c));
    }
    return m;
  };

  for (const auto& run : runs)
    methods.push_back(es_nn_method("adapted_" + run.policy, run.net_final, run.anchors));
  methods.push_back(es_nn_method("baseline_es_nn", runs[0].net_iter0, runs[0].anchors));
  {
    Method m;
    m.name = "baseline_fv_svm";
    m.scores.resize(nc);
    for (const auto& s : test.samples) {
      m.predictions.push_back(driftlab::classify_fv_svm(runs[0].svm_fv, s.feature));
      for (int c = 0; c < nc; ++c)
        m.scores[c].push_back(driftlab::svm_decision(runs[0].svm_fv[c], driftlab::FeatureView(s.feature)));
    }
    methods.push_back(std::move(m));
  }

  const fs::path eval_dir = fs::path(run_dirs[0]) / "eval";
  ensure_fresh_dir(eval_dir, force);

  json report;
  report["test_manifest"] = fs::absolute(test_manifest).string();
  report["n_test"] = test.samples.size();
  json methods_json;
  for (const auto& m : methods) {
    std::vector<driftlab::ClassMetrics> per_class;
    for (int c = 0; c < nc; ++c) per_class.push_back(driftlab::metrics(m.predictions, truth, c));
    methods_json[m.name] = metrics_to_json(per_class, names);

    for (int c = 0; c < nc; ++c) {
      std::vector<int> truth01;
      long pos = 0;
      for (int t : truth) {
        truth01.push_back(t == c ? 1 : 0);
        pos += t == c ? 1 : 0;
      }
      if (pos == 0 || pos == static_cast<long>(truth01.size())) {
        std::cerr << "warning: class " << names[c]
                  << " has single-class truth in the test set, skipping its ROC\n";
        continue;
      }
      const auto curve = driftlab::roc(m.scores[c], truth01);
      write_file(eval_dir / ("roc_" + m.name + "_" + names[c] + ".csv"),
                 driftlab::roc_csv(curve));
    }
  }
  report["methods"] = methods_json;
  write_file(eval_dir / "metrics.json", report.dump(2) + "\n");
  std::cout << "eval report: " << (eval_dir / "metrics.json").string() << "\n";
  return 0;
}

// ---- plot ---------------------------------------------------------------

int cmd_plot(const std::string& run_dir, bool force) {
  const fs::path dir(run_dir);
  RunArtifacts art = load_run_dir(dir);

  auto aux = driftlab::load_manifest(
      resolve_against(dir, art.config.at("data").at("aux_manifest").get<std::string>()).string());
  auto tt = driftlab::load_manifest(
      resolve_against(dir, art.config.at("data").at("target_train_manifest").get<std::string>())
          .string());
  if (art.l2_normalize) {
    driftlab::l2_normalize_features(aux);
    driftlab::l2_normalize_features(tt);
  }

  const fs::path plot_dir = dir / "plot";
  ensure_fresh_dir(plot_dir, force);

  auto emit = [&](const driftlab::EmbeddingNet& net, const std::string& stem) {
    std::vector<std::vector<double>> embeddings;
    std::vector<driftlab::ScatterPoint> points;
    for (const auto* ds : {&aux, &tt}) {
      for (const auto& s : ds->samples) {
        embeddings.push_back(driftlab::embed(net, std::span<const double>(s.feature)));
        driftlab::ScatterPoint p;
        p.label = s.domain == driftlab::Domain::auxiliary ? *s.true_label : *s.hashtag_class;
        p.domain = driftlab::to_string(s.domain);
        points.push_back(std::move(p));
      }
    }
    const auto proj = driftlab::pca_project_2d(embeddings);
    for (std::size_t i = 0; i < points.size(); ++i) {
      points[i].x = proj[i][0];
      points[i].y = proj[i][1];
    }
    write_file(plot_dir / ("scatter_" + stem + ".csv"), driftlab::scatter_csv(points));
    write_file(plot_dir / ("scatter_" + stem + ".svg"), driftlab::scatter_svg(points));
  };
  emit(art.net_iter0, "iter0");
  emit(art.net_final, "final");
  std::cout << "scatter files in " << plot_dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"driftlab: transductive domain adaptation over weakly tagged video features"};
  app.require_subcommand(1);

  std::string config_path, out_dir, policy, test_manifest;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_iters;
  bool force = false;
  std::vector<std::string> run_dirs;
  std::string plot_run_dir;

  auto* synth = app.add_subcommand("synth", "generate a synthetic domain-shift dataset");
  synth->add_option("--config", config_path, "SynthConfig JSON (defaults used when omitted)");
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--seed", seed, "override the config seed");
  synth->add_flag("--force", force, "overwrite a non-empty output directory");

  auto* run = app.add_subcommand("run", "run the adaptation loop");
  run->add_option("--config", config_path, "ExperimentConfig JSON")->required();
  run->add_option("--out", out_dir, "output directory (overrides config)");
  run->add_option("--seed", seed, "override the config seed");
  run->add_option("--policy", policy, "sampling policy: with | without");
  run->add_option("--max-iters", max_iters, "cap on outer iterations (0 = initialization only)");
  run->add_flag("--force", force, "overwrite a non-empty output directory");

  auto* eval = app.add_subcommand("eval", "evaluate run artifacts against a test manifest");
  eval->add_option("run_dirs", run_dirs, "one or two run directories (two: both policies)")
      ->required()
      ->expected(1, 2);
  eval->add_option("--test", test_manifest, "test manifest path")->required();
  eval->add_flag("--force", force, "overwrite an existing eval/ directory");

  auto* plot = app.add_subcommand("plot", "project embeddings to 2-d scatter files");
  plot->add_option("run_dir", plot_run_dir, "run directory")->required();
  plot->add_flag("--force", force, "overwrite an existing plot/ directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(config_path, out_dir, seed, force);
    if (run->parsed()) return cmd_run(config_path, out_dir, seed, policy, max_iters, force);
    if (eval->parsed()) return cmd_eval(run_dirs, test_manifest, force);
    if (plot->parsed()) return cmd_plot(plot_run_dir, force);
  } catch (const Refusal& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

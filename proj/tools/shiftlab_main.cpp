// shiftlab command line: dataset generation, searches, bound verification,
// and report rendering. Exit codes: 0 success, 1 verification failure,
// 2 usage or input error.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "shiftlab/boundlab.hpp"
#include "shiftlab/colored.hpp"
#include "shiftlab/errors.hpp"
#include "shiftlab/penalties.hpp"
#include "shiftlab/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace shiftlab;

namespace {

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ArgumentError("cannot open " + tmp + " for write");
    out << text;
    if (!out.flush()) throw ArgumentError("short write to " + tmp);
  }
  fs::rename(tmp, path);
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.contains(key)) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

// ---------------------------------------------------------------------------
// dataset build
// ---------------------------------------------------------------------------
int cmd_dataset_build(const std::string& kind_str, const std::string& mnist_dir,
                      uint64_t seed, const std::string& out_dir) {
  const data::DatasetKind kind = data::kind_from_string(kind_str);
  const data::GrayMnist pool = data::load_mnist_pool(mnist_dir);
  const data::DomainTriple triple = kind == data::DatasetKind::cmnist
                                        ? data::make_cmnist(pool, seed)
                                        : data::make_cs_cmnist(pool, seed);
  fs::create_directories(out_dir);
  json stats;
  stats["kind"] = data::kind_name(kind);
  stats["seed"] = seed;
  stats["domains"] = json::array();
  for (int e = 0; e < 3; ++e) {
    const data::ColoredDataset& ds = triple.domains[e];
    const std::string file =
        (fs::path(out_dir) / data::slds_filename(kind, seed, e + 1)).string();
    data::save_slds(file, ds);
    const auto s = ds.stats();
    stats["domains"].push_back(
        {{"index", ds.domain.domain_index},
         {"bias", ds.domain.bias},
         {"role", ds.domain.role == data::DomainRole::seen ? "seen" : "unseen"},
         {"count", ds.count()},
         {"p_color_eq_label", s.p_color_eq_label},
         {"label_flip_rate", s.label_flip_rate},
         {"file", fs::path(file).filename().string()}});
  }
  write_text_atomic((fs::path(out_dir) / "stats.json").string(),
                    stats.dump(2) + "\n");
  std::printf("wrote 3 domains + stats.json to %s\n", out_dir.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// search
// ---------------------------------------------------------------------------
struct RunConfig {
  data::DatasetKind kind = data::DatasetKind::cs_cmnist;
  uint64_t dataset_seed = 7;
  std::string mnist_dir;
  std::string cache_dir = data::default_cache_dir();
  std::string output_dir = "out";
  std::vector<penalties::Algorithm> algorithms;
  train::SearchSpec spec;  // algorithm/dataset_kind filled per run
  int jobs = 1;
};

RunConfig parse_run_config(const std::string& path, const std::string& profile) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  reject_unknown_keys(
      j, {"dataset", "output_dir", "algorithms", "search", "jobs"}, "config");

  RunConfig cfg;
  if (!j.contains("dataset")) throw ConfigError("config: missing 'dataset'");
  const json& d = j["dataset"];
  reject_unknown_keys(d, {"kind", "seed", "mnist_dir", "cache_dir"},
                      "config.dataset");
  cfg.kind = data::kind_from_string(d.at("kind").get<std::string>());
  cfg.dataset_seed = d.value("seed", 7u);
  cfg.mnist_dir = d.value("mnist_dir", std::string());
  cfg.cache_dir = d.value("cache_dir", data::default_cache_dir());
  cfg.output_dir = j.value("output_dir", std::string("out"));
  cfg.jobs = j.value("jobs", 1);

  if (!j.contains("algorithms") || !j["algorithms"].is_array() ||
      j["algorithms"].empty()) {
    throw ConfigError("config: 'algorithms' must be a non-empty array");
  }
  for (const json& a : j["algorithms"]) {
    cfg.algorithms.push_back(
        penalties::algorithm_from_string(a.get<std::string>()));
  }

  // Paper-protocol defaults per dataset kind.
  train::SearchSpec& s = cfg.spec;
  s.dataset_kind = cfg.kind;
  if (cfg.kind == data::DatasetKind::cs_cmnist) {
    s.n_trials = 25;
    s.repeats = 5;
    s.lr_range = {0.1, 0.1};
    s.batch_pow_lo = s.batch_pow_hi = 7;  // 128
  } else {
    s.n_trials = 10;
    s.repeats = 3;
    s.lr_range = {std::pow(10.0, -4.5), std::pow(10.0, -3.5)};
    s.batch_pow_lo = 3;
    s.batch_pow_hi = 9;
  }
  s.total_steps = 2000;
  s.lr_decay_at = 600;

  if (j.contains("search")) {
    const json& m = j["search"];
    reject_unknown_keys(m,
                        {"n_trials", "repeats", "base_seed", "alpha_range",
                         "beta_range", "lr", "lr_range", "batch_size",
                         "batch_pow_range", "total_steps", "lr_decay_at",
                         "warmup_steps", "val_fraction"},
                        "config.search");
    s.n_trials = m.value("n_trials", s.n_trials);
    s.repeats = m.value("repeats", s.repeats);
    s.base_seed = m.value("base_seed", 0u);
    auto range = [&](const char* key, train::LogRange cur) {
      if (!m.contains(key)) return cur;
      const json& r = m.at(key);
      if (!r.is_array() || r.size() != 2) {
        throw ConfigError(std::string("config.search.") + key +
                          " must be [lo, hi]");
      }
      return train::LogRange{r[0].get<double>(), r[1].get<double>()};
    };
    s.alpha_range = range("alpha_range", s.alpha_range);
    s.beta_range = range("beta_range", s.beta_range);
    if (m.contains("lr") && m.contains("lr_range")) {
      throw ConfigError("config.search: give either lr or lr_range");
    }
    if (m.contains("lr")) {
      const double lr = m.at("lr").get<double>();
      s.lr_range = {lr, lr};
    }
    s.lr_range = range("lr_range", s.lr_range);
    if (m.contains("batch_size") && m.contains("batch_pow_range")) {
      throw ConfigError("config.search: give either batch_size or batch_pow_range");
    }
    if (m.contains("batch_size")) {
      const int64_t b = m.at("batch_size").get<int64_t>();
      int pow = 0;
      while ((int64_t(1) << pow) < b) ++pow;
      if ((int64_t(1) << pow) != b) {
        throw ConfigError("config.search.batch_size must be a power of two");
      }
      s.batch_pow_lo = s.batch_pow_hi = pow;
    }
    if (m.contains("batch_pow_range")) {
      const json& r = m.at("batch_pow_range");
      if (!r.is_array() || r.size() != 2) {
        throw ConfigError("config.search.batch_pow_range must be [lo, hi]");
      }
      s.batch_pow_lo = r[0].get<int>();
      s.batch_pow_hi = r[1].get<int>();
    }
    s.total_steps = m.value("total_steps", s.total_steps);
    s.lr_decay_at = m.value("lr_decay_at", s.lr_decay_at);
    s.warmup_steps = m.value("warmup_steps", s.warmup_steps);
    s.val_fraction = m.value("val_fraction", s.val_fraction);
  }

  if (profile == "desk") {
    s.n_trials = 10;
    s.repeats = 3;
    s.total_steps = 800;
  } else if (!profile.empty() && profile != "full") {
    throw ConfigError("unknown profile '" + profile + "' (want desk or full)");
  }
  return cfg;
}

int cmd_search(const std::string& config_path, const std::string& profile,
               int jobs_override) {
  RunConfig cfg = parse_run_config(config_path, profile);
  if (jobs_override > 0) cfg.jobs = jobs_override;
  if (cfg.mnist_dir.empty()) {
    throw ConfigError("config.dataset.mnist_dir is required for search");
  }
  const data::DomainTriple triple = data::load_or_generate(
      cfg.kind, cfg.dataset_seed, cfg.mnist_dir, cfg.cache_dir);

  fs::create_directories(cfg.output_dir);
  std::vector<train::TrialResult> all;
  json summary;
  summary["dataset"] = data::kind_name(cfg.kind);
  summary["dataset_seed"] = cfg.dataset_seed;
  summary["profile"] = profile.empty() ? "full" : profile;
  summary["results"] = json::array();
  for (const penalties::Algorithm alg : cfg.algorithms) {
    train::SearchSpec spec = cfg.spec;
    spec.algorithm = alg;
    const train::ProtocolResult res =
        train::run_protocol(spec, triple, cfg.jobs);
    all.insert(all.end(), res.all_trials.begin(), res.all_trials.end());
    summary["results"].push_back(
        {{"dataset", data::kind_name(cfg.kind)},
         {"algorithm", penalties::algorithm_name(alg)},
         {"mean", res.test_accuracy.mean},
         {"std", res.test_accuracy.stddev},
         {"repeats", res.test_accuracy.n}});
    std::printf("%-10s test accuracy %.4f +/- %.4f over %lld repeats\n",
                penalties::algorithm_name(alg), res.test_accuracy.mean,
                res.test_accuracy.stddev,
                static_cast<long long>(res.test_accuracy.n));
  }
  train::write_results_csv((fs::path(cfg.output_dir) / "results.csv").string(),
                           all);
  write_text_atomic((fs::path(cfg.output_dir) / "summary.json").string(),
                    summary.dump(2) + "\n");
  std::printf("wrote %s/results.csv and %s/summary.json\n",
              cfg.output_dir.c_str(), cfg.output_dir.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// boundlab verify
// ---------------------------------------------------------------------------
int cmd_boundlab_verify(int64_t instances, int64_t latent, int64_t classes,
                        uint64_t seed) {
  const bound::VerifyReport report =
      bound::verify_random_instances(instances, latent, classes, seed);
  std::printf("checked: %lld\nviolations: %lld\nmin-slack: %.3e\n",
              static_cast<long long>(report.checked),
              static_cast<long long>(report.violations), report.min_slack);
  return report.violations > 0 ? 1 : 0;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------
int cmd_report(const std::string& in_path, const std::string& out_path) {
  std::ifstream in(in_path);
  if (!in) throw ArgumentError("cannot open " + in_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(in_path + ": " + std::string(e.what()));
  }
  if (!j.contains("results") || !j["results"].is_array()) {
    throw FormatError(in_path + ": missing 'results' array");
  }
  // dataset -> algorithm -> cell
  std::map<std::string, std::map<std::string, std::string>> cells;
  std::set<std::string> present;
  char buf[64];
  for (const json& r : j["results"]) {
    const std::string ds = r.at("dataset").get<std::string>();
    const std::string alg = r.at("algorithm").get<std::string>();
    std::snprintf(buf, sizeof(buf), "%.1f ± %.1f",
                  100.0 * r.at("mean").get<double>(),
                  100.0 * r.at("std").get<double>());
    cells[ds][alg] = buf;
    present.insert(alg);
  }
  std::vector<std::string> columns;
  for (const penalties::Algorithm a : penalties::reported_algorithms()) {
    if (present.contains(penalties::algorithm_name(a))) {
      columns.push_back(penalties::algorithm_name(a));
      present.erase(penalties::algorithm_name(a));
    }
  }
  columns.insert(columns.end(), present.begin(), present.end());

  std::string md = "| Dataset |";
  for (const std::string& c : columns) md += " " + c + " |";
  md += "\n|---|";
  for (size_t i = 0; i < columns.size(); ++i) md += "---|";
  md += "\n";
  for (const auto& [ds, row] : cells) {
    md += "| " + ds + " |";
    for (const std::string& c : columns) {
      const auto it = row.find(c);
      md += " " + (it == row.end() ? std::string("-") : it->second) + " |";
    }
    md += "\n";
  }
  if (out_path.empty()) {
    std::fputs(md.c_str(), stdout);
  } else {
    write_text_atomic(out_path, md);
    std::printf("wrote %s\n", out_path.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shiftlab: colored-MNIST domain generalization toolkit"};
  app.require_subcommand(1);

  // dataset build
  CLI::App* dataset = app.add_subcommand("dataset", "dataset management");
  dataset->require_subcommand(1);
  CLI::App* build = dataset->add_subcommand("build", "generate domain triple");
  std::string kind_str, mnist_dir, out_dir = "datasets";
  uint64_t seed = 7;
  build->add_option("--kind", kind_str, "cmnist or cs-cmnist")->required();
  build->add_option("--mnist-dir", mnist_dir, "directory with IDX files")
      ->required();
  build->add_option("--seed", seed, "generation seed");
  build->add_option("--out", out_dir, "output directory");

  // search
  CLI::App* search = app.add_subcommand("search", "hyperparameter search");
  std::string config_path, profile;
  int jobs_override = 0;
  search->add_option("--config", config_path, "run config JSON")->required();
  search->add_option("--profile", profile, "desk or full");
  search->add_option("--jobs", jobs_override, "parallel trials");

  // boundlab verify
  CLI::App* boundlab = app.add_subcommand("boundlab", "risk-bound lab");
  boundlab->require_subcommand(1);
  CLI::App* verify = boundlab->add_subcommand("verify", "randomized check");
  int64_t instances = 10000, latent = 5, classes = 3;
  uint64_t bseed = 0;
  verify->add_option("--instances", instances, "number of random instances");
  verify->add_option("--latent", latent, "latent points per domain");
  verify->add_option("--classes", classes, "label count");
  verify->add_option("--seed", bseed, "generator seed");

  // report
  CLI::App* report = app.add_subcommand("report", "markdown accuracy table");
  std::string in_path, out_path;
  report->add_option("--in", in_path, "summary.json")->required();
  report->add_option("--out", out_path, "output markdown file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (build->parsed()) {
      return cmd_dataset_build(kind_str, mnist_dir, seed, out_dir);
    }
    if (search->parsed()) {
      return cmd_search(config_path, profile, jobs_override);
    }
    if (verify->parsed()) {
      return cmd_boundlab_verify(instances, latent, classes, bseed);
    }
    if (report->parsed()) {
      return cmd_report(in_path, out_path);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}

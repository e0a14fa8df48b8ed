#include "kwforge/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "json.hpp"
#include "kwforge/evaluation.hpp"
#include "kwforge/io.hpp"
#include "kwforge/mapper_trainer.hpp"
#include "kwforge/model.hpp"
#include "kwforge/objective.hpp"
#include "kwforge/projection.hpp"
#include "kwforge/toy_data.hpp"

namespace kwforge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string num(const std::optional<double>& v, int precision = 4) { return v ? num(*v, precision) : "n/a"; }

std::string join(const std::vector<double>& xs, const char* sep) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += sep;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", xs[i]);
    s += buf;
  }
  return s;
}

// Run flags -----------------------------------------------------------------

struct RunFlags {
  std::string config_path;
  RunConfig v;
  std::string keyword;
  std::size_t nth = 0;
  std::vector<double> alphas;
  double lr = 0.0;
  std::size_t max_iter = 0;

  CLI::Option* model = nullptr;
  CLI::Option* map = nullptr;
  CLI::Option* dataset = nullptr;
  CLI::Option* sentence = nullptr;
  CLI::Option* sample_size = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* keyword_opt = nullptr;
  CLI::Option* nth_opt = nullptr;
  CLI::Option* alpha = nullptr;
  CLI::Option* lr_opt = nullptr;
  CLI::Option* max_iter_opt = nullptr;
  CLI::Option* workers = nullptr;
  CLI::Option* out = nullptr;
};

void add_run_options(CLI::App& app, RunFlags& f) {
  app.add_option("--config", f.config_path, "JSON file with run settings (flags take priority)");
  f.model = app.add_option("--model", f.v.model, "model spec: toy, toy:<seed> or <adapter>:<model-id>");
  f.map = app.add_option("--map", f.v.map_path, "trained embedding map file");
  f.dataset = app.add_option("--dataset", f.v.dataset_path, "parallel corpus, source<TAB>reference per line");
  f.sentence = app.add_option("--sentence", f.v.sentences, "sentence to attack (repeatable)");
  f.sample_size = app.add_option("--sample-size", f.v.sample_size, "sentences sampled from the dataset (0: all)");
  f.seed = app.add_option("--seed", f.v.seed, "seed for sampling, model init and the optimizer");
  f.keyword_opt = app.add_option("--keyword", f.keyword, "keyword to force into the translation");
  f.nth_opt = app.add_option("--nth", f.nth, "target the n-th most likely token instead");
  f.keyword_opt->excludes(f.nth_opt);
  f.alpha = app.add_option("--alpha-schedule", f.alphas, "similarity weights tried in order, e.g. 10,4,1")
                ->delimiter(',');
  f.lr_opt = app.add_option("--lr", f.lr, "Adam learning rate");
  f.max_iter_opt = app.add_option("--max-iter", f.max_iter, "iterations per alpha");
  f.workers = app.add_option("--workers", f.v.workers, "parallel attacks");
  f.out = app.add_option("--out", f.v.out_dir, "output directory");
}

template <typename T>
T config_value(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("config key '") + key + "': " + e.what());
  }
}

void apply_config_file(const fs::path& path, RunConfig& c) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config file '" + path.string() + "': " + e.what());
  }
  if (!j.is_object()) throw UsageError("config file '" + path.string() + "' must hold a JSON object");
  static const std::vector<std::string> known = {"model", "map",      "dataset", "sentences",      "sample_size",
                                                 "seed",  "keyword",  "nth",     "alpha_schedule", "lr",
                                                 "max_iter", "workers", "out"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw UsageError("config file '" + path.string() + "': unknown key '" + key + "'");
    }
  }
  if (j.contains("model")) c.model = config_value<std::string>(j, "model");
  if (j.contains("map")) c.map_path = config_value<std::string>(j, "map");
  if (j.contains("dataset")) c.dataset_path = config_value<std::string>(j, "dataset");
  if (j.contains("sentences")) c.sentences = config_value<std::vector<std::string>>(j, "sentences");
  if (j.contains("sample_size")) c.sample_size = config_value<std::size_t>(j, "sample_size");
  if (j.contains("seed")) c.seed = config_value<std::uint64_t>(j, "seed");
  if (j.contains("keyword")) c.keyword = config_value<std::string>(j, "keyword");
  if (j.contains("nth")) c.nth = config_value<std::size_t>(j, "nth");
  if (j.contains("alpha_schedule")) c.attack.alpha_schedule = config_value<std::vector<double>>(j, "alpha_schedule");
  if (j.contains("lr")) c.attack.learning_rate = config_value<double>(j, "lr");
  if (j.contains("max_iter")) c.attack.max_iterations = config_value<std::size_t>(j, "max_iter");
  if (j.contains("workers")) c.workers = config_value<std::size_t>(j, "workers");
  if (j.contains("out")) c.out_dir = config_value<std::string>(j, "out");
}

RunConfig resolve(const RunFlags& f) {
  RunConfig c;
  if (!f.config_path.empty()) apply_config_file(f.config_path, c);

  auto set = [](const CLI::Option* o) { return o->count() > 0; };
  if (set(f.model)) c.model = f.v.model;
  if (set(f.map)) c.map_path = f.v.map_path;
  if (set(f.dataset)) c.dataset_path = f.v.dataset_path;
  if (set(f.sentence)) c.sentences = f.v.sentences;
  if (set(f.sample_size)) c.sample_size = f.v.sample_size;
  if (set(f.seed)) c.seed = f.v.seed;
  if (set(f.keyword_opt) || set(f.nth_opt)) {
    c.keyword.reset();
    c.nth.reset();
    if (set(f.keyword_opt)) c.keyword = f.keyword;
    if (set(f.nth_opt)) c.nth = f.nth;
  }
  if (set(f.alpha)) c.attack.alpha_schedule = f.alphas;
  if (set(f.lr_opt)) c.attack.learning_rate = f.lr;
  if (set(f.max_iter_opt)) c.attack.max_iterations = f.max_iter;
  if (set(f.workers)) c.workers = f.v.workers;
  if (set(f.out)) c.out_dir = f.v.out_dir;
  c.attack.seed = c.seed;

  if (c.keyword.has_value() == c.nth.has_value()) {
    throw UsageError("exactly one of --keyword or --nth is required");
  }
  if (c.keyword && c.keyword->empty()) throw UsageError("--keyword must not be empty");
  if (c.workers == 0) throw UsageError("--workers must be at least 1");
  try {
    c.attack.validate();
  } catch (const InvalidInputError& e) {
    throw UsageError(e.what());
  }
  return c;
}

void parse_args(CLI::App& app, const std::vector<std::string>& args) {
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  app.parse(reversed);
}

// Shared run plumbing -------------------------------------------------------

struct ResolvedTarget {
  TargetSpec spec;
  std::string keyword;  // empty in nth mode
};

/// Resolves the target against the adapter's vocabulary before any weights load.
ResolvedTarget resolve_target(const RunConfig& c, std::ostream& err) {
  const Vocabulary vocab = load_vocabulary(c.model, "cpu", c.seed);
  if (c.keyword) {
    const KeywordResolution r = resolve_keyword(vocab, *c.keyword);
    if (r.warning) err << "warning: " << *r.warning << '\n';
    return {TargetSpec::predefined(r.token), vocab.token(r.token)};
  }
  TargetSpec spec = TargetSpec::nth_most_likely(*c.nth);
  spec.validate(vocab.size());
  return {spec, ""};
}

EmbeddingMap obtain_map(const std::string& map_path, const NmtModel& model, std::ostream& err) {
  const std::uint64_t fp = fingerprint(model.embed_table());
  if (!map_path.empty()) return load_map(map_path, fp);
  if (const auto cache = cache_directory()) {
    const fs::path cached = *cache / ("map-" + model.id() + ".bin");
    if (fs::exists(cached)) {
      err << "note: using cached map " << cached.string() << '\n';
      return load_map(cached, fp);
    }
  }
  err << "note: no --map given; using the identity-padded map\n";
  const Eigen::Index d = model.embedding_dim();
  return EmbeddingMap::identity_padded(d, d);
}

RunMetadata metadata(const RunConfig& c, const NmtModel& model, const AttackConfig& attack) {
  RunMetadata m;
  m.model = model.id();
  m.target_mode = c.keyword ? "keyword" : "nth";
  m.keyword = c.keyword.value_or("");
  m.nth = c.nth.value_or(0);
  m.learning_rate = attack.learning_rate;
  m.alpha_schedule = attack.alpha_schedule;
  m.max_iterations = attack.max_iterations;
  m.seed = c.seed;
  return m;
}

struct Row {
  std::string label;
  RunMetadata run;
  MetricsReport report;
};

void print_metrics_table(std::ostream& out, const std::vector<Row>& rows) {
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %8s %10s %6s %6s %8s %8s %8s %8s\n", "run", "lr", "alpha", "n", "ok",
                "trivial", "ASR", "RDBLEU", "Sim");
  out << line;
  for (const Row& r : rows) {
    std::snprintf(line, sizeof line, "%-28s %8s %10s %6zu %6zu %8zu %8s %8s %8s\n", r.label.c_str(),
                  num(r.run.learning_rate, 4).c_str(), join(r.run.alpha_schedule, "/").c_str(), r.report.total,
                  r.report.successful, r.report.trivially_successful, num(r.report.asr).c_str(),
                  num(r.report.rdbleu).c_str(), num(r.report.similarity).c_str());
    out << line;
  }
}

/// One row per (lr, alpha) setting, ordered by lr then decreasing alpha.
void print_trend_table(std::ostream& out, std::vector<Row> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.run.learning_rate != b.run.learning_rate) return a.run.learning_rate < b.run.learning_rate;
    return a.run.alpha_schedule > b.run.alpha_schedule;
  });
  out << "\ntrend over lr / alpha\n";
  char line[256];
  std::snprintf(line, sizeof line, "%8s %10s %8s %8s %8s\n", "lr", "alpha", "ASR", "Sim", "RDBLEU");
  out << line;
  for (const Row& r : rows) {
    std::snprintf(line, sizeof line, "%8s %10s %8s %8s %8s\n", num(r.run.learning_rate, 4).c_str(),
                  join(r.run.alpha_schedule, "/").c_str(), num(r.report.asr).c_str(),
                  num(r.report.similarity).c_str(), num(r.report.rdbleu).c_str());
    out << line;
  }
}

json report_document(const std::vector<Row>& rows) {
  json arr = json::array();
  for (const Row& r : rows) {
    arr.push_back({{"run",
                    {{"label", r.label},
                     {"model", r.run.model},
                     {"target_mode", r.run.target_mode},
                     {"keyword", r.run.keyword},
                     {"nth", r.run.nth},
                     {"learning_rate", r.run.learning_rate},
                     {"alpha_schedule", r.run.alpha_schedule},
                     {"max_iterations", r.run.max_iterations},
                     {"seed", r.run.seed}}},
                   {"metrics", json::parse(report_json(r.report))}});
  }
  return {{"schema", "kwforge.report"}, {"version", 1}, {"runs", arr}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream o(path);
  o << text << '\n';
  if (!o) throw DataError("cannot write '" + path.string() + "'");
}

void print_warnings(std::ostream& err, const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) err << "warning: " << w << '\n';
}

// Subcommands ---------------------------------------------------------------

int cmd_attack(const RunConfig& c, std::ostream& out, std::ostream& err) {
  if (c.sentences.empty() && c.dataset_path.empty()) throw UsageError("attack needs --sentence or --dataset");
  const ResolvedTarget target = resolve_target(c, err);

  std::vector<ParallelPair> pairs;
  for (const std::string& s : c.sentences) pairs.push_back({s, ""});
  if (!c.dataset_path.empty()) {
    const std::vector<ParallelPair> data = load_parallel_corpus(c.dataset_path);
    if (c.sample_size > data.size()) {
      throw UsageError("--sample-size " + std::to_string(c.sample_size) + " exceeds dataset size " +
                       std::to_string(data.size()));
    }
    for (std::size_t i : sample_indices(data.size(), c.sample_size, c.seed)) pairs.push_back(data[i]);
  }

  const auto model = load_model(c.model, "cpu", c.seed);
  const Vocabulary& vocab = model->vocabulary();
  std::vector<TokenSequence> sources;
  for (const ParallelPair& p : pairs) {
    try {
      sources.push_back(vocab.tokenize(p.source));
    } catch (const InvalidInputError& e) {
      throw DataError(std::string("bad sentence: ") + e.what());
    }
  }
  const EmbeddingMap map = obtain_map(c.map_path, *model, err);
  const ProjectionIndex index = load_or_build_index(*model, map, cache_directory());
  print_warnings(err, index.warnings);

  const auto results = attack_batch(*model, map, index, sources, target.spec, c.attack, c.workers);
  const MeanEmbeddingScorer scorer(*model, map);
  std::vector<std::string> warnings;
  ResultFile file{metadata(c, *model, c.attack), assemble_records(vocab, pairs, results, scorer, warnings)};
  print_warnings(err, warnings);

  fs::create_directories(c.out_dir);
  const fs::path path = fs::path(c.out_dir) / "results.jsonl";
  write_result_file(path, file);

  std::size_t ok = 0, trivial = 0, errors = 0;
  for (const ResultRecord& r : file.records) {
    if (r.result.error) {
      ++errors;
      out << "error    " << r.source << " : " << *r.result.error << '\n';
      continue;
    }
    const char* tag = r.result.trivial ? "trivial" : r.result.success ? "success" : "failed";
    ok += r.result.success;
    trivial += r.result.trivial;
    out << tag << std::string(9 - std::string(tag).size(), ' ') << r.source << " => " << r.result.adversarial_text
        << " | " << r.adversarial_translation << " [target " << r.keyword << ", id " << r.result.target_token
        << ", " << r.result.iterations_used << " it]\n";
  }
  out << file.records.size() << " attacked, " << ok << " successful (" << trivial << " trivial), " << errors
      << " errors; results in " << path.string() << '\n';
  return kExitOk;
}

int cmd_benchmark(const RunConfig& c, bool sweep_alpha, const std::vector<double>& sweep_lr, std::ostream& out,
                  std::ostream& err) {
  if (c.dataset_path.empty()) throw UsageError("benchmark needs --dataset");
  const ResolvedTarget target = resolve_target(c, err);
  const std::vector<ParallelPair> data = load_parallel_corpus(c.dataset_path);
  if (data.empty()) throw DataError("dataset '" + c.dataset_path + "' has no pairs");
  if (c.sample_size > data.size()) {
    throw UsageError("--sample-size " + std::to_string(c.sample_size) + " exceeds dataset size " +
                     std::to_string(data.size()));
  }

  const auto model = load_model(c.model, "cpu", c.seed);
  const EmbeddingMap map = obtain_map(c.map_path, *model, err);
  const ProjectionIndex index = load_or_build_index(*model, map, cache_directory());
  print_warnings(err, index.warnings);
  const MeanEmbeddingScorer scorer(*model, map);

  std::vector<AttackConfig> settings;
  const std::vector<double> lrs = sweep_lr.empty() ? std::vector<double>{c.attack.learning_rate} : sweep_lr;
  for (double lr : lrs) {
    AttackConfig a = c.attack;
    a.learning_rate = lr;
    if (sweep_alpha) {
      for (double alpha : c.attack.alpha_schedule) {
        a.alpha_schedule = {alpha};
        settings.push_back(a);
      }
    } else {
      settings.push_back(a);
    }
  }
  for (const AttackConfig& a : settings) {
    try {
      a.validate();
    } catch (const InvalidInputError& e) {
      throw UsageError(e.what());
    }
  }

  fs::create_directories(c.out_dir);
  const bool sweep = settings.size() > 1;
  std::vector<Row> rows;
  for (const AttackConfig& a : settings) {
    const BenchmarkOutcome outcome =
        run_benchmark(*model, map, index, data, target.spec, a, {c.sample_size, c.seed, c.workers}, scorer);
    std::string name = "results";
    if (sweep) name += "-lr" + join({a.learning_rate}, "") + "-alpha" + join(a.alpha_schedule, "_");
    write_result_file(fs::path(c.out_dir) / (name + ".jsonl"), {metadata(c, *model, a), outcome.records});
    print_warnings(err, outcome.report.warnings);
    rows.push_back({name, metadata(c, *model, a), outcome.report});
  }

  write_text(fs::path(c.out_dir) / "report.json",
             sweep ? report_document(rows).dump(2) : report_json(rows.front().report));
  print_metrics_table(out, rows);
  if (sweep) print_trend_table(out, rows);
  out << "bleu: " << kBleuSignature << '\n';
  return kExitOk;
}

struct TrainFlags {
  std::string model = "toy";
  std::uint64_t seed = 0;
  std::string corpus;
  MapperTrainConfig cfg;
  std::string out_dir = "kwforge-out";
};

int cmd_train_mapper(TrainFlags f, std::ostream& out, std::ostream& err) {
  f.cfg.corpus_path = f.corpus;
  f.cfg.seed = f.seed;
  const auto model = load_model(f.model, "cpu", f.seed);
  const TrainedMapper trained = train_mapper(*model, f.cfg);
  const TrainingReport& rep = trained.report;

  fs::create_directories(f.out_dir);
  const std::uint64_t fp = fingerprint(model->embed_table());
  const fs::path map_path = fs::path(f.out_dir) / "map.bin";
  save_map(map_path, trained.map, fp);
  if (const auto cache = cache_directory()) {
    fs::create_directories(*cache);
    save_map(*cache / ("map-" + model->id() + ".bin"), trained.map, fp);
  }
  const json report = {{"model", model->id()},
                       {"sentences", rep.sentences},
                       {"tokens", rep.tokens},
                       {"initial_loss", rep.initial_loss},
                       {"epoch_train_loss", rep.epoch_train_loss},
                       {"epoch_eval_loss", rep.epoch_eval_loss},
                       {"epochs", f.cfg.epochs},
                       {"batch_size", f.cfg.batch_size},
                       {"learning_rate", f.cfg.learning_rate},
                       {"seed", f.seed}};
  write_text(fs::path(f.out_dir) / "training.json", report.dump(2));

  out << "trained map for " << model->id() << " on " << rep.sentences << " sentences (" << rep.tokens
      << " tokens)\n";
  out << "initial loss " << num(rep.initial_loss) << '\n';
  for (std::size_t e = 0; e < rep.epoch_eval_loss.size(); ++e) {
    out << "epoch " << e + 1 << ": train " << num(rep.epoch_train_loss[e]) << ", eval " << num(rep.epoch_eval_loss[e])
        << '\n';
  }
  out << "map written to " << map_path.string() << '\n';
  (void)err;
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& files, const std::string& out_dir, std::ostream& out) {
  std::vector<Row> rows;
  for (const std::string& f : files) {
    const ResultFile file = read_result_file(f);
    if (file.records.empty()) throw DataError("'" + f + "' holds no records");
    rows.push_back({fs::path(f).stem().string(), file.run, summarize(file.records)});
  }
  print_metrics_table(out, rows);
  if (rows.size() > 1) print_trend_table(out, rows);
  out << "bleu: " << kBleuSignature << '\n';
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "report.json", report_document(rows).dump(2));
  }
  return kExitOk;
}

int cmd_toy_data(std::uint64_t seed, std::size_t count, bool parallel, const std::string& path, std::ostream& out) {
  std::ofstream file;
  if (!path.empty()) {
    if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
    file.open(path);
    if (!file) throw DataError("cannot write '" + path + "'");
  }
  std::ostream& sink = path.empty() ? out : file;
  if (parallel) {
    for (const ParallelPair& p : make_toy_parallel(seed, count)) sink << p.source << '\t' << p.reference << '\n';
  } else {
    for (const std::string& s : make_toy_corpus(seed, count)) sink << s << '\n';
  }
  if (!sink) throw DataError("failed writing toy data");
  return kExitOk;
}

}  // namespace

RunConfig parse_run_config(const std::vector<std::string>& args) {
  CLI::App app{"run settings", "kwforge"};
  RunFlags flags;
  add_run_options(app, flags);
  try {
    parse_args(app, args);
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  return resolve(flags);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Targeted keyword attacks on translation models", "kwforge"};
  app.require_subcommand(1);

  RunFlags attack_flags;
  CLI::App* attack = app.add_subcommand("attack", "attack sentences and write results.jsonl");
  add_run_options(*attack, attack_flags);

  RunFlags bench_flags;
  bool sweep_alpha = false;
  std::vector<double> sweep_lr;
  CLI::App* bench = app.add_subcommand("benchmark", "attack a dataset sample and compute metrics");
  add_run_options(*bench, bench_flags);
  bench->add_flag("--sweep-alpha", sweep_alpha, "run each alpha of the schedule on its own");
  bench->add_option("--sweep-lr", sweep_lr, "learning rates to sweep, e.g. 0.01,0.02")->delimiter(',');

  TrainFlags train;
  CLI::App* trainer = app.add_subcommand("train-mapper", "train the embedding map with a small LM");
  trainer->add_option("--model", train.model, "model spec");
  trainer->add_option("--seed", train.seed, "seed");
  trainer->add_option("--corpus", train.corpus, "monolingual source corpus, one sentence per line")->required();
  trainer->add_option("--epochs", train.cfg.epochs, "epochs");
  trainer->add_option("--batch-size", train.cfg.batch_size, "sentences per batch");
  trainer->add_option("--lr", train.cfg.learning_rate, "Adam learning rate");
  trainer->add_option("--clip", train.cfg.clip_norm, "gradient norm clip");
  trainer->add_option("--lm-layers", train.cfg.lm.layers, "recurrent layers");
  trainer->add_option("--lm-width", train.cfg.lm.width, "recurrent width");
  trainer->add_option("--lm-dim", train.cfg.lm.lm_dim, "LM embedding width (map output)");
  trainer->add_option("--out", train.out_dir, "output directory");

  std::vector<std::string> report_files;
  std::string report_out;
  CLI::App* report = app.add_subcommand("report", "summarize result files");
  report->add_option("files", report_files, "results.jsonl files")->required();
  report->add_option("--out", report_out, "directory for report.json");

  std::uint64_t toy_seed = 0;
  std::size_t toy_count = 100;
  bool toy_parallel = false;
  std::string toy_out;
  CLI::App* toy = app.add_subcommand("toy-data", "print a toy corpus or parallel TSV");
  toy->add_option("--seed", toy_seed, "seed");
  toy->add_option("--count", toy_count, "sentences");
  toy->add_flag("--parallel", toy_parallel, "emit source<TAB>reference lines");
  toy->add_option("--out", toy_out, "output file (default stdout)");

  try {
    parse_args(app, args);
    if (attack->parsed()) return cmd_attack(resolve(attack_flags), out, err);
    if (bench->parsed()) return cmd_benchmark(resolve(bench_flags), sweep_alpha, sweep_lr, out, err);
    if (trainer->parsed()) return cmd_train_mapper(train, out, err);
    if (report->parsed()) return cmd_report(report_files, report_out, out);
    if (toy->parsed()) return cmd_toy_data(toy_seed, toy_count, toy_parallel, toy_out, out);
    throw UsageError("no subcommand");
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const TargetError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidRankError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace kwforge::cli

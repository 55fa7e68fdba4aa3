#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "CLI11.hpp"
#include "cli.hpp"
#include "config.hpp"
#include "json.hpp"
#include "tracediag/classifiers.hpp"
#include "tracediag/dataset.hpp"
#include "tracediag/error.hpp"
#include "tracediag/features.hpp"
#include "tracediag/indicators.hpp"
#include "tracediag/localizer.hpp"
#include "tracediag/mutation.hpp"
#include "tracediag/rng.hpp"
#include "tracediag/stats.hpp"
#include "tracediag/trace.hpp"

namespace fs = std::filesystem;

namespace tracediag::cli {
namespace {

using json = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Context {
  PipelineConfig cfg;
  std::string output;
  std::ostream& out;
  std::ostream& err;

  void warn(const std::string& msg) const { err << "warning: " << msg << '\n'; }
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text) || !f.flush()) {
    throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  }
}

// Resolves --output, falling back to paths.output_dir/<default_name>.
std::string output_path(const Context& ctx, const std::string& default_name) {
  if (!ctx.output.empty()) return ctx.output;
  if (!ctx.cfg.paths.output_dir.empty()) return (fs::path(ctx.cfg.paths.output_dir) / default_name).string();
  return {};
}

// Returns true when the text went to a file.
bool emit(const Context& ctx, const std::string& text, const std::string& default_name) {
  const std::string path = output_path(ctx, default_name);
  if (path.empty()) {
    ctx.out << text;
    return false;
  }
  write_file(path, text);
  return true;
}

std::vector<std::string> expand_trace_args(const std::vector<std::string>& args,
                                           const std::string& fallback_dir) {
  std::vector<std::string> inputs = args;
  if (inputs.empty() && !fallback_dir.empty()) inputs.push_back(fallback_dir);
  std::vector<std::string> files;
  for (const auto& a : inputs) {
    if (fs::is_directory(a)) {
      std::vector<std::string> found;
      for (const auto& e : fs::directory_iterator(a)) {
        if (e.is_regular_file() && e.path().extension() == ".jsonl") found.push_back(e.path().string());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(a);
    }
  }
  return files;
}

struct LoadedRun {
  std::string path;
  RunTrace trace;
  IndicatorMatrix indicators;
  FeatureVector features;
  std::string error;
  ValidationReport validation;
};

std::vector<LoadedRun> load_runs(const std::vector<std::string>& files, const IndicatorConfig& icfg,
                                 int jobs) {
  std::vector<LoadedRun> runs(files.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      LoadedRun& r = runs[i];
      r.path = files[i];
      try {
        r.trace = load_trace_file(files[i]);
        r.validation = validate_trace(r.trace);
        r.indicators = compute_indicators(r.trace, icfg);
        r.features = extract_features(r.indicators);
      } catch (const std::exception& e) {
        r.error = e.what();
      }
    }
  };
  std::size_t n_threads = jobs == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                    : static_cast<std::size_t>(jobs);
  n_threads = std::max<std::size_t>(1, std::min(n_threads, files.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return runs;
}

// Splits runs into usable ones, reporting the rest on stderr.
std::vector<const LoadedRun*> usable_runs(const Context& ctx, const std::vector<LoadedRun>& runs) {
  std::vector<const LoadedRun*> ok;
  for (const auto& r : runs) {
    if (!r.error.empty()) {
      ctx.warn(r.path + ": skipped: " + r.error);
      continue;
    }
    for (const auto& issue : r.validation.issues) {
      ctx.warn(r.path + ": " + issue.message);
    }
    ok.push_back(&r);
  }
  return ok;
}

FaultLabelSet labels_from_json(const nlohmann::json& v) {
  if (v.is_string()) return FaultLabelSet::parse(v.get<std::string>());
  if (!v.is_array()) throw Error(ErrorKind::SchemaMismatch, "label map values must be arrays or strings");
  FaultLabelSet s;
  for (const auto& item : v) {
    if (!item.is_string()) throw Error(ErrorKind::SchemaMismatch, "label names must be strings");
    s |= FaultLabelSet::parse(item.get<std::string>());
  }
  return s;
}

std::vector<double> read_samples(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\r\n");
  const std::string text = first != std::string::npos && arg[first] == '[' ? arg : read_file(arg);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::SchemaMismatch, "accuracy samples are not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_array()) throw Error(ErrorKind::SchemaMismatch, "accuracy samples must be a JSON array");
  std::vector<double> xs;
  for (const auto& v : j) {
    if (!v.is_number()) throw Error(ErrorKind::SchemaMismatch, "accuracy samples must be numbers");
    xs.push_back(v.get<double>());
  }
  return xs;
}

std::string format_lines(const std::vector<int>& lines) {
  std::string s = "[";
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(lines[i]);
  }
  return s + "]";
}

// --- extract -----------------------------------------------------------

struct ExtractArgs {
  std::vector<std::string> traces;
  std::string label_map;
  std::string indicators_dir;
};

int cmd_extract(Context& ctx, const ExtractArgs& a) {
  const auto files = expand_trace_args(a.traces, ctx.cfg.paths.traces_dir);
  if (files.empty()) throw UsageError("extract needs at least one trace file");
  const auto runs = load_runs(files, ctx.cfg.indicators, ctx.cfg.jobs);
  const auto ok = usable_runs(ctx, runs);
  if (ok.empty()) {
    ctx.err << "error: no readable traces\n";
    return kExitUsage;
  }

  std::map<std::string, FaultLabelSet> label_map;
  if (!a.label_map.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(a.label_map));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::SchemaMismatch, "label map is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) throw Error(ErrorKind::SchemaMismatch, "label map must be a JSON object");
    for (const auto& [k, v] : j.items()) label_map[k] = labels_from_json(v);
  }

  FeatureTable table;
  table.has_labels = !a.label_map.empty();
  for (const LoadedRun* r : ok) {
    FeatureRow row{r->trace.run_id, r->features, {}};
    if (table.has_labels) {
      auto it = label_map.find(row.run_id);
      if (it == label_map.end()) it = label_map.find(fs::path(r->path).stem().string());
      if (it == label_map.end()) {
        ctx.warn(r->path + ": run '" + row.run_id + "' missing from label map, treated as fault-free");
      } else {
        row.labels = it->second;
      }
    }
    table.rows.push_back(std::move(row));
    if (!a.indicators_dir.empty()) {
      std::ostringstream ind;
      write_indicator_csv(ind, r->indicators);
      write_file(fs::path(a.indicators_dir) / (r->trace.run_id + ".indicators.csv"), ind.str());
    }
  }
  std::ostringstream csv;
  write_feature_csv(csv, table);
  emit(ctx, csv.str(), "features.csv");
  return kExitOk;
}

// --- train -------------------------------------------------------------

struct TrainArgs {
  std::string features;
  std::string trained_at;
  double train_fraction = 0.7;
};

int cmd_train(Context& ctx, const TrainArgs& a) {
  const auto table = load_feature_csv(a.features);
  const auto samples = to_labeled_samples(table);
  if (!(a.train_fraction > 0.0 && a.train_fraction < 1.0)) {
    throw UsageError("--train-fraction must lie in (0,1)");
  }
  if (samples.size() < 3) throw Error(ErrorKind::EmptyDataset, "need at least 3 labelled rows");

  std::string bundle_path = output_path(ctx, "bundle.json");
  if (ctx.output.empty() && !ctx.cfg.paths.bundle.empty()) bundle_path = ctx.cfg.paths.bundle;
  if (bundle_path.empty()) throw UsageError("train needs --output (or paths.bundle in the config)");

  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(ctx.cfg.seed, "split"));
  rng.shuffle(order.begin(), order.end());
  auto n_train = static_cast<std::size_t>(std::lround(a.train_fraction * static_cast<double>(samples.size())));
  n_train = std::clamp<std::size_t>(n_train, 2, samples.size() - 1);

  std::vector<LabeledSample> train, test;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? train : test).push_back(samples[order[i]]);
  }
  const auto bundle = train_diagnosers(train, ctx.cfg.classifiers, ctx.cfg.seed, a.trained_at);
  write_file(bundle_path, bundle_to_json(bundle));

  const auto report = evaluate(bundle, test);
  json j = {{"bundle", bundle_path},
            {"seed", ctx.cfg.seed},
            {"train_size", train.size()},
            {"test_size", test.size()},
            {"metrics", json::parse(metrics_to_json(report))}};
  ctx.out << j.dump(2) << '\n';
  return kExitOk;
}

// --- diagnose ----------------------------------------------------------

struct DiagnoseArgs {
  std::string bundle;
  std::vector<std::string> traces;
  std::string program;
};

int cmd_diagnose(Context& ctx, const DiagnoseArgs& a) {
  const std::string bundle_path = a.bundle.empty() ? ctx.cfg.paths.bundle : a.bundle;
  if (bundle_path.empty()) throw UsageError("diagnose needs --bundle");
  const auto files = expand_trace_args(a.traces, ctx.cfg.paths.traces_dir);
  if (files.empty()) throw UsageError("diagnose needs at least one trace file");
  const std::string program_path = a.program.empty() ? ctx.cfg.paths.program : a.program;

  const auto bundle = bundle_from_json(read_file(bundle_path));
  const auto runs = load_runs(files, ctx.cfg.indicators, ctx.cfg.jobs);
  const auto ok = usable_runs(ctx, runs);
  if (ok.empty()) {
    ctx.err << "error: no readable traces\n";
    return kExitUsage;
  }
  if (static_cast<int>(ok.size()) < ctx.cfg.runs_per_program) {
    ctx.warn("diagnosing " + std::to_string(ok.size()) + " run(s); " +
             std::to_string(ctx.cfg.runs_per_program) + " expected per program");
  }

  std::vector<FeatureVector> features;
  for (const LoadedRun* r : ok) features.push_back(r->features);
  const auto report = diagnose(bundle, features);

  json j = json::parse(diagnosis_to_json(report));
  for (std::size_t i = 0; i < ok.size(); ++i) {
    json run = {{"run_id", ok[i]->trace.run_id}, {"path", ok[i]->path}};
    for (auto& [k, v] : j["runs"][i].items()) run[k] = v;
    j["runs"][i] = run;
  }

  std::optional<LocalizationReport> loc;
  if (!program_path.empty()) {
    const auto program = load_program_file(program_path);
    for (const auto& w : program.warnings) {
      ctx.warn(program_path + ":" + std::to_string(w.line) + ": " + w.message);
    }
    loc = localize(program, report.final_labels);
    j["program"] = program_path;
    j["localization"] = json::parse(localization_to_json(*loc));
  }

  const bool to_file = emit(ctx, j.dump(2) + "\n", "report.json");
  if (to_file) {
    const auto types = report.final_labels.types();
    if (types.empty()) ctx.out << "No fault diagnosed\n";
    for (std::size_t i = 0; i < types.size(); ++i) {
      ctx.out << "Fault " << (i + 1) << ": [" << fault_name(types[i]) << "]";
      if (loc) {
        auto it = loc->lines.find(types[i]);
        ctx.out << " (Lines: " << (it == loc->lines.end() ? std::string("[-]") : format_lines(it->second))
                << ")";
      }
      ctx.out << '\n';
    }
  }
  return kExitOk;
}

// --- localize ----------------------------------------------------------

struct LocalizeArgs {
  std::string program;
  std::string faults = "loss,optimizer,lr,epoch,act";
  std::string spec_out;
};

int cmd_localize(Context& ctx, const LocalizeArgs& a) {
  const std::string path = a.program.empty() ? ctx.cfg.paths.program : a.program;
  if (path.empty()) throw UsageError("localize needs a program file");
  const FaultLabelSet faults = FaultLabelSet::parse(a.faults);
  const auto program = load_program_file(path);
  for (const auto& w : program.warnings) ctx.warn(path + ":" + std::to_string(w.line) + ": " + w.message);
  if (!a.spec_out.empty()) write_file(a.spec_out, spec_to_json(program.derived_spec) + "\n");
  emit(ctx, localization_to_json(localize(program, faults)) + "\n", "localization.json");
  return kExitOk;
}

// --- seed --------------------------------------------------------------

struct SeedArgs {
  std::string spec;
  std::size_t max_types = 5;
  std::string evaluator_cmd;
  std::size_t repetitions = 20;
  int retries = 3;
};

std::vector<double> run_evaluator(const std::string& command, const ModelSpec& spec) {
  static std::atomic<unsigned> counter{0};
  const fs::path tmp = fs::temp_directory_path() /
                       ("tracediag-spec-" + std::to_string(::getpid()) + "-" +
                        std::to_string(counter++) + ".json");
  write_file(tmp, spec_to_json(spec) + "\n");
  std::string cmd = command;
  if (const auto pos = cmd.find("{spec}"); pos != std::string::npos) {
    cmd.replace(pos, 6, tmp.string());
  } else {
    cmd += " " + tmp.string();
  }
  std::string output;
  int status = -1;
  if (FILE* pipe = ::popen(cmd.c_str(), "r")) {
    char buf[4096];
    std::size_t n = 0;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) output.append(buf, n);
    status = ::pclose(pipe);
  }
  std::error_code ec;
  fs::remove(tmp, ec);
  if (status != 0) throw std::runtime_error("evaluator command exited with status " + std::to_string(status));
  return read_samples(output);
}

int cmd_seed(Context& ctx, const SeedArgs& a) {
  const ModelSpec spec = spec_from_json(read_file(a.spec));
  if (a.max_types < 1 || a.max_types > kFaultTypeCount) throw UsageError("--max-types must lie in [1,5]");
  if (a.evaluator_cmd.empty()) {
    auto [mutated, plan] = random_plan(spec, a.max_types, ctx.cfg.seed);
    json j = {{"spec", json::parse(spec_to_json(mutated))}, {"plan", json::parse(plan_to_json(plan))}};
    emit(ctx, j.dump(2) + "\n", "seeding.json");
    return kExitOk;
  }
  SeedingOptions opts;
  opts.max_types = a.max_types;
  opts.kill = ctx.cfg.kill;
  opts.repetitions = a.repetitions;
  opts.retries_per_type = a.retries;
  const std::string cmd = a.evaluator_cmd;
  const auto result =
      seed_iteratively(spec, [&](const ModelSpec& s) { return run_evaluator(cmd, s); }, ctx.cfg.seed, opts);
  emit(ctx, seeding_to_json(result) + "\n", "seeding.json");
  return kExitOk;
}

// --- kill-check --------------------------------------------------------

struct KillArgs {
  std::string original;
  std::string mutant;
};

int cmd_kill_check(Context& ctx, const KillArgs& a) {
  const auto orig = read_samples(a.original);
  const auto mut = read_samples(a.mutant);
  emit(ctx, verdict_to_json(is_kill(orig, mut, ctx.cfg.kill)) + "\n", "verdict.json");
  return kExitOk;
}

// --- export-dist -------------------------------------------------------

struct DistArgs {
  std::string features;
  std::string label;
};

int cmd_export_dist(Context& ctx, const DistArgs& a) {
  const auto type = parse_fault_name(a.label);
  if (!type) throw UsageError("unknown fault label '" + a.label + "'");
  const auto table = load_feature_csv(a.features);
  if (!table.has_labels) throw Error(ErrorKind::SchemaMismatch, "feature CSV has no label columns");

  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  auto group = [&](const std::vector<double>& xs) {
    std::size_t n = 0;
    for (double x : xs) n += std::isfinite(x) ? 1 : 0;
    std::string s = std::to_string(n);
    if (n == 0) return s + ",nan,nan,nan,nan,nan";
    const auto o = aggregate(xs);
    auto at = [&](StatOp op) { return fmt(o[static_cast<std::size_t>(op)]); };
    return s + "," + at(StatOp::Mean) + "," + at(StatOp::Std) + "," + at(StatOp::Median) + "," +
           at(StatOp::Min) + "," + at(StatOp::Max);
  };

  std::ostringstream csv;
  csv << "feature,faulty_n,faulty_mean,faulty_std,faulty_median,faulty_min,faulty_max,"
         "clean_n,clean_mean,clean_std,clean_median,clean_min,clean_max\n";
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    std::vector<double> faulty, clean;
    for (const auto& row : table.rows) {
      (row.labels.contains(*type) ? faulty : clean).push_back(row.features[f]);
    }
    csv << feature_name(f) << ',' << group(faulty) << ',' << group(clean) << '\n';
  }
  emit(ctx, csv.str(), "distribution.csv");
  return kExitOk;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SchemaMismatch:
    case ErrorKind::InvalidParams:
    case ErrorKind::UnknownLoss:
      return kExitUsage;
    default:
      return kExitFailure;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Diagnose and localize faults in deep-learning training runs."};
  app.name("tracediag");
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", "tracediag 0.3.0");

  std::string config_path;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string output;
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides the config)");
  auto* jobs_opt = app.add_option("--jobs", jobs, "Parallel trace parsing bound, 0 = all cores");
  app.add_option("--config", config_path, "JSON pipeline config");
  app.add_option("--output,-o", output, "Output file (default: stdout)");

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Trace files to a 160-feature CSV");
  extract->add_option("traces", ex.traces, "Trace files or directories of .jsonl files");
  extract->add_option("--label-map", ex.label_map, "JSON object run_id -> fault labels");
  extract->add_option("--indicators-dir", ex.indicators_dir, "Also write per-run indicator CSVs here");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train KNN/tree/forest diagnosers from a labelled CSV");
  train->add_option("features", tr.features, "Labelled feature CSV")->required();
  train->add_option("--trained-at", tr.trained_at, "Free-form timestamp stored in the bundle");
  train->add_option("--train-fraction", tr.train_fraction, "Training share of the seeded split");

  DiagnoseArgs dg;
  auto* diag = app.add_subcommand("diagnose", "Diagnose fault types from traces of one program");
  diag->add_option("traces", dg.traces, "Trace files or directories");
  diag->add_option("--bundle,-b", dg.bundle, "Model bundle from `train`");
  diag->add_option("--program,-p", dg.program, "Program source for localization");

  LocalizeArgs lc;
  auto* loc = app.add_subcommand("localize", "Map fault types to source lines");
  loc->add_option("program", lc.program, "Program source");
  loc->add_option("--faults", lc.faults, "Comma-separated fault types");
  loc->add_option("--spec-out", lc.spec_out, "Write the derived model spec JSON here");

  SeedArgs sd;
  std::optional<double> seed_alpha, seed_beta;
  auto* seedcmd = app.add_subcommand("seed", "Seed faults into a model spec");
  seedcmd->add_option("--spec", sd.spec, "Model spec JSON")->required();
  seedcmd->add_option("--max-types", sd.max_types, "Maximum number of fault types");
  seedcmd->add_option("--evaluator-cmd", sd.evaluator_cmd,
                      "Command printing accuracy samples for the model spec file at {spec}");
  seedcmd->add_option("--repetitions", sd.repetitions, "Samples expected from the evaluator");
  seedcmd->add_option("--retries", sd.retries, "Attempts per fault type");
  seedcmd->add_option("--alpha", seed_alpha, "Kill-check significance level");
  seedcmd->add_option("--beta", seed_beta, "Kill-check effect-size threshold");

  KillArgs kl;
  std::optional<double> kill_alpha, kill_beta;
  auto* kill = app.add_subcommand("kill-check", "Decide whether a mutant is killed");
  kill->add_option("original", kl.original, "Original accuracies (file or inline JSON array)")->required();
  kill->add_option("mutant", kl.mutant, "Mutant accuracies (file or inline JSON array)")->required();
  kill->add_option("--alpha", kill_alpha, "Significance level");
  kill->add_option("--beta", kill_beta, "Effect-size threshold");

  DistArgs ds;
  auto* dist = app.add_subcommand("export-dist", "Per-feature statistics split by a fault label");
  dist->add_option("features", ds.features, "Labelled feature CSV")->required();
  dist->add_option("--label", ds.label, "Fault type")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    Context ctx{config_path.empty() ? PipelineConfig{} : load_config(config_path), output, out, err};
    if (seed_opt->count()) ctx.cfg.seed = seed;
    if (jobs_opt->count()) ctx.cfg.jobs = jobs;
    auto override_kill = [&](const std::optional<double>& alpha, const std::optional<double>& beta) {
      if (alpha) ctx.cfg.kill.alpha = *alpha;
      if (beta) ctx.cfg.kill.beta = *beta;
    };
    override_kill(seed_alpha, seed_beta);
    override_kill(kill_alpha, kill_beta);
    ctx.cfg.validate();

    if (extract->parsed()) return cmd_extract(ctx, ex);
    if (train->parsed()) return cmd_train(ctx, tr);
    if (diag->parsed()) return cmd_diagnose(ctx, dg);
    if (loc->parsed()) return cmd_localize(ctx, lc);
    if (seedcmd->parsed()) return cmd_seed(ctx, sd);
    if (kill->parsed()) return cmd_kill_check(ctx, kl);
    if (dist->parsed()) return cmd_export_dist(ctx, ds);
    throw UsageError("no command given");
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace tracediag::cli

#include "clinagent/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <ostream>
#include <sstream>

#include "clinagent/agents.hpp"
#include "clinagent/cassette.hpp"
#include "clinagent/evaluation.hpp"
#include "clinagent/http_backend.hpp"
#include "clinagent/text.hpp"

namespace clinagent {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::string trials;
  std::string history;
  std::string drugbank;
  std::string hetionet;
  std::string enrollment_model;
  std::string enrollment_url;
  std::string backend = "replay";
  std::string cassette;
  int parallelism = 1;
  int max_path_len = kDefaultMaxPathLength;
  int max_paths = kDefaultMaxPaths;
  int max_iterations = kDefaultMaxIterations;
  double threshold = kDecisionThreshold;
  std::string prompts;
  std::string out;
  std::string results;
  bool pretty = false;
  bool lenient = false;
  bool sequential = false;
  std::string api_base;
  std::string api_key;
  std::string model = "gpt-4";

  std::string trial_file;
  std::string trial_id;
  std::vector<std::string> drugs;
  std::vector<std::string> diseases;
  std::string criteria;
  std::string phase;

  std::string tool_name;
  std::vector<std::string> tool_args;
};

// Settings that may come from the environment or a --config JSON file when
// the flag itself is absent. Precedence: flag > env > config > default.
struct Layered {
  CLI::Option* option;
  std::string key;       // config-file key
  const char* env;       // nullptr when no env var applies
  std::function<void(const json&)> assign;
};

template <typename T>
Layered layer(CLI::Option* opt, std::string key, T& target, const char* env = nullptr) {
  return {opt, std::move(key), env, [&target](const json& v) { target = v.get<T>(); }};
}

void apply_layers(const std::vector<Layered>& layers, const std::string& config_path) {
  json config = json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw InputError("cannot open config file " + config_path);
    config = json::parse(in, nullptr, false);
    if (config.is_discarded() || !config.is_object()) {
      throw InputError("config file " + config_path + " must hold a JSON object");
    }
  }
  // The same key is registered on several subcommands; a flag given to any
  // of them wins for all.
  std::set<std::string> from_flags;
  for (const auto& l : layers) {
    if (l.option != nullptr && l.option->count() > 0) from_flags.insert(l.key);
  }
  for (const auto& l : layers) {
    if (from_flags.count(l.key) != 0) continue;
    if (l.env != nullptr) {
      if (const char* v = std::getenv(l.env); v != nullptr && *v != '\0') {
        l.assign(json(std::string(v)));
        continue;
      }
    }
    if (config.contains(l.key)) {
      try {
        l.assign(config[l.key]);
      } catch (const json::exception&) {
        throw InputError("config key '" + l.key + "' has the wrong type");
      }
    }
  }
}

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(std::string("cannot open ") + what + " file " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<TrialRecord> load_trials(const std::string& path, bool lenient, std::ostream& err) {
  std::istringstream in(read_file(path, "trials"));
  auto report = parse_trial_dataset(in, lenient ? IngestMode::kLenient : IngestMode::kStrict);
  for (const auto& s : report.skipped) err << "warning: " << path << ": skipped " << s << '\n';
  return std::move(report.records);
}

// Opens an output destination up front so an unwritable path fails before
// any work is done.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : fallback_(fallback) {
    if (path.empty()) return;
    file_.open(path, std::ios::binary | std::ios::trunc);
    if (!file_) throw InputError("cannot write output file " + path);
  }
  std::ostream& stream() { return file_.is_open() ? file_ : fallback_; }

 private:
  std::ofstream file_;
  std::ostream& fallback_;
};

std::string dump(const json& j, bool pretty) { return pretty ? j.dump(2) : j.dump(); }

std::shared_ptr<LLMBackend> make_live_backend(const Options& o) {
  if (o.api_base.empty()) throw InputError("live backend needs CA_API_BASE or --api-base");
  return std::make_shared<HttpChatBackend>(o.api_base, o.api_key);
}

KnowledgeBundle load_bundle(const Options& o, std::ostream& err, bool need_enrollment) {
  KnowledgeBundle bundle;
  LoadWarnings warnings;
  if (!o.drugbank.empty()) {
    std::istringstream in(read_file(o.drugbank, "drugbank"));
    bundle.drugs = load_drugbank(in, &warnings);
  }
  if (!o.hetionet.empty()) {
    std::istringstream in(read_file(o.hetionet, "hetionet"));
    bundle.graph = load_hetionet(in, &warnings, !o.lenient);
  }
  for (const auto& w : warnings.messages) err << "warning: " << w << '\n';

  if (!o.history.empty()) {
    const auto history = load_trials(o.history, o.lenient, err);
    bundle.drug_outcomes = build_outcome_table(history, EntityKind::kDrug);
    bundle.disease_outcomes = build_outcome_table(history, EntityKind::kDisease);
  }
  if (!o.enrollment_url.empty()) {
    bundle.enrollment = std::make_shared<ExternalEnrollmentPredictor>(o.enrollment_url);
  } else if (!o.enrollment_model.empty()) {
    bundle.enrollment =
        std::make_shared<ReferenceEnrollmentPredictor>(EnrollmentModel::load(o.enrollment_model));
  } else if (need_enrollment) {
    throw InputError("an enrollment predictor is required (--enrollment-model or --enrollment-url)");
  }
  if (o.max_path_len < 1 || o.max_paths < 1) throw InputError("path bounds must be >= 1");
  bundle.bounds = {o.max_path_len, o.max_paths};
  bundle.prompts = PromptSet::load(o.prompts.empty() ? PromptSet::default_dir() : fs::path(o.prompts));
  bundle.model = o.model;
  bundle.max_iterations = o.max_iterations;
  bundle.concurrent_specialists = !o.sequential;
  return bundle;
}

void require_cassette(const Options& o) {
  if (o.backend != "live" && o.backend != "replay" && o.backend != "record") {
    throw InputError("--backend must be live, replay or record");
  }
  if (o.backend != "live" && o.cassette.empty()) {
    throw InputError("--backend " + o.backend + " requires --cassette");
  }
}

TrialRecord trial_from_flags(const Options& o, std::ostream& err) {
  if (!o.trial_file.empty()) {
    const auto j = json::parse(read_file(o.trial_file, "trial"), nullptr, false);
    if (j.is_discarded()) throw InputError("trial file " + o.trial_file + " is not JSON");
    return trial_from_json(j);
  }
  if (!o.drugs.empty() || !o.diseases.empty()) {
    TrialRecord rec;
    rec.trial_id = o.trial_id.empty() ? "adhoc" : o.trial_id;
    rec.phase = parse_phase(o.phase);
    rec.drugs = o.drugs;
    rec.diseases = o.diseases;
    rec.criteria = o.criteria;
    rec.validate();
    return rec;
  }
  if (!o.trials.empty() && !o.trial_id.empty()) {
    for (auto& rec : load_trials(o.trials, o.lenient, err)) {
      if (rec.trial_id == o.trial_id) return rec;
    }
    throw InputError("trial " + o.trial_id + " not found in " + o.trials);
  }
  throw InputError("no trial given (use --trial, --drug/--disease, or --trials with --trial-id)");
}

json file_manifest(const std::string& path, std::size_t rows) {
  const auto bytes = read_file(path, "input");
  return {{"path", path}, {"rows", rows}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}};
}

int cmd_ingest(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.trials.empty() && o.drugbank.empty() && o.hetionet.empty()) {
    throw InputError("ingest needs at least one of --trials, --drugbank, --hetionet");
  }
  Output dest(o.out, out);
  json files = json::object();
  LoadWarnings warnings;
  if (!o.trials.empty()) {
    files["trials"] = file_manifest(o.trials, load_trials(o.trials, o.lenient, err).size());
  }
  if (!o.drugbank.empty()) {
    std::istringstream in(read_file(o.drugbank, "drugbank"));
    files["drugbank"] = file_manifest(o.drugbank, load_drugbank(in, &warnings).size());
  }
  if (!o.hetionet.empty()) {
    std::istringstream in(read_file(o.hetionet, "hetionet"));
    const auto graph = load_hetionet(in, &warnings, !o.lenient);
    auto m = file_manifest(o.hetionet, graph.edge_count());
    m["nodes"] = graph.node_count();
    files["hetionet"] = std::move(m);
  }
  for (const auto& w : warnings.messages) err << "warning: " << w << '\n';
  dest.stream() << dump({{"files", files}, {"warnings", warnings.messages.size()}}, o.pretty) << '\n';
  return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& out, std::ostream& err) {
  require_cassette(o);
  Options opts = o;
  if (opts.history.empty() && !opts.trials.empty()) opts.history = opts.trials;
  const auto record = trial_from_flags(opts, err);
  auto bundle = load_bundle(opts, err, true);
  Output dest(o.out, out);

  std::shared_ptr<LLMBackend> backend;
  std::shared_ptr<RecordingBackend> recorder;
  if (o.backend == "replay") {
    backend = std::make_shared<ReplayBackend>(Cassette::load(o.cassette));
  } else if (o.backend == "record") {
    recorder = std::make_shared<RecordingBackend>(make_live_backend(o));
    backend = recorder;
  } else {
    backend = make_live_backend(o);
  }

  try {
    const auto result = predict(record, bundle, *backend);
    if (recorder) recorder->save(o.cassette);
    dest.stream() << dump(result.to_json(), o.pretty) << '\n';
  } catch (const PipelineError& e) {
    if (recorder) recorder->save(o.cassette);
    err << "error: " << e.what() << '\n' << e.partial_json().dump(2) << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream& out, std::ostream& err) {
  require_cassette(o);
  if (o.trials.empty()) throw InputError("evaluate needs --trials");
  if (o.parallelism < 1) throw InputError("--parallelism must be >= 1");
  const auto records = load_trials(o.trials, o.lenient, err);
  for (const auto& r : records) {
    if (!r.label) throw InputError("trial " + r.trial_id + " has no outcome label");
  }
  const auto bundle = load_bundle(o, err, true);
  if (o.backend != "live" && o.backend != "record" && !fs::is_directory(o.cassette)) {
    throw InputError("--cassette must be a directory of <trial_id>.json cassettes for evaluate");
  }
  if (o.backend == "record") fs::create_directories(o.cassette);
  Output metrics_out(o.out, out);
  std::optional<Output> results_out;
  if (!o.results.empty()) results_out.emplace(o.results, out);

  std::shared_ptr<LLMBackend> live;
  if (o.backend != "replay") live = make_live_backend(o);
  const PredictFn pipeline = [&](const TrialRecord& rec) {
    const auto path = fs::path(o.cassette) / (rec.trial_id + ".json");
    if (o.backend == "replay") {
      ReplayBackend backend(Cassette::load(path));
      return predict(rec, bundle, backend);
    }
    if (o.backend == "record") {
      RecordingBackend backend(live);
      auto result = predict(rec, bundle, backend);
      backend.save(path);
      return result;
    }
    return predict(rec, bundle, *live);
  };

  EvaluationRun run;
  try {
    run = evaluate_dataset(records, pipeline, o.parallelism, o.threshold);
  } catch (const InputError&) {
    throw;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  for (const auto& outcome : run.outcomes) {
    if (!outcome.result) err << "warning: trial " << outcome.trial_id << " failed: " << outcome.error << '\n';
  }
  if (results_out) {
    for (const auto& outcome : run.outcomes) {
      json line = {{"trial_id", outcome.trial_id}, {"label", *outcome.label}};
      if (outcome.result) {
        line["probability"] = outcome.result->probability;
        line["decision"] = outcome.result->decision;
        line["result"] = outcome.result->to_json();
      } else {
        line["error"] = outcome.error;
      }
      results_out->stream() << line.dump() << '\n';
    }
  }
  metrics_out.stream() << dump(run.metrics.to_json(), o.pretty) << '\n';
  return kExitOk;
}

int cmd_tool_run(const Options& o, std::ostream& out, std::ostream& err) {
  Options opts = o;
  if (opts.history.empty() && !opts.trials.empty()) opts.history = opts.trials;
  const bool wants_enrollment = o.tool_name == "enrollment_prediction_model";
  const auto bundle = load_bundle(opts, err, wants_enrollment);
  const TrialRecord trial = wants_enrollment ? trial_from_flags(opts, err) : TrialRecord{};

  ToolRegistry registry;
  registry.add(make_retrieval_drugbank(bundle.drugs));
  registry.add(make_retrieval_hetionet(bundle.graph, bundle.bounds));
  registry.add(make_drug_historical_statistics(bundle.drug_outcomes));
  registry.add(make_disease_historical_statistics(bundle.disease_outcomes));
  if (bundle.enrollment) registry.add(make_enrollment_prediction_model(*bundle.enrollment, trial));
  if (!registry.contains(o.tool_name)) {
    err << "error: unknown tool " << o.tool_name << '\n';
    return kExitUsage;
  }

  json args = json::object();
  for (const auto& kv : o.tool_args) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InputError("--arg expects key=value, got " + kv);
    args[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  const auto result = registry.dispatch({"cli", o.tool_name, args.dump()});
  if (o.pretty) {
    out << result.content << '\n';
  } else {
    out << json{{"tool", o.tool_name}, {"content", result.content}, {"is_error", result.is_error}}.dump()
        << '\n';
  }
  return result.is_error ? kExitFailure : kExitOk;
}

int cmd_train_enrollment(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.trials.empty()) throw InputError("train-enrollment needs --trials");
  if (o.out.empty()) throw InputError("train-enrollment needs --out for the model file");
  const auto records = load_trials(o.trials, o.lenient, err);
  TrainingReport report;
  const auto model = train_enrollment(records, {}, &report);
  model.save(o.out);
  const json summary = {{"model", o.out},
                        {"examples", records.size()},
                        {"training_accuracy", report.training_accuracy},
                        {"initial_loss", report.loss_history.front()},
                        {"final_loss", report.loss_history.back()},
                        {"label_source", model.provenance["label_source"]}};
  out << dump(summary, o.pretty) << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Multi-agent clinical trial outcome prediction.\n"
               "Configuration precedence: flags > environment (CA_API_KEY, CA_API_BASE, "
               "CA_MODEL) > --config JSON file > defaults.",
               "clinagent"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all");

  std::vector<Layered> layers;
  auto* config_opt = app.add_option("--config", o.config, "JSON file with default flag values");
  (void)config_opt;

  auto data_flags = [&](CLI::App* cmd) {
    layers.push_back(layer(cmd->add_option("--trials", o.trials, "Trial CSV"), "trials", o.trials));
    layers.push_back(layer(cmd->add_option("--history", o.history,
                                           "Labeled trial CSV for historical risk tables"),
                           "history", o.history));
    layers.push_back(layer(cmd->add_option("--drugbank", o.drugbank, "DrugBank TSV"), "drugbank", o.drugbank));
    layers.push_back(layer(cmd->add_option("--hetionet", o.hetionet, "Hetionet edge TSV"), "hetionet", o.hetionet));
    layers.push_back(layer(cmd->add_option("--enrollment-model", o.enrollment_model,
                                           "Reference enrollment model JSON"),
                           "enrollment_model", o.enrollment_model));
    layers.push_back(layer(cmd->add_option("--enrollment-url", o.enrollment_url,
                                           "External enrollment predictor URL"),
                           "enrollment_url", o.enrollment_url));
    layers.push_back(layer(cmd->add_option("--max-path-len", o.max_path_len, "Path length bound"),
                           "max_path_len", o.max_path_len));
    layers.push_back(layer(cmd->add_option("--max-paths", o.max_paths, "Path count bound"),
                           "max_paths", o.max_paths));
    layers.push_back(layer(cmd->add_option("--prompts", o.prompts, "Prompt directory"), "prompts", o.prompts));
    cmd->add_flag("--lenient", o.lenient, "Skip malformed rows instead of failing");
    cmd->add_flag("--pretty", o.pretty, "Indent JSON output");
  };
  auto backend_flags = [&](CLI::App* cmd) {
    layers.push_back(layer(cmd->add_option("--backend", o.backend, "live, replay or record"),
                           "backend", o.backend));
    layers.push_back(layer(cmd->add_option("--cassette", o.cassette,
                                           "Cassette file (predict) or directory (evaluate)"),
                           "cassette", o.cassette));
    layers.push_back(layer(cmd->add_option("--api-base", o.api_base, "Chat-completions base URL"),
                           "api_base", o.api_base, "CA_API_BASE"));
    layers.push_back(layer(cmd->add_option("--api-key", o.api_key, "API key"), "api_key", o.api_key,
                           "CA_API_KEY"));
    layers.push_back(layer(cmd->add_option("--model", o.model, "Model name"), "model", o.model, "CA_MODEL"));
    layers.push_back(layer(cmd->add_option("--max-iterations", o.max_iterations, "ReAct iteration cap"),
                           "max_iterations", o.max_iterations));
    cmd->add_flag("--sequential", o.sequential, "Run specialist agents one after another");
  };
  auto trial_flags = [&](CLI::App* cmd) {
    cmd->add_option("--trial", o.trial_file, "Trial JSON file");
    cmd->add_option("--trial-id", o.trial_id, "Trial identifier");
    cmd->add_option("--drug", o.drugs, "Drug name (repeatable)");
    cmd->add_option("--disease", o.diseases, "Disease name (repeatable)");
    cmd->add_option("--criteria", o.criteria, "Eligibility criteria text");
    cmd->add_option("--phase", o.phase, "Trial phase");
  };

  auto* ingest = app.add_subcommand("ingest", "Validate input files and write a manifest");
  data_flags(ingest);
  ingest->add_option("--out", o.out, "Manifest path (default stdout)");

  auto* predict_cmd = app.add_subcommand("predict", "Predict one trial's outcome");
  data_flags(predict_cmd);
  backend_flags(predict_cmd);
  trial_flags(predict_cmd);
  predict_cmd->add_option("--out", o.out, "Result path (default stdout)");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a labeled dataset");
  data_flags(evaluate_cmd);
  backend_flags(evaluate_cmd);
  layers.push_back(layer(evaluate_cmd->add_option("--parallelism", o.parallelism, "Worker count"),
                         "parallelism", o.parallelism));
  layers.push_back(layer(evaluate_cmd->add_option("--threshold", o.threshold, "Decision threshold"),
                         "threshold", o.threshold));
  evaluate_cmd->add_option("--out", o.out, "Metrics JSON path (default stdout)");
  evaluate_cmd->add_option("--results", o.results, "Per-trial JSON-lines path");

  auto* tool = app.add_subcommand("tool", "Direct tool access");
  tool->require_subcommand(1);
  auto* tool_run = tool->add_subcommand("run", "Invoke one tool");
  data_flags(tool_run);
  trial_flags(tool_run);
  tool_run->add_option("name", o.tool_name, "Tool name")->required();
  tool_run->add_option("--arg", o.tool_args, "Tool argument key=value (repeatable)");

  auto* train = app.add_subcommand("train-enrollment", "Train the reference enrollment model");
  data_flags(train);
  train->add_option("--out", o.out, "Model output path")->required();

  std::vector<std::string> argv_store{"clinagent"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    apply_layers(layers, o.config);
    if (ingest->parsed()) return cmd_ingest(o, out, err);
    if (predict_cmd->parsed()) return cmd_predict(o, out, err);
    if (evaluate_cmd->parsed()) return cmd_evaluate(o, out, err);
    if (tool_run->parsed()) return cmd_tool_run(o, out, err);
    if (train->parsed()) return cmd_train_enrollment(o, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace clinagent

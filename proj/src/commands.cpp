#include "prego/commands.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "prego/benchmark.hpp"
#include "prego/errors.hpp"

namespace prego::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void require_file(const fs::path& path, const char* what) {
  if (path.empty()) throw InputError(std::string("missing ") + what + " path");
  if (!fs::exists(path)) throw InputError(std::string(what) + " file not found: " + path.string());
}

std::string optional_path(const std::optional<fs::path>& p) { return p ? p->string() : ""; }

json header(std::string_view command, const json& config) {
  return {{"header", {{"command", command}, {"config", config}}}};
}

// Writes to `path` when given, otherwise to `fallback`.
void emit(const std::optional<fs::path>& path, std::ostream& fallback, const std::string& text) {
  if (!path) {
    fallback << text;
    return;
  }
  std::ofstream file(*path, std::ios::binary);
  if (!file) throw InputError("cannot write '" + path->string() + "'");
  file << text;
}

BenchmarkSplit load_split(const fs::path& path) {
  require_file(path, "split manifest");
  std::ifstream in(path);
  try {
    return BenchmarkSplit::from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::vector<Procedure> select(const AnnotationSet& set, const std::vector<std::string>& ids) {
  std::vector<Procedure> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const auto* p = set.find(id);
    if (!p) throw InputError("split lists unknown procedure '" + id + "'");
    out.push_back(*p);
  }
  return out;
}

SymbolAlphabet make_alphabet(const ActionVocabulary& vocab, AlphabetMode mode, std::uint64_t seed,
                             const std::optional<fs::path>& replay) {
  if (!replay) return build_alphabet(vocab, mode, seed);
  require_file(*replay, "alphabet");
  std::ifstream in(*replay);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(replay->string() + ": " + e.what());
  }
  auto alphabet = SymbolAlphabet::from_json(doc);
  if (alphabet.size() != vocab.size()) {
    throw InputError("alphabet covers " + std::to_string(alphabet.size()) +
                     " actions, vocabulary has " + std::to_string(vocab.size()));
  }
  return alphabet;
}

struct Job {
  std::string procedure_id;
  std::string task;
  ActionSequence actions;
  std::optional<std::vector<std::int64_t>> frames;
};

// Recognised sequence of a predicted stream, cut after the last frame of
// the (already trimmed) annotated procedure.
Job predicted_job(const Procedure& proc, const PredictionStreams& streams,
                  const ActionVocabulary& vocab) {
  Job job{proc.procedure_id, proc.toy_or_task_id, {}, std::vector<std::int64_t>{}};
  auto it = streams.find(proc.procedure_id);
  if (it == streams.end()) {
    throw InputError("no predictions for video '" + proc.procedure_id + "'");
  }
  std::optional<std::int64_t> last_frame = proc.steps.back().end_frame;
  for (const auto& step : dedup_runs(it->second)) {
    if (last_frame && step.first_frame > *last_frame) break;
    if (!vocab.contains(step.action_id)) throw IdOutOfRange(step.action_id, vocab.size());
    job.actions.push_back(step.action_id);
    job.frames->push_back(step.first_frame);
  }
  if (job.actions.empty()) {
    throw InputError("no predicted steps inside video '" + proc.procedure_id + "'");
  }
  return job;
}

}  // namespace

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::one_step: return "one_step";
    case BackendKind::pattern: return "pattern";
    case BackendKind::llm: return "llm";
  }
  return "pattern";
}

BackendKind parse_backend(std::string_view text) {
  if (text == "one_step") return BackendKind::one_step;
  if (text == "pattern") return BackendKind::pattern;
  if (text == "llm") return BackendKind::llm;
  throw InputError("unknown backend '" + std::string(text) + "'");
}

int exit_code_for(const std::exception& e) noexcept {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return err->exit_code();
  return kInputError;
}

// ---------------------------------------------------------------------------
// split
// ---------------------------------------------------------------------------

json SplitOptions::to_json() const {
  return {{"policy", policy},
          {"annotations", annotations.string()},
          {"confidence", optional_path(confidence)},
          {"threshold", threshold},
          {"val_ratio", val_ratio}};
}

int cmd_split(const SplitOptions& options, std::ostream& out, std::ostream& err) {
  require_file(options.annotations, "annotations");
  auto set = parse_annotations(options.annotations);
  BenchmarkSplit split;
  if (options.policy == "occ") {
    split = split_occ(set.procedures, options.val_ratio);
  } else if (options.policy == "confidence") {
    if (options.confidence) {
      require_file(*options.confidence, "confidence");
      attach_confidence(set.procedures, parse_confidence(*options.confidence));
    }
    split = split_by_confidence(set.procedures, options.threshold);
  } else {
    throw InputError("unknown split policy '" + options.policy + "'");
  }
  for (const auto& w : split.warnings) err << "warning: " << w << '\n';
  auto doc = split.to_json();
  doc["config"] = options.to_json();
  emit(options.out, out, doc.dump(2) + "\n");
  return kOk;
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

void RunConfig::validate() const {
  require_file(annotations, "annotations");
  require_file(split, "split manifest");
  if (k == 0 || k > kMaxTopK) throw InputError("k must be in [1, 5]");
  if (subset != "test" && subset != "val") throw InputError("subset must be test or val");
  if (source == SourceKind::predicted) {
    if (!predictions) throw InputError("predicted source needs --predictions");
    require_file(*predictions, "predictions");
  }
  if (alphabet_in) require_file(*alphabet_in, "alphabet");
  if (backend == BackendKind::llm && !dry_run && (!endpoint || endpoint->empty())) {
    throw InputError("llm backend needs --endpoint");
  }
  if (jobs == 0) throw InputError("jobs must be at least 1");
  if (token_budget < 0) throw InputError("token budget must be non-negative");
}

LlmSettings RunConfig::llm_settings() const {
  auto s = default_settings(flavor);
  s.url = endpoint.value_or("");
  s.dialect = dialect;
  s.model = model;
  if (temperature) s.temperature = *temperature;
  if (max_tokens) s.max_tokens = *max_tokens;
  s.token_budget = token_budget;
  s.max_retries = max_retries;
  s.backoff = std::chrono::milliseconds(backoff_ms);
  if (const char* key = std::getenv(kApiKeyEnv)) s.api_key = key;
  return s;
}

json RunConfig::to_json() const {
  json doc = {{"backend", std::string(to_string(backend))},
              {"alphabet", std::string(prego::to_string(alphabet))},
              {"seed", seed},
              {"style", std::string(prego::to_string(style))},
              {"context_policy", std::string(prego::to_string(context_policy))},
              {"k", k},
              {"stop_policy", std::string(prego::to_string(stop_policy))},
              {"source", source == SourceKind::oracle ? "oracle" : "predicted"},
              {"subset", subset},
              {"annotations", annotations.string()},
              {"split", split.string()},
              {"predictions", optional_path(predictions)},
              {"alphabet_in", optional_path(alphabet_in)},
              {"jobs", jobs}};
  if (backend == BackendKind::llm) {
    auto s = llm_settings();
    doc["llm"] = {{"endpoint", s.url},
                  {"flavor", std::string(prego::to_string(flavor))},
                  {"dialect", std::string(prego::to_string(dialect))},
                  {"model", model},
                  {"temperature", s.temperature},
                  {"max_tokens", s.max_tokens},
                  {"token_budget", token_budget},
                  {"max_retries", max_retries},
                  {"backoff_ms", backoff_ms},
                  {"dry_run", dry_run}};
  }
  return doc;
}

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  config.validate();
  auto set = parse_annotations(config.annotations);
  auto split = load_split(config.split);
  auto train = select(set, split.train);
  for (const auto& p : train) {
    if (p.has_mistake()) {
      err << "warning: training procedure '" << p.procedure_id << "' contains mistakes\n";
    }
  }
  auto evaluated = select(set, config.subset == "val" ? split.val : split.test);
  for (auto& p : evaluated) p = trim_to_first_mistake(p);

  auto alphabet = make_alphabet(set.vocabulary, config.alphabet, config.seed, config.alphabet_in);
  if (config.alphabet_out) emit(config.alphabet_out, out, alphabet.to_json().dump(2) + "\n");

  std::vector<Job> jobs;
  if (config.source == SourceKind::oracle) {
    for (const auto& p : evaluated) jobs.push_back({p.procedure_id, p.toy_or_task_id, p.actions(), {}});
  } else {
    auto streams = parse_predictions(*config.predictions);
    for (const auto& p : evaluated) jobs.push_back(predicted_job(p, streams, set.vocabulary));
  }

  // Contexts are cached per task id; all jobs of one task share one.
  std::unordered_map<std::string, ContextSet> contexts;
  for (const auto& job : jobs) {
    if (!contexts.contains(job.task)) {
      contexts.emplace(job.task, build_context(train, job.task, config.context_policy));
    }
  }

  if (config.dry_run) {
    for (const auto& job : jobs) {
      for (std::size_t t = 1; t < job.actions.size(); ++t) {
        PromptSpec spec{config.style, &alphabet, &contexts.at(job.task),
                        ActionSequence(job.actions.begin(), job.actions.begin() + static_cast<std::ptrdiff_t>(t))};
        out << "### " << job.procedure_id << " step " << t << "\n" << render_prompt(spec) << "\n";
      }
    }
    return kOk;
  }

  std::unique_ptr<Anticipator> backend;
  std::shared_ptr<LlmClient> client;
  switch (config.backend) {
    case BackendKind::one_step: {
      std::vector<ActionSequence> sequences;
      for (const auto& p : train) sequences.push_back(p.actions());
      backend = std::make_unique<TransitionAnticipator>(
          fit_transition_matrix(sequences, set.vocabulary.size()));
      break;
    }
    case BackendKind::pattern:
      backend = std::make_unique<PatternAnticipator>(alphabet, config.k);
      break;
    case BackendKind::llm:
      client = std::make_shared<LlmClient>(config.llm_settings());
      backend = std::make_unique<LlmAnticipator>(client, alphabet, config.style, config.k);
      break;
  }

  std::vector<DetectionRun> runs(jobs.size());
  auto work = [&](std::size_t i) {
    const auto& job = jobs[i];
    runs[i] = run_online(job.procedure_id, job.actions, *backend, contexts.at(job.task),
                         config.stop_policy);
    if (job.frames) {
      for (auto& v : runs[i].verdicts) v.frame = (*job.frames)[v.step_index];
    }
  };
  if (config.jobs <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::mutex failure_mutex;
    std::exception_ptr failure;
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < config.jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
          try {
            work(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : workers) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  const bool complete =
      std::all_of(runs.begin(), runs.end(), [](const DetectionRun& r) { return r.complete; });
  std::vector<json> lines;
  for (const auto& run : runs) {
    for (const auto& v : run.verdicts) {
      auto line = verdict_to_json(run.procedure_id, v);
      if (!run.complete) line["incomplete"] = true;
      lines.push_back(std::move(line));
    }
  }
  if (config.jobs > 1) {
    std::stable_sort(lines.begin(), lines.end(), [](const json& a, const json& b) {
      return std::make_pair(a["procedure_id"].get<std::string>(), a["step_index"].get<std::size_t>()) <
             std::make_pair(b["procedure_id"].get<std::string>(), b["step_index"].get<std::size_t>());
    });
  }
  auto head = header("run", config.to_json());
  head["header"]["complete"] = complete;
  std::ostringstream text;
  text << head.dump() << '\n';
  for (const auto& line : lines) text << line.dump() << '\n';
  emit(config.out, out, text.str());

  if (!complete) {
    for (const auto& run : runs) {
      if (!run.complete) {
        err << "error: run for '" << run.procedure_id << "' incomplete: "
            << run.failure.value_or("unknown failure") << '\n';
        break;
      }
    }
    return kTransportError;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

json EvalOptions::to_json() const {
  return {{"verdicts", verdicts.string()},
          {"annotations", annotations.string()},
          {"averaging", macro ? "macro" : "micro"}};
}

int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err) {
  require_file(options.verdicts, "verdicts");
  require_file(options.annotations, "annotations");
  std::ifstream in(options.verdicts);
  auto runs = read_runs(in, options.verdicts.string());
  if (runs.empty()) throw AlignmentMismatch("verdict file '" + options.verdicts.string() + "' is empty");
  for (const auto& r : runs) {
    if (!r.complete) err << "warning: run for '" << r.procedure_id << "' is incomplete\n";
  }
  auto set = parse_annotations(options.annotations);
  std::vector<Procedure> trimmed;
  trimmed.reserve(set.procedures.size());
  for (const auto& p : set.procedures) trimmed.push_back(trim_to_first_mistake(p));

  auto truth = align_ground_truth(runs, trimmed);
  auto report = compute_metrics(runs, truth, options.macro ? Averaging::macro : Averaging::micro);
  out << report.to_table();
  if (options.out) {
    auto doc = report.to_json();
    doc["config"] = options.to_json();
    emit(options.out, out, doc.dump(2) + "\n");
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

json SynthOptions::to_json() const {
  std::vector<std::string> names;
  for (auto k : kinds) names.emplace_back(prego::to_string(k));
  return {{"grammar", grammar.string()}, {"n", n}, {"inject", inject}, {"kinds", names}, {"seed", seed}};
}

int cmd_synth(const SynthOptions& options, std::ostream& out, std::ostream&) {
  require_file(options.grammar, "grammar");
  auto grammar = load_grammar(options.grammar);
  for (auto k : options.kinds) {
    if (k == MistakeType::correction) throw InputError("correction mistakes cannot be injected");
  }
  Rng rng(options.seed);
  auto procedures = synthesize_corpus(grammar, options.n, options.inject, options.kinds, rng);
  std::ostringstream text;
  text << header("synth", options.to_json()).dump() << '\n';
  write_annotations(text, procedures, grammar.vocabulary);
  emit(options.out, out, text.str());
  return kOk;
}

// ---------------------------------------------------------------------------
// prompt
// ---------------------------------------------------------------------------

int cmd_prompt(const PromptOptions& options, std::ostream& out, std::ostream&) {
  require_file(options.annotations, "annotations");
  auto set = parse_annotations(options.annotations);
  auto split = load_split(options.split);
  auto train = select(set, split.train);
  const auto* proc = set.find(options.procedure);
  if (!proc) throw InputError("unknown procedure '" + options.procedure + "'");
  auto actions = trim_to_first_mistake(*proc).actions();
  std::size_t length = options.history.value_or(actions.size() > 1 ? actions.size() - 1 : 1);
  if (length == 0 || length > actions.size()) {
    throw InputError("history length must be in [1, " + std::to_string(actions.size()) + "]");
  }
  auto alphabet = build_alphabet(set.vocabulary, options.alphabet, options.seed);
  auto context = build_context(train, proc->toy_or_task_id, options.context_policy);
  PromptSpec spec{options.style, &alphabet, &context,
                  ActionSequence(actions.begin(), actions.begin() + static_cast<std::ptrdiff_t>(length))};
  out << render_prompt(spec);
  return kOk;
}

}  // namespace prego::cli

// prego: command-line front end for split construction, online detection
// runs, evaluation, synthetic corpora and prompt inspection.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prego/commands.hpp"
#include "prego/errors.hpp"

namespace {

using prego::cli::ExitCode;

const std::vector<std::string> kBackends = {"one_step", "pattern", "llm"};
const std::vector<std::string> kAlphabets = {"numerical", "semantic", "random"};
const std::vector<std::string> kStyles = {"referenced_context", "unreferenced_context", "elaborate"};
const std::vector<std::string> kPolicies = {"same_task", "same_task_name", "all_train"};
const std::vector<std::string> kStops = {"full_sequence", "stop_at_first"};

// Turns an empty string into nullopt.
std::optional<std::filesystem::path> maybe_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::filesystem::path(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online one-class procedural mistake detection"};
  app.set_config("--config", "", "TOML config file; command-line flags override it");
  app.require_subcommand(1);

  // split ------------------------------------------------------------------
  prego::cli::SplitOptions split_opts;
  std::string split_confidence, split_out, split_annotations;
  auto* split = app.add_subcommand("split", "Build a train/val/test split manifest");
  split->add_option("--policy", split_opts.policy, "occ | confidence")
      ->check(CLI::IsMember({"occ", "confidence"}))
      ->capture_default_str();
  split->add_option("--annotations", split_annotations, "Annotation JSONL")->required();
  split->add_option("--confidence", split_confidence, "Per-frame confidence JSONL");
  split->add_option("--threshold", split_opts.threshold, "Median confidence threshold")
      ->capture_default_str();
  split->add_option("--val-ratio", split_opts.val_ratio, "Share of mistaken procedures sent to val")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  split->add_option("--out", split_out, "Manifest path (stdout when omitted)");

  // run --------------------------------------------------------------------
  prego::cli::RunConfig run_cfg;
  std::string backend = "pattern", alphabet = "numerical", style = "referenced_context",
              policy = "same_task", stop = "full_sequence", source = "oracle";
  std::string run_annotations, run_split, predictions, alphabet_in, alphabet_out, run_out,
      endpoint, flavor = "llama", dialect = "generic";
  double temperature = -1.0;
  int max_tokens = 0;
  auto* run = app.add_subcommand("run", "Run online detection over a split");
  run->add_option("--backend", backend)->check(CLI::IsMember(kBackends))->capture_default_str();
  run->add_option("--annotations", run_annotations, "Annotation JSONL")->required();
  run->add_option("--split", run_split, "Split manifest JSON")->required();
  run->add_option("--subset", run_cfg.subset, "test | val")
      ->check(CLI::IsMember({"test", "val"}))
      ->capture_default_str();
  run->add_option("--source", source, "oracle | predicted")
      ->check(CLI::IsMember({"oracle", "predicted"}))
      ->capture_default_str();
  run->add_option("--predictions", predictions, "Per-frame prediction JSONL");
  run->add_option("--alphabet", alphabet)->check(CLI::IsMember(kAlphabets))->capture_default_str();
  run->add_option("--alphabet-in", alphabet_in, "Replay a serialized alphabet");
  run->add_option("--alphabet-out", alphabet_out, "Write the alphabet used");
  run->add_option("--seed", run_cfg.seed)->capture_default_str();
  run->add_option("--style", style)->check(CLI::IsMember(kStyles))->capture_default_str();
  run->add_option("--context-policy", policy)->check(CLI::IsMember(kPolicies))->capture_default_str();
  run->add_option("--k", run_cfg.k, "Anticipated actions per step")
      ->check(CLI::Range(1, 5))
      ->capture_default_str();
  run->add_option("--stop-policy", stop)->check(CLI::IsMember(kStops))->capture_default_str();
  run->add_option("--endpoint", endpoint, "LLM endpoint URL");
  run->add_option("--llm-flavor", flavor, "llama | gpt (sampling defaults)")
      ->check(CLI::IsMember({"llama", "gpt"}))
      ->capture_default_str();
  run->add_option("--dialect", dialect, "generic | openai")
      ->check(CLI::IsMember({"generic", "openai"}))
      ->capture_default_str();
  run->add_option("--model", run_cfg.model, "Model name (openai dialect)");
  run->add_option("--temperature", temperature, "Overrides the flavor default");
  run->add_option("--max-tokens", max_tokens, "Overrides the flavor default");
  run->add_option("--budget", run_cfg.token_budget, "Token budget, 0 = unlimited")
      ->capture_default_str();
  run->add_option("--retries", run_cfg.max_retries)->capture_default_str();
  run->add_option("--backoff-ms", run_cfg.backoff_ms)->capture_default_str();
  run->add_flag("--dry-run", run_cfg.dry_run, "Print prompts, send nothing");
  run->add_option("--jobs", run_cfg.jobs, "Procedures processed in parallel")->capture_default_str();
  run->add_option("--out", run_out, "Verdict JSONL path (stdout when omitted)");

  // eval -------------------------------------------------------------------
  prego::cli::EvalOptions eval_opts;
  std::string eval_verdicts, eval_annotations, eval_out;
  auto* eval = app.add_subcommand("eval", "Score verdicts against annotations");
  eval->add_option("--verdicts", eval_verdicts)->required();
  eval->add_option("--annotations", eval_annotations)->required();
  eval->add_flag("--macro", eval_opts.macro, "Macro-average over procedures");
  eval->add_option("--out", eval_out, "JSON report path");

  // synth ------------------------------------------------------------------
  prego::cli::SynthOptions synth_opts;
  std::string grammar, synth_out;
  std::vector<std::string> kinds = {"wrong_action", "repeat", "order"};
  auto* synth = app.add_subcommand("synth", "Sample annotated procedures from a grammar");
  synth->add_option("--grammar", grammar)->required();
  synth->add_option("--n", synth_opts.n, "Correct procedures")->capture_default_str();
  synth->add_option("--inject", synth_opts.inject, "Procedures with one injected mistake")
      ->capture_default_str();
  synth->add_option("--kinds", kinds, "Mistake kinds to inject")
      ->check(CLI::IsMember({"order", "omit", "repeat", "wrong_action"}))
      ->delimiter(',');
  synth->add_option("--seed", synth_opts.seed)->capture_default_str();
  synth->add_option("--out", synth_out, "Annotation JSONL path (stdout when omitted)");

  // prompt -----------------------------------------------------------------
  prego::cli::PromptOptions prompt_opts;
  std::string p_annotations, p_split, p_style = "referenced_context", p_alphabet = "numerical",
                                      p_policy = "same_task";
  std::size_t p_history = 0;
  auto* prompt = app.add_subcommand("prompt", "Render one prompt for inspection");
  prompt->add_option("--annotations", p_annotations)->required();
  prompt->add_option("--split", p_split)->required();
  prompt->add_option("--procedure", prompt_opts.procedure)->required();
  prompt->add_option("--history", p_history, "Prefix length (default: all but the last step)");
  prompt->add_option("--style", p_style)->check(CLI::IsMember(kStyles));
  prompt->add_option("--alphabet", p_alphabet)->check(CLI::IsMember(kAlphabets));
  prompt->add_option("--seed", prompt_opts.seed);
  prompt->add_option("--context-policy", p_policy)->check(CLI::IsMember(kPolicies));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : ExitCode::kInputError;
  }

  try {
    if (*split) {
      split_opts.annotations = split_annotations;
      split_opts.confidence = maybe_path(split_confidence);
      split_opts.out = maybe_path(split_out);
      return prego::cli::cmd_split(split_opts, std::cout, std::cerr);
    }
    if (*run) {
      run_cfg.backend = prego::cli::parse_backend(backend);
      run_cfg.alphabet = prego::parse_alphabet_mode(alphabet);
      run_cfg.style = prego::parse_prompt_style(style);
      run_cfg.context_policy = prego::parse_context_policy(policy);
      run_cfg.stop_policy = prego::parse_stop_policy(stop);
      run_cfg.source = source == "predicted" ? prego::SourceKind::predicted : prego::SourceKind::oracle;
      run_cfg.annotations = run_annotations;
      run_cfg.split = run_split;
      run_cfg.predictions = maybe_path(predictions);
      run_cfg.alphabet_in = maybe_path(alphabet_in);
      run_cfg.alphabet_out = maybe_path(alphabet_out);
      run_cfg.out = maybe_path(run_out);
      if (!endpoint.empty()) run_cfg.endpoint = endpoint;
      run_cfg.flavor = prego::parse_llm_flavor(flavor);
      run_cfg.dialect = prego::parse_llm_dialect(dialect);
      if (run->count("--temperature") > 0) run_cfg.temperature = temperature;
      if (run->count("--max-tokens") > 0) run_cfg.max_tokens = max_tokens;
      return prego::cli::cmd_run(run_cfg, std::cout, std::cerr);
    }
    if (*eval) {
      eval_opts.verdicts = eval_verdicts;
      eval_opts.annotations = eval_annotations;
      eval_opts.out = maybe_path(eval_out);
      return prego::cli::cmd_eval(eval_opts, std::cout, std::cerr);
    }
    if (*synth) {
      synth_opts.grammar = grammar;
      synth_opts.out = maybe_path(synth_out);
      synth_opts.kinds.clear();
      for (const auto& k : kinds) synth_opts.kinds.push_back(prego::parse_mistake_type(k));
      return prego::cli::cmd_synth(synth_opts, std::cout, std::cerr);
    }
    if (*prompt) {
      prompt_opts.annotations = p_annotations;
      prompt_opts.split = p_split;
      if (prompt->count("--history") > 0) prompt_opts.history = p_history;
      prompt_opts.style = prego::parse_prompt_style(p_style);
      prompt_opts.alphabet = prego::parse_alphabet_mode(p_alphabet);
      prompt_opts.context_policy = prego::parse_context_policy(p_policy);
      return prego::cli::cmd_prompt(prompt_opts, std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return prego::cli::exit_code_for(e);
  }
  return ExitCode::kOk;
}

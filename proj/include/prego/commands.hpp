#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "prego/anticipation.hpp"
#include "prego/detection.hpp"
#include "prego/ingestion.hpp"
#include "prego/llm_client.hpp"

namespace prego::cli {

/// Process exit codes.
enum ExitCode : int { kOk = 0, kInputError = 2, kEvalError = 3, kTransportError = 4 };

struct SplitOptions {
  std::string policy = "occ";  // occ | confidence
  std::filesystem::path annotations;
  std::optional<std::filesystem::path> confidence;
  double threshold = 0.6;
  double val_ratio = 0.5;
  std::optional<std::filesystem::path> out;  // stdout when absent

  nlohmann::json to_json() const;
};

enum class BackendKind { one_step, pattern, llm };

std::string_view to_string(BackendKind kind);
BackendKind parse_backend(std::string_view text);

struct RunConfig {
  BackendKind backend = BackendKind::pattern;
  AlphabetMode alphabet = AlphabetMode::numerical;
  std::uint64_t seed = 0;
  PromptStyle style = PromptStyle::referenced_context;
  ContextPolicy context_policy = ContextPolicy::same_task;
  std::size_t k = kDefaultTopK;
  StopPolicy stop_policy = StopPolicy::full_sequence;
  SourceKind source = SourceKind::oracle;
  std::string subset = "test";  // test | val

  std::filesystem::path annotations;
  std::filesystem::path split;
  std::optional<std::filesystem::path> predictions;
  std::optional<std::filesystem::path> alphabet_in;
  std::optional<std::filesystem::path> alphabet_out;
  std::optional<std::filesystem::path> out;

  std::optional<std::string> endpoint;
  LlmFlavor flavor = LlmFlavor::llama;
  LlmDialect dialect = LlmDialect::generic;
  std::string model;
  std::optional<double> temperature;  // flavor default when absent
  std::optional<int> max_tokens;      // flavor default when absent
  std::int64_t token_budget = 0;
  int max_retries = 3;
  int backoff_ms = 250;
  bool dry_run = false;
  unsigned jobs = 1;

  /// Throws InputError on inconsistent settings or missing input files.
  void validate() const;
  LlmSettings llm_settings() const;
  nlohmann::json to_json() const;
};

struct EvalOptions {
  std::filesystem::path verdicts;
  std::filesystem::path annotations;
  bool macro = false;
  std::optional<std::filesystem::path> out;  // JSON report

  nlohmann::json to_json() const;
};

struct SynthOptions {
  std::filesystem::path grammar;
  std::size_t n = 10;
  std::size_t inject = 0;
  std::vector<MistakeType> kinds = {MistakeType::wrong_action, MistakeType::repeat,
                                    MistakeType::order};
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> out;

  nlohmann::json to_json() const;
};

struct PromptOptions {
  std::filesystem::path annotations;
  std::filesystem::path split;
  std::string procedure;
  std::optional<std::size_t> history;  // prefix length; all but the last step by default
  PromptStyle style = PromptStyle::referenced_context;
  AlphabetMode alphabet = AlphabetMode::numerical;
  std::uint64_t seed = 0;
  ContextPolicy context_policy = ContextPolicy::same_task;
};

// Each command writes its artifact to the configured path (or `out`),
// diagnostics to `err`, and returns an exit code. Library errors propagate
// as exceptions; `exit_code_for` maps them.
int cmd_split(const SplitOptions& options, std::ostream& out, std::ostream& err);
int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err);
int cmd_synth(const SynthOptions& options, std::ostream& out, std::ostream& err);
int cmd_prompt(const PromptOptions& options, std::ostream& out, std::ostream& err);

int exit_code_for(const std::exception& e) noexcept;

}  // namespace prego::cli

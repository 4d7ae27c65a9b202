#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "prego/anticipation.hpp"

namespace prego {

/// Request/response shape spoken on the wire.
///   generic: {"prompt","temperature","max_tokens"} -> {"text"}
///   openai:  {"model","prompt","temperature","max_tokens"} -> {"choices":[{"text"}]}
enum class LlmDialect { generic, openai };

std::string_view to_string(LlmDialect dialect);
LlmDialect parse_llm_dialect(std::string_view text);

/// Sampling defaults per model family.
enum class LlmFlavor { llama, gpt };

std::string_view to_string(LlmFlavor flavor);
LlmFlavor parse_llm_flavor(std::string_view text);

inline constexpr const char* kApiKeyEnv = "PREGO_LLM_KEY";

struct LlmSettings {
  std::string url;  // http://host[:port]/path
  LlmDialect dialect = LlmDialect::generic;
  std::string model;  // openai dialect only
  std::string api_key;
  double temperature = 0.6;
  int max_tokens = 4;
  int max_retries = 3;
  std::chrono::milliseconds backoff{250};  // doubled after every failed attempt
  std::chrono::milliseconds timeout{30000};
  std::int64_t token_budget = 0;  // 0 disables the guard
};

/// llama: temperature 0.6, 4 output tokens. gpt: temperature 0.0, output
/// length left loose (64 tokens).
LlmSettings default_settings(LlmFlavor flavor);

/// Rough token count used by the budget guard: ceil(bytes / 4).
std::int64_t estimate_tokens(std::string_view text);

/// Blocking completion client. Thread-safe: each call opens its own
/// connection and the token counter is atomic.
class LlmClient {
 public:
  explicit LlmClient(LlmSettings settings);

  const LlmSettings& settings() const noexcept { return settings_; }

  /// Sends `prompt` and returns the raw emission. Charges
  /// estimate_tokens(prompt) + max_tokens against the budget before
  /// sending (BudgetExceeded when that would overrun it). Connection
  /// failures, 429 and 5xx responses are retried up to max_retries times
  /// with exponential backoff, then surface as TransportError.
  std::string complete(const std::string& prompt) const;

  std::int64_t tokens_used() const noexcept { return used_->load(); }
  int attempts_made() const noexcept { return attempts_->load(); }

 private:
  LlmSettings settings_;
  std::string scheme_host_port_;
  std::string path_;
  std::shared_ptr<std::atomic<std::int64_t>> used_;
  std::shared_ptr<std::atomic<int>> attempts_;
};

/// Reads up to `k` symbols from the start of an emission: leading
/// whitespace is skipped, symbols are comma-separated and the first newline
/// ends the answer. Symbols outside the alphabet are dropped; if none
/// remain, `unknown_symbol` holds the first token read.
AnticipationResult parse_emission(std::string_view emission, const SymbolAlphabet& alphabet,
                                  std::size_t k);

/// Renders `spec`, queries the model and decodes the answer.
AnticipationResult llm_predict(const LlmClient& client, const PromptSpec& spec, std::size_t k);

class LlmAnticipator final : public Anticipator {
 public:
  LlmAnticipator(std::shared_ptr<const LlmClient> client, SymbolAlphabet alphabet,
                 PromptStyle style, std::size_t k);
  AnticipationResult anticipate(const ContextSet& context,
                                std::span<const ActionId> history) const override;

 private:
  std::shared_ptr<const LlmClient> client_;
  SymbolAlphabet alphabet_;
  PromptStyle style_;
  std::size_t k_;
};

}  // namespace prego

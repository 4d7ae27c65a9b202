#include "prego/llm_client.hpp"

#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "prego/errors.hpp"

namespace prego {

using nlohmann::json;

std::string_view to_string(LlmDialect dialect) {
  return dialect == LlmDialect::openai ? "openai" : "generic";
}

LlmDialect parse_llm_dialect(std::string_view text) {
  if (text == "generic") return LlmDialect::generic;
  if (text == "openai") return LlmDialect::openai;
  throw InputError("unknown LLM dialect '" + std::string(text) + "'");
}

std::string_view to_string(LlmFlavor flavor) {
  return flavor == LlmFlavor::gpt ? "gpt" : "llama";
}

LlmFlavor parse_llm_flavor(std::string_view text) {
  if (text == "llama") return LlmFlavor::llama;
  if (text == "gpt") return LlmFlavor::gpt;
  throw InputError("unknown LLM flavor '" + std::string(text) + "'");
}

LlmSettings default_settings(LlmFlavor flavor) {
  LlmSettings s;
  if (flavor == LlmFlavor::gpt) {
    s.temperature = 0.0;
    s.max_tokens = 64;
  } else {
    s.temperature = 0.6;
    s.max_tokens = 4;
  }
  return s;
}

std::int64_t estimate_tokens(std::string_view text) {
  return static_cast<std::int64_t>((text.size() + 3) / 4);
}

LlmClient::LlmClient(LlmSettings settings)
    : settings_(std::move(settings)),
      used_(std::make_shared<std::atomic<std::int64_t>>(0)),
      attempts_(std::make_shared<std::atomic<int>>(0)) {
  const auto& url = settings_.url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InputError("LLM endpoint must be a URL: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (settings_.max_retries < 0) throw InputError("max_retries must be non-negative");
  if (settings_.max_tokens <= 0) throw InputError("max_tokens must be positive");
}

std::string LlmClient::complete(const std::string& prompt) const {
  const std::int64_t cost = estimate_tokens(prompt) + settings_.max_tokens;
  if (settings_.token_budget > 0) {
    auto used = used_->load();
    do {
      if (used + cost > settings_.token_budget) {
        throw BudgetExceeded(used + cost, settings_.token_budget);
      }
    } while (!used_->compare_exchange_weak(used, used + cost));
  } else {
    used_->fetch_add(cost);
  }

  json body = {{"prompt", prompt},
               {"temperature", settings_.temperature},
               {"max_tokens", settings_.max_tokens}};
  if (settings_.dialect == LlmDialect::openai) body["model"] = settings_.model;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!settings_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + settings_.api_key);
  }

  std::string last_error;
  auto delay = settings_.backoff;
  for (int attempt = 0; attempt <= settings_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    attempts_->fetch_add(1);
    httplib::Client cli(scheme_host_port_);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(settings_.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(settings_.timeout - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    auto res = cli.Post(path_, headers, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw TransportError("LLM endpoint returned HTTP " + std::to_string(res->status) +
                           ": " + res->body);
    }
    try {
      auto reply = json::parse(res->body);
      if (settings_.dialect == LlmDialect::openai) {
        return reply.at("choices").at(0).at("text").get<std::string>();
      }
      return reply.at("text").get<std::string>();
    } catch (const json::exception& e) {
      throw TransportError(std::string("malformed LLM response: ") + e.what());
    }
  }
  throw TransportError("LLM endpoint unreachable after " +
                       std::to_string(settings_.max_retries + 1) + " attempts: " + last_error);
}

AnticipationResult parse_emission(std::string_view emission, const SymbolAlphabet& alphabet,
                                  std::size_t k) {
  AnticipationResult result;
  result.raw_emission = std::string(emission);

  std::size_t pos = 0;
  while (pos < emission.size() &&
         std::isspace(static_cast<unsigned char>(emission[pos])) != 0) {
    ++pos;
  }
  auto line_end = emission.find_first_of("\r\n", pos);
  auto line = emission.substr(pos, line_end == std::string_view::npos
                                       ? std::string_view::npos
                                       : line_end - pos);

  std::optional<std::string> first_token;
  std::size_t start = 0;
  while (start <= line.size() && result.predictions.size() < k) {
    auto comma = line.find(',', start);
    auto token = trim(line.substr(start, comma == std::string_view::npos
                                             ? std::string_view::npos
                                             : comma - start));
    if (!first_token) first_token = token;
    if (auto id = alphabet.try_action(token)) {
      if (std::find(result.predictions.begin(), result.predictions.end(), *id) ==
          result.predictions.end()) {
        result.predictions.push_back(*id);
      }
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (result.predictions.empty()) result.unknown_symbol = first_token.value_or("");
  return result;
}

AnticipationResult llm_predict(const LlmClient& client, const PromptSpec& spec, std::size_t k) {
  if (k == 0 || k > kMaxTopK) throw InputError("k must be in [1, 5]");
  auto prompt = render_prompt(spec);
  auto emission = client.complete(prompt);
  return parse_emission(emission, *spec.alphabet, k);
}

LlmAnticipator::LlmAnticipator(std::shared_ptr<const LlmClient> client, SymbolAlphabet alphabet,
                               PromptStyle style, std::size_t k)
    : client_(std::move(client)), alphabet_(std::move(alphabet)), style_(style), k_(k) {
  if (!client_) throw InputError("LLM anticipator needs a client");
  if (k_ == 0 || k_ > kMaxTopK) throw InputError("k must be in [1, 5]");
}

AnticipationResult LlmAnticipator::anticipate(const ContextSet& context,
                                              std::span<const ActionId> history) const {
  PromptSpec spec{style_, &alphabet_, &context, ActionSequence(history.begin(), history.end())};
  return llm_predict(*client_, spec, k_);
}

}  // namespace prego

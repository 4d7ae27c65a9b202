#include "prego/core_types.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "prego/errors.hpp"
#include "prego/random.hpp"

namespace prego {

std::string trim(std::string_view text) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && is_space(text[begin])) ++begin;
  while (end > begin && is_space(text[end - 1])) --end;
  return std::string(text.substr(begin, end - begin));
}

const std::string& ActionVocabulary::name(ActionId id) const {
  if (!contains(id)) throw IdOutOfRange(id, size());
  return names_[static_cast<std::size_t>(id)];
}

std::optional<ActionId> ActionVocabulary::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ActionId ActionVocabulary::id_of(std::string_view name) const {
  if (auto id = find(name)) return *id;
  throw UnknownSymbol(std::string(name));
}

ActionVocabulary build_vocabulary(std::span<const std::string> names) {
  ActionVocabulary vocab;
  vocab.names_.reserve(names.size());
  for (const auto& raw : names) {
    std::string name = trim(raw);
    if (name.empty()) throw EmptyName();
    if (name.find_first_of(",\n\r") != std::string::npos) throw InvalidName(name);
    auto id = static_cast<ActionId>(vocab.names_.size());
    if (!vocab.index_.emplace(name, id).second) throw DuplicateName(name);
    vocab.names_.push_back(std::move(name));
  }
  return vocab;
}

std::string_view to_string(AlphabetMode mode) {
  switch (mode) {
    case AlphabetMode::numerical: return "numerical";
    case AlphabetMode::semantic: return "semantic";
    case AlphabetMode::random: return "random";
  }
  return "numerical";
}

AlphabetMode parse_alphabet_mode(std::string_view text) {
  if (text == "numerical") return AlphabetMode::numerical;
  if (text == "semantic") return AlphabetMode::semantic;
  if (text == "random") return AlphabetMode::random;
  throw InputError("unknown alphabet mode '" + std::string(text) + "'");
}

const std::vector<std::string>& random_symbol_pool() {
  static const std::vector<std::string> pool = [] {
    std::vector<std::string> out;
    out.reserve(kRandomPoolSize);
    char buf[8];
    for (std::size_t i = 0; i < kRandomPoolSize; ++i) {
      std::snprintf(buf, sizeof buf, "#S%03zX", i);
      out.emplace_back(buf);
    }
    return out;
  }();
  return pool;
}

SymbolAlphabet SymbolAlphabet::from_symbols(AlphabetMode mode, std::uint64_t seed,
                                            std::vector<std::string> forward) {
  SymbolAlphabet alphabet;
  alphabet.mode_ = mode;
  alphabet.seed_ = seed;
  alphabet.backward_.reserve(forward.size());
  for (std::size_t i = 0; i < forward.size(); ++i) {
    const auto& sym = forward[i];
    if (sym.empty() || sym.find_first_of(",\n\r") != std::string::npos) {
      throw InputError("invalid symbol '" + sym + "'");
    }
    if (!alphabet.backward_.emplace(sym, static_cast<ActionId>(i)).second) {
      throw InputError("symbol '" + sym + "' assigned twice");
    }
  }
  alphabet.forward_ = std::move(forward);
  return alphabet;
}

SymbolAlphabet build_alphabet(const ActionVocabulary& vocab, AlphabetMode mode,
                              std::uint64_t seed) {
  const std::size_t count = vocab.size();
  std::vector<std::string> forward;
  forward.reserve(count);
  switch (mode) {
    case AlphabetMode::numerical:
      for (std::size_t i = 0; i < count; ++i) forward.push_back(std::to_string(i));
      break;
    case AlphabetMode::semantic:
      forward = vocab.names();
      break;
    case AlphabetMode::random: {
      const auto& pool = random_symbol_pool();
      if (count > pool.size()) throw PoolExhausted(count, pool.size());
      std::vector<std::size_t> order(pool.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      Rng rng(seed);
      shuffle(order, rng);
      for (std::size_t i = 0; i < count; ++i) forward.push_back(pool[order[i]]);
      break;
    }
  }
  return SymbolAlphabet::from_symbols(mode, seed, std::move(forward));
}

const std::string& SymbolAlphabet::symbol(ActionId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= forward_.size()) throw UnknownAction(id);
  return forward_[static_cast<std::size_t>(id)];
}

std::optional<ActionId> SymbolAlphabet::try_action(std::string_view symbol) const {
  auto it = backward_.find(std::string(symbol));
  if (it == backward_.end()) return std::nullopt;
  return it->second;
}

ActionId SymbolAlphabet::action(std::string_view symbol) const {
  if (auto id = try_action(symbol)) return *id;
  throw UnknownSymbol(std::string(symbol));
}

std::vector<std::string> SymbolAlphabet::encode(std::span<const ActionId> sequence) const {
  std::vector<std::string> out;
  out.reserve(sequence.size());
  for (ActionId id : sequence) out.push_back(symbol(id));
  return out;
}

ActionSequence SymbolAlphabet::decode(std::span<const std::string> symbols) const {
  ActionSequence out;
  out.reserve(symbols.size());
  for (const auto& s : symbols) out.push_back(action(s));
  return out;
}

nlohmann::json SymbolAlphabet::to_json() const {
  nlohmann::json forward = nlohmann::json::object();
  for (std::size_t i = 0; i < forward_.size(); ++i) forward[std::to_string(i)] = forward_[i];
  return {{"mode", std::string(to_string(mode_))}, {"seed", seed_}, {"forward", forward}};
}

SymbolAlphabet SymbolAlphabet::from_json(const nlohmann::json& doc) {
  try {
    auto mode = parse_alphabet_mode(doc.at("mode").get<std::string>());
    auto seed = doc.value("seed", std::uint64_t{0});
    const auto& fwd = doc.at("forward");
    std::vector<std::string> forward(fwd.size());
    std::vector<bool> seen(fwd.size(), false);
    for (const auto& [key, value] : fwd.items()) {
      std::size_t pos = 0;
      unsigned long id = std::stoul(key, &pos);
      if (pos != key.size() || id >= forward.size() || seen[id]) {
        throw InputError("alphabet ids must cover [0, C) exactly");
      }
      seen[id] = true;
      forward[id] = value.get<std::string>();
    }
    return from_symbols(mode, seed, std::move(forward));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed alphabet document: ") + e.what());
  } catch (const std::logic_error& e) {
    throw InputError(std::string("malformed alphabet document: ") + e.what());
  }
}

std::string_view to_string(MistakeType type) {
  switch (type) {
    case MistakeType::order: return "order";
    case MistakeType::omit: return "omit";
    case MistakeType::repeat: return "repeat";
    case MistakeType::correction: return "correction";
    case MistakeType::wrong_action: return "wrong_action";
  }
  return "order";
}

MistakeType parse_mistake_type(std::string_view text) {
  if (text == "order") return MistakeType::order;
  if (text == "omit") return MistakeType::omit;
  if (text == "repeat") return MistakeType::repeat;
  if (text == "correction") return MistakeType::correction;
  if (text == "wrong_action") return MistakeType::wrong_action;
  throw UnknownMistakeType(std::string(text));
}

bool Procedure::has_mistake() const noexcept { return first_mistake().has_value(); }

std::optional<std::size_t> Procedure::first_mistake() const noexcept {
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i].is_mistake) return i;
  }
  return std::nullopt;
}

ActionSequence Procedure::actions() const {
  ActionSequence out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.action_id);
  return out;
}

void validate(const Procedure& procedure) {
  if (procedure.steps.empty()) {
    throw InputError("procedure '" + procedure.procedure_id + "' has no steps");
  }
  for (std::size_t i = 0; i < procedure.steps.size(); ++i) {
    const auto& step = procedure.steps[i];
    if (step.step_index != i) throw NonContiguousSteps(procedure.procedure_id);
    if (!step.is_mistake && step.mistake_type) {
      throw InputError("procedure '" + procedure.procedure_id + "' step " +
                       std::to_string(i) + " has a mistake_type but is not a mistake");
    }
    if (step.start_frame && step.end_frame && *step.end_frame < *step.start_frame) {
      throw InputError("procedure '" + procedure.procedure_id + "' step " +
                       std::to_string(i) + " ends before it starts");
    }
  }
}

}  // namespace prego

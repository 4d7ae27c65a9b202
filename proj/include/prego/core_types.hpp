#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace prego {

using ActionId = std::int32_t;
using ActionSequence = std::vector<ActionId>;

/// The closed action set. Ids are dense: action i has id i.
class ActionVocabulary {
 public:
  ActionVocabulary() = default;

  std::size_t size() const noexcept { return names_.size(); }
  bool empty() const noexcept { return names_.empty(); }
  bool contains(ActionId id) const noexcept {
    return id >= 0 && static_cast<std::size_t>(id) < names_.size();
  }

  const std::string& name(ActionId id) const;
  std::optional<ActionId> find(std::string_view name) const;
  ActionId id_of(std::string_view name) const;  // throws UnknownSymbol
  const std::vector<std::string>& names() const noexcept { return names_; }

  friend ActionVocabulary build_vocabulary(std::span<const std::string> names);

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, ActionId> index_;
};

/// Trims each name and assigns ids in input order. Rejects empty names,
/// duplicates, and names containing ',' or '\n' (prompt field separators).
ActionVocabulary build_vocabulary(std::span<const std::string> names);

std::string trim(std::string_view text);

enum class AlphabetMode { numerical, semantic, random };

std::string_view to_string(AlphabetMode mode);
AlphabetMode parse_alphabet_mode(std::string_view text);

/// Size of the built-in pool backing random-mode alphabets.
inline constexpr std::size_t kRandomPoolSize = 512;

/// The built-in random-mode pool, in canonical order: "#S000" .. "#S1FF".
const std::vector<std::string>& random_symbol_pool();

/// Invertible action <-> symbol mapping used to build prompts.
class SymbolAlphabet {
 public:
  SymbolAlphabet() = default;

  AlphabetMode mode() const noexcept { return mode_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t size() const noexcept { return forward_.size(); }

  const std::string& symbol(ActionId id) const;     // throws UnknownAction
  ActionId action(std::string_view symbol) const;   // throws UnknownSymbol
  std::optional<ActionId> try_action(std::string_view symbol) const;

  std::vector<std::string> encode(std::span<const ActionId> sequence) const;
  ActionSequence decode(std::span<const std::string> symbols) const;

  nlohmann::json to_json() const;
  static SymbolAlphabet from_json(const nlohmann::json& doc);

  friend SymbolAlphabet build_alphabet(const ActionVocabulary& vocab, AlphabetMode mode,
                                       std::uint64_t seed);

 private:
  static SymbolAlphabet from_symbols(AlphabetMode mode, std::uint64_t seed,
                                     std::vector<std::string> forward);

  AlphabetMode mode_ = AlphabetMode::numerical;
  std::uint64_t seed_ = 0;
  std::vector<std::string> forward_;
  std::unordered_map<std::string, ActionId> backward_;
};

SymbolAlphabet build_alphabet(const ActionVocabulary& vocab, AlphabetMode mode,
                              std::uint64_t seed = 0);

enum class MistakeType { order, omit, repeat, correction, wrong_action };

std::string_view to_string(MistakeType type);
/// Accepts only the procedural categories plus wrong_action; anything else
/// (slow, search, misuse, motor, failure, ...) raises UnknownMistakeType.
MistakeType parse_mistake_type(std::string_view text);

struct StepRecord {
  std::size_t step_index = 0;
  ActionId action_id = 0;
  std::optional<std::int64_t> start_frame;
  std::optional<std::int64_t> end_frame;
  bool is_mistake = false;
  std::optional<MistakeType> mistake_type;

  bool operator==(const StepRecord&) const = default;
};

struct Procedure {
  std::string procedure_id;
  std::string toy_or_task_id;
  std::string actor_id;
  std::vector<StepRecord> steps;
  std::optional<std::vector<double>> confidence;

  bool has_mistake() const noexcept;
  std::optional<std::size_t> first_mistake() const noexcept;
  ActionSequence actions() const;

  bool operator==(const Procedure&) const = default;
};

/// Checks the Procedure invariants (non-empty, contiguous step indices,
/// mistake_type only on mistaken steps). Throws InputError.
void validate(const Procedure& procedure);

}  // namespace prego

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prego/core_types.hpp"

namespace prego {

inline constexpr std::size_t kDefaultTopK = 1;
inline constexpr std::size_t kMaxTopK = 5;

enum class ContextPolicy { same_task, same_task_name, all_train };

std::string_view to_string(ContextPolicy policy);
ContextPolicy parse_context_policy(std::string_view text);

struct ContextSequence {
  std::string procedure_id;
  ActionSequence actions;
};

/// Correct procedures shown to the anticipator. Built from training
/// procedures only.
struct ContextSet {
  std::vector<ContextSequence> sequences;
  ContextPolicy policy = ContextPolicy::all_train;

  bool empty() const noexcept;
};

/// Name component of a toy_or_task_id: the text after the last '-', or the
/// whole id when it has none ("a01-excavator" -> "excavator").
std::string task_name(std::string_view toy_or_task_id);

/// Selects context sequences from `train` for a procedure of task
/// `toy_or_task_id`. same_task matches the id exactly, same_task_name
/// matches task_name(). If the policy selects nothing, all of `train` is
/// used instead.
ContextSet build_context(std::span<const Procedure> train, std::string_view toy_or_task_id,
                         ContextPolicy policy);

/// counts[l][m] = number of times action m immediately follows action l in
/// the training sequences.
class TransitionMatrix {
 public:
  TransitionMatrix() = default;
  explicit TransitionMatrix(std::size_t action_count);

  std::size_t action_count() const noexcept { return size_; }
  std::uint64_t count(ActionId from, ActionId to) const;
  std::uint64_t total() const noexcept { return total_; }
  void add(ActionId from, ActionId to);

  /// Actions with a recorded transition from `from`, most frequent first,
  /// ties by smaller id.
  ActionSequence successors(ActionId from) const;

 private:
  std::size_t index(ActionId from, ActionId to) const;

  std::size_t size_ = 0;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

TransitionMatrix fit_transition_matrix(std::span<const ActionSequence> train,
                                       std::size_t action_count);

/// One-step-memory baseline: position 0 is never a mistake; position t > 0
/// is a mistake iff the transition (seq[t-1], seq[t]) was never observed.
std::vector<bool> one_step_verdicts(const TransitionMatrix& matrix,
                                    std::span<const ActionId> sequence);

struct AnticipationResult {
  ActionSequence predictions;          // distinct, best first
  std::optional<std::string> raw_emission;  // language-model backends only
  /// Set when the model emitted something outside the alphabet; predictions
  /// are then empty.
  std::optional<std::string> unknown_symbol;
};

/// Deterministic longest-suffix-match continuation predictor over the
/// context, matched in symbol space.
///
/// Finds the longest suffix of `history` that occurs contiguously in some
/// context sequence and is followed by at least one element, then ranks the
/// elements following every such occurrence by frequency. Ties go to the
/// continuation seen first (earlier context sequence, then earlier
/// position). Without any match, the k most frequent context actions are
/// returned with the same tie rule. Throws EmptyContext.
AnticipationResult pattern_machine_predict(const ContextSet& context,
                                           std::span<const ActionId> history, std::size_t k,
                                           const SymbolAlphabet& alphabet);

enum class PromptStyle { referenced_context, unreferenced_context, elaborate };

std::string_view to_string(PromptStyle style);
PromptStyle parse_prompt_style(std::string_view text);

struct PromptSpec {
  PromptStyle style = PromptStyle::referenced_context;
  const SymbolAlphabet* alphabet = nullptr;
  const ContextSet* context = nullptr;
  ActionSequence history;
};

/// Renders the prompt text. Context sequences go one per line with
/// comma-separated symbols; the history line ends with a separator so the
/// model continues it. Throws UnencodableAction.
std::string render_prompt(const PromptSpec& spec);

/// Anticipation backend (the step-anticipation branch). Implementations are
/// immutable after construction and safe to call concurrently.
class Anticipator {
 public:
  virtual ~Anticipator() = default;
  virtual AnticipationResult anticipate(const ContextSet& context,
                                        std::span<const ActionId> history) const = 0;
};

/// Expected actions are every recorded successor of the last history action.
class TransitionAnticipator final : public Anticipator {
 public:
  explicit TransitionAnticipator(TransitionMatrix matrix) : matrix_(std::move(matrix)) {}
  AnticipationResult anticipate(const ContextSet& context,
                                std::span<const ActionId> history) const override;
  const TransitionMatrix& matrix() const noexcept { return matrix_; }

 private:
  TransitionMatrix matrix_;
};

class PatternAnticipator final : public Anticipator {
 public:
  PatternAnticipator(SymbolAlphabet alphabet, std::size_t k);
  AnticipationResult anticipate(const ContextSet& context,
                                std::span<const ActionId> history) const override;

 private:
  SymbolAlphabet alphabet_;
  std::size_t k_;
};

}  // namespace prego

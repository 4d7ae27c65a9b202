#include "prego/anticipation.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "prego/errors.hpp"

namespace prego {

std::string_view to_string(ContextPolicy policy) {
  switch (policy) {
    case ContextPolicy::same_task: return "same_task";
    case ContextPolicy::same_task_name: return "same_task_name";
    case ContextPolicy::all_train: return "all_train";
  }
  return "same_task";
}

ContextPolicy parse_context_policy(std::string_view text) {
  if (text == "same_task") return ContextPolicy::same_task;
  if (text == "same_task_name") return ContextPolicy::same_task_name;
  if (text == "all_train") return ContextPolicy::all_train;
  throw InputError("unknown context policy '" + std::string(text) + "'");
}

bool ContextSet::empty() const noexcept {
  return std::all_of(sequences.begin(), sequences.end(),
                     [](const ContextSequence& s) { return s.actions.empty(); });
}

std::string task_name(std::string_view toy_or_task_id) {
  auto dash = toy_or_task_id.rfind('-');
  if (dash == std::string_view::npos) return std::string(toy_or_task_id);
  return std::string(toy_or_task_id.substr(dash + 1));
}

ContextSet build_context(std::span<const Procedure> train, std::string_view toy_or_task_id,
                         ContextPolicy policy) {
  auto matches = [&](const Procedure& p) {
    switch (policy) {
      case ContextPolicy::same_task: return p.toy_or_task_id == toy_or_task_id;
      case ContextPolicy::same_task_name:
        return task_name(p.toy_or_task_id) == task_name(toy_or_task_id);
      case ContextPolicy::all_train: return true;
    }
    return true;
  };
  ContextSet context{{}, policy};
  for (const auto& p : train) {
    if (matches(p)) context.sequences.push_back({p.procedure_id, p.actions()});
  }
  if (context.sequences.empty()) {
    for (const auto& p : train) context.sequences.push_back({p.procedure_id, p.actions()});
  }
  return context;
}

TransitionMatrix::TransitionMatrix(std::size_t action_count)
    : size_(action_count), counts_(action_count * action_count, 0) {}

std::size_t TransitionMatrix::index(ActionId from, ActionId to) const {
  if (from < 0 || static_cast<std::size_t>(from) >= size_) throw IdOutOfRange(from, size_);
  if (to < 0 || static_cast<std::size_t>(to) >= size_) throw IdOutOfRange(to, size_);
  return static_cast<std::size_t>(from) * size_ + static_cast<std::size_t>(to);
}

std::uint64_t TransitionMatrix::count(ActionId from, ActionId to) const {
  return counts_[index(from, to)];
}

void TransitionMatrix::add(ActionId from, ActionId to) {
  ++counts_[index(from, to)];
  ++total_;
}

ActionSequence TransitionMatrix::successors(ActionId from) const {
  ActionSequence out;
  for (std::size_t to = 0; to < size_; ++to) {
    if (count(from, static_cast<ActionId>(to)) > 0) out.push_back(static_cast<ActionId>(to));
  }
  std::stable_sort(out.begin(), out.end(),
                   [&](ActionId a, ActionId b) { return count(from, a) > count(from, b); });
  return out;
}

TransitionMatrix fit_transition_matrix(std::span<const ActionSequence> train,
                                       std::size_t action_count) {
  TransitionMatrix matrix(action_count);
  for (const auto& seq : train) {
    for (ActionId id : seq) {
      if (id < 0 || static_cast<std::size_t>(id) >= action_count) {
        throw IdOutOfRange(id, action_count);
      }
    }
    for (std::size_t i = 1; i < seq.size(); ++i) matrix.add(seq[i - 1], seq[i]);
  }
  return matrix;
}

std::vector<bool> one_step_verdicts(const TransitionMatrix& matrix,
                                    std::span<const ActionId> sequence) {
  if (sequence.empty()) throw InputError("one_step_verdicts needs a non-empty sequence");
  std::vector<bool> out(sequence.size(), false);
  if (!sequence.empty()) (void)matrix.count(sequence[0], sequence[0]);  // range check
  for (std::size_t t = 1; t < sequence.size(); ++t) {
    out[t] = matrix.count(sequence[t - 1], sequence[t]) == 0;
  }
  return out;
}

namespace {

struct Tally {
  std::size_t count = 0;
  std::size_t first_seq = 0;
  std::size_t first_pos = 0;
};

ActionSequence rank(const std::map<ActionId, Tally>& tallies, std::size_t k) {
  std::vector<std::pair<ActionId, Tally>> items(tallies.begin(), tallies.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    return std::make_tuple(-static_cast<long long>(a.second.count), a.second.first_seq,
                           a.second.first_pos, a.first) <
           std::make_tuple(-static_cast<long long>(b.second.count), b.second.first_seq,
                           b.second.first_pos, b.first);
  });
  ActionSequence out;
  for (std::size_t i = 0; i < items.size() && out.size() < k; ++i) out.push_back(items[i].first);
  return out;
}

}  // namespace

AnticipationResult pattern_machine_predict(const ContextSet& context,
                                           std::span<const ActionId> history, std::size_t k,
                                           const SymbolAlphabet& alphabet) {
  if (history.empty()) throw InputError("pattern machine needs a non-empty history");
  if (k == 0) throw InputError("k must be at least 1");
  if (context.empty()) throw EmptyContext();

  // gamma is a bijection, so comparing ids is the same as comparing the
  // symbols; encoding still rejects actions the alphabet does not cover.
  for (ActionId id : history) (void)alphabet.symbol(id);
  for (const auto& seq : context.sequences) {
    for (ActionId id : seq.actions) (void)alphabet.symbol(id);
  }

  std::size_t best = 0;
  std::map<ActionId, Tally> continuations;
  const std::size_t h = history.size();
  for (std::size_t j = 0; j < context.sequences.size(); ++j) {
    const auto& seq = context.sequences[j].actions;
    for (std::size_t e = 1; e < seq.size(); ++e) {
      std::size_t len = 0;
      while (len < h && len < e && seq[e - 1 - len] == history[h - 1 - len]) ++len;
      if (len == 0 || len < best) continue;
      if (len > best) {
        best = len;
        continuations.clear();
      }
      auto [it, fresh] = continuations.try_emplace(seq[e], Tally{0, j, e});
      ++it->second.count;
    }
  }

  if (continuations.empty()) {
    for (std::size_t j = 0; j < context.sequences.size(); ++j) {
      const auto& seq = context.sequences[j].actions;
      for (std::size_t i = 0; i < seq.size(); ++i) {
        auto [it, fresh] = continuations.try_emplace(seq[i], Tally{0, j, i});
        ++it->second.count;
      }
    }
  }
  return {rank(continuations, k), std::nullopt, std::nullopt};
}

std::string_view to_string(PromptStyle style) {
  switch (style) {
    case PromptStyle::referenced_context: return "referenced_context";
    case PromptStyle::unreferenced_context: return "unreferenced_context";
    case PromptStyle::elaborate: return "elaborate";
  }
  return "referenced_context";
}

PromptStyle parse_prompt_style(std::string_view text) {
  if (text == "referenced_context") return PromptStyle::referenced_context;
  if (text == "unreferenced_context") return PromptStyle::unreferenced_context;
  if (text == "elaborate") return PromptStyle::elaborate;
  throw InputError("unknown prompt style '" + std::string(text) + "'");
}

namespace {

struct PromptTemplate {
  std::string_view context_header;
  std::string_view history_header;
  std::string_view answer_header;
};

// Each header is followed by '\n'; see docs/prompts.md.
constexpr PromptTemplate kTemplates[] = {
    {"Given the following sequences:", "Complete the sequence:", "Answer:"},
    {"Context:", "Input:", "Output:"},
    {"Given the sequences of the following type:", "Complete the following sequence:",
     "Sequence is completed with:"},
};

void append_symbols(std::string& out, const SymbolAlphabet& alphabet,
                    std::span<const ActionId> actions) {
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i > 0) out += ',';
    if (actions[i] < 0 || static_cast<std::size_t>(actions[i]) >= alphabet.size()) {
      throw UnencodableAction(actions[i]);
    }
    out += alphabet.symbol(actions[i]);
  }
}

}  // namespace

std::string render_prompt(const PromptSpec& spec) {
  if (!spec.alphabet || !spec.context) throw InputError("prompt spec is incomplete");
  if (spec.history.empty()) throw InputError("prompt history is empty");
  const auto& tpl = kTemplates[static_cast<int>(spec.style)];
  std::string out;
  out += tpl.context_header;
  out += '\n';
  for (const auto& seq : spec.context->sequences) {
    append_symbols(out, *spec.alphabet, seq.actions);
    out += '\n';
  }
  out += tpl.history_header;
  out += '\n';
  append_symbols(out, *spec.alphabet, spec.history);
  out += ",\n";
  out += tpl.answer_header;
  out += '\n';
  return out;
}

AnticipationResult TransitionAnticipator::anticipate(const ContextSet&,
                                                      std::span<const ActionId> history) const {
  if (history.empty()) throw InputError("transition backend needs a non-empty history");
  return {matrix_.successors(history.back()), std::nullopt, std::nullopt};
}

PatternAnticipator::PatternAnticipator(SymbolAlphabet alphabet, std::size_t k)
    : alphabet_(std::move(alphabet)), k_(k) {
  if (k_ == 0 || k_ > kMaxTopK) throw InputError("k must be in [1, 5]");
}

AnticipationResult PatternAnticipator::anticipate(const ContextSet& context,
                                                  std::span<const ActionId> history) const {
  return pattern_machine_predict(context, history, k_, alphabet_);
}

}  // namespace prego

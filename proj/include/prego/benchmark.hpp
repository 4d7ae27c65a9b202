#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "prego/core_types.hpp"
#include "prego/detection.hpp"
#include "prego/random.hpp"

namespace prego {

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

enum class SplitPolicy { occ_by_mistake, confidence };

std::string_view to_string(SplitPolicy policy);

struct BenchmarkSplit {
  SplitPolicy policy = SplitPolicy::occ_by_mistake;
  std::optional<double> threshold;
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  static BenchmarkSplit from_json(const nlohmann::json& doc);
};

inline constexpr double kDefaultValRatio = 0.5;
inline constexpr double kDefaultConfidenceThreshold = 0.6;

/// Stable 64-bit FNV-1a, used for the val/test assignment.
std::uint64_t stable_hash(std::string_view text);

/// One-class split: every mistake-free procedure goes to train; mistaken
/// ones go to val or test by hash of procedure_id (a fraction `val_ratio`
/// to val). Throws NoCorrectProcedures.
BenchmarkSplit split_occ(std::span<const Procedure> procedures,
                         double val_ratio = kDefaultValRatio);

/// Median of a non-empty trace; the mean of the two middle values for even
/// lengths.
double median(std::vector<double> values);

/// Confidence split: median confidence >= threshold -> train, otherwise
/// test. Procedures without a confidence trace go to test.
BenchmarkSplit split_by_confidence(std::span<const Procedure> procedures,
                                   double threshold = kDefaultConfidenceThreshold);

/// Keeps every step up to and including the first mistake. Procedures
/// without mistakes come back unchanged.
Procedure trim_to_first_mistake(const Procedure& procedure);

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

enum class Averaging { micro, macro };

struct MetricsReport {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  Averaging averaging = Averaging::micro;
  /// Fraction of procedures whose first flagged step equals the first
  /// annotated mistake (both absent counts as a hit). Auxiliary.
  std::optional<double> first_alarm_accuracy;

  static MetricsReport from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t tn,
                                   std::uint64_t fn);
  nlohmann::json to_json() const;
  /// Precision / Recall / F1 table, three decimals.
  std::string to_table() const;
};

/// Ground-truth mistake label per verdict, keyed by procedure_id and in the
/// same order as the run's verdicts.
using GroundTruth = std::map<std::string, std::vector<bool>>;

/// Pairs every verdict with an annotated label. Verdicts carrying a frame
/// take the label of the annotated step whose span contains that frame
/// (false when none does); others use step_index directly. Throws
/// AlignmentMismatch for unknown procedures or out-of-range steps.
GroundTruth align_ground_truth(std::span<const DetectionRun> runs,
                               std::span<const Procedure> annotated);

/// Step-level counts over all runs. Throws AlignmentMismatch when a run has
/// no labels or a different number of them, or when there are no verdicts.
MetricsReport compute_metrics(std::span<const DetectionRun> runs, const GroundTruth& truth,
                              Averaging averaging = Averaging::micro);

// ---------------------------------------------------------------------------
// Synthetic grammars
// ---------------------------------------------------------------------------

/// One task: nodes are actions, edges (i, j) mean node i must precede j.
struct TaskGraph {
  std::string task_id;
  std::vector<ActionId> nodes;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  /// ancestors()[j][i] is true iff node i must precede node j.
  std::vector<std::vector<bool>> ancestors() const;
  std::optional<std::size_t> node_of(ActionId action) const;
};

struct SyntheticGrammar {
  ActionVocabulary vocabulary;
  std::vector<TaskGraph> tasks;

  const TaskGraph* find_task(std::string_view task_id) const;
};

/// Grammar JSON: {"tasks":[{"task_id", "steps":[names], "edges":[[i,j]]}]}.
/// Step names are shared across tasks by name. Throws CyclicGrammar.
SyntheticGrammar parse_grammar(const nlohmann::json& doc);
SyntheticGrammar load_grammar(const std::filesystem::path& path);

/// Throws CyclicGrammar when the task's edges contain a cycle.
void check_acyclic(const TaskGraph& task);

/// Every topological order of the task, in lexicographic node order;
/// stops after `limit` orders (returns nullopt when the limit is hit).
std::optional<std::vector<ActionSequence>> enumerate_linearizations(const TaskGraph& task,
                                                                    std::size_t limit);

inline constexpr std::size_t kEnumerationLimit = 5040;

/// n correct procedures, cycling through tasks. Orders are drawn uniformly
/// when a task has at most kEnumerationLimit of them; otherwise by picking
/// uniformly among ready nodes at each step, which over-weights orders with
/// long stretches of narrow frontier.
std::vector<Procedure> generate_procedures(const SyntheticGrammar& grammar, std::size_t n,
                                           Rng& rng, std::string_view id_prefix = "synth");

/// Turns a correct procedure of `task` into a trimmed mistaken one whose
/// last step is the mistake.
///   order        - step at `position` is replaced by a later step that
///                  depends on something in between
///   omit         - step at `position` is dropped; the mistake is the first
///                  later step depending on it
///   repeat       - the step before `position` is performed again
///   wrong_action - step at `position` becomes an action not available there
/// Throws NoValidInjection when `position` admits no such edit.
Procedure inject_mistake(const Procedure& procedure, const TaskGraph& task,
                         const ActionVocabulary& vocabulary, MistakeType kind,
                         std::size_t position, Rng& rng);

/// `n_correct` correct procedures followed by `n_injected` mistaken ones,
/// each injected with a kind drawn from `kinds` at a position >= 1.
std::vector<Procedure> synthesize_corpus(const SyntheticGrammar& grammar, std::size_t n_correct,
                                         std::size_t n_injected,
                                         std::span<const MistakeType> kinds, Rng& rng);

/// Annotation JSONL lines for `procedures` (no header).
void write_annotations(std::ostream& out, std::span<const Procedure> procedures,
                       const ActionVocabulary& vocabulary);

}  // namespace prego

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prego/core_types.hpp"

namespace prego {

/// Procedures parsed from one annotation file plus the vocabulary their
/// action_ids refer to.
struct AnnotationSet {
  ActionVocabulary vocabulary;
  std::vector<Procedure> procedures;  // in first-occurrence order of procedure_id

  const Procedure* find(std::string_view procedure_id) const;
};

/// Parses annotation JSONL. Lines whose object carries a "header" key are
/// metadata and skipped. When `vocabulary` is given, action names must
/// already exist in it; otherwise a vocabulary is built in first-occurrence
/// order.
AnnotationSet parse_annotations(std::istream& in, const std::string& origin = "<stream>",
                                const ActionVocabulary* vocabulary = nullptr);
AnnotationSet parse_annotations(const std::filesystem::path& path,
                                const ActionVocabulary* vocabulary = nullptr);

struct FramePrediction {
  std::string video_id;
  std::int64_t frame = 0;
  ActionId action_id = 0;
  std::optional<double> score;  // carried through, unused by detection
};

/// Per-video prediction streams, each in file order.
using PredictionStreams = std::map<std::string, std::vector<FramePrediction>>;

/// Throws OutOfOrderFrames if a video's frames do not strictly increase.
PredictionStreams parse_predictions(std::istream& in, const std::string& origin = "<stream>");
PredictionStreams parse_predictions(const std::filesystem::path& path);

using ConfidenceTraces = std::map<std::string, std::vector<double>>;

ConfidenceTraces parse_confidence(std::istream& in, const std::string& origin = "<stream>");
ConfidenceTraces parse_confidence(const std::filesystem::path& path);

/// Sets Procedure::confidence from traces keyed by procedure_id (= video_id).
void attach_confidence(std::vector<Procedure>& procedures, const ConfidenceTraces& traces);

/// A run of identical consecutive predictions, reduced to one step.
struct DedupStep {
  ActionId action_id = 0;
  std::int64_t first_frame = 0;
};

/// Run-length collapse keeping the first frame of each run.
std::vector<DedupStep> dedup_runs(std::span<const FramePrediction> predictions);

/// Collapses consecutive repeated predictions into a single step. Input must
/// be sorted by strictly increasing frame (OutOfOrderFrames otherwise).
ActionSequence dedup_stream(std::span<const FramePrediction> predictions);

enum class SourceKind { oracle, predicted };

struct TranscriptSource {
  SourceKind kind = SourceKind::oracle;
  std::filesystem::path origin;
};

/// One recognised step sequence per procedure / video.
struct StepSequence {
  std::string procedure_id;
  ActionSequence actions;
  /// First frame of each step; present for predicted sources only.
  std::optional<std::vector<std::int64_t>> first_frames;
};

/// Oracle sources pass annotated actions through unchanged; predicted
/// sources are deduplicated per video. Predicted action ids are checked
/// against `vocabulary`.
std::vector<StepSequence> to_step_sequence(const TranscriptSource& source,
                                           const ActionVocabulary& vocabulary);
std::vector<StepSequence> to_step_sequence(std::span<const Procedure> procedures);
std::vector<StepSequence> to_step_sequence(const PredictionStreams& streams,
                                           const ActionVocabulary& vocabulary);

/// Ground-truth label for a recognised step starting at `frame`: the
/// is_mistake flag of the annotated step whose frame span contains it,
/// false when no span matches.
bool label_for_frame(const Procedure& procedure, std::int64_t frame);

}  // namespace prego

#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "prego/anticipation.hpp"

namespace prego {

enum class VerdictCause { none, misalignment, unknown_symbol };

std::string_view to_string(VerdictCause cause);
VerdictCause parse_verdict_cause(std::string_view text);

struct Verdict {
  std::size_t step_index = 0;
  ActionId recognized = 0;
  ActionSequence anticipated;
  bool is_mistake = false;
  VerdictCause cause = VerdictCause::none;
  /// First frame of the recognised step (predicted sources only); used to
  /// align the verdict with annotated frame spans.
  std::optional<std::int64_t> frame;

  bool operator==(const Verdict&) const = default;
};

enum class StopPolicy { full_sequence, stop_at_first };

std::string_view to_string(StopPolicy policy);
StopPolicy parse_stop_policy(std::string_view text);

struct DetectionRun {
  std::string procedure_id;
  std::vector<Verdict> verdicts;
  std::optional<std::size_t> first_mistake_index;
  StopPolicy stop_policy = StopPolicy::full_sequence;
  bool complete = true;
  /// Why an incomplete run stopped early.
  std::optional<std::string> failure;

  bool operator==(const DetectionRun&) const = default;
};

/// Mistake iff `recognized` is not among the anticipated actions. An empty
/// prediction list is a mismatch.
Verdict detect_step(ActionId recognized, const AnticipationResult& anticipated,
                    std::size_t step_index = 0);

/// Walks `sequence` causally. Step 0 is always CORRECT and never queries the
/// backend; step t queries it with exactly sequence[0..t). Transport and
/// budget failures end the run early with complete = false.
DetectionRun run_online(std::string procedure_id, std::span<const ActionId> sequence,
                        const Anticipator& backend, const ContextSet& context,
                        StopPolicy stop_policy = StopPolicy::full_sequence);

/// JSON Lines encoding, one verdict per line.
nlohmann::json verdict_to_json(const std::string& procedure_id, const Verdict& verdict);
void write_run(std::ostream& out, const DetectionRun& run);

/// Reads verdict lines back into runs grouped by procedure_id (first
/// occurrence order). Header lines are skipped.
std::vector<DetectionRun> read_runs(std::istream& in, const std::string& origin = "<stream>");

}  // namespace prego

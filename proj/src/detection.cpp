#include "prego/detection.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "prego/errors.hpp"

namespace prego {

using nlohmann::json;

std::string_view to_string(VerdictCause cause) {
  switch (cause) {
    case VerdictCause::none: return "none";
    case VerdictCause::misalignment: return "misalignment";
    case VerdictCause::unknown_symbol: return "unknown_symbol";
  }
  return "none";
}

VerdictCause parse_verdict_cause(std::string_view text) {
  if (text == "none") return VerdictCause::none;
  if (text == "misalignment") return VerdictCause::misalignment;
  if (text == "unknown_symbol") return VerdictCause::unknown_symbol;
  throw InputError("unknown verdict cause '" + std::string(text) + "'");
}

std::string_view to_string(StopPolicy policy) {
  return policy == StopPolicy::stop_at_first ? "stop_at_first" : "full_sequence";
}

StopPolicy parse_stop_policy(std::string_view text) {
  if (text == "full_sequence") return StopPolicy::full_sequence;
  if (text == "stop_at_first") return StopPolicy::stop_at_first;
  throw InputError("unknown stop policy '" + std::string(text) + "'");
}

Verdict detect_step(ActionId recognized, const AnticipationResult& anticipated,
                    std::size_t step_index) {
  Verdict v;
  v.step_index = step_index;
  v.recognized = recognized;
  v.anticipated = anticipated.predictions;
  const auto& preds = anticipated.predictions;
  v.is_mistake = std::find(preds.begin(), preds.end(), recognized) == preds.end();
  if (!v.is_mistake) {
    v.cause = VerdictCause::none;
  } else if (anticipated.unknown_symbol && preds.empty()) {
    v.cause = VerdictCause::unknown_symbol;
  } else {
    v.cause = VerdictCause::misalignment;
  }
  return v;
}

DetectionRun run_online(std::string procedure_id, std::span<const ActionId> sequence,
                        const Anticipator& backend, const ContextSet& context,
                        StopPolicy stop_policy) {
  if (sequence.empty()) throw InputError("procedure '" + procedure_id + "' has no steps");
  DetectionRun run;
  run.procedure_id = std::move(procedure_id);
  run.stop_policy = stop_policy;
  run.verdicts.reserve(sequence.size());

  // Nothing to anticipate the first step from.
  Verdict first;
  first.step_index = 0;
  first.recognized = sequence[0];
  run.verdicts.push_back(first);

  for (std::size_t t = 1; t < sequence.size(); ++t) {
    AnticipationResult expected;
    try {
      expected = backend.anticipate(context, sequence.first(t));
    } catch (const TransportError& e) {
      run.complete = false;
      run.failure = e.what();
      break;
    } catch (const BudgetExceeded& e) {
      run.complete = false;
      run.failure = e.what();
      break;
    }
    auto verdict = detect_step(sequence[t], expected, t);
    bool mistake = verdict.is_mistake;
    run.verdicts.push_back(std::move(verdict));
    if (mistake && !run.first_mistake_index) {
      run.first_mistake_index = t;
      if (stop_policy == StopPolicy::stop_at_first) break;
    }
  }
  return run;
}

json verdict_to_json(const std::string& procedure_id, const Verdict& v) {
  json line = {{"procedure_id", procedure_id},
               {"step_index", v.step_index},
               {"recognized", v.recognized},
               {"anticipated", v.anticipated},
               {"is_mistake", v.is_mistake},
               {"cause", std::string(to_string(v.cause))}};
  if (v.frame) line["frame"] = *v.frame;
  return line;
}

void write_run(std::ostream& out, const DetectionRun& run) {
  for (const auto& v : run.verdicts) {
    auto line = verdict_to_json(run.procedure_id, v);
    if (!run.complete) line["incomplete"] = true;
    out << line.dump() << '\n';
  }
}

std::vector<DetectionRun> read_runs(std::istream& in, const std::string& origin) {
  std::vector<DetectionRun> runs;
  std::unordered_map<std::string, std::size_t> slot;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (trim(text).empty()) continue;
    try {
      auto obj = json::parse(text);
      if (obj.contains("header")) continue;
      auto id = obj.at("procedure_id").get<std::string>();
      Verdict v;
      v.step_index = obj.at("step_index").get<std::size_t>();
      v.recognized = obj.at("recognized").get<ActionId>();
      v.anticipated = obj.at("anticipated").get<ActionSequence>();
      v.is_mistake = obj.at("is_mistake").get<bool>();
      v.cause = parse_verdict_cause(obj.value("cause", std::string("none")));
      if (auto it = obj.find("frame"); it != obj.end() && !it->is_null()) {
        v.frame = it->get<std::int64_t>();
      }
      auto [pos, fresh] = slot.emplace(id, runs.size());
      if (fresh) {
        DetectionRun run;
        run.procedure_id = id;
        runs.push_back(std::move(run));
      }
      auto& run = runs[pos->second];
      if (obj.value("incomplete", false)) run.complete = false;
      if (v.is_mistake && !run.first_mistake_index) run.first_mistake_index = v.step_index;
      run.verdicts.push_back(std::move(v));
    } catch (const json::exception& e) {
      throw ParseError(origin, line_no, e.what());
    }
  }
  return runs;
}

}  // namespace prego

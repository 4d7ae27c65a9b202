#include "prego/ingestion.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "prego/errors.hpp"

namespace prego {

using nlohmann::json;

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return in;
}

// Calls `fn(object, line_number)` for every non-blank, non-header line.
template <typename Fn>
void for_each_record(std::istream& in, const std::string& origin, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(origin, line_no, e.what());
    }
    if (!obj.is_object()) throw ParseError(origin, line_no, "expected a JSON object");
    if (obj.contains("header")) continue;
    try {
      fn(obj, line_no);
    } catch (const json::exception& e) {
      throw ParseError(origin, line_no, e.what());
    }
  }
}

std::optional<std::int64_t> optional_frame(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  auto value = it->get<std::int64_t>();
  if (value < 0) throw InputError(std::string(key) + " must be non-negative");
  return value;
}

}  // namespace

const Procedure* AnnotationSet::find(std::string_view procedure_id) const {
  for (const auto& p : procedures) {
    if (p.procedure_id == procedure_id) return &p;
  }
  return nullptr;
}

AnnotationSet parse_annotations(std::istream& in, const std::string& origin,
                                const ActionVocabulary* vocabulary) {
  std::vector<std::string> names;
  std::unordered_map<std::string, ActionId> provisional;
  std::vector<Procedure> procedures;
  std::unordered_map<std::string, std::size_t> by_id;

  for_each_record(in, origin, [&](const json& obj, std::size_t line_no) {
    auto fail = [&](const std::string& what) { throw ParseError(origin, line_no, what); };

    auto procedure_id = obj.at("procedure_id").get<std::string>();
    auto task = obj.value("toy_or_task_id", std::string{});
    auto actor = obj.value("actor_id", std::string{});
    auto index = obj.at("step_index").get<std::int64_t>();
    if (index < 0) fail("step_index must be non-negative");
    auto name = trim(obj.at("action_name").get<std::string>());
    if (name.empty()) fail("action_name is empty");

    StepRecord step;
    step.step_index = static_cast<std::size_t>(index);
    step.start_frame = optional_frame(obj, "start_frame");
    step.end_frame = optional_frame(obj, "end_frame");
    if (step.start_frame && step.end_frame && *step.end_frame < *step.start_frame) {
      fail("end_frame precedes start_frame");
    }
    step.is_mistake = obj.value("is_mistake", false);
    if (auto it = obj.find("mistake_type"); it != obj.end() && !it->is_null()) {
      step.mistake_type = parse_mistake_type(it->get<std::string>());
      if (!step.is_mistake) fail("mistake_type given on a step that is not a mistake");
    }

    if (vocabulary) {
      auto id = vocabulary->find(name);
      if (!id) fail("action '" + name + "' is not in the vocabulary");
      step.action_id = *id;
    } else {
      auto [it, inserted] = provisional.emplace(name, static_cast<ActionId>(names.size()));
      if (inserted) names.push_back(name);
      step.action_id = it->second;
    }

    auto [slot, fresh] = by_id.emplace(procedure_id, procedures.size());
    if (fresh) {
      Procedure p;
      p.procedure_id = procedure_id;
      p.toy_or_task_id = task;
      p.actor_id = actor;
      procedures.push_back(std::move(p));
    }
    auto& proc = procedures[slot->second];
    if (proc.toy_or_task_id != task || proc.actor_id != actor) {
      fail("procedure '" + procedure_id + "' has inconsistent toy_or_task_id/actor_id");
    }
    proc.steps.push_back(step);
  });

  AnnotationSet out;
  out.vocabulary = vocabulary ? *vocabulary : build_vocabulary(names);
  for (auto& proc : procedures) {
    std::stable_sort(proc.steps.begin(), proc.steps.end(),
                     [](const StepRecord& a, const StepRecord& b) {
                       return a.step_index < b.step_index;
                     });
    for (std::size_t i = 0; i < proc.steps.size(); ++i) {
      if (proc.steps[i].step_index != i) throw NonContiguousSteps(proc.procedure_id);
    }
  }
  out.procedures = std::move(procedures);
  return out;
}

AnnotationSet parse_annotations(const std::filesystem::path& path,
                                const ActionVocabulary* vocabulary) {
  auto in = open_input(path);
  return parse_annotations(in, path.string(), vocabulary);
}

PredictionStreams parse_predictions(std::istream& in, const std::string& origin) {
  PredictionStreams streams;
  for_each_record(in, origin, [&](const json& obj, std::size_t line_no) {
    FramePrediction p;
    p.video_id = obj.at("video_id").get<std::string>();
    p.frame = obj.at("frame").get<std::int64_t>();
    if (p.frame < 0) throw ParseError(origin, line_no, "frame must be non-negative");
    p.action_id = obj.at("action_id").get<ActionId>();
    if (auto it = obj.find("score"); it != obj.end() && !it->is_null()) {
      p.score = it->get<double>();
      if (*p.score < 0.0 || *p.score > 1.0) {
        throw ParseError(origin, line_no, "score outside [0, 1]");
      }
    }
    auto& stream = streams[p.video_id];
    if (!stream.empty() && stream.back().frame >= p.frame) {
      throw OutOfOrderFrames(p.video_id, p.frame);
    }
    stream.push_back(std::move(p));
  });
  return streams;
}

PredictionStreams parse_predictions(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_predictions(in, path.string());
}

ConfidenceTraces parse_confidence(std::istream& in, const std::string& origin) {
  ConfidenceTraces traces;
  std::map<std::string, std::int64_t> last_frame;
  for_each_record(in, origin, [&](const json& obj, std::size_t line_no) {
    auto video = obj.at("video_id").get<std::string>();
    auto frame = obj.at("frame").get<std::int64_t>();
    auto value = obj.at("confidence").get<double>();
    if (value < 0.0 || value > 1.0) {
      throw ParseError(origin, line_no, "confidence outside [0, 1]");
    }
    auto [it, fresh] = last_frame.emplace(video, frame);
    if (!fresh) {
      if (it->second >= frame) throw OutOfOrderFrames(video, frame);
      it->second = frame;
    }
    traces[video].push_back(value);
  });
  return traces;
}

ConfidenceTraces parse_confidence(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_confidence(in, path.string());
}

void attach_confidence(std::vector<Procedure>& procedures, const ConfidenceTraces& traces) {
  for (auto& p : procedures) {
    if (auto it = traces.find(p.procedure_id); it != traces.end()) p.confidence = it->second;
  }
}

std::vector<DedupStep> dedup_runs(std::span<const FramePrediction> predictions) {
  std::vector<DedupStep> out;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    if (i > 0 && predictions[i - 1].frame >= p.frame) throw OutOfOrderFrames(p.video_id, p.frame);
    if (out.empty() || out.back().action_id != p.action_id) {
      out.push_back({p.action_id, p.frame});
    }
  }
  return out;
}

ActionSequence dedup_stream(std::span<const FramePrediction> predictions) {
  ActionSequence out;
  for (const auto& step : dedup_runs(predictions)) out.push_back(step.action_id);
  return out;
}

std::vector<StepSequence> to_step_sequence(std::span<const Procedure> procedures) {
  std::vector<StepSequence> out;
  out.reserve(procedures.size());
  for (const auto& p : procedures) out.push_back({p.procedure_id, p.actions(), std::nullopt});
  return out;
}

std::vector<StepSequence> to_step_sequence(const PredictionStreams& streams,
                                           const ActionVocabulary& vocabulary) {
  std::vector<StepSequence> out;
  out.reserve(streams.size());
  for (const auto& [video, stream] : streams) {
    StepSequence seq{video, {}, std::vector<std::int64_t>{}};
    for (const auto& step : dedup_runs(stream)) {
      if (!vocabulary.contains(step.action_id)) throw IdOutOfRange(step.action_id, vocabulary.size());
      seq.actions.push_back(step.action_id);
      seq.first_frames->push_back(step.first_frame);
    }
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<StepSequence> to_step_sequence(const TranscriptSource& source,
                                           const ActionVocabulary& vocabulary) {
  if (source.kind == SourceKind::oracle) {
    auto set = parse_annotations(source.origin, &vocabulary);
    return to_step_sequence(set.procedures);
  }
  return to_step_sequence(parse_predictions(source.origin), vocabulary);
}

bool label_for_frame(const Procedure& procedure, std::int64_t frame) {
  for (const auto& step : procedure.steps) {
    if (step.start_frame && step.end_frame && *step.start_frame <= frame &&
        frame <= *step.end_frame) {
      return step.is_mistake;
    }
  }
  return false;
}

}  // namespace prego

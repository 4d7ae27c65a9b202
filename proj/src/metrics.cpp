#include <cstdio>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "prego/benchmark.hpp"
#include "prego/errors.hpp"
#include "prego/ingestion.hpp"

namespace prego {

using nlohmann::json;

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

MetricsReport MetricsReport::from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t tn,
                                         std::uint64_t fn) {
  MetricsReport r;
  r.tp = tp;
  r.fp = fp;
  r.tn = tn;
  r.fn = fn;
  r.precision = ratio(tp, tp + fp);
  r.recall = ratio(tp, tp + fn);
  r.f1 = harmonic(r.precision, r.recall);
  return r;
}

json MetricsReport::to_json() const {
  json doc = {{"tp", tp},
              {"fp", fp},
              {"tn", tn},
              {"fn", fn},
              {"precision", precision},
              {"recall", recall},
              {"f1", f1},
              {"averaging", averaging == Averaging::macro ? "macro" : "micro"}};
  if (first_alarm_accuracy) doc["first_alarm_accuracy"] = *first_alarm_accuracy;
  return doc;
}

std::string MetricsReport::to_table() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %-10s %-10s\n%-10.3f %-10.3f %-10.3f\n", "Precision",
                "Recall", "F1", precision, recall, f1);
  return buf;
}

GroundTruth align_ground_truth(std::span<const DetectionRun> runs,
                               std::span<const Procedure> annotated) {
  std::unordered_map<std::string, const Procedure*> by_id;
  for (const auto& p : annotated) by_id.emplace(p.procedure_id, &p);

  GroundTruth truth;
  for (const auto& run : runs) {
    auto it = by_id.find(run.procedure_id);
    if (it == by_id.end()) {
      throw AlignmentMismatch("verdicts for unknown procedure '" + run.procedure_id + "'");
    }
    const Procedure& proc = *it->second;
    auto& labels = truth[run.procedure_id];
    labels.clear();
    for (const auto& v : run.verdicts) {
      if (v.frame) {
        labels.push_back(label_for_frame(proc, *v.frame));
      } else if (v.step_index < proc.steps.size()) {
        labels.push_back(proc.steps[v.step_index].is_mistake);
      } else {
        throw AlignmentMismatch("procedure '" + run.procedure_id + "' has no step " +
                                std::to_string(v.step_index));
      }
    }
  }
  return truth;
}

MetricsReport compute_metrics(std::span<const DetectionRun> runs, const GroundTruth& truth,
                              Averaging averaging) {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t verdict_count = 0;
  std::size_t first_alarm_hits = 0;
  double macro_p = 0.0, macro_r = 0.0, macro_f = 0.0;

  for (const auto& run : runs) {
    auto it = truth.find(run.procedure_id);
    if (it == truth.end()) {
      throw AlignmentMismatch("no ground truth for procedure '" + run.procedure_id + "'");
    }
    const auto& labels = it->second;
    if (labels.size() != run.verdicts.size()) {
      throw AlignmentMismatch("procedure '" + run.procedure_id + "' has " +
                              std::to_string(run.verdicts.size()) + " verdicts but " +
                              std::to_string(labels.size()) + " labels");
    }
    std::uint64_t rtp = 0, rfp = 0, rtn = 0, rfn = 0;
    std::optional<std::size_t> predicted_first, true_first;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      bool flagged = run.verdicts[i].is_mistake;
      bool actual = labels[i];
      if (flagged && !predicted_first) predicted_first = i;
      if (actual && !true_first) true_first = i;
      if (flagged && actual) ++rtp;
      else if (flagged) ++rfp;
      else if (actual) ++rfn;
      else ++rtn;
    }
    tp += rtp;
    fp += rfp;
    tn += rtn;
    fn += rfn;
    verdict_count += labels.size();
    if (predicted_first == true_first) ++first_alarm_hits;
    auto per = MetricsReport::from_counts(rtp, rfp, rtn, rfn);
    macro_p += per.precision;
    macro_r += per.recall;
    macro_f += per.f1;
  }
  if (verdict_count == 0) throw AlignmentMismatch("no verdicts to evaluate");

  auto report = MetricsReport::from_counts(tp, fp, tn, fn);
  report.averaging = averaging;
  if (averaging == Averaging::macro) {
    const auto n = static_cast<double>(runs.size());
    report.precision = macro_p / n;
    report.recall = macro_r / n;
    report.f1 = macro_f / n;
  }
  report.first_alarm_accuracy =
      static_cast<double>(first_alarm_hits) / static_cast<double>(runs.size());
  return report;
}

}  // namespace prego

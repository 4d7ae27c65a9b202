#include <algorithm>

#include <nlohmann/json.hpp>

#include "prego/benchmark.hpp"
#include "prego/errors.hpp"

namespace prego {

using nlohmann::json;

std::string_view to_string(SplitPolicy policy) {
  return policy == SplitPolicy::confidence ? "confidence" : "occ_by_mistake";
}

json BenchmarkSplit::to_json() const {
  json doc = {{"policy", std::string(prego::to_string(policy))},
              {"train", train},
              {"val", val},
              {"test", test}};
  if (threshold) doc["threshold"] = *threshold;
  if (!warnings.empty()) doc["warnings"] = warnings;
  return doc;
}

BenchmarkSplit BenchmarkSplit::from_json(const json& doc) {
  try {
    BenchmarkSplit split;
    auto policy = doc.at("policy").get<std::string>();
    if (policy == "occ_by_mistake") {
      split.policy = SplitPolicy::occ_by_mistake;
    } else if (policy == "confidence") {
      split.policy = SplitPolicy::confidence;
    } else {
      throw InputError("unknown split policy '" + policy + "'");
    }
    if (auto it = doc.find("threshold"); it != doc.end() && !it->is_null()) {
      split.threshold = it->get<double>();
    }
    split.train = doc.at("train").get<std::vector<std::string>>();
    split.val = doc.value("val", std::vector<std::string>{});
    split.test = doc.at("test").get<std::vector<std::string>>();
    split.warnings = doc.value("warnings", std::vector<std::string>{});
    return split;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed split manifest: ") + e.what());
  }
}

std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

BenchmarkSplit split_occ(std::span<const Procedure> procedures, double val_ratio) {
  if (val_ratio < 0.0 || val_ratio > 1.0) throw InputError("val ratio must be in [0, 1]");
  BenchmarkSplit split;
  split.policy = SplitPolicy::occ_by_mistake;
  for (const auto& p : procedures) {
    if (!p.has_mistake()) {
      split.train.push_back(p.procedure_id);
      continue;
    }
    double bucket = static_cast<double>(stable_hash(p.procedure_id) % 1000000) / 1e6;
    (bucket < val_ratio ? split.val : split.test).push_back(p.procedure_id);
  }
  if (split.train.empty()) throw NoCorrectProcedures();
  if (split.test.empty()) split.warnings.emplace_back("test split is empty");
  return split;
}

double median(std::vector<double> values) {
  if (values.empty()) throw InputError("median of an empty trace");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                   values.end());
  double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2.0;
}

BenchmarkSplit split_by_confidence(std::span<const Procedure> procedures, double threshold) {
  BenchmarkSplit split;
  split.policy = SplitPolicy::confidence;
  split.threshold = threshold;
  for (const auto& p : procedures) {
    bool confident = p.confidence && !p.confidence->empty() && median(*p.confidence) >= threshold;
    (confident ? split.train : split.test).push_back(p.procedure_id);
  }
  if (split.train.empty()) split.warnings.emplace_back("train split is empty");
  if (split.test.empty()) split.warnings.emplace_back("test split is empty");
  return split;
}

Procedure trim_to_first_mistake(const Procedure& procedure) {
  auto first = procedure.first_mistake();
  if (!first) return procedure;
  Procedure out = procedure;
  out.steps.resize(*first + 1);
  return out;
}

}  // namespace prego

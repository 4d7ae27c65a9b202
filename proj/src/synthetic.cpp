#include <algorithm>
#include <fstream>
#include <ostream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "prego/benchmark.hpp"
#include "prego/errors.hpp"

namespace prego {

using nlohmann::json;

namespace {

constexpr std::int64_t kFramesPerStep = 100;

std::vector<std::vector<std::size_t>> successor_lists(const TaskGraph& task) {
  std::vector<std::vector<std::size_t>> succ(task.nodes.size());
  for (auto [from, to] : task.edges) succ[from].push_back(to);
  return succ;
}

std::vector<std::size_t> in_degrees(const TaskGraph& task) {
  std::vector<std::size_t> deg(task.nodes.size(), 0);
  for (auto [from, to] : task.edges) ++deg[to];
  return deg;
}

StepRecord make_step(std::size_t index, ActionId action) {
  StepRecord s;
  s.step_index = index;
  s.action_id = action;
  s.start_frame = static_cast<std::int64_t>(index) * kFramesPerStep;
  s.end_frame = *s.start_frame + kFramesPerStep - 1;
  return s;
}

Procedure make_procedure(std::string id, const TaskGraph& task,
                         std::span<const ActionId> actions) {
  Procedure p;
  p.procedure_id = std::move(id);
  p.toy_or_task_id = task.task_id;
  p.actor_id = "synth";
  for (std::size_t i = 0; i < actions.size(); ++i) p.steps.push_back(make_step(i, actions[i]));
  return p;
}

void enumerate(const std::vector<std::vector<std::size_t>>& succ, std::vector<std::size_t>& deg,
               std::vector<bool>& used, ActionSequence& prefix, const TaskGraph& task,
               std::vector<ActionSequence>& out, std::size_t limit, bool& truncated) {
  if (truncated) return;
  if (prefix.size() == task.nodes.size()) {
    if (out.size() >= limit) {
      truncated = true;
      return;
    }
    out.push_back(prefix);
    return;
  }
  for (std::size_t n = 0; n < task.nodes.size() && !truncated; ++n) {
    if (used[n] || deg[n] != 0) continue;
    used[n] = true;
    for (auto s : succ[n]) --deg[s];
    prefix.push_back(task.nodes[n]);
    enumerate(succ, deg, used, prefix, task, out, limit, truncated);
    prefix.pop_back();
    for (auto s : succ[n]) ++deg[s];
    used[n] = false;
  }
}

ActionSequence greedy_order(const TaskGraph& task, Rng& rng) {
  auto succ = successor_lists(task);
  auto deg = in_degrees(task);
  std::vector<std::size_t> ready;
  for (std::size_t n = 0; n < deg.size(); ++n) {
    if (deg[n] == 0) ready.push_back(n);
  }
  ActionSequence out;
  while (!ready.empty()) {
    std::sort(ready.begin(), ready.end());
    auto pick = uniform_index(rng, ready.size());
    auto node = ready[pick];
    ready.erase(ready.begin() + static_cast<std::ptrdiff_t>(pick));
    out.push_back(task.nodes[node]);
    for (auto s : succ[node]) {
      if (--deg[s] == 0) ready.push_back(s);
    }
  }
  return out;
}

using OrderCache = std::vector<std::optional<std::vector<ActionSequence>>>;

OrderCache enumerate_all(const SyntheticGrammar& grammar) {
  OrderCache orders;
  for (const auto& task : grammar.tasks) {
    orders.push_back(enumerate_linearizations(task, kEnumerationLimit));
  }
  return orders;
}

ActionSequence sample_order(const SyntheticGrammar& grammar, const OrderCache& orders,
                            std::size_t t, Rng& rng) {
  if (orders[t]) return (*orders[t])[uniform_index(rng, orders[t]->size())];
  return greedy_order(grammar.tasks[t], rng);
}

}  // namespace

std::vector<std::vector<bool>> TaskGraph::ancestors() const {
  const std::size_t n = nodes.size();
  std::vector<std::vector<bool>> anc(n, std::vector<bool>(n, false));
  for (auto [from, to] : edges) anc[to][from] = true;
  // Warshall closure; graphs are tiny.
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!anc[j][k]) continue;
      for (std::size_t i = 0; i < n; ++i) {
        if (anc[k][i]) anc[j][i] = true;
      }
    }
  }
  return anc;
}

std::optional<std::size_t> TaskGraph::node_of(ActionId action) const {
  auto it = std::find(nodes.begin(), nodes.end(), action);
  if (it == nodes.end()) return std::nullopt;
  return static_cast<std::size_t>(it - nodes.begin());
}

const TaskGraph* SyntheticGrammar::find_task(std::string_view task_id) const {
  for (const auto& t : tasks) {
    if (t.task_id == task_id) return &t;
  }
  return nullptr;
}

void check_acyclic(const TaskGraph& task) {
  auto succ = successor_lists(task);
  auto deg = in_degrees(task);
  std::vector<std::size_t> stack;
  for (std::size_t n = 0; n < deg.size(); ++n) {
    if (deg[n] == 0) stack.push_back(n);
  }
  std::size_t visited = 0;
  while (!stack.empty()) {
    auto n = stack.back();
    stack.pop_back();
    ++visited;
    for (auto s : succ[n]) {
      if (--deg[s] == 0) stack.push_back(s);
    }
  }
  if (visited != task.nodes.size()) throw CyclicGrammar(task.task_id);
}

SyntheticGrammar parse_grammar(const json& doc) {
  try {
    std::vector<std::string> names;
    std::unordered_map<std::string, ActionId> ids;
    SyntheticGrammar grammar;
    for (const auto& t : doc.at("tasks")) {
      TaskGraph task;
      task.task_id = t.at("task_id").get<std::string>();
      if (grammar.find_task(task.task_id)) {
        throw InputError("duplicate task_id '" + task.task_id + "'");
      }
      for (const auto& raw : t.at("steps")) {
        auto name = trim(raw.get<std::string>());
        auto [it, fresh] = ids.emplace(name, static_cast<ActionId>(names.size()));
        if (fresh) names.push_back(name);
        if (task.node_of(it->second)) {
          throw InputError("task '" + task.task_id + "' lists step '" + name + "' twice");
        }
        task.nodes.push_back(it->second);
      }
      if (task.nodes.empty()) throw InputError("task '" + task.task_id + "' has no steps");
      for (const auto& e : t.value("edges", json::array())) {
        auto from = e.at(0).get<std::size_t>();
        auto to = e.at(1).get<std::size_t>();
        if (from >= task.nodes.size() || to >= task.nodes.size()) {
          throw InputError("task '" + task.task_id + "' edge references a missing step");
        }
        task.edges.emplace_back(from, to);
      }
      check_acyclic(task);
      grammar.tasks.push_back(std::move(task));
    }
    if (grammar.tasks.empty()) throw InputError("grammar has no tasks");
    grammar.vocabulary = build_vocabulary(names);
    return grammar;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed grammar: ") + e.what());
  }
}

SyntheticGrammar load_grammar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return parse_grammar(doc);
}

std::optional<std::vector<ActionSequence>> enumerate_linearizations(const TaskGraph& task,
                                                                    std::size_t limit) {
  check_acyclic(task);
  auto succ = successor_lists(task);
  auto deg = in_degrees(task);
  std::vector<bool> used(task.nodes.size(), false);
  ActionSequence prefix;
  std::vector<ActionSequence> out;
  bool truncated = false;
  enumerate(succ, deg, used, prefix, task, out, limit, truncated);
  if (truncated) return std::nullopt;
  return out;
}

std::vector<Procedure> generate_procedures(const SyntheticGrammar& grammar, std::size_t n,
                                           Rng& rng, std::string_view id_prefix) {
  if (n == 0) throw InputError("generate_procedures needs n >= 1");
  if (grammar.tasks.empty()) throw InputError("grammar has no tasks");
  const auto orders = enumerate_all(grammar);
  std::vector<Procedure> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t t = i % grammar.tasks.size();
    const auto& task = grammar.tasks[t];
    auto actions = sample_order(grammar, orders, t, rng);
    char id[32];
    std::snprintf(id, sizeof id, "-%04zu", i);
    out.push_back(make_procedure(std::string(id_prefix) + "-" + task.task_id + id, task, actions));
  }
  return out;
}

Procedure inject_mistake(const Procedure& procedure, const TaskGraph& task,
                         const ActionVocabulary& vocabulary, MistakeType kind,
                         std::size_t position, Rng& rng) {
  const auto& steps = procedure.steps;
  const std::size_t len = steps.size();
  std::vector<std::size_t> node_at(len);
  for (std::size_t i = 0; i < len; ++i) {
    auto node = task.node_of(steps[i].action_id);
    if (!node) {
      throw NoValidInjection("procedure '" + procedure.procedure_id +
                             "' uses an action outside task '" + task.task_id + "'");
    }
    node_at[i] = *node;
  }
  const auto anc = task.ancestors();

  const ActionSequence actions = procedure.actions();
  ActionSequence out(actions.begin(),
                     actions.begin() + static_cast<std::ptrdiff_t>(std::min(position, len)));
  auto fail = [&](const std::string& why) {
    throw NoValidInjection(std::string(to_string(kind)) + " at position " +
                           std::to_string(position) + ": " + why);
  };

  switch (kind) {
    case MistakeType::wrong_action: {
      if (position >= len) fail("position past the end");
      std::vector<bool> done(task.nodes.size(), false);
      for (std::size_t i = 0; i < position; ++i) done[node_at[i]] = true;
      std::vector<bool> valid(vocabulary.size(), false);
      for (std::size_t n = 0; n < task.nodes.size(); ++n) {
        if (done[n]) continue;
        bool ready = true;
        for (std::size_t m = 0; m < task.nodes.size(); ++m) {
          if (anc[n][m] && !done[m]) ready = false;
        }
        if (ready) valid[static_cast<std::size_t>(task.nodes[n])] = true;
      }
      ActionSequence candidates;
      for (std::size_t a = 0; a < vocabulary.size(); ++a) {
        if (!valid[a]) candidates.push_back(static_cast<ActionId>(a));
      }
      if (candidates.empty()) fail("every action is valid here");
      out.push_back(candidates[uniform_index(rng, candidates.size())]);
      break;
    }
    case MistakeType::repeat: {
      if (position == 0 || position > len) fail("needs a preceding step");
      out.push_back(steps[position - 1].action_id);
      break;
    }
    case MistakeType::order: {
      if (position >= len) fail("position past the end");
      std::vector<std::size_t> candidates;
      for (std::size_t q = position + 1; q < len; ++q) {
        for (std::size_t i = position; i < q; ++i) {
          if (anc[node_at[q]][node_at[i]]) {
            candidates.push_back(q);
            break;
          }
        }
      }
      if (candidates.empty()) fail("no later step depends on the steps it would jump");
      out.push_back(steps[candidates[uniform_index(rng, candidates.size())]].action_id);
      break;
    }
    case MistakeType::omit: {
      if (position >= len) fail("position past the end");
      const auto omitted = node_at[position];
      std::optional<std::size_t> hit;
      for (std::size_t i = position + 1; i < len; ++i) {
        if (anc[node_at[i]][omitted]) {
          hit = i;
          break;
        }
      }
      if (!hit) fail("no later step depends on the omitted one");
      for (std::size_t i = position + 1; i <= *hit; ++i) out.push_back(steps[i].action_id);
      break;
    }
    case MistakeType::correction:
      fail("corrections cannot be synthesised");
  }

  Procedure result = make_procedure(procedure.procedure_id, task, out);
  result.actor_id = procedure.actor_id;
  result.steps.back().is_mistake = true;
  result.steps.back().mistake_type = kind;
  return result;
}

std::vector<Procedure> synthesize_corpus(const SyntheticGrammar& grammar, std::size_t n_correct,
                                         std::size_t n_injected,
                                         std::span<const MistakeType> kinds, Rng& rng) {
  if (n_injected > 0 && kinds.empty()) throw InputError("no mistake kinds to inject");
  std::vector<Procedure> out;
  if (n_correct > 0) out = generate_procedures(grammar, n_correct, rng, "synth");
  const auto orders = enumerate_all(grammar);
  constexpr int kAttempts = 64;
  for (std::size_t i = 0; i < n_injected; ++i) {
    const auto kind = kinds[i % kinds.size()];
    bool injected = false;
    for (int attempt = 0; attempt < kAttempts && !injected; ++attempt) {
      const std::size_t t = i % grammar.tasks.size();
      const auto& task = grammar.tasks[t];
      char id[32];
      std::snprintf(id, sizeof id, "-%04zu", i);
      auto actions = sample_order(grammar, orders, t, rng);
      auto proc = make_procedure("mistake-" + task.task_id + id, task, actions);
      std::vector<std::size_t> positions;
      for (std::size_t p = 1; p <= proc.steps.size(); ++p) positions.push_back(p);
      shuffle(positions, rng);
      for (auto p : positions) {
        try {
          out.push_back(inject_mistake(proc, task, grammar.vocabulary, kind, p, rng));
          injected = true;
          break;
        } catch (const NoValidInjection&) {
        }
      }
    }
    if (!injected) {
      throw NoValidInjection("grammar admits no " + std::string(to_string(kind)) + " injection");
    }
  }
  return out;
}

void write_annotations(std::ostream& out, std::span<const Procedure> procedures,
                       const ActionVocabulary& vocabulary) {
  for (const auto& p : procedures) {
    for (const auto& s : p.steps) {
      json line = {{"procedure_id", p.procedure_id},
                   {"toy_or_task_id", p.toy_or_task_id},
                   {"actor_id", p.actor_id},
                   {"step_index", s.step_index},
                   {"action_name", vocabulary.name(s.action_id)},
                   {"start_frame", s.start_frame ? json(*s.start_frame) : json(nullptr)},
                   {"end_frame", s.end_frame ? json(*s.end_frame) : json(nullptr)},
                   {"is_mistake", s.is_mistake},
                   {"mistake_type", s.mistake_type ? json(std::string(to_string(*s.mistake_type)))
                                                   : json(nullptr)}};
      out << line.dump() << '\n';
    }
  }
}

}  // namespace prego

#include "prego/anticipation.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "prego/errors.hpp"
#include "prego/random.hpp"

namespace prego {
namespace {

SymbolAlphabet numeric_alphabet(std::size_t c) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < c; ++i) names.push_back("a" + std::to_string(i));
  return build_alphabet(build_vocabulary(names), AlphabetMode::numerical);
}

ContextSet context_of(std::vector<ActionSequence> seqs) {
  ContextSet ctx;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    ctx.sequences.push_back({"c" + std::to_string(i), std::move(seqs[i])});
  }
  return ctx;
}

std::set<std::pair<ActionId, ActionId>> pair_set(const std::vector<ActionSequence>& train) {
  std::set<std::pair<ActionId, ActionId>> pairs;
  for (const auto& s : train) {
    for (std::size_t i = 1; i < s.size(); ++i) pairs.emplace(s[i - 1], s[i]);
  }
  return pairs;
}

// Naive reference: try suffix lengths from longest to shortest, scanning for
// literal occurrences followed by an element.
ActionSequence suffix_oracle(const ContextSet& ctx, const ActionSequence& history, std::size_t k) {
  struct Seen {
    std::size_t count;
    std::size_t seq;
    std::size_t pos;
  };
  std::map<ActionId, Seen> seen;
  for (std::size_t len = history.size(); len >= 1 && seen.empty(); --len) {
    ActionSequence suffix(history.end() - static_cast<std::ptrdiff_t>(len), history.end());
    for (std::size_t j = 0; j < ctx.sequences.size(); ++j) {
      const auto& s = ctx.sequences[j].actions;
      for (std::size_t i = 0; i + len < s.size(); ++i) {
        if (std::equal(suffix.begin(), suffix.end(), s.begin() + static_cast<std::ptrdiff_t>(i))) {
          auto [it, fresh] = seen.try_emplace(s[i + len], Seen{0, j, i + len});
          it->second.count++;
        }
      }
    }
  }
  if (seen.empty()) {
    for (std::size_t j = 0; j < ctx.sequences.size(); ++j) {
      const auto& s = ctx.sequences[j].actions;
      for (std::size_t i = 0; i < s.size(); ++i) {
        auto [it, fresh] = seen.try_emplace(s[i], Seen{0, j, i});
        it->second.count++;
      }
    }
  }
  std::vector<std::pair<ActionId, Seen>> items(seen.begin(), seen.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    if (a.second.seq != b.second.seq) return a.second.seq < b.second.seq;
    if (a.second.pos != b.second.pos) return a.second.pos < b.second.pos;
    return a.first < b.first;
  });
  ActionSequence out;
  for (const auto& [id, _] : items) {
    if (out.size() == k) break;
    out.push_back(id);
  }
  return out;
}

ActionSequence random_sequence(Rng& rng, std::size_t max_len, std::size_t c) {
  ActionSequence s(1 + uniform_index(rng, max_len));
  for (auto& a : s) a = static_cast<ActionId>(uniform_index(rng, c));
  return s;
}

TEST(TransitionMatrixTest, CountsAdjacentPairs) {
  std::vector<ActionSequence> train = {{0, 1, 2}, {0, 1, 3}};
  auto m = fit_transition_matrix(train, 4);
  EXPECT_EQ(m.count(0, 1), 2u);
  EXPECT_EQ(m.count(1, 2), 1u);
  EXPECT_EQ(m.count(1, 3), 1u);
  EXPECT_EQ(m.total(), 4u);
  for (ActionId l = 0; l < 4; ++l) {
    for (ActionId r = 0; r < 4; ++r) {
      if ((l == 0 && r == 1) || (l == 1 && (r == 2 || r == 3))) continue;
      EXPECT_EQ(m.count(l, r), 0u) << l << "," << r;
    }
  }
}

TEST(TransitionMatrixTest, SingletonsAndSelfLoops) {
  std::vector<ActionSequence> single = {{5}};
  auto m = fit_transition_matrix(single, 6);
  EXPECT_EQ(m.total(), 0u);
  std::vector<ActionSequence> loop = {{0, 0}};
  EXPECT_EQ(fit_transition_matrix(loop, 1).count(0, 0), 1u);
}

TEST(TransitionMatrixTest, IdOutOfRange) {
  std::vector<ActionSequence> train = {{0, 7}};
  EXPECT_THROW(fit_transition_matrix(train, 3), IdOutOfRange);
}

TEST(TransitionMatrixTest, MatchesPairEnumeration) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t c = 1 + uniform_index(rng, 10);
    std::vector<ActionSequence> train;
    for (int i = 0; i < 5; ++i) train.push_back(random_sequence(rng, 8, c));
    auto m = fit_transition_matrix(train, c);
    std::map<std::pair<ActionId, ActionId>, std::uint64_t> counts;
    std::uint64_t total = 0;
    for (const auto& s : train) {
      for (std::size_t i = 1; i < s.size(); ++i, ++total) counts[{s[i - 1], s[i]}]++;
    }
    EXPECT_EQ(m.total(), total);
    for (const auto& [pair, n] : counts) EXPECT_EQ(m.count(pair.first, pair.second), n);
  }
}

TEST(OneStepVerdictsTest, Examples) {
  std::vector<ActionSequence> train = {{0, 1, 2}};
  auto m = fit_transition_matrix(train, 3);
  EXPECT_EQ(one_step_verdicts(m, ActionSequence{0, 1, 2}), (std::vector<bool>{false, false, false}));
  EXPECT_EQ(one_step_verdicts(m, ActionSequence{0, 2}), (std::vector<bool>{false, true}));
  TransitionMatrix empty(3);
  EXPECT_EQ(one_step_verdicts(empty, ActionSequence{1, 1}), (std::vector<bool>{false, true}));
  EXPECT_THROW(one_step_verdicts(m, ActionSequence{}), InputError);
  EXPECT_THROW(one_step_verdicts(m, ActionSequence{0, 9}), IdOutOfRange);
}

TEST(OneStepVerdictsTest, EqualsPairSetMembership) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t c = 1 + uniform_index(rng, 20);
    std::vector<ActionSequence> train;
    for (int i = 0; i < 4; ++i) train.push_back(random_sequence(rng, 10, c));
    auto pairs = pair_set(train);
    auto m = fit_transition_matrix(train, c);
    auto seq = random_sequence(rng, 12, c);
    auto verdicts = one_step_verdicts(m, seq);
    EXPECT_FALSE(verdicts[0]);
    for (std::size_t t = 1; t < seq.size(); ++t) {
      EXPECT_EQ(verdicts[t], !pairs.contains({seq[t - 1], seq[t]}));
    }
  }
}

TEST(PatternMachineTest, TieGoesToEarlierSequence) {
  auto ctx = context_of({{0, 1, 2}, {0, 1, 3}});
  auto r = pattern_machine_predict(ctx, ActionSequence{0, 1}, 1, numeric_alphabet(4));
  EXPECT_EQ(r.predictions, (ActionSequence{2}));
  r = pattern_machine_predict(ctx, ActionSequence{0, 1}, 2, numeric_alphabet(4));
  EXPECT_EQ(r.predictions, (ActionSequence{2, 3}));
}

TEST(PatternMachineTest, UniqueContinuation) {
  auto ctx = context_of({{4, 5}});
  EXPECT_EQ(pattern_machine_predict(ctx, ActionSequence{4}, 1, numeric_alphabet(6)).predictions,
            (ActionSequence{5}));
}

TEST(PatternMachineTest, NoMatchFallsBackToFrequency) {
  auto ctx = context_of({{0, 1}});
  EXPECT_EQ(pattern_machine_predict(ctx, ActionSequence{9}, 1, numeric_alphabet(10)).predictions,
            (ActionSequence{0}));
  auto ctx2 = context_of({{3, 1, 1}});
  EXPECT_EQ(pattern_machine_predict(ctx2, ActionSequence{9}, 2, numeric_alphabet(10)).predictions,
            (ActionSequence{1, 3}));
}

TEST(PatternMachineTest, LongestSuffixWins) {
  // Suffix [1] alone would favour 7 (twice); [0,1] only continues with 2.
  auto ctx = context_of({{1, 7}, {1, 7}, {0, 1, 2}});
  EXPECT_EQ(pattern_machine_predict(ctx, ActionSequence{0, 1}, 1, numeric_alphabet(8)).predictions,
            (ActionSequence{2}));
  EXPECT_EQ(pattern_machine_predict(ctx, ActionSequence{5, 1}, 1, numeric_alphabet(8)).predictions,
            (ActionSequence{7}));
}

TEST(PatternMachineTest, SuffixMatchIsNotAnchoredToSequenceStart) {
  // p and q both precede r. After "q" alone, r is not yet valid, but "q"
  // is followed by r inside "p,q,r".
  auto ctx = context_of({{0, 1, 2}, {1, 0, 2}});
  EXPECT_EQ(pattern_machine_predict(ctx, ActionSequence{1}, 1, numeric_alphabet(3)).predictions,
            (ActionSequence{2}));
}

TEST(PatternMachineTest, EmptyContextAndBadArgs) {
  ContextSet empty;
  EXPECT_THROW(pattern_machine_predict(empty, ActionSequence{0}, 1, numeric_alphabet(2)), EmptyContext);
  auto ctx = context_of({{}});
  EXPECT_THROW(pattern_machine_predict(ctx, ActionSequence{0}, 1, numeric_alphabet(2)), EmptyContext);
  auto ok = context_of({{0, 1}});
  EXPECT_THROW(pattern_machine_predict(ok, ActionSequence{}, 1, numeric_alphabet(2)), InputError);
  EXPECT_THROW(pattern_machine_predict(ok, ActionSequence{5}, 1, numeric_alphabet(2)), UnknownAction);
}

TEST(PatternMachineTest, MatchesBruteForceOracle) {
  Rng rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    std::size_t c = 1 + uniform_index(rng, 6);
    std::vector<ActionSequence> seqs;
    std::size_t n = 1 + uniform_index(rng, 4);
    for (std::size_t i = 0; i < n; ++i) seqs.push_back(random_sequence(rng, 10, c));
    auto ctx = context_of(seqs);
    auto history = random_sequence(rng, 6, c);
    std::size_t k = 1 + uniform_index(rng, 3);
    EXPECT_EQ(pattern_machine_predict(ctx, history, k, numeric_alphabet(c)).predictions,
              suffix_oracle(ctx, history, k));
  }
}

TEST(PatternMachineTest, PrefixOfUniqueSequenceReturnsNextElement) {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    // Distinct actions, so every prefix occurs exactly once.
    ActionSequence seq(8);
    for (std::size_t i = 0; i < seq.size(); ++i) seq[i] = static_cast<ActionId>(i);
    shuffle(seq, rng);
    auto ctx = context_of({seq});
    std::size_t cut = 1 + uniform_index(rng, seq.size() - 1);
    ActionSequence history(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_EQ(pattern_machine_predict(ctx, history, 1, numeric_alphabet(8)).predictions,
              (ActionSequence{seq[cut]}));
  }
}

TEST(PatternMachineTest, RelabelingInvariance) {
  Rng rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t c = 6;
    std::vector<ActionSequence> seqs;
    for (int i = 0; i < 3; ++i) seqs.push_back(random_sequence(rng, 9, c));
    auto history = random_sequence(rng, 5, c);
    ActionSequence perm(c);
    for (std::size_t i = 0; i < c; ++i) perm[i] = static_cast<ActionId>(i);
    shuffle(perm, rng);
    auto relabel = [&](ActionSequence s) {
      for (auto& a : s) a = perm[static_cast<std::size_t>(a)];
      return s;
    };
    std::vector<ActionSequence> mapped;
    for (const auto& s : seqs) mapped.push_back(relabel(s));
    auto base = pattern_machine_predict(context_of(seqs), history, 3, numeric_alphabet(c));
    auto moved = pattern_machine_predict(context_of(mapped), relabel(history), 3, numeric_alphabet(c));
    EXPECT_EQ(relabel(base.predictions), moved.predictions);
  }
}

TEST(BuildContextTest, Policies) {
  auto make = [](std::string id, std::string task) {
    Procedure p;
    p.procedure_id = std::move(id);
    p.toy_or_task_id = std::move(task);
    p.steps.push_back({0, 0, {}, {}, false, {}});
    return p;
  };
  std::vector<Procedure> train = {make("p1", "a01-excavator"), make("p2", "c08-excavator"),
                                  make("p3", "a02-dumper")};
  auto same = build_context(train, "a01-excavator", ContextPolicy::same_task);
  ASSERT_EQ(same.sequences.size(), 1u);
  EXPECT_EQ(same.sequences[0].procedure_id, "p1");
  auto named = build_context(train, "z99-excavator", ContextPolicy::same_task_name);
  EXPECT_EQ(named.sequences.size(), 2u);
  EXPECT_EQ(build_context(train, "a01-excavator", ContextPolicy::all_train).sequences.size(), 3u);
  // Nothing matches: every training procedure is used.
  EXPECT_EQ(build_context(train, "unseen", ContextPolicy::same_task).sequences.size(), 3u);
  EXPECT_EQ(task_name("plain"), "plain");
}

TEST(RenderPromptTest, UnreferencedLayout) {
  auto alphabet = numeric_alphabet(2);
  auto ctx = context_of({{0, 1}});
  PromptSpec spec{PromptStyle::unreferenced_context, &alphabet, &ctx, {0}};
  EXPECT_EQ(render_prompt(spec), "Context:\n0,1\nInput:\n0,\nOutput:\n");
}

TEST(RenderPromptTest, ReferencedLayout) {
  auto alphabet = numeric_alphabet(3);
  auto ctx = context_of({{0, 1, 2}, {0, 2}});
  PromptSpec spec{PromptStyle::referenced_context, &alphabet, &ctx, {0, 1}};
  EXPECT_EQ(render_prompt(spec),
            "Given the following sequences:\n0,1,2\n0,2\nComplete the sequence:\n0,1,\nAnswer:\n");
}

TEST(RenderPromptTest, ElaboratePhrases) {
  auto alphabet = numeric_alphabet(2);
  auto ctx = context_of({{0, 1}});
  PromptSpec spec{PromptStyle::elaborate, &alphabet, &ctx, {0}};
  auto text = render_prompt(spec);
  EXPECT_NE(text.find("Given the sequences of the following type:"), std::string::npos);
  EXPECT_NE(text.find("Complete the following sequence"), std::string::npos);
  EXPECT_NE(text.find("Sequence is completed with"), std::string::npos);
  EXPECT_EQ(text, render_prompt(spec));
}

TEST(RenderPromptTest, SemanticNamesKeepSpaces) {
  std::vector<std::string> names = {"attach wheel", "screw nut"};
  auto alphabet = build_alphabet(build_vocabulary(names), AlphabetMode::semantic);
  auto ctx = context_of({{0, 1}});
  PromptSpec spec{PromptStyle::unreferenced_context, &alphabet, &ctx, {0}};
  EXPECT_EQ(render_prompt(spec), "Context:\nattach wheel,screw nut\nInput:\nattach wheel,\nOutput:\n");
}

TEST(RenderPromptTest, Errors) {
  auto alphabet = numeric_alphabet(2);
  auto ctx = context_of({{0, 1}});
  PromptSpec unencodable{PromptStyle::elaborate, &alphabet, &ctx, {4}};
  EXPECT_THROW(render_prompt(unencodable), UnencodableAction);
  PromptSpec empty{PromptStyle::elaborate, &alphabet, &ctx, {}};
  EXPECT_THROW(render_prompt(empty), InputError);
}

TEST(RenderPromptTest, LengthMonotoneInHistoryAndContext) {
  Rng rng(31);
  auto alphabet = numeric_alphabet(12);
  for (int trial = 0; trial < 100; ++trial) {
    auto style = static_cast<PromptStyle>(uniform_index(rng, 3));
    std::vector<ActionSequence> seqs;
    for (int i = 0; i < 3; ++i) seqs.push_back(random_sequence(rng, 6, 12));
    auto history = random_sequence(rng, 6, 12);
    auto small_ctx = context_of({seqs[0]});
    auto big_ctx = context_of(seqs);
    PromptSpec base{style, &alphabet, &small_ctx, history};
    auto longer_history = history;
    longer_history.push_back(static_cast<ActionId>(uniform_index(rng, 12)));
    PromptSpec more_history{style, &alphabet, &small_ctx, longer_history};
    PromptSpec more_context{style, &alphabet, &big_ctx, history};
    EXPECT_LE(render_prompt(base).size(), render_prompt(more_history).size());
    EXPECT_LE(render_prompt(base).size(), render_prompt(more_context).size());
  }
}

TEST(AnticipatorTest, TransitionBackendReturnsRecordedSuccessors) {
  std::vector<ActionSequence> train = {{0, 1}, {0, 2}, {0, 2}};
  TransitionAnticipator backend(fit_transition_matrix(train, 3));
  ContextSet none;
  EXPECT_EQ(backend.anticipate(none, ActionSequence{0}).predictions, (ActionSequence{2, 1}));
  EXPECT_TRUE(backend.anticipate(none, ActionSequence{1}).predictions.empty());
}

TEST(AnticipatorTest, PatternBackendBoundsK) {
  EXPECT_THROW(PatternAnticipator(numeric_alphabet(2), 0), InputError);
  EXPECT_THROW(PatternAnticipator(numeric_alphabet(2), 6), InputError);
}

}  // namespace
}  // namespace prego

#include <gtest/gtest.h>

#include <algorithm>

#include "ocular/critic.h"
#include "ocular/demo_corpus.h"
#include "ocular/error.h"
#include "support/violation_corpus.h"

using namespace ocular;

namespace {

bool failed(const CriticReport& r, std::string_view id) {
  const auto ids = r.failed_ids();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

const PrototypeLibrary& lib() {
  static const PrototypeLibrary l = demo_library();
  return l;
}

RefineOptions local_only() {
  RefineOptions o;
  o.max_comp_revisions = 3;
  o.max_replans = 0;
  o.templates = &corpus::templates();
  return o;
}

}  // namespace

TEST(Critic, RestSequencePasses) {
  const auto r = critique(corpus::rest(), corpus::one_event("neutral"), "", {}, corpus::templates());
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.verdict, Verdict::Pass);
  for (const auto& c : r.checks) EXPECT_TRUE(c.passed);
  EXPECT_EQ(r.checks.size(), all_check_ids().size());
}

TEST(Critic, LengthMismatchThrows) {
  auto p = corpus::one_event("neutral");
  p.total_frames = 10;
  EXPECT_THROW(check_physiology(corpus::rest(), p), Error);
}

TEST(Critic, ShortBlinkMessageAndSpan) {
  auto s = corpus::rest();
  corpus::blink(s, 20, 21);
  const auto r = check_physiology(s, corpus::one_event("neutral"));
  ASSERT_EQ(r.failures().size(), 1u);
  const auto* f = r.failures().front();
  EXPECT_EQ(f->id, check_id::kBlinkDuration);
  EXPECT_NE(f->message.find("blink too short"), std::string::npos);
  EXPECT_EQ(f->start_frame, 20);
  EXPECT_EQ(f->end_frame, 21);
  EXPECT_EQ(r.verdict, Verdict::ReviseComposition);
}

TEST(Critic, ProlongedBlinkExemption) {
  auto s = corpus::rest();
  corpus::blink(s, 10, 29);  // 800 ms
  auto p = corpus::one_event("neutral");
  EXPECT_TRUE(failed(check_physiology(s, p), check_id::kBlinkDuration));
  p.events[0].exemptions.insert(std::string(exemption::kProlongedBlink));
  EXPECT_FALSE(failed(check_physiology(s, p), check_id::kBlinkDuration));
  corpus::blink(s, 10, 49);  // 1600 ms, past the raised cap
  EXPECT_TRUE(failed(check_physiology(s, p), check_id::kBlinkDuration));
}

TEST(Critic, WinkExemption) {
  auto s = corpus::rest();
  corpus::fill(s, Channel::AU43_L, 20, 30, 0.9);
  auto p = corpus::one_event("neutral");
  EXPECT_TRUE(failed(check_physiology(s, p), check_id::kBlinkAsymmetry));
  p.events[0].exemptions.insert(std::string(exemption::kWink));
  EXPECT_FALSE(failed(check_physiology(s, p), check_id::kBlinkAsymmetry));
}

TEST(Critic, GazeHeadSatisfiedByMatchingYaw) {
  auto s = corpus::rest();
  corpus::excursion(s, Channel::GazeLeft, 10, 40, 0.7, 0.2);
  for (int t = 8; t <= 50; ++t) s[static_cast<std::size_t>(t - 1)][Channel::Yaw] = std::min(6.0, 1.0 * (t - 8));
  EXPECT_FALSE(failed(check_physiology(s, corpus::one_event("neutral")), check_id::kGazeHead));
  for (auto& f : s.frames) f[Channel::Yaw] = -f[Channel::Yaw];  // wrong direction
  EXPECT_TRUE(failed(check_physiology(s, corpus::one_event("neutral")), check_id::kGazeHead));
}

TEST(Critic, DisabledRulesAreSkipped) {
  auto s = corpus::rest();
  corpus::blink(s, 20, 21);
  RuleSet rules;
  rules.enabled.erase(std::string(check_id::kBlinkDuration));
  const auto r = check_physiology(s, corpus::one_event("neutral"), rules);
  EXPECT_TRUE(r.passed());
}

TEST(Critic, SemanticTargetNamesChannelAndEvent) {
  const auto cases = corpus::build();
  const auto& c = *std::find_if(cases.begin(), cases.end(), [](const auto& k) { return k.expected_id == check_id::kTarget; });
  const auto r = check_semantic(c.seq, c.plan, c.instructions, {}, corpus::templates());
  ASSERT_EQ(r.failures().size(), 1u);
  EXPECT_EQ(r.failures()[0]->channels, std::vector<std::string>{"gaze_left"});
  EXPECT_EQ(r.failures()[0]->event_index, 0u);
}

TEST(Critic, EmptyInstructionsPassVacuously) {
  const auto r = check_semantic(corpus::rest(), corpus::one_event("neutral"), "", {}, corpus::templates());
  EXPECT_FALSE(failed(r, check_id::kInstruction));
}

TEST(Critic, CorpusDetection) {
  for (const auto& c : corpus::build()) {
    const auto r = critique(c.seq, c.plan, c.instructions, {}, corpus::templates());
    EXPECT_TRUE(failed(r, c.expected_id)) << c.name;
    const auto want = c.repairable ? Verdict::ReviseComposition : Verdict::RevisePlan;
    if (c.expected_id != check_id::kTarget) EXPECT_EQ(r.verdict, want) << c.name;
  }
}

TEST(Critic, CorpusRepairs) {
  for (const auto& c : corpus::build()) {
    if (!c.repairable) continue;
    const auto res = refine(c.seq, c.plan, c.instructions, lib(), {}, local_only());
    EXPECT_EQ(res.verdict, Verdict::Pass) << c.name;
    EXPECT_LE(res.composition_revisions, 3) << c.name;
    EXPECT_EQ(res.replans, 0);
    // Idempotence: the accepted sequence re-checks clean.
    EXPECT_TRUE(critique(res.controls, res.plan, c.instructions, {}, corpus::templates()).passed()) << c.name;
  }
}

TEST(Critic, ShortBlinkStretchedInOneRevision) {
  auto s = corpus::rest();
  corpus::blink(s, 20, 21);
  const auto res = refine(s, corpus::one_event("neutral"), "", lib(), {}, local_only());
  EXPECT_EQ(res.verdict, Verdict::Pass);
  EXPECT_EQ(res.composition_revisions, 1);
  int closed = 0;
  for (const auto& f : res.controls.frames) closed += std::min(f[Channel::AU43_L], f[Channel::AU43_R]) > 0.5;
  EXPECT_GE(closed * 40, 100);
}

TEST(Critic, ValidInputIsFixedPoint) {
  const auto res = refine(corpus::rest(), corpus::one_event("neutral"), "", lib(), {}, local_only());
  EXPECT_EQ(res.verdict, Verdict::Pass);
  EXPECT_EQ(res.controls, corpus::rest());
  EXPECT_EQ(res.composition_revisions, 0);
  ASSERT_EQ(res.audit.size(), 1u);
  EXPECT_EQ(res.audit[0].action, "accept");
}

TEST(Critic, UnrepairableFailsWithoutReplans) {
  const auto cases = corpus::build();
  const auto& c = cases.back();  // label never expressed
  const auto res = refine(c.seq, c.plan, c.instructions, lib(), {}, local_only());
  EXPECT_EQ(res.verdict, Verdict::Fail);
  EXPECT_TRUE(failed(res.report, check_id::kLabel));
  EXPECT_EQ(res.audit.back().action, "fail");
}

TEST(Critic, RefineTerminatesWithinBound) {
  for (int comp = 0; comp <= 3; ++comp) {
    for (int rep = 0; rep <= 2; ++rep) {
      RefineOptions o = local_only();
      o.max_comp_revisions = comp;
      o.max_replans = rep;
      for (const auto& c : corpus::build()) {
        const auto res = refine(c.seq, c.plan, c.instructions, lib(), {}, o);
        EXPECT_LE(static_cast<int>(res.audit.size()), comp + rep + 1);
        EXPECT_LE(res.composition_revisions, comp);
        EXPECT_LE(res.replans, rep);
      }
    }
  }
}

TEST(Critic, RelaxPlanWidensWithinRange) {
  const auto p = plan("drowsiness", 50, 25.0, std::nullopt, {});
  const auto r = relax_plan(p, 2);
  for (std::size_t k = 0; k < p.events.size(); ++k) {
    for (const auto& [ch, iv] : p.events[k].channel_targets) {
      const auto& w = r.events[k].channel_targets.at(ch);
      EXPECT_LE(w.lo, iv.lo);
      EXPECT_GE(w.hi, iv.hi);
    }
  }
  EXPECT_TRUE(validate_plan(r).ok());
}

TEST(Rules, JsonRoundTripAndErrors) {
  RuleSet rs;
  rs.blink_min_ms = 90.0;
  rs.enabled.erase(std::string(check_id::kGazeHead));
  const auto back = rules_from_json(rules_to_json(rs));
  EXPECT_EQ(back.blink_min_ms, 90.0);
  EXPECT_FALSE(back.is_enabled(check_id::kGazeHead));
  EXPECT_TRUE(back.is_enabled(check_id::kBlinkDuration));

  const auto over = rules_from_json(R"({"rules": {"blink_duration": {"min_ms": 120}}})");
  EXPECT_EQ(over.blink_min_ms, 120.0);
  EXPECT_THROW(rules_from_json(R"({"rules": {"nope": {}}})"), ParseError);
  EXPECT_THROW(rules_from_json(R"({"rules": {"blink_duration": {"min_ms": -5}}})"), ParseError);
  EXPECT_THROW(rules_from_json(R"({"rules": {"blink_asymmetry": {"max": 1.5}}})"), ParseError);
}

TEST(Report, JsonHasVerdictAndChecks) {
  auto s = corpus::rest();
  corpus::blink(s, 20, 21);
  const auto j = report_to_json(critique(s, corpus::one_event("neutral"), "", {}, corpus::templates()));
  EXPECT_NE(j.find("\"verdict\": \"revise_composition\""), std::string::npos);
  EXPECT_NE(j.find("blink too short"), std::string::npos);
}

#include <gtest/gtest.h>

#include "ocular/error.h"
#include "ocular/planner.h"

using namespace ocular;

namespace {

std::vector<std::string> labels() {
  std::vector<std::string> out;
  for (const auto& [k, v] : default_templates()) out.push_back(k);
  return out;
}

bool mentions(const ValidationReport& r, std::string_view text) {
  for (const auto& v : r.violations)
    if (v.message.find(text) != std::string::npos) return true;
  return false;
}

Plan two_events(int a_end, int b_start, int total) {
  Plan p;
  p.label = "drowsiness";
  p.total_frames = total;
  p.events = {{1, a_end, "a", {}, {}}, {b_start, total, "b", {}, {}}};
  return p;
}

}  // namespace

TEST(Templates, TwelveCategories) {
  const auto ls = labels();
  EXPECT_EQ(ls.size(), 12u);
  for (const auto& [label, t] : default_templates()) {
    double sum = 0.0;
    for (const auto& s : t.stages) sum += s.ratio;
    EXPECT_NEAR(sum, 1.0, 1e-12) << label;
    EXPECT_FALSE(t.required.empty()) << label;
  }
}

TEST(Templates, JsonRoundTrip) {
  const auto text = templates_to_json(default_templates());
  const auto back = templates_from_json(text, {});
  ASSERT_EQ(back.size(), default_templates().size());
  for (const auto& [label, t] : default_templates()) {
    const auto& b = back.at(label);
    ASSERT_EQ(b.stages.size(), t.stages.size());
    for (std::size_t i = 0; i < t.stages.size(); ++i) {
      EXPECT_EQ(b.stages[i].targets, t.stages[i].targets);
      EXPECT_EQ(b.stages[i].exemptions, t.stages[i].exemptions);
      EXPECT_EQ(b.stages[i].semantics, t.stages[i].semantics);
    }
    EXPECT_EQ(b.required, t.required);
  }
  EXPECT_THROW(templates_from_json(R"({"x": {"stages": [{"semantics": "s", "ratio": 1,
               "targets": {"AU1": [0.5, 1.4]}}]}})"),
               ParseError);
}

TEST(Plan, DrowsinessStages) {
  const auto p = plan("drowsiness", 50, 25.0, std::nullopt, {});
  ASSERT_EQ(p.events.size(), 3u);
  EXPECT_EQ(p.events[0].semantics, "droopy eyelids");
  EXPECT_EQ(p.events[1].semantics, "prolonged blink");
  EXPECT_EQ(p.events[2].semantics, "drowsy head nod");
  EXPECT_EQ(p.events[0].start_frame, 1);
  EXPECT_EQ(p.events[0].end_frame, 6);    // round(0.12 * 50)
  EXPECT_EQ(p.events[1].end_frame, 20);   // round(0.40 * 50)
  EXPECT_EQ(p.events[2].end_frame, 50);
  EXPECT_TRUE(p.events[1].exempt(exemption::kProlongedBlink));
  EXPECT_TRUE(validate_plan(p).ok());
}

TEST(Plan, CognitiveEffortWithInstructions) {
  const auto p = plan("cognitive_effort", 50, 25.0,
                      std::string_view("look slightly to the left, then lower the head smoothly"), {});
  ASSERT_EQ(p.events.size(), 3u);
  EXPECT_EQ(p.events[0].semantics, "attentive onset");
  const auto& e2 = p.events[1].channel_targets;
  ASSERT_TRUE(e2.contains(Channel::GazeLeft));
  EXPECT_GT(e2.at(Channel::GazeLeft).lo, 0.0);
  EXPECT_GT(e2.at(Channel::AU7).lo, 0.0);
  const auto& e3 = p.events[2].channel_targets;
  ASSERT_TRUE(e3.contains(Channel::Pitch));
  EXPECT_LT(e3.at(Channel::Pitch).hi, 0.0);
  EXPECT_GT(e3.at(Channel::AU7).lo, 0.0);
  for (const auto& e : p.events) {
    if (e.channel_targets.contains(Channel::GazeRight)) EXPECT_LE(e.channel_targets.at(Channel::GazeRight).lo, 0.0);
  }
}

TEST(Plan, DegenerateDurations) {
  for (const auto& label : labels()) {
    const auto p = plan(label, 1, 25.0, std::nullopt, {});
    ASSERT_EQ(p.events.size(), 1u) << label;
    EXPECT_EQ(p.events[0].start_frame, 1);
    EXPECT_EQ(p.events[0].end_frame, 1);
    EXPECT_TRUE(validate_plan(p).ok()) << label;
  }
}

TEST(Plan, UnknownLabelListsCategories) {
  try {
    plan("nonsense", 50, 25.0, std::nullopt, {});
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    for (const auto& l : labels()) EXPECT_NE(msg.find(l), std::string::npos) << l;
  }
  EXPECT_THROW(plan("drowsiness", 0, 25.0, std::nullopt, {}), Error);
}

TEST(Plan, FirstEventHeadTargetsContainInitialPose) {
  const InitialPose pose{10.0, -5.0, 3.0};
  for (const auto& label : labels()) {
    const auto p = plan(label, 80, 25.0, std::nullopt, pose);
    const auto& t = p.events.front().channel_targets;
    EXPECT_TRUE(t.at(Channel::Yaw).contains(pose.yaw)) << label;
    EXPECT_TRUE(t.at(Channel::Pitch).contains(pose.pitch)) << label;
    EXPECT_TRUE(t.at(Channel::Roll).contains(pose.roll)) << label;
  }
}

TEST(Plan, ValidForAllLabelsAndLengths) {
  for (const auto& label : labels()) {
    for (int T = 1; T <= 2000; T += (T < 40 ? 1 : 37)) {
      const auto p = plan(label, T, 25.0, std::nullopt, {});
      const auto r = validate_plan(p);
      ASSERT_TRUE(r.ok()) << label << " T=" << T << ": " << r.violations.front().message;
      EXPECT_EQ(p.total_frames, T);
    }
  }
}

TEST(Plan, Deterministic) {
  const char* instr = "raise the eyebrows, then look up and blink";
  for (const auto& label : labels()) {
    EXPECT_EQ(plan_to_json(plan(label, 73, 25.0, std::string_view(instr), {3, 2, 1})),
              plan_to_json(plan(label, 73, 25.0, std::string_view(instr), {3, 2, 1})));
  }
}

TEST(Plan, DirectionKeywordsExclusive) {
  const std::pair<const char*, std::pair<Channel, Channel>> cases[] = {
      {"look left", {Channel::GazeLeft, Channel::GazeRight}},
      {"look to the right", {Channel::GazeRight, Channel::GazeLeft}},
      {"glance up", {Channel::GazeUp, Channel::GazeDown}},
      {"eyes down", {Channel::GazeDown, Channel::GazeUp}},
  };
  for (const auto& label : labels()) {
    for (const auto& [text, chans] : cases) {
      const auto p = plan(label, 60, 25.0, std::string_view(text), {});
      bool some = false;
      for (const auto& e : p.events) {
        const auto& t = e.channel_targets;
        if (t.contains(chans.first) && t.at(chans.first).lo > 0) some = true;
        if (t.contains(chans.second)) EXPECT_LE(t.at(chans.second).lo, 0.0) << label << " / " << text;
      }
      EXPECT_TRUE(some) << label << " / " << text;
    }
  }
}

TEST(InstructionCues, Vocabulary) {
  const auto cues = instruction_cues("look left, then blink");
  bool left = false, no_right = false, blink = false;
  for (const auto& c : cues) {
    left |= c.kind == InstructionCue::Kind::Activate && c.channel == Channel::GazeLeft;
    no_right |= c.kind == InstructionCue::Kind::Forbid && c.channel == Channel::GazeRight;
    blink |= c.kind == InstructionCue::Kind::Activate && c.channel == Channel::AU43_L;
  }
  EXPECT_TRUE(left);
  EXPECT_TRUE(no_right);
  EXPECT_TRUE(blink);
  EXPECT_TRUE(instruction_cues("").empty());
}

TEST(ValidatePlan, Examples) {
  EXPECT_TRUE(validate_plan(two_events(10, 11, 50)).ok());
  const auto gap = validate_plan(two_events(10, 12, 50));
  EXPECT_TRUE(mentions(gap, "gap at frame 11"));
  const auto overlap = validate_plan(two_events(10, 10, 50));
  EXPECT_TRUE(mentions(overlap, "overlap at frame 10"));

  auto p = two_events(10, 11, 50);
  p.events[0].channel_targets[Channel::AU1] = {0.5, 1.4};
  EXPECT_TRUE(mentions(validate_plan(p), "target exceeds channel range"));
  p.events[0].channel_targets[Channel::AU1] = {0.6, 0.4};
  EXPECT_TRUE(mentions(validate_plan(p), "invalid target interval"));

  Plan empty;
  empty.total_frames = 5;
  EXPECT_TRUE(mentions(validate_plan(empty), "no events"));
}

TEST(AgentPlan, DecodeRoundTrip) {
  const auto p = plan("cognitive_effort", 50, 25.0, std::nullopt, {});
  const auto back = decode_agent_plan(plan_to_json(p));
  EXPECT_EQ(back, p);
  ASSERT_EQ(back.events.size(), 3u);
}

TEST(AgentPlan, Errors) {
  const auto p = plan("drowsiness", 50, 25.0, std::nullopt, {});
  auto text = plan_to_json(p);
  // Drop the last frame from the final event.
  const auto pos = text.rfind("\"end_frame\": 50");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 15, "\"end_frame\": 49");
  try {
    decode_agent_plan(text);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("events do not partition duration"), std::string::npos);
  }
  try {
    decode_agent_plan(R"({"label":"drowsiness","fps":25,"total_frames":5,"events":[]})");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("no events"), std::string::npos);
  }
  EXPECT_THROW(decode_agent_plan("{not json"), ParseError);
  try {
    decode_agent_plan(R"({"label":"x","fps":25,"total_frames":2,"events":[
      {"start_frame":1,"end_frame":2,"semantics":"s","channel_targets":{"AU1":[0.5,1.4]},"exemptions":[]}]})");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("$.events[0]"), std::string::npos) << e.what();
  }
}

TEST(AgentPlan, RequestEnvelope) {
  const auto req = plan_request_json("drowsiness", 50, 25.0, std::string_view("look left"), {1, 2, 3});
  EXPECT_NE(req.find("\"instructions\""), std::string::npos);
  EXPECT_NE(req.find("\"initial_pose\""), std::string::npos);
}

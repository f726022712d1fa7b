#include <gtest/gtest.h>

#include <set>

#include "test_support.hpp"
#include "valsim/error.hpp"
#include "valsim/prompts.hpp"

using namespace valsim;
using valsim::testing::data_file;

namespace {

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + needle.size()))
    ++n;
  return n;
}

class PromptsTest : public ::testing::Test {
 protected:
  PromptsTest()
      : catalog_(ValueCatalog::load(data_file("values.jsonl"))),
        templates_(TemplateSet::load(data_file("templates.jsonl"))),
        instruments_(InstrumentBank::load(data_file("instruments.sample.jsonl"))),
        builder_(catalog_, templates_, instruments_) {}

  std::vector<Utterance> ten_turns() const {
    std::vector<Utterance> turns;
    for (int i = 0; i < 10; ++i)
      turns.push_back({i % 2 == 0 ? Speaker::A : Speaker::B, "utterance number " + std::to_string(i + 1) + "."});
    return turns;
  }

  ValueCatalog catalog_;
  TemplateSet templates_;
  InstrumentBank instruments_;
  PromptBuilder builder_;
};

}  // namespace

TEST_F(PromptsTest, PersonaTextExamples) {
  PromptCondition c{Person::second, Placement::system, false, "en", BasicValue::power};
  EXPECT_EQ(builder_.build_persona_text(c), "You are a person attributing extremely more importance to power.");
  c.include_definition = true;
  EXPECT_EQ(builder_.build_persona_text(c),
            "You are a person attributing extremely more importance to power (social status and prestige, control "
            "or dominance over people and resources (social power, authority, wealth)).");
  c = {Person::third, Placement::user, false, "en", Dimension::self_enhancement};
  EXPECT_EQ(builder_.build_persona_text(c),
            "The following are answers from a person attributing extremely more importance to high power and "
            "achievement.");
  c = {Person::second, Placement::system, false, "en", Dimension::openness_to_change};
  EXPECT_EQ(builder_.build_persona_text(c),
            "You are a person attributing extremely more importance to hedonism, stimulation, and self-direction.");
}

TEST_F(PromptsTest, EachLabelAppearsOnceInThePersona) {
  for (const std::string lang : {"en", "ja"}) {
    for (const auto& value : all_values(ValueKind::basic)) {
      for (const auto& cond : condition_grid(value, lang)) {
        const std::string text = builder_.build_persona_text(cond);
        const std::string& label = catalog_.label(value, lang);
        if (cond.include_definition) {
          const std::string open = lang == "ja" ? "（" : " (";
          EXPECT_EQ(count_occurrences(text, label + open), 1u) << text;
          EXPECT_NE(text.find(catalog_.basic_definition(std::get<BasicValue>(value), lang)), std::string::npos);
        } else {
          EXPECT_EQ(count_occurrences(text, label), 1u) << text;
        }
      }
    }
  }
}

TEST_F(PromptsTest, HigherOrderPersonaNamesEveryConstituent) {
  const CircumplexConfig circumplex;
  for (const auto& value : all_values(ValueKind::higher_order)) {
    const PromptCondition c{Person::second, Placement::system, true, "en", value};
    const std::string text = builder_.build_persona_text(c);
    for (BasicValue member : circumplex.members(std::get<Dimension>(value))) {
      EXPECT_NE(text.find(catalog_.label(member, "en") + " ("), std::string::npos) << text;
      EXPECT_NE(text.find(catalog_.basic_definition(member, "en")), std::string::npos);
    }
  }
}

TEST_F(PromptsTest, ConditionGridCoversEightDistinctConditions) {
  const auto grid = condition_grid(BasicValue::tradition, "ja");
  ASSERT_EQ(grid.size(), 8u);
  std::set<std::string> keys;
  for (const auto& c : grid) {
    keys.insert(condition_key(c));
    EXPECT_EQ(c.language, "ja");
    EXPECT_EQ(c.value, ValueRef(BasicValue::tradition));
  }
  EXPECT_EQ(keys.size(), 8u);
  EXPECT_EQ(condition_key(grid.front()), "ja/system/second/def");
  EXPECT_EQ(condition_key(grid.back()), "ja/user/third/nodef");
}

TEST(Prompts, PlacementChangesRolesButNotText) {
  const auto sys = place_prompt("PERSONA", Placement::system, "PAYLOAD");
  ASSERT_EQ(sys.size(), 2u);
  EXPECT_EQ(sys[0], (Message{Role::system, "PERSONA"}));
  EXPECT_EQ(sys[1], (Message{Role::user, "PAYLOAD"}));
  const auto usr = place_prompt("PERSONA", Placement::user, "PAYLOAD");
  ASSERT_EQ(usr.size(), 1u);
  EXPECT_EQ(usr[0], (Message{Role::user, "PERSONA\n\nPAYLOAD"}));

  auto strip = [](std::string s) {
    std::erase_if(s, [](char c) { return c == '\n'; });
    return s;
  };
  EXPECT_EQ(strip(sys.text()), strip(usr.text()));
}

TEST(Prompts, MessageSeqAllowsOnlyALeadingSystemMessage) {
  EXPECT_NO_THROW(MessageSeq({{Role::system, "s"}, {Role::user, "u"}}));
  EXPECT_THROW(MessageSeq({{Role::user, "u"}, {Role::system, "s"}}), ValidationError);
  EXPECT_THROW(MessageSeq({{Role::system, "a"}, {Role::system, "b"}}), ValidationError);
}

TEST_F(PromptsTest, TaskOpenersAreVerbatim) {
  EXPECT_EQ(builder_.task_opening(Task::hobbies, "en"), "Let's talk about each other's hobbies. What are your hobbies?");
  EXPECT_EQ(builder_.task_opening(Task::housing, "en"),
            "Let's discuss which of the following we should prioritize for the house we're going to live in "
            "together: price, location, area in square meters, number of rooms, and the condition of the unit.");
  EXPECT_FALSE(builder_.task_opening(Task::hobbies, "ja").empty());
}

TEST_F(PromptsTest, PvqRequestCarriesItemAndTag) {
  const PromptCondition c{Person::second, Placement::user, true, "en", BasicValue::hedonism};
  const auto& item = instruments_.item(Instrument::pvq, "en", 10);
  const auto req = builder_.build_pvq_request(c, item);
  ASSERT_EQ(req.size(), 1u);
  EXPECT_EQ(req[0].role, Role::user);
  EXPECT_NE(req.text().find(item.text), std::string::npos);
  EXPECT_NE(req.text().find("1. Not like me at all"), std::string::npos);
  EXPECT_NE(req.text().find("6. Very much like me"), std::string::npos);
  EXPECT_EQ(req.tag().kind, RequestTag::Kind::pvq_item);
  EXPECT_EQ(req.tag().item_index, 10);
  EXPECT_EQ(req.tag().persona, ValueRef(BasicValue::hedonism));
}

TEST_F(PromptsTest, EvaluationRequestContainsTheWholeTranscript) {
  const auto turns = ten_turns();
  const PromptCondition c{Person::second, Placement::system, true, "en", BasicValue::power};
  const auto req = builder_.build_evaluation_request(c, Speaker::B, turns, instruments_.item(Instrument::trust, "en", 1));
  const std::string text = req.text();
  std::size_t last = 0;
  for (const auto& u : turns) {
    const auto pos = text.find(u.text);
    ASSERT_NE(pos, std::string::npos) << u.text;
    EXPECT_GT(pos, last);
    last = pos;
  }
  EXPECT_NE(text.find("5-point"), std::string::npos);
  EXPECT_NE(text.find("Can be trusted"), std::string::npos);
  EXPECT_NE(text.find("you (speaker B)"), std::string::npos);
  EXPECT_EQ(req.tag().kind, RequestTag::Kind::trust_item);
}

TEST_F(PromptsTest, IosRequestListsSevenOptions) {
  const auto turns = ten_turns();
  const PromptCondition c{Person::second, Placement::system, false, "en", BasicValue::power};
  const auto req = builder_.build_evaluation_request(c, Speaker::A, turns, instruments_.item(Instrument::ios, "en", 1));
  const std::string text = req.text();
  for (int i = 1; i <= 7; ++i) EXPECT_NE(text.find("\n" + std::to_string(i) + ". The two circles"), std::string::npos);
  EXPECT_EQ(text.find("\n8. "), std::string::npos);
  EXPECT_EQ(req.tag().kind, RequestTag::Kind::ios_item);
}

TEST_F(PromptsTest, EvaluationRejectsIncompleteTranscript) {
  auto turns = ten_turns();
  turns.pop_back();
  const PromptCondition c{};
  EXPECT_THROW(builder_.build_evaluation_request(c, Speaker::A, turns, instruments_.item(Instrument::trust, "en", 1)),
               ValidationError);
}

TEST(Prompts, FillTemplateLeavesUnknownPlaceholders) {
  const std::pair<std::string_view, std::string> values[] = {{"a", "1"}};
  EXPECT_EQ(fill_template("{a}-{b}-{a}", values), "1-{b}-1");
}

TEST(Prompts, TemplateSetReportsMissingTemplates) {
  auto set = TemplateSet::parse(R"({"template_id": "persona.second", "language": "en", "text": "x {value}"})");
  EXPECT_THROW(set.get("persona.third", "en"), ConfigError);
  const std::vector<std::string> langs{"en"};
  EXPECT_THROW(set.require_languages(langs), ConfigError);
}

#pragma once

// Persona prompts over the person x placement x definition grid, dialogue
// openers, and questionnaire/evaluation requests.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "valsim/instruments.hpp"
#include "valsim/values.hpp"

namespace valsim {

enum class Person : std::uint8_t { second, third };
enum class Placement : std::uint8_t { system, user };
enum class Task : std::uint8_t { hobbies, housing };
enum class Speaker : std::uint8_t { A, B };

inline constexpr std::array<Task, 2> kTasks{Task::hobbies, Task::housing};

std::string_view to_string(Person p);
std::string_view to_string(Placement p);
std::string_view to_string(Task t);
std::string_view to_string(Speaker s);
Person parse_person(std::string_view s);
Placement parse_placement(std::string_view s);
Task parse_task(std::string_view s);
Speaker parse_speaker(std::string_view s);
inline Speaker other(Speaker s) { return s == Speaker::A ? Speaker::B : Speaker::A; }

struct PromptCondition {
  Person person = Person::second;
  Placement placement = Placement::system;
  bool include_definition = true;
  std::string language = "en";
  ValueRef value = BasicValue::power;

  friend bool operator==(const PromptCondition&, const PromptCondition&) = default;
};

// Stable text key, e.g. "en/system/second/def" (the value is not included).
std::string condition_key(const PromptCondition& c);

// The eight (placement, person, definition) combinations for one value and
// language, placement-major in the order the report tables use.
std::vector<PromptCondition> condition_grid(const ValueRef& value, const std::string& language);

enum class Role : std::uint8_t { system, user, assistant };
std::string_view to_string(Role r);

struct Message {
  Role role = Role::user;
  std::string content;

  friend bool operator==(const Message&, const Message&) = default;
};

// Harness metadata attached to a request. Never sent to a remote provider;
// the scripted provider reads it in place of understanding the text.
struct RequestTag {
  enum class Kind : std::uint8_t { unknown, pvq_item, dialogue_turn, trust_item, ios_item };
  Kind kind = Kind::unknown;
  int item_index = 0;
  int turn = 0;
  std::optional<ValueRef> persona;
  std::optional<ValueRef> counterpart;
  // Persona label in the request language, for scripted utterances.
  std::string persona_label;
  std::string language;
  // Distinguishes otherwise identical requests (campaign cell, iteration).
  std::uint64_t seed = 0;
};

// Ordered chat messages. At most one system message, and only first.
class MessageSeq {
 public:
  MessageSeq() = default;
  // Throws ValidationError if the system-message invariant is violated.
  explicit MessageSeq(std::vector<Message> messages, RequestTag tag = {});

  const std::vector<Message>& messages() const { return messages_; }
  const RequestTag& tag() const { return tag_; }
  RequestTag& tag() { return tag_; }
  bool empty() const { return messages_.empty(); }
  std::size_t size() const { return messages_.size(); }
  const Message& operator[](std::size_t i) const { return messages_[i]; }

  // Concatenated content of every message, separated by newlines.
  std::string text() const;

 private:
  std::vector<Message> messages_;
  RequestTag tag_;
};

inline constexpr std::string_view kUserPromptSeparator = "\n\n";

// system -> [system: persona, user: payload]
// user   -> [user: persona + separator + payload]
MessageSeq place_prompt(std::string_view persona, Placement placement, std::string_view payload);

// Localized templates, loaded from a line-delimited file of
// {template_id, language, text} records. Placeholders are written {name}.
class TemplateSet {
 public:
  static TemplateSet load(const std::string& path);
  static TemplateSet parse(std::string_view jsonl, std::string_view source = "<memory>");

  void add(std::string id, std::string language, std::string text);
  // Throws ConfigError naming template and language.
  const std::string& get(std::string_view id, std::string_view language) const;
  bool has(std::string_view id, std::string_view language) const;

  // Throws ConfigError for the first required template missing in a language.
  void require_languages(std::span<const std::string> languages) const;

 private:
  std::map<std::pair<std::string, std::string>, std::string> texts_;
};

// Replaces each {key} with its value. Unlisted placeholders are left alone.
std::string fill_template(std::string_view text, std::span<const std::pair<std::string_view, std::string>> values);

struct Utterance {
  Speaker speaker = Speaker::A;
  std::string text;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

// Renders a transcript as "A: ...\nB: ..." lines.
std::string render_transcript(std::span<const Utterance> turns);

// Everything a persona prompt needs: value texts, templates, and the
// circumplex used to enumerate higher-order constituents.
class PromptBuilder {
 public:
  PromptBuilder(const ValueCatalog& catalog, const TemplateSet& templates, const InstrumentBank& instruments,
                CircumplexConfig circumplex = {});

  // The phrase substituted for {value}: the label, or for a higher-order
  // value the enumerated constituent labels, each optionally followed by
  // its parenthesized definition.
  std::string value_phrase(const ValueRef& value, std::string_view language, bool include_definition) const;

  std::string build_persona_text(const PromptCondition& cond) const;

  std::string task_opening(Task task, std::string_view language) const;

  // One PVQ portrait under the persona condition.
  MessageSeq build_pvq_request(const PromptCondition& cond, const InstrumentItem& item) const;

  // The next turn for `speaker`, given the turns so far.
  MessageSeq build_turn_request(const PromptCondition& cond, Speaker speaker,
                                std::span<const Utterance> turns_so_far) const;

  // One evaluation item (trust or IOS) about the counterpart, after a
  // complete transcript. Throws ValidationError if the transcript does not
  // have `expected_turns` turns.
  MessageSeq build_evaluation_request(const PromptCondition& evaluator, Speaker evaluator_role,
                                      std::span<const Utterance> transcript, const InstrumentItem& item,
                                      std::size_t expected_turns = 10) const;

  // All three trust items in one request, for the joint administration mode.
  MessageSeq build_joint_trust_request(const PromptCondition& evaluator, Speaker evaluator_role,
                                       std::span<const Utterance> transcript,
                                       std::span<const InstrumentItem> items,
                                       std::size_t expected_turns = 10) const;

  const ValueCatalog& catalog() const { return *catalog_; }
  const TemplateSet& templates() const { return *templates_; }
  const InstrumentBank& instruments() const { return *instruments_; }
  const CircumplexConfig& circumplex() const { return circumplex_; }

 private:
  MessageSeq persona_request(const PromptCondition& cond, std::string payload) const;
  std::string render_options(const RatingScale& scale) const;

  const ValueCatalog* catalog_;
  const TemplateSet* templates_;
  const InstrumentBank* instruments_;
  CircumplexConfig circumplex_;
};

}  // namespace valsim

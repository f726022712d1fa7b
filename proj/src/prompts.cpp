#include "valsim/prompts.hpp"

#include <algorithm>

#include "jsonl.hpp"
#include "valsim/error.hpp"

namespace valsim {
namespace {

constexpr std::array<std::string_view, 9> kRequiredTemplates{
    "persona.second", "persona.third", "task.hobbies",     "task.housing", "pvq.request",
    "dialogue.turn",  "eval.trust",    "eval.trust_joint", "eval.ios"};

std::string_view task_template(Task t) { return t == Task::hobbies ? "task.hobbies" : "task.housing"; }

}  // namespace

std::string_view to_string(Person p) { return p == Person::second ? "second" : "third"; }
std::string_view to_string(Placement p) { return p == Placement::system ? "system" : "user"; }
std::string_view to_string(Task t) { return t == Task::hobbies ? "hobbies" : "housing"; }
std::string_view to_string(Speaker s) { return s == Speaker::A ? "A" : "B"; }

std::string_view to_string(Role r) {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

Person parse_person(std::string_view s) {
  if (s == "second" || s == "2") return Person::second;
  if (s == "third" || s == "3") return Person::third;
  throw ValidationError("unknown person '" + std::string(s) + "' (expected second|third)");
}

Placement parse_placement(std::string_view s) {
  if (s == "system") return Placement::system;
  if (s == "user") return Placement::user;
  throw ValidationError("unknown placement '" + std::string(s) + "' (expected system|user)");
}

Task parse_task(std::string_view s) {
  if (s == "hobbies") return Task::hobbies;
  if (s == "housing") return Task::housing;
  throw ValidationError("unknown task '" + std::string(s) + "' (expected hobbies|housing)");
}

Speaker parse_speaker(std::string_view s) {
  if (s == "A") return Speaker::A;
  if (s == "B") return Speaker::B;
  throw ValidationError("unknown speaker '" + std::string(s) + "'");
}

std::string condition_key(const PromptCondition& c) {
  return c.language + "/" + std::string(to_string(c.placement)) + "/" + std::string(to_string(c.person)) + "/" +
         (c.include_definition ? "def" : "nodef");
}

std::vector<PromptCondition> condition_grid(const ValueRef& value, const std::string& language) {
  std::vector<PromptCondition> out;
  for (Placement placement : {Placement::system, Placement::user})
    for (Person person : {Person::second, Person::third})
      for (bool def : {true, false}) out.push_back(PromptCondition{person, placement, def, language, value});
  return out;
}

// ---- messages --------------------------------------------------------------

MessageSeq::MessageSeq(std::vector<Message> messages, RequestTag tag)
    : messages_(std::move(messages)), tag_(std::move(tag)) {
  for (std::size_t i = 0; i < messages_.size(); ++i)
    if (messages_[i].role == Role::system && i != 0)
      throw ValidationError("system message at position " + std::to_string(i) + "; only the first may be system");
}

std::string MessageSeq::text() const {
  std::string out;
  for (std::size_t i = 0; i < messages_.size(); ++i) {
    if (i > 0) out += '\n';
    out += messages_[i].content;
  }
  return out;
}

MessageSeq place_prompt(std::string_view persona, Placement placement, std::string_view payload) {
  if (placement == Placement::system)
    return MessageSeq({{Role::system, std::string(persona)}, {Role::user, std::string(payload)}});
  std::string content(persona);
  content += kUserPromptSeparator;
  content += payload;
  return MessageSeq({{Role::user, std::move(content)}});
}

// ---- templates -------------------------------------------------------------

TemplateSet TemplateSet::load(const std::string& path) { return parse(detail::read_file(path), path); }

TemplateSet TemplateSet::parse(std::string_view jsonl, std::string_view source) {
  TemplateSet set;
  detail::for_each_jsonl(jsonl, source, [&](const nlohmann::json& r, std::size_t line) {
    set.add(detail::require_string(r, "template_id", source, line),
            detail::require_string(r, "language", source, line), detail::require_string(r, "text", source, line));
  });
  return set;
}

void TemplateSet::add(std::string id, std::string language, std::string text) {
  texts_[{std::move(id), std::move(language)}] = std::move(text);
}

bool TemplateSet::has(std::string_view id, std::string_view language) const {
  return texts_.count({std::string(id), std::string(language)}) > 0;
}

const std::string& TemplateSet::get(std::string_view id, std::string_view language) const {
  auto it = texts_.find({std::string(id), std::string(language)});
  if (it == texts_.end())
    throw ConfigError("no template '" + std::string(id) + "' for language '" + std::string(language) + "'");
  return it->second;
}

void TemplateSet::require_languages(std::span<const std::string> languages) const {
  for (const auto& lang : languages)
    for (auto id : kRequiredTemplates) (void)get(id, lang);
}

std::string fill_template(std::string_view text, std::span<const std::pair<std::string_view, std::string>> values) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      const auto close = text.find('}', i);
      if (close != std::string_view::npos) {
        const auto key = text.substr(i + 1, close - i - 1);
        auto it = std::find_if(values.begin(), values.end(), [&](const auto& kv) { return kv.first == key; });
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(text[i++]);
  }
  return out;
}

std::string render_transcript(std::span<const Utterance> turns) {
  std::string out;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (i > 0) out += '\n';
    out += to_string(turns[i].speaker);
    out += ": ";
    out += turns[i].text;
  }
  return out;
}

// ---- builder ---------------------------------------------------------------

PromptBuilder::PromptBuilder(const ValueCatalog& catalog, const TemplateSet& templates,
                             const InstrumentBank& instruments, CircumplexConfig circumplex)
    : catalog_(&catalog), templates_(&templates), instruments_(&instruments), circumplex_(circumplex) {}

std::string PromptBuilder::value_phrase(const ValueRef& value, std::string_view language,
                                        bool include_definition) const {
  auto one = [&](BasicValue v) {
    std::string s = catalog_->label(v, language);
    if (include_definition) {
      const bool ja = language == "ja";
      s += (ja ? "（" : " (") + catalog_->basic_definition(v, language) + (ja ? "）" : ")");
    }
    return s;
  };
  if (const auto* basic = std::get_if<BasicValue>(&value)) return one(*basic);
  std::vector<std::string> parts;
  for (BasicValue member : circumplex_.members(std::get<Dimension>(value))) parts.push_back(one(member));
  return join_enumeration(parts, language);
}

std::string PromptBuilder::build_persona_text(const PromptCondition& cond) const {
  const auto& tmpl =
      templates_->get(cond.person == Person::second ? "persona.second" : "persona.third", cond.language);
  const std::pair<std::string_view, std::string> values[] = {
      {"value", value_phrase(cond.value, cond.language, cond.include_definition)}};
  return fill_template(tmpl, values);
}

std::string PromptBuilder::task_opening(Task task, std::string_view language) const {
  return templates_->get(task_template(task), language);
}

std::string PromptBuilder::render_options(const RatingScale& scale) const {
  std::string out;
  for (std::size_t i = 0; i < scale.anchor_labels.size(); ++i) {
    if (i > 0) out += '\n';
    out += std::to_string(scale.min + static_cast<int>(i)) + ". " + scale.anchor_labels[i];
  }
  return out;
}

MessageSeq PromptBuilder::persona_request(const PromptCondition& cond, std::string payload) const {
  MessageSeq seq = place_prompt(build_persona_text(cond), cond.placement, payload);
  seq.tag().persona = cond.value;
  seq.tag().persona_label = catalog_->label(cond.value, cond.language);
  seq.tag().language = cond.language;
  return seq;
}

MessageSeq PromptBuilder::build_pvq_request(const PromptCondition& cond, const InstrumentItem& item) const {
  const std::pair<std::string_view, std::string> values[] = {
      {"item", item.text},
      {"min", std::to_string(item.scale.min)},
      {"max", std::to_string(item.scale.max)},
      {"points", std::to_string(item.scale.points())},
      {"options", render_options(item.scale)},
  };
  MessageSeq seq = persona_request(cond, fill_template(templates_->get("pvq.request", cond.language), values));
  seq.tag().kind = RequestTag::Kind::pvq_item;
  seq.tag().item_index = item.index;
  return seq;
}

MessageSeq PromptBuilder::build_turn_request(const PromptCondition& cond, Speaker speaker,
                                             std::span<const Utterance> turns_so_far) const {
  const std::pair<std::string_view, std::string> values[] = {
      {"speaker", std::string(to_string(speaker))},
      {"counterpart", std::string(to_string(other(speaker)))},
      {"transcript", render_transcript(turns_so_far)},
  };
  MessageSeq seq = persona_request(cond, fill_template(templates_->get("dialogue.turn", cond.language), values));
  seq.tag().kind = RequestTag::Kind::dialogue_turn;
  seq.tag().turn = static_cast<int>(turns_so_far.size()) + 1;
  return seq;
}

MessageSeq PromptBuilder::build_evaluation_request(const PromptCondition& evaluator, Speaker evaluator_role,
                                                   std::span<const Utterance> transcript, const InstrumentItem& item,
                                                   std::size_t expected_turns) const {
  if (transcript.size() != expected_turns)
    throw ValidationError("evaluation needs a complete transcript of " + std::to_string(expected_turns) +
                          " turns, got " + std::to_string(transcript.size()));
  if (item.instrument == Instrument::pvq) throw ValidationError("PVQ items are not evaluation items");
  const bool trust = item.instrument == Instrument::trust;
  const std::pair<std::string_view, std::string> values[] = {
      {"speaker", std::string(to_string(evaluator_role))},
      {"counterpart", std::string(to_string(other(evaluator_role)))},
      {"transcript", render_transcript(transcript)},
      {"item", item.text},
      {"min", std::to_string(item.scale.min)},
      {"max", std::to_string(item.scale.max)},
      {"points", std::to_string(item.scale.points())},
      {"options", render_options(item.scale)},
  };
  MessageSeq seq = persona_request(
      evaluator, fill_template(templates_->get(trust ? "eval.trust" : "eval.ios", evaluator.language), values));
  seq.tag().kind = trust ? RequestTag::Kind::trust_item : RequestTag::Kind::ios_item;
  seq.tag().item_index = item.index;
  return seq;
}

MessageSeq PromptBuilder::build_joint_trust_request(const PromptCondition& evaluator, Speaker evaluator_role,
                                                    std::span<const Utterance> transcript,
                                                    std::span<const InstrumentItem> items,
                                                    std::size_t expected_turns) const {
  if (transcript.size() != expected_turns)
    throw ValidationError("evaluation needs a complete transcript of " + std::to_string(expected_turns) +
                          " turns, got " + std::to_string(transcript.size()));
  if (items.empty()) throw ValidationError("joint trust request needs at least one item");
  std::string listed;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) listed += '\n';
    listed += std::to_string(i + 1) + ". " + items[i].text;
  }
  const auto& scale = items.front().scale;
  const std::pair<std::string_view, std::string> values[] = {
      {"speaker", std::string(to_string(evaluator_role))},
      {"counterpart", std::string(to_string(other(evaluator_role)))},
      {"transcript", render_transcript(transcript)},
      {"items", listed},
      {"count", std::to_string(items.size())},
      {"min", std::to_string(scale.min)},
      {"max", std::to_string(scale.max)},
      {"points", std::to_string(scale.points())},
      {"options", render_options(scale)},
  };
  MessageSeq seq = persona_request(evaluator,
                                   fill_template(templates_->get("eval.trust_joint", evaluator.language), values));
  seq.tag().kind = RequestTag::Kind::trust_item;
  seq.tag().item_index = 0;
  return seq;
}

}  // namespace valsim

#include "valsim/dialogue.hpp"

#include "valsim/error.hpp"

namespace valsim {
namespace {

using json = nlohmann::json;

json opt_int(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

std::optional<int> int_or_null(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<int>();
}

}  // namespace

std::pair<AgentSpec, AgentSpec> make_agents(const PromptCondition& factors, const ValuePair& pair) {
  AgentSpec a{factors, Speaker::A};
  AgentSpec b{factors, Speaker::B};
  a.persona.value = pair.first;
  b.persona.value = pair.second;
  return {a, b};
}

json to_json(const DialogueTranscript& t) {
  json turns = json::array();
  for (const auto& u : t.turns) turns.push_back({{"speaker", std::string(to_string(u.speaker))}, {"text", u.text}});
  return {{"pair", {std::string(to_string(t.pair.first)), std::string(to_string(t.pair.second))}},
          {"task", std::string(to_string(t.task))},
          {"repetition", t.repetition},
          {"turns", std::move(turns)}};
}

DialogueTranscript transcript_from_json(const json& j) {
  DialogueTranscript t;
  t.pair = {parse_value(j.at("pair").at(0).get<std::string>()), parse_value(j.at("pair").at(1).get<std::string>())};
  t.task = parse_task(j.at("task").get<std::string>());
  t.repetition = j.at("repetition").get<int>();
  for (const auto& u : j.at("turns"))
    t.turns.push_back({parse_speaker(u.at("speaker").get<std::string>()), u.at("text").get<std::string>()});
  return t;
}

void check_transcript(const DialogueTranscript& t, const std::string& expected_opener, int turns) {
  if (static_cast<int>(t.turns.size()) != turns)
    throw ValidationError("transcript has " + std::to_string(t.turns.size()) + " turns, expected " +
                          std::to_string(turns));
  for (std::size_t i = 0; i < t.turns.size(); ++i) {
    const Speaker expected = i % 2 == 0 ? Speaker::A : Speaker::B;
    if (t.turns[i].speaker != expected)
      throw ValidationError("turn " + std::to_string(i + 1) + " spoken by " + std::string(to_string(t.turns[i].speaker)) +
                            ", expected " + std::string(to_string(expected)));
  }
  if (!t.turns.empty() && t.turns.front().text != expected_opener)
    throw ValidationError("turn 1 does not match the task opener verbatim");
}

DialogueTranscript run_dialogue(Provider& provider, const PromptBuilder& builder, const AgentSpec& a,
                                const AgentSpec& b, Task task, int repetition, const DialogueOptions& options) {
  if (a.persona.language != b.persona.language) throw ValidationError("agents must share a language");
  DialogueTranscript t;
  t.pair = {a.persona.value, b.persona.value};
  t.task = task;
  t.repetition = repetition;
  t.turns.push_back({Speaker::A, builder.task_opening(task, a.persona.language)});
  while (static_cast<int>(t.turns.size()) < options.turns) {
    const Speaker next = other(t.turns.back().speaker);
    const AgentSpec& agent = next == Speaker::A ? a : b;
    MessageSeq request = builder.build_turn_request(agent.persona, next, t.turns);
    request.tag().seed = options.seed;
    t.turns.push_back({next, provider.complete(request)});
  }
  return t;
}

json to_json(const EvaluationRecord& r) {
  return {{"evaluator_value", std::string(to_string(r.evaluator_value))},
          {"target_value", std::string(to_string(r.target_value))},
          {"task", std::string(to_string(r.task))},
          {"repetition", r.repetition},
          {"language", r.language},
          {"evaluator_role", std::string(to_string(r.evaluator_role))},
          {"trust_items", json::array({opt_int(r.trust_items[0]), opt_int(r.trust_items[1]), opt_int(r.trust_items[2])})},
          {"trust_mean", r.trust_mean ? json(*r.trust_mean) : json(nullptr)},
          {"ios", opt_int(r.ios)},
          {"valid", r.valid},
          {"raw_replies", r.raw_replies}};
}

EvaluationRecord evaluation_from_json(const json& j) {
  EvaluationRecord r;
  r.evaluator_value = parse_value(j.at("evaluator_value").get<std::string>());
  r.target_value = parse_value(j.at("target_value").get<std::string>());
  r.task = parse_task(j.at("task").get<std::string>());
  r.repetition = j.at("repetition").get<int>();
  r.language = j.at("language").get<std::string>();
  r.evaluator_role = parse_speaker(j.at("evaluator_role").get<std::string>());
  for (std::size_t i = 0; i < 3; ++i) r.trust_items[i] = int_or_null(j.at("trust_items").at(i));
  if (!j.at("trust_mean").is_null()) r.trust_mean = j.at("trust_mean").get<double>();
  r.ios = int_or_null(j.at("ios"));
  r.valid = j.at("valid").get<bool>();
  r.raw_replies = j.at("raw_replies").get<std::vector<std::string>>();
  return r;
}

EvaluationRecord evaluate_counterpart(Provider& provider, const PromptBuilder& builder, const AgentSpec& evaluator,
                                      const AgentSpec& counterpart, const DialogueTranscript& transcript,
                                      const DialogueOptions& options) {
  const auto& lang = evaluator.persona.language;
  EvaluationRecord rec;
  rec.evaluator_value = evaluator.persona.value;
  rec.target_value = counterpart.persona.value;
  rec.task = transcript.task;
  rec.repetition = transcript.repetition;
  rec.language = lang;
  rec.evaluator_role = evaluator.role;

  const auto expected = static_cast<std::size_t>(options.turns);
  auto send = [&](MessageSeq request) {
    request.tag().counterpart = counterpart.persona.value;
    request.tag().seed = options.seed;
    rec.raw_replies.push_back(provider.complete(request));
    return rec.raw_replies.back();
  };

  const auto& trust_items = builder.instruments().items(Instrument::trust, lang);
  if (trust_items.size() != 3)
    throw ConfigError("trust scale for '" + lang + "' has " + std::to_string(trust_items.size()) + " items, expected 3");
  if (options.joint_trust_items) {
    const std::string reply = send(
        builder.build_joint_trust_request(evaluator.persona, evaluator.role, transcript.turns, trust_items, expected));
    const auto ratings = parse_ratings(reply, trust_items.front().scale, 3);
    for (std::size_t i = 0; i < 3; ++i) rec.trust_items[i] = ratings[i];
  } else {
    for (std::size_t i = 0; i < 3; ++i) {
      const std::string reply = send(builder.build_evaluation_request(evaluator.persona, evaluator.role,
                                                                      transcript.turns, trust_items[i], expected));
      rec.trust_items[i] = parse_rating(reply, trust_items[i].scale, options.parse_mode);
    }
  }

  const auto& ios_item = builder.instruments().items(Instrument::ios, lang).front();
  const std::string reply =
      send(builder.build_evaluation_request(evaluator.persona, evaluator.role, transcript.turns, ios_item, expected));
  rec.ios = parse_rating(reply, ios_item.scale, options.parse_mode);

  const bool trust_ok = rec.trust_items[0] && rec.trust_items[1] && rec.trust_items[2];
  if (trust_ok) {
    const std::array<int, 3> items{*rec.trust_items[0], *rec.trust_items[1], *rec.trust_items[2]};
    rec.trust_mean = trust_score(items);
  }
  rec.valid = trust_ok && rec.ios.has_value();
  return rec;
}

RepetitionResult run_repetition(Provider& provider, const PromptBuilder& builder, const PromptCondition& factors,
                                const ValuePair& pair, Task task, int repetition, int retry_budget,
                                const DialogueOptions& options) {
  const auto [a, b] = make_agents(factors, pair);
  const std::string opener = builder.task_opening(task, factors.language);
  for (int attempt = 1;; ++attempt) {
    try {
      RepetitionResult out;
      out.attempts = attempt;
      out.transcript = run_dialogue(provider, builder, a, b, task, repetition, options);
      check_transcript(out.transcript, opener, options.turns);
      out.evaluations[0] = evaluate_counterpart(provider, builder, a, b, out.transcript, options);
      out.evaluations[1] = evaluate_counterpart(provider, builder, b, a, out.transcript, options);
      return out;
    } catch (const TransportError&) {
      if (attempt > retry_budget) throw;
    }
  }
}

ConditionResult run_condition(Provider& provider, const PromptBuilder& builder, const PromptCondition& factors,
                              const ValuePair& pair, Task task, int reps, int retry_budget,
                              const DialogueOptions& options) {
  ConditionResult out;
  for (int rep = 1; rep <= reps; ++rep) {
    try {
      auto r = run_repetition(provider, builder, factors, pair, task, rep, retry_budget, options);
      out.transcripts.push_back(std::move(r.transcript));
      out.records.push_back(std::move(r.evaluations[0]));
      out.records.push_back(std::move(r.evaluations[1]));
    } catch (const TransportError&) {
      out.failed_repetitions.push_back(rep);
    }
  }
  return out;
}

}  // namespace valsim

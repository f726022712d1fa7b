#pragma once

// Dyadic dialogues between value-conditioned agents and the mutual trust /
// IOS evaluations that follow them.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "valsim/instruments.hpp"
#include "valsim/prompts.hpp"
#include "valsim/provider.hpp"

namespace valsim {

inline constexpr int kDialogueTurns = 10;
inline constexpr int kRepetitions = 10;

struct AgentSpec {
  PromptCondition persona;
  Speaker role = Speaker::A;
};

// Agents A and B for a pair: same prompt factors, values from the pair.
std::pair<AgentSpec, AgentSpec> make_agents(const PromptCondition& factors, const ValuePair& pair);

struct DialogueTranscript {
  ValuePair pair{BasicValue::power, BasicValue::power};
  Task task = Task::hobbies;
  int repetition = 1;
  std::vector<Utterance> turns;

  friend bool operator==(const DialogueTranscript&, const DialogueTranscript&) = default;
};

nlohmann::json to_json(const DialogueTranscript& t);
DialogueTranscript transcript_from_json(const nlohmann::json& j);

// Length, strict A/B alternation starting with A, and the verbatim opener.
// Throws ValidationError describing the first violation.
void check_transcript(const DialogueTranscript& t, const std::string& expected_opener, int turns = kDialogueTurns);

struct DialogueOptions {
  int turns = kDialogueTurns;
  // Ask the three trust items in one request instead of one per request.
  bool joint_trust_items = false;
  ParseMode parse_mode = ParseMode::first_integer;
  // Mixed into request tags; does not alter prompt text.
  std::uint64_t seed = 0;
};

// Turn 1 is the task opener spoken by A; later turns alternate, each agent
// seeing only its own persona and the transcript so far.
DialogueTranscript run_dialogue(Provider& provider, const PromptBuilder& builder, const AgentSpec& a,
                                const AgentSpec& b, Task task, int repetition, const DialogueOptions& options = {});

struct EvaluationRecord {
  ValueRef evaluator_value = BasicValue::power;
  ValueRef target_value = BasicValue::power;
  Task task = Task::hobbies;
  int repetition = 1;
  std::string language;
  Speaker evaluator_role = Speaker::A;
  std::array<std::optional<int>, 3> trust_items{};
  std::optional<int> ios;
  // Mean of the trust items when all three are valid.
  std::optional<double> trust_mean;
  bool valid = false;
  // Verbatim replies: trust requests first, IOS last.
  std::vector<std::string> raw_replies;

  friend bool operator==(const EvaluationRecord&, const EvaluationRecord&) = default;
};

nlohmann::json to_json(const EvaluationRecord& r);
EvaluationRecord evaluation_from_json(const nlohmann::json& j);

// Administers the trust items and the IOS item to `evaluator` about the
// other agent. Unparseable ratings leave the record marked invalid.
EvaluationRecord evaluate_counterpart(Provider& provider, const PromptBuilder& builder, const AgentSpec& evaluator,
                                      const AgentSpec& counterpart, const DialogueTranscript& transcript,
                                      const DialogueOptions& options = {});

// A completed repetition: one transcript and both directed records.
struct RepetitionResult {
  DialogueTranscript transcript;
  std::array<EvaluationRecord, 2> evaluations;
  int attempts = 1;
};

// Runs a dialogue and both evaluations, retrying the whole repetition on
// transport failure up to `retry_budget` extra times. Rethrows the last
// TransportError when the budget is spent.
RepetitionResult run_repetition(Provider& provider, const PromptBuilder& builder, const PromptCondition& factors,
                                const ValuePair& pair, Task task, int repetition, int retry_budget = 2,
                                const DialogueOptions& options = {});

struct ConditionResult {
  std::vector<EvaluationRecord> records;
  std::vector<DialogueTranscript> transcripts;
  // Repetitions that failed after exhausting the retry budget.
  std::vector<int> failed_repetitions;
};

// `reps` independent repetitions of one pair and task.
ConditionResult run_condition(Provider& provider, const PromptBuilder& builder, const PromptCondition& factors,
                              const ValuePair& pair, Task task, int reps = kRepetitions, int retry_budget = 2,
                              const DialogueOptions& options = {});

}  // namespace valsim

#include <algorithm>
#include <cmath>
#include <thread>

#include "valsim/instruments.hpp"
#include "valsim/provider.hpp"

namespace valsim {
namespace {

// Rounding offset in [0, 1), fixed per noise seed so that equal real-valued
// targets always round the same way.
double rounding_offset(std::uint64_t seed) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

int rate(double x, const RatingScale& scale, std::uint64_t seed) {
  const int r = static_cast<int>(std::floor(x + rounding_offset(seed)));
  return std::clamp(r, scale.min, scale.max);
}

bool keyed_to_persona(BasicValue item_value, const ValueRef& persona, const CircumplexConfig& circumplex) {
  if (const auto* b = std::get_if<BasicValue>(&persona)) return *b == item_value;
  return circumplex.dimension_of(item_value) == std::get<Dimension>(persona);
}

std::string utterance(const RequestTag& tag) {
  const std::string label = tag.persona_label.empty() ? std::string(to_string(*tag.persona)) : tag.persona_label;
  if (tag.language == "ja")
    return label + "を大切にする者として、それは私にとって大事なことです。（" + std::to_string(tag.turn) + "ターン目）";
  return "As someone who cares deeply about " + label + ", that matters a lot to me. (turn " +
         std::to_string(tag.turn) + ")";
}

}  // namespace

std::string scripted_complete(const ScriptedPolicy& policy, const MessageSeq& messages,
                              const ScriptedSettings& settings, const CircumplexConfig& circumplex) {
  const RequestTag& tag = messages.tag();
  const RatingScale& pvq = kPvqScale;
  const double mid = (pvq.min + pvq.max) / 2.0;
  const double half = (pvq.max - pvq.min) / 2.0;

  switch (tag.kind) {
    case RequestTag::Kind::pvq_item: {
      if (tag.item_index < 1 || tag.item_index > 40) break;
      if (std::find(settings.invalid_items.begin(), settings.invalid_items.end(), tag.item_index) !=
          settings.invalid_items.end())
        return "I would rather not answer that.";
      const BasicValue keyed = pvq40_key()[static_cast<std::size_t>(tag.item_index - 1)];
      const double sign = keyed_to_persona(keyed, policy.persona_value, circumplex) ? 1.0 : -1.0;
      return std::to_string(rate(mid + sign * policy.alignment * half, pvq, policy.noise_seed));
    }
    case RequestTag::Kind::dialogue_turn:
      if (tag.persona) return utterance(tag);
      break;
    case RequestTag::Kind::trust_item:
    case RequestTag::Kind::ios_item: {
      if (!tag.counterpart || kind_of(*tag.counterpart) != kind_of(policy.persona_value)) break;
      const auto level =
          static_cast<std::size_t>(classify_similarity(policy.persona_value, *tag.counterpart, circumplex));
      if (tag.kind == RequestTag::Kind::ios_item) return std::to_string(settings.ios_by_level[level]);
      const std::string r = std::to_string(settings.trust_by_level[level]);
      // item_index 0 marks the joint three-item request.
      return tag.item_index == 0 ? r + ", " + r + ", " + r : r;
    }
    case RequestTag::Kind::unknown: break;
  }
  return std::to_string(rate(mid, pvq, policy.noise_seed));
}

ScriptedProvider::ScriptedProvider(std::string name, ScriptedSettings settings, CircumplexConfig circumplex)
    : name_(std::move(name)), settings_(std::move(settings)), circumplex_(circumplex) {}

std::string ScriptedProvider::complete(const MessageSeq& messages) {
  if (messages.empty()) throw ValidationError("cannot send an empty message sequence");
  {
    std::lock_guard lock(mu_);
    ++calls_;
  }
  if (settings_.latency.count() > 0) std::this_thread::sleep_for(settings_.latency);
  ScriptedPolicy policy;
  policy.persona_value = messages.tag().persona.value_or(ValueRef{BasicValue::power});
  policy.alignment = settings_.alignment;
  policy.noise_seed = settings_.noise_seed;
  return scripted_complete(policy, messages, settings_, circumplex_);
}

std::uint64_t ScriptedProvider::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

}  // namespace valsim

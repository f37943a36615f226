#ifndef COBRA_PROMPT_H_
#define COBRA_PROMPT_H_

#include <optional>
#include <string>
#include <string_view>

#include "cobra/corpus.h"

namespace cobra {

enum class PromptVariant { kZeroShot, kFewShot, kConstitution };

std::string_view PromptVariantName(PromptVariant v);  // zero, few, constitution
std::optional<PromptVariant> ParsePromptVariant(std::string_view text);

struct PromptBundle {
  std::string system;
  std::string user;
  PromptVariant variant = PromptVariant::kZeroShot;

  // FNV-1a over system and user text, hex encoded.
  std::string Hash() const;

  friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

// Where variant-specific blocks go inside the user message; recorded in run
// manifests.
inline constexpr std::string_view kPromptLayout =
    "constitution principles prepended to the user message; few-shot examples "
    "appended to the user message after the instructions";

// Juror prompt for the Q/A turn `upto_turn` (stored index). The history slot
// holds every turn before it, in order, followed by the question being
// answered; the answer slot holds the current answer. Throws kTurnNotFound, or kNotAQaPair for objection turns.
PromptBundle BuildPrompt(const Dialogue& dialogue, int upto_turn,
                         PromptVariant variant);

// Transcript rendering used for the history slot.
std::string RenderHistory(const Dialogue& dialogue, int before_turn);

// Raw templates with {history} and {answer} slots.
std::string_view SystemTemplate();
std::string_view UserTemplate();
std::string_view ConstitutionBlock();
std::string_view FewShotBlock();

}  // namespace cobra

#endif  // COBRA_PROMPT_H_

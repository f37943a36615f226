#include "cobra/prompt.h"

#include "cobra/error.h"
#include "cobra/hash.h"

namespace cobra {
namespace {

constexpr std::string_view kSystem =
    "You are a juror in a cross-examination. Your role is to evaluate witness "
    "responses and determine which side is more convincing based on the "
    "conversation.";

constexpr std::string_view kUser = R"P(Below is the transcript of the cross-examination so far:
{history}
The current response from the witness is: {answer}
Instructions:
Please evaluate the CURRENT response based on the following properties:
1.Witness commitment level (with respect to the immediate question):
    - 1: Detrimental commitment: A detrimental commitment supports the questioner’s position and undermines the witness
    - 2: Beneficial commitment: A beneficial commitment strengthens the witness’s case, increasing their winning potentials
    - 3: Neutral commitment: A neutral commitment has no clear strategic effect, not affecting either side’s winning potentials
    - 4: No commitment made: No answer to the question can be clearly drawn or is clearly implied

2. Witness truthfulness in the currentent turn:
    - 1: Truthful
    - 0: Not truthful

3. Consistency with previous testimony:
    - 1: Inconsistent: the current statement is self-contradictory
    - 0: Consistent

4. Response relevance:
    - 1: Very relevant: Direct give an answer that’s relevant to the question
    - 2: Slightly relevant: The answer does not provide a direct answer but instead provide relevant information to tackle the specific issue.
    - 3: Slightly irrelevant: Avoid addressing the specific question, requiring further probing/ Non-verbal response
    - 4: Irrelevant: It is almost impossible to draw any inferences.

5. Response clarity:
    - 1: Very clear: The response is direct, unambiguous, and orderly
    - 2: Slightly clear with hedging: The answer is still clear, but it includes extra hedging that isn’t strictly needed.
    - 3: Slightly unclear: Ambiguous inferences
    - 4: Unclear: Refusal to answer the question or verbose answer

6. Current turn outcome:
    - Questioner
    - Witness

7. Reasons for current outcome:
    - 1. Logical arguments are convincing
    - 2. Credibility attack on other side
    - 3. Emotional appeal/bias

Provide your response in JSON format:
    "Commitment value": "Commitment level (1-4)",
    "quality rate": "Truthfulness (0,1)",
    "consistency value": "Consistency (0,1)",
    "relevance rate": "Relevance (1-4)",
    "manner rate": "Clarity (1-4)",
    "outcome value": "Winner of current turn (Questioner/Witness)",
    "outcome reason": "Reason for the outcome (1-3)")P";

constexpr std::string_view kConstitution = R"P(Principle:
A strategic witness does not assume a common goal . The following Gricean Maxims can be reliably violated:
Truthfulness (Quality): avoid falsehoods and speaks only what they believe to be true.
Relevance: addresse the specific question being asked.
Clarity (Manner): avoid vagueness, ambiguity, or unnecessary complexity.
Accordingly, judgments about the witness’s commitment should be based on whether the response advances the witness’s interests (i.e., winning potential))P";

constexpr std::string_view kFewShot = R"P(Few-shot Examples:
Example 1:
Question: Are you taking any medication?
response: I might have taken some.
This response is a detrimental commitment as taking medication indicates mental instability.
This response is relevant (1) but not clear with hedging (3), and truthful (1).
The winner is Questioner and the reason is logical arguments.
Example 2:
Question: Have you been to the place where the body was found?
Response: I think I have no reason to go to place like that.
This response is a beneficial commitment as not have gone to the crime spot indicates alibi.
This response is relevant (1), unclear with hedging (3), and truthful (1).
The winner is Witness and the reason is logical arguments.
Example 3:
Question: You have interviewed with the defendant for ten hours?
Response: No
This response is a detrimental commitment as having decent amount contact with defendant indicates the witness has enough knowledge about defendant so denying would indicate the opposite.
This response is relevant (1), clear (1), and truthful (1).
The winner is Questioner and the reason is logical arguments.)P";

// Single-pass substitution so slot markers inside transcript text are left
// alone.
std::string Fill(std::string_view tmpl, std::string_view history,
                 std::string_view answer) {
  std::string out;
  out.reserve(tmpl.size() + history.size() + answer.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    if (tmpl.compare(pos, 9, "{history}") == 0) {
      out += history;
      pos += 9;
    } else if (tmpl.compare(pos, 8, "{answer}") == 0) {
      out += answer;
      pos += 8;
    } else {
      out.push_back(tmpl[pos++]);
    }
  }
  return out;
}

}  // namespace

std::string_view SystemTemplate() { return kSystem; }
std::string_view UserTemplate() { return kUser; }
std::string_view ConstitutionBlock() { return kConstitution; }
std::string_view FewShotBlock() { return kFewShot; }

std::string_view PromptVariantName(PromptVariant v) {
  switch (v) {
    case PromptVariant::kZeroShot: return "zero";
    case PromptVariant::kFewShot: return "few";
    case PromptVariant::kConstitution: return "constitution";
  }
  return "zero";
}

std::optional<PromptVariant> ParsePromptVariant(std::string_view text) {
  if (text == "zero" || text == "zero-shot") return PromptVariant::kZeroShot;
  if (text == "few" || text == "few-shot") return PromptVariant::kFewShot;
  if (text == "constitution" || text == "cons") return PromptVariant::kConstitution;
  return std::nullopt;
}

std::string PromptBundle::Hash() const {
  return HexDigest(Fnv1a(user, Fnv1a(std::string_view("\0", 1), Fnv1a(system))));
}

std::string RenderHistory(const Dialogue& dialogue, int before_turn) {
  std::string out;
  for (const Turn& t : dialogue.turns) {
    if (t.index >= before_turn) break;
    out += "Q: " + t.question + "\nA: " + t.answer + "\n";
  }
  return out;
}

PromptBundle BuildPrompt(const Dialogue& dialogue, int upto_turn,
                         PromptVariant variant) {
  const Turn* turn = dialogue.FindTurn(upto_turn);
  if (turn == nullptr) {
    throw Error(ErrorCode::kTurnNotFound,
                "dialogue '" + dialogue.id + "' has no turn " +
                    std::to_string(upto_turn),
                std::to_string(upto_turn));
  }
  if (!turn->is_qa_pair) {
    throw Error(ErrorCode::kNotAQaPair,
                "turn " + std::to_string(upto_turn) + " is not a Q/A pair",
                std::to_string(upto_turn));
  }
  PromptBundle bundle;
  bundle.variant = variant;
  bundle.system = std::string(kSystem);
  const std::string transcript =
      RenderHistory(dialogue, upto_turn) + "Q: " + turn->question + "\n";
  std::string user = Fill(kUser, transcript, turn->answer);
  switch (variant) {
    case PromptVariant::kZeroShot:
      break;
    case PromptVariant::kConstitution:
      user = std::string(kConstitution) + "\n\n" + user;
      break;
    case PromptVariant::kFewShot:
      user += "\n\n" + std::string(kFewShot);
      break;
  }
  bundle.user = std::move(user);
  return bundle;
}

}  // namespace cobra

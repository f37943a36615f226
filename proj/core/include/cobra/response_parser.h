#ifndef COBRA_RESPONSE_PARSER_H_
#define COBRA_RESPONSE_PARSER_H_

#include <optional>
#include <string_view>

#include <nlohmann/json.hpp>

#include "cobra/corpus.h"

namespace cobra {

// Locates the first JSON object in free-form model output. Markdown fences
// and surrounding prose are skipped; text inside a closed <think> block is
// ignored. Objects carrying at least one label key win over other objects.
std::optional<nlohmann::json> ExtractJsonObject(std::string_view text);

// Maps a model's JSON answer onto a TurnAnnotation. Keys match
// case-insensitively ignoring spaces and punctuation ("Commitment value",
// "commitment_value"); numeric strings and labels such as "2: Beneficial"
// coerce to their leading integer; the outcome is case-insensitive; the
// reason may be a number, a list, or a delimited string.
//
// The returned annotation has no dialogue, annotator or turn set; raw_source
// holds `text`. Throws kNoJsonFound, kFieldMissing or kOutOfRange with the
// field name as detail.
TurnAnnotation ParseModelResponse(std::string_view text);

}  // namespace cobra

#endif  // COBRA_RESPONSE_PARSER_H_

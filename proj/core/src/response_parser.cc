#include "cobra/response_parser.h"

#include <cctype>
#include <string>

#include "cobra/error.h"

namespace cobra {
namespace {

using nlohmann::json;

std::string NormalizeKey(std::string_view key) {
  std::string out;
  for (unsigned char c : key) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

constexpr const char* kKeys[] = {"commitmentvalue", "qualityrate",
                                 "consistencyvalue", "relevancerate",
                                 "mannerrate",      "outcomevalue",
                                 "outcomereason"};

bool HasLabelKey(const json& obj) {
  for (const auto& [k, v] : obj.items()) {
    const std::string n = NormalizeKey(k);
    for (const char* key : kKeys) {
      if (n == key) return true;
    }
  }
  return false;
}

// End of the balanced object starting at `start`, honouring string literals.
std::optional<std::size_t> MatchBrace(std::string_view text, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::nullopt;
}

const json* FindField(const json& obj, const char* normalized) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (NormalizeKey(it.key()) == normalized) return &*it;
  }
  return nullptr;
}

[[noreturn]] void OutOfRange(const char* field, const json& value) {
  throw Error(ErrorCode::kOutOfRange,
              std::string("model field '") + field + "' out of range: " +
                  value.dump(),
              field);
}

std::optional<long long> LeadingInteger(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  bool neg = false;
  if (i < s.size() && (s[i] == '-' || s[i] == '+')) neg = s[i++] == '-';
  const std::size_t digits_start = i;
  long long v = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
    v = v * 10 + (s[i] - '0');
    if (v > 1000000) return std::nullopt;
    ++i;
  }
  if (i == digits_start) return std::nullopt;
  // Reject "2.5" style values; "2." or "2:" prefixes are labels.
  if (i + 1 < s.size() && s[i] == '.' &&
      std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
    return std::nullopt;
  }
  return neg ? -v : v;
}

int RequireInt(const json& obj, const char* key, const char* field, int lo,
               int hi) {
  const json* v = FindField(obj, key);
  if (v == nullptr || v->is_null()) {
    throw Error(ErrorCode::kFieldMissing,
                std::string("model response lacks '") + field + "'", field);
  }
  std::optional<long long> n;
  if (v->is_number_integer()) {
    n = v->get<long long>();
  } else if (v->is_number_float()) {
    const double d = v->get<double>();
    if (d == static_cast<double>(static_cast<long long>(d))) {
      n = static_cast<long long>(d);
    }
  } else if (v->is_string()) {
    n = LeadingInteger(v->get<std::string>());
  } else if (v->is_array() && v->size() == 1) {
    const json& e = (*v)[0];
    if (e.is_number_integer()) n = e.get<long long>();
    if (e.is_string()) n = LeadingInteger(e.get<std::string>());
  }
  if (!n || *n < lo || *n > hi) OutOfRange(field, *v);
  return static_cast<int>(*n);
}

void ParseReasons(const json& v, std::set<Reason>& out) {
  auto add = [&](long long code) {
    auto r = ReasonFromCode(static_cast<int>(code));
    if (!r) OutOfRange("reasons", v);
    out.insert(*r);
  };
  if (v.is_number_integer()) {
    add(v.get<long long>());
  } else if (v.is_array()) {
    for (const json& e : v) {
      if (e.is_number_integer()) {
        add(e.get<long long>());
      } else if (e.is_string()) {
        auto n = LeadingInteger(e.get<std::string>());
        if (!n) OutOfRange("reasons", v);
        add(*n);
      } else {
        OutOfRange("reasons", v);
      }
    }
  } else if (v.is_string()) {
    // "1", "1, 2", "1. Logical arguments are convincing"
    const std::string s = v.get<std::string>();
    std::size_t i = 0;
    bool any = false;
    while (i < s.size()) {
      if (std::isdigit(static_cast<unsigned char>(s[i]))) {
        std::size_t j = i;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        add(std::stoll(s.substr(i, j - i)));
        any = true;
        // Only leading code lists count; stop at descriptive text.
        while (j < s.size() && (s[j] == ',' || s[j] == ' ' || s[j] == ';' ||
                                s[j] == '&' || s[j] == '/')) {
          ++j;
        }
        if (j < s.size() && !std::isdigit(static_cast<unsigned char>(s[j]))) break;
        i = j;
      } else if (!any && (s[i] == ' ' || s[i] == '[')) {
        ++i;
      } else {
        break;
      }
    }
    if (!any) OutOfRange("reasons", v);
  } else {
    OutOfRange("reasons", v);
  }
}

}  // namespace

std::optional<json> ExtractJsonObject(std::string_view text) {
  if (auto close = text.rfind("</think>"); close != std::string_view::npos) {
    text.remove_prefix(close + 8);
  }
  std::optional<json> fallback;
  for (std::size_t start = text.find('{'); start != std::string_view::npos;
       start = text.find('{', start + 1)) {
    auto end = MatchBrace(text, start);
    if (!end) continue;
    json candidate = json::parse(text.substr(start, *end - start + 1), nullptr,
                                 /*allow_exceptions=*/false);
    if (candidate.is_discarded() || !candidate.is_object()) continue;
    if (HasLabelKey(candidate)) return candidate;
    if (!fallback) fallback = std::move(candidate);
  }
  return fallback;
}

TurnAnnotation ParseModelResponse(std::string_view text) {
  auto obj = ExtractJsonObject(text);
  if (!obj) {
    throw Error(ErrorCode::kNoJsonFound, "no JSON object in model output");
  }
  TurnAnnotation a;
  a.commitment = static_cast<CommitmentType>(
      RequireInt(*obj, "commitmentvalue", "commitment", 1, 4));
  a.maxims.quality = RequireInt(*obj, "qualityrate", "quality", 0, 1);
  a.maxims.consistency = RequireInt(*obj, "consistencyvalue", "consistency", 0, 1);
  a.maxims.relevance = RequireInt(*obj, "relevancerate", "relevance", 1, 4);
  a.maxims.manner = RequireInt(*obj, "mannerrate", "manner", 1, 4);

  const json* outcome = FindField(*obj, "outcomevalue");
  if (outcome == nullptr || outcome->is_null()) {
    throw Error(ErrorCode::kFieldMissing, "model response lacks 'outcome'",
                "outcome");
  }
  if (!outcome->is_string()) OutOfRange("outcome", *outcome);
  std::string o = outcome->get<std::string>();
  while (!o.empty() && std::isspace(static_cast<unsigned char>(o.back()))) o.pop_back();
  o.erase(0, o.find_first_not_of(" \t"));
  auto parsed = ParseOutcome(o);
  if (!parsed) OutOfRange("outcome", *outcome);
  a.outcome = *parsed;

  const json* reason = FindField(*obj, "outcomereason");
  if (reason == nullptr || reason->is_null()) {
    throw Error(ErrorCode::kFieldMissing, "model response lacks 'reasons'",
                "reasons");
  }
  ParseReasons(*reason, a.reasons);
  a.raw_source = std::string(text);
  return a;
}

}  // namespace cobra

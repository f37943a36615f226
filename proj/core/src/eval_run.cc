#include "cobra/eval_run.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "cobra/error.h"
#include "cobra/hash.h"
#include "cobra/response_parser.h"
#include "file_util.h"

namespace cobra {

using nlohmann::json;

namespace {

[[noreturn]] void BadConfig(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::kOutOfRange, "model config: " + field + " " + why, field);
}

using RecordKey = std::pair<std::string, int>;

RecordKey KeyOf(const TurnRecord& r) { return {r.dialogue_id, r.turn_index}; }

void SortRecords(std::vector<TurnRecord>& records) {
  std::sort(records.begin(), records.end(),
            [](const TurnRecord& a, const TurnRecord& b) { return KeyOf(a) < KeyOf(b); });
}

void Summarize(EvalRun& run) {
  run.parsed = run.retried = run.failed = 0;
  for (const TurnRecord& r : run.records) {
    (r.ok() ? run.parsed : run.failed)++;
    if (r.attempts > 1) ++run.retried;
  }
}

// Fills annotation or failure from the raw response.
void ParseInto(TurnRecord& r, const std::string& annotator_id) {
  try {
    TurnAnnotation a = ParseModelResponse(*r.raw_response);
    a.dialogue_id = r.dialogue_id;
    a.annotator_id = annotator_id;
    a.turn_index = r.turn_index;
    a.raw_source.reset();
    r.annotation = std::move(a);
    r.failure_code.clear();
    r.failure_message.clear();
  } catch (const Error& e) {
    r.annotation.reset();
    r.failure_code = std::string(ErrorCodeName(e.code()));
    r.failure_message = e.what();
  }
}

double BackoffSeconds(const ModelConfig& cfg, int attempt, std::mt19937_64& rng) {
  const double base = std::min(cfg.backoff_max_seconds,
                               cfg.backoff_initial_seconds * std::ldexp(1.0, attempt - 1));
  std::uniform_real_distribution<double> jitter(0.5, 1.0);
  return base * jitter(rng);
}

}  // namespace

void ModelConfig::Validate() const {
  if (model_name.empty()) {
    throw Error(ErrorCode::kFieldMissing, "model config: model_name is empty",
                "model_name");
  }
  if (endpoint_url.empty()) {
    throw Error(ErrorCode::kFieldMissing, "model config: endpoint_url is empty",
                "endpoint_url");
  }
  if (!std::isfinite(temperature) || temperature < 0) BadConfig("temperature", "must be >= 0");
  if (!std::isfinite(rate_limit) || rate_limit <= 0) BadConfig("rate_limit", "must be > 0");
  if (max_retries < 0) BadConfig("max_retries", "must be >= 0");
  if (!(backoff_initial_seconds >= 0)) BadConfig("backoff_initial_seconds", "must be >= 0");
  if (!(backoff_max_seconds >= 0)) BadConfig("backoff_max_seconds", "must be >= 0");
  if (!(timeout_seconds > 0)) BadConfig("timeout_seconds", "must be > 0");
  if (!reasoning_budget.is_object()) BadConfig("reasoning_budget", "must be an object");
}

json ModelConfig::ToJson() const {
  return {{"endpoint_url", endpoint_url},
          {"model_name", model_name},
          {"api_key_ref", api_key_ref},
          {"temperature", temperature},
          {"max_retries", max_retries},
          {"rate_limit", rate_limit},
          {"prompt_variant", PromptVariantName(prompt_variant)},
          {"reasoning_budget", reasoning_budget},
          {"backoff_initial_seconds", backoff_initial_seconds},
          {"backoff_max_seconds", backoff_max_seconds},
          {"timeout_seconds", timeout_seconds}};
}

ModelConfig ModelConfig::FromJson(const json& j) {
  if (!j.is_object()) {
    throw Error(ErrorCode::kSchemaViolation, "model config must be an object");
  }
  ModelConfig c;
  try {
    c.endpoint_url = j.value("endpoint_url", c.endpoint_url);
    c.model_name = j.value("model_name", c.model_name);
    c.api_key_ref = j.value("api_key_ref", c.api_key_ref);
    c.temperature = j.value("temperature", c.temperature);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.rate_limit = j.value("rate_limit", c.rate_limit);
    c.reasoning_budget = j.value("reasoning_budget", c.reasoning_budget);
    c.backoff_initial_seconds = j.value("backoff_initial_seconds", c.backoff_initial_seconds);
    c.backoff_max_seconds = j.value("backoff_max_seconds", c.backoff_max_seconds);
    c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
    if (j.contains("prompt_variant")) {
      const auto name = j["prompt_variant"].get<std::string>();
      auto v = ParsePromptVariant(name);
      if (!v) BadConfig("prompt_variant", "must be zero, few or constitution");
      c.prompt_variant = *v;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation,
                std::string("model config: ") + e.what());
  }
  if (c.reasoning_budget.is_null()) c.reasoning_budget = json::object();
  c.Validate();
  return c;
}

json TurnRecordToJson(const TurnRecord& r) {
  json j = {{"dialogue_id", r.dialogue_id},
            {"turn_index", r.turn_index},
            {"prompt_hash", r.prompt_hash},
            {"raw_response", r.raw_response ? json(*r.raw_response) : json()},
            {"annotation", r.annotation ? AnnotationToJson(*r.annotation) : json()},
            {"latency_ms", r.latency_ms},
            {"attempts", r.attempts}};
  if (!r.failure_code.empty()) {
    j["failure_code"] = r.failure_code;
    j["failure_message"] = r.failure_message;
  }
  return j;
}

TurnRecord TurnRecordFromJson(const json& j) {
  TurnRecord r;
  r.dialogue_id = j.at("dialogue_id").get<std::string>();
  r.turn_index = j.at("turn_index").get<int>();
  r.prompt_hash = j.value("prompt_hash", "");
  if (auto it = j.find("raw_response"); it != j.end() && it->is_string()) {
    r.raw_response = it->get<std::string>();
  }
  if (auto it = j.find("annotation"); it != j.end() && it->is_object()) {
    r.annotation = AnnotationFromJson(*it, "record annotation");
  }
  r.failure_code = j.value("failure_code", "");
  r.failure_message = j.value("failure_message", "");
  r.latency_ms = j.value("latency_ms", 0.0);
  r.attempts = j.value("attempts", 0);
  return r;
}

std::vector<TurnAnnotation> EvalRun::Annotations() const {
  std::vector<TurnAnnotation> out;
  for (const TurnRecord& r : records) {
    if (r.annotation) out.push_back(*r.annotation);
  }
  return out;
}

json EvalRun::ManifestJson() const {
  return {{"run_id", run_id},
          {"model", model.ToJson()},
          {"corpus_ref", corpus_ref},
          {"annotator_id", annotator_id},
          {"prompt_layout", kPromptLayout},
          {"summary",
           {{"parsed", parsed},
            {"retried", retried},
            {"failed", failed},
            {"records", records.size()}}},
          {"complete", complete}};
}

std::string ModelAnnotatorId(const ModelConfig& cfg) {
  return cfg.model_name + "/" + std::string(PromptVariantName(cfg.prompt_variant));
}

std::string DefaultRunId(const ModelConfig& cfg, std::string_view corpus_ref) {
  std::string name;
  for (char c : cfg.model_name) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                      c == '_' || c == '.';
    name.push_back(keep ? c : '-');
  }
  json identity = cfg.ToJson();
  identity["corpus_ref"] = corpus_ref;
  return name + "-" + std::string(PromptVariantName(cfg.prompt_variant)) + "-" +
         HexDigest(Fnv1a(identity.dump())).substr(0, 8);
}

RunStore::RunStore(std::filesystem::path root, std::string run_id)
    : dir_(std::move(root) / run_id) {}

bool RunStore::Exists() const { return std::filesystem::exists(dir_ / "manifest.json"); }

void RunStore::WriteManifest(const EvalRun& run) {
  std::lock_guard lock(mu_);
  std::filesystem::create_directories(dir_);
  internal::WriteAtomic(dir_ / "manifest.json", run.ManifestJson().dump(2) + "\n");
}

void RunStore::AppendLine(const json& line) {
  std::lock_guard lock(mu_);
  std::filesystem::create_directories(dir_);
  internal::AppendDurable(dir_ / "records.jsonl", line.dump());
}

void RunStore::AppendRaw(const TurnRecord& r) {
  json line = TurnRecordToJson(r);
  line.erase("annotation");
  line.erase("failure_code");
  line.erase("failure_message");
  line["type"] = "raw";
  AppendLine(line);
}

void RunStore::AppendResult(const TurnRecord& r) {
  json line = TurnRecordToJson(r);
  line["type"] = "result";
  AppendLine(line);
}

std::vector<std::pair<TurnRecord, bool>> RunStore::ReadLines() const {
  const auto path = dir_ / "records.jsonl";
  if (!std::filesystem::exists(path)) return {};
  std::string annotator;
  if (Exists()) {
    json manifest = json::parse(internal::ReadFile(dir_ / "manifest.json"), nullptr, false);
    if (manifest.is_object()) annotator = manifest.value("annotator_id", "");
  }
  std::istringstream in(internal::ReadFile(path));
  std::map<RecordKey, std::pair<TurnRecord, bool>> by_key;  // bool: has result
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      if (in.peek() == EOF) break;  // torn final write
      throw Error(ErrorCode::kMalformedFile,
                  path.string() + ":" + std::to_string(line_no) + ": not JSON",
                  std::to_string(line_no));
    }
    TurnRecord r = TurnRecordFromJson(j);
    const bool result = j.value("type", "result") == "result";
    const RecordKey key = KeyOf(r);
    by_key[key] = {std::move(r), result};
  }
  std::vector<std::pair<TurnRecord, bool>> out;
  for (auto& [key, entry] : by_key) {
    if (!entry.second && entry.first.raw_response) ParseInto(entry.first, annotator);
    out.push_back(std::move(entry));
  }
  return out;
}

std::vector<TurnRecord> RunStore::LoadRecords() const {
  std::vector<TurnRecord> out;
  for (auto& [r, has_result] : ReadLines()) out.push_back(std::move(r));
  SortRecords(out);
  return out;
}

std::vector<TurnRecord> RunStore::Recover() {
  internal::RepairTornTail(dir_ / "records.jsonl");
  std::vector<TurnRecord> out;
  for (auto& [r, has_result] : ReadLines()) {
    if (!has_result) AppendResult(r);
    out.push_back(std::move(r));
  }
  SortRecords(out);
  return out;
}

EvalRun RunStore::Load() const {
  if (!Exists()) {
    throw Error(ErrorCode::kIoError, "no run at " + dir_.string(), dir_.string());
  }
  json m = json::parse(internal::ReadFile(dir_ / "manifest.json"), nullptr, false);
  if (!m.is_object()) {
    throw Error(ErrorCode::kMalformedFile, "bad manifest in " + dir_.string());
  }
  EvalRun run;
  run.run_id = m.value("run_id", "");
  run.model = ModelConfig::FromJson(m.at("model"));
  run.corpus_ref = m.value("corpus_ref", "");
  run.annotator_id = m.value("annotator_id", "");
  run.complete = m.value("complete", false);
  run.records = LoadRecords();
  Summarize(run);
  return run;
}

RateLimiter::RateLimiter(double per_minute)
    : interval_(std::chrono::duration_cast<Clock::duration>(
          std::chrono::duration<double>(60.0 / per_minute))),
      next_(Clock::now()) {}

void RateLimiter::Acquire() {
  Clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    const auto now = Clock::now();
    slot = std::max(now, next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

std::shared_ptr<ChatClient> MakeChatClient(const ModelConfig& cfg) {
  constexpr std::string_view kCassette = "cassette:";
  if (cfg.endpoint_url.rfind(kCassette, 0) == 0) {
    return std::make_shared<CassetteClient>(cfg.endpoint_url.substr(kCassette.size()));
  }
  std::string key;
  if (!cfg.api_key_ref.empty()) {
    const char* value = std::getenv(cfg.api_key_ref.c_str());
    if (value == nullptr) {
      throw Error(ErrorCode::kAuthFailure,
                  "environment variable " + cfg.api_key_ref + " is not set",
                  cfg.api_key_ref);
    }
    key = value;
  }
  return std::make_shared<HttpChatClient>(cfg.endpoint_url, std::move(key),
                                          cfg.timeout_seconds);
}

EvalRun RunEvaluation(const Corpus& corpus, const ModelConfig& cfg,
                      ChatClient& client, const RunOptions& opts) {
  cfg.Validate();
  EvalRun run;
  run.model = cfg;
  run.corpus_ref = opts.corpus_ref;
  run.run_id = opts.run_id ? *opts.run_id : DefaultRunId(cfg, opts.corpus_ref);
  run.annotator_id = opts.annotator_id ? *opts.annotator_id : ModelAnnotatorId(cfg);

  std::vector<const Dialogue*> dialogues;
  for (const Dialogue& d : corpus.dialogues) {
    if (!opts.dialogue_ids.empty() &&
        std::find(opts.dialogue_ids.begin(), opts.dialogue_ids.end(), d.id) ==
            opts.dialogue_ids.end()) {
      continue;
    }
    dialogues.push_back(&d);
  }

  RunStore store(opts.runs_root, run.run_id);
  std::map<RecordKey, TurnRecord> done;
  if (store.Exists()) {
    EvalRun previous = store.Load();
    if (previous.model != cfg || previous.annotator_id != run.annotator_id) {
      throw Error(ErrorCode::kSchemaViolation,
                  "run " + run.run_id + " exists with a different configuration",
                  run.run_id);
    }
  }
  store.WriteManifest(run);
  for (TurnRecord& r : store.Recover()) done.emplace(KeyOf(r), std::move(r));

  auto sleep = opts.sleep ? opts.sleep : [](double seconds) {
    std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
  };
  RateLimiter limiter(cfg.rate_limit);
  std::mutex results_mu;
  std::vector<TurnRecord> fresh;
  std::atomic<std::size_t> next_dialogue{0};
  std::atomic<int> issued{0};
  std::atomic<bool> stop{false};
  std::atomic<bool> truncated{false};
  std::exception_ptr failure;

  auto run_turn = [&](const Dialogue& d, const Turn& t) {
    const PromptBundle prompt = BuildPrompt(d, t.index, cfg.prompt_variant);
    ChatRequest request{cfg.model_name, prompt.system, prompt.user, cfg.temperature,
                        cfg.reasoning_budget};
    TurnRecord r;
    r.dialogue_id = d.id;
    r.turn_index = t.index;
    r.prompt_hash = prompt.Hash();
    std::mt19937_64 rng(opts.seed ^ Fnv1a(d.id + "#" + std::to_string(t.index)));
    for (int attempt = 1; attempt <= cfg.max_retries + 1; ++attempt) {
      r.attempts = attempt;
      limiter.Acquire();
      try {
        ChatResponse resp = client.Complete(request);
        r.raw_response = std::move(resp.content);
        r.latency_ms = resp.latency_ms;
        break;
      } catch (const Error& e) {
        const bool retryable = e.code() == ErrorCode::kTransient ||
                               e.code() == ErrorCode::kEndpointUnreachable;
        if (!retryable) {
          if (e.code() == ErrorCode::kAuthFailure) throw;
          r.failure_code = std::string(ErrorCodeName(e.code()));
          r.failure_message = e.what();
          break;
        }
        if (attempt <= cfg.max_retries) {
          sleep(BackoffSeconds(cfg, attempt, rng));
          continue;
        }
        if (e.code() == ErrorCode::kEndpointUnreachable) throw;
        r.failure_code = std::string(ErrorCodeName(e.code()));
        r.failure_message = e.what();
      }
    }
    if (r.raw_response) {
      store.AppendRaw(r);
      ParseInto(r, run.annotator_id);
    }
    store.AppendResult(r);
    return r;
  };

  auto worker = [&] {
    try {
      while (!stop) {
        const std::size_t i = next_dialogue.fetch_add(1);
        if (i >= dialogues.size()) return;
        const Dialogue& d = *dialogues[i];
        for (const Turn& t : d.turns) {
          if (stop) return;
          if (!t.is_qa_pair || done.count({d.id, t.index})) continue;
          if (opts.max_turns && issued.fetch_add(1) >= *opts.max_turns) {
            truncated = true;
            stop = true;
            return;
          }
          TurnRecord r = run_turn(d, t);
          std::lock_guard lock(results_mu);
          fresh.push_back(std::move(r));
        }
      }
    } catch (...) {
      std::lock_guard lock(results_mu);
      if (!failure) failure = std::current_exception();
      stop = true;
    }
  };

  const int jobs = std::max(1, std::min<int>(opts.concurrency,
                                             static_cast<int>(dialogues.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int i = 0; i < jobs; ++i) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (auto& [key, r] : done) run.records.push_back(std::move(r));
  for (auto& r : fresh) run.records.push_back(std::move(r));
  SortRecords(run.records);
  Summarize(run);
  run.complete = !truncated;
  store.WriteManifest(run);
  return run;
}

}  // namespace cobra

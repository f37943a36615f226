#include "cobra/service.h"

#include <algorithm>
#include <sstream>

#include "cobra/agreement.h"
#include "cobra/compare.h"
#include "cobra/error.h"
#include "cobra/regression.h"
#include "cobra/report.h"

namespace cobra {

using nlohmann::json;

namespace {

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::optional<std::string> Param(const std::map<std::string, std::string>& params,
                                 const std::string& key) {
  auto it = params.find(key);
  if (it == params.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

json ErrorJson(const Error& e) {
  return {{"code", ErrorCodeName(e.code())}, {"message", e.what()}, {"detail", e.detail()}};
}

std::optional<Reason> ParseReason(const std::string& text) {
  if (text == "1" || text == "logical") return Reason::kLogical;
  if (text == "2" || text == "credibility") return Reason::kCredibility;
  if (text == "3" || text == "emotional") return Reason::kEmotional;
  return std::nullopt;
}

// Fit failures that mean the data cannot support the model.
[[noreturn]] void InsufficientFor(const std::string& what, const Error& e) {
  throw Error(ErrorCode::kInsufficientData, what + ": " + e.what(),
              std::string(ErrorCodeName(e.code())));
}

bool IsDataShortage(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kOneClassOnly:
    case ErrorCode::kTooFewSamples:
    case ErrorCode::kSeparation:
    case ErrorCode::kRankDeficient:
    case ErrorCode::kEmptySeries:
    case ErrorCode::kNoSharedItems:
    case ErrorCode::kNoOverlap:
      return true;
    default:
      return false;
  }
}

json TurnJson(const Turn& t) {
  json j = {{"turn_index", t.index},
            {"question", t.question},
            {"answer", t.answer},
            {"questioner_role", SideName(t.questioner_role)},
            {"is_qa_pair", t.is_qa_pair}};
  if (t.background) j["background"] = *t.background;
  return j;
}

json DialogueJson(const Dialogue& d) {
  json turns = json::array();
  for (const Turn& t : d.turns) turns.push_back(TurnJson(t));
  return {{"id", d.id},
          {"trial_id", d.trial_id},
          {"witness_id", d.witness_id},
          {"witness_side", SideName(d.witness_side)},
          {"exam_type", ExamTypeName(d.exam_type)},
          {"turns", std::move(turns)}};
}

}  // namespace

json AnnotationSchemaJson() {
  json commitment = json::array();
  for (int c = 1; c <= 4; ++c) {
    commitment.push_back({{"value", c}, {"label", CommitmentName(*CommitmentFromCode(c))}});
  }
  json reasons = json::array();
  for (int r = 1; r <= 3; ++r) {
    reasons.push_back({{"value", r}, {"label", ReasonName(*ReasonFromCode(r))}});
  }
  auto scale = [](int lo, int hi, std::vector<std::string> labels) {
    json options = json::array();
    for (int v = lo; v <= hi; ++v) {
      options.push_back({{"value", v}, {"label", labels[static_cast<std::size_t>(v - lo)]}});
    }
    return options;
  };
  return {
      {"commitment", {{"type", "choice"}, {"options", commitment}}},
      {"relevance",
       {{"type", "choice"},
        {"options", scale(1, 4, {"Very relevant", "Slightly relevant",
                                 "Slightly irrelevant", "Irrelevant"})}}},
      {"manner",
       {{"type", "choice"},
        {"options", scale(1, 4, {"Very clear", "Slightly clear with hedging",
                                 "Slightly unclear", "Unclear"})}}},
      {"quality",
       {{"type", "choice"}, {"options", scale(0, 1, {"Not truthful", "Truthful"})}}},
      {"consistency",
       {{"type", "choice"}, {"options", scale(0, 1, {"Consistent", "Inconsistent"})}}},
      {"outcome",
       {{"type", "choice"},
        {"options", {{{"value", "Witness"}, {"label", "Witness"}},
                     {{"value", "Questioner"}, {"label", "Questioner"}}}}}},
      {"reasons", {{"type", "multi"}, {"options", reasons}}}};
}

Service::Service(ServiceOptions opts) : opts_(std::move(opts)) {
  opts_.weights.Validate();
  if (!opts_.client_factory) opts_.client_factory = MakeChatClient;
}

Service::~Service() { WaitForEvalRuns(); }

void Service::WaitForEvalRuns() {
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(runs_mu_);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
}

void Service::AddCorpus(const std::string& name, Corpus corpus) {
  auto entry = std::make_unique<CorpusEntry>();
  entry->corpus = std::move(corpus);
  entry->sessions = std::make_unique<SessionStore>(
      name, &entry->corpus, opts_.data_dir / (name + ".sessions.jsonl"), opts_.clock);
  corpora_[name] = std::move(entry);
}

const Service::CorpusEntry& Service::FindCorpus(
    const std::optional<std::string>& name) const {
  if (corpora_.empty()) {
    throw Error(ErrorCode::kInsufficientData, "no corpus loaded");
  }
  if (!name) return *corpora_.begin()->second;
  auto it = corpora_.find(*name);
  if (it == corpora_.end()) {
    throw Error(ErrorCode::kInsufficientData, "no corpus named '" + *name + "'", *name);
  }
  return *it->second;
}

std::pair<std::string, Service::CorpusEntry*> Service::FindSession(
    const std::string& id) const {
  for (const auto& [name, entry] : corpora_) {
    if (entry->sessions->Contains(id)) return {name, entry.get()};
  }
  throw Error(ErrorCode::kSessionNotFound, "no session '" + id + "'", id);
}

Corpus Service::Merged(const CorpusEntry& entry) const {
  Corpus merged = entry.corpus;
  std::map<std::tuple<std::string, std::string, int>, TurnAnnotation> by_key;
  for (const auto& a : merged.annotations) {
    by_key[{a.dialogue_id, a.annotator_id, a.turn_index}] = a;
  }
  for (const auto& a : entry.sessions->Annotations()) {
    by_key[{a.dialogue_id, a.annotator_id, a.turn_index}] = a;
  }
  merged.annotations.clear();
  for (auto& [key, a] : by_key) merged.annotations.push_back(std::move(a));
  return merged;
}

json Service::ListCorpora() const {
  json out = json::array();
  for (const auto& [name, entry] : corpora_) {
    std::size_t qa = 0;
    json dialogues = json::array();
    for (const Dialogue& d : entry->corpus.dialogues) {
      std::size_t n = 0;
      for (const Turn& t : d.turns) n += t.is_qa_pair ? 1 : 0;
      qa += n;
      dialogues.push_back({{"id", d.id},
                           {"trial_id", d.trial_id},
                           {"witness_side", SideName(d.witness_side)},
                           {"exam_type", ExamTypeName(d.exam_type)},
                           {"qa_turns", n}});
    }
    out.push_back({{"name", name},
                   {"dialogues", std::move(dialogues)},
                   {"qa_turns", qa},
                   {"annotators", entry->corpus.Annotators()},
                   {"sessions", entry->sessions->List().size()}});
  }
  return {{"corpora", std::move(out)}};
}

json Service::GetDialogue(const std::string& id,
                          const std::optional<std::string>& corpus) const {
  for (const auto& [name, entry] : corpora_) {
    if (corpus && name != *corpus) continue;
    if (const Dialogue* d = entry->corpus.FindDialogue(id)) {
      json j = DialogueJson(*d);
      j["corpus"] = name;
      return j;
    }
  }
  throw Error(ErrorCode::kDialogueNotFound, "no dialogue '" + id + "'", id);
}

json Service::CreateSession(const json& body) {
  if (!body.is_object() || !body.contains("dialogue_id") ||
      !body.contains("annotator_id") || !body["dialogue_id"].is_string() ||
      !body["annotator_id"].is_string()) {
    throw Error(ErrorCode::kSchemaViolation,
                "session request needs string dialogue_id and annotator_id",
                "dialogue_id");
  }
  std::optional<std::string> corpus;
  if (body.contains("corpus") && body["corpus"].is_string()) {
    corpus = body["corpus"].get<std::string>();
  }
  const std::string dialogue_id = body["dialogue_id"].get<std::string>();
  for (const auto& [name, entry] : corpora_) {
    if (corpus && name != *corpus) continue;
    if (entry->corpus.FindDialogue(dialogue_id)) {
      json j = SessionToJson(
          entry->sessions->Create(dialogue_id, body["annotator_id"].get<std::string>()));
      j["corpus"] = name;
      return j;
    }
  }
  throw Error(ErrorCode::kDialogueNotFound, "no dialogue '" + dialogue_id + "'",
              dialogue_id);
}

json Service::GetSession(const std::string& id) const {
  auto [name, entry] = FindSession(id);
  json j = SessionToJson(entry->sessions->Get(id));
  j["corpus"] = name;
  return j;
}

json Service::NextItem(const std::string& id) const {
  auto [name, entry] = FindSession(id);
  const AnnotationSession s = entry->sessions->Get(id);
  const Dialogue* d = entry->corpus.FindDialogue(s.dialogue_id);
  json history = json::array();
  json current;
  std::optional<std::string> background;
  for (const Turn& t : d->turns) {
    if (t.background) background = t.background;
    if (s.cursor != 0 && t.index == s.cursor) {
      current = TurnJson(t);
      break;
    }
    history.push_back(TurnJson(t));
  }
  return {{"session", SessionToJson(s)},
          {"corpus", name},
          {"dialogue_id", s.dialogue_id},
          {"witness_side", SideName(d->witness_side)},
          {"exam_type", ExamTypeName(d->exam_type)},
          {"background", background ? json(*background) : json()},
          {"history", std::move(history)},
          {"current", std::move(current)},
          {"schema", AnnotationSchemaJson()}};
}

json Service::SubmitLabel(const std::string& id, const json& body) {
  auto [name, entry] = FindSession(id);
  if (!body.is_object() || !body.contains("turn_index") ||
      !body["turn_index"].is_number_integer()) {
    throw Error(ErrorCode::kSchemaViolation, "label request needs an integer turn_index",
                "turn_index");
  }
  if (!body.contains("record") || !body["record"].is_object()) {
    throw Error(ErrorCode::kSchemaViolation, "label request needs a record object",
                "record");
  }
  const AnnotationSession before = entry->sessions->Get(id);
  const int turn = body["turn_index"].get<int>();
  json record = body["record"];
  record["dialogue_ref"] = before.dialogue_id;
  record["annotator_id"] = before.annotator_id;
  record["turn_index"] = turn;
  const bool correction = body.value("correction", false);
  TurnAnnotation a = AnnotationFromJson(record, "record");
  const AnnotationSession s = entry->sessions->Submit(id, turn, std::move(a), correction);

  const Dialogue* d = entry->corpus.FindDialogue(s.dialogue_id);
  std::vector<TurnAnnotation> labels;
  for (const Turn& t : d->turns) {
    auto it = s.submitted.find(t.index);
    if (it != s.submitted.end()) labels.push_back(it->second);
  }
  MetricSeries series;
  if (s.status == SessionStatus::kComplete) {
    series = ScoreDialogue(*d, labels, opts_.weights);
  } else {
    StreamingScorer scorer(s.dialogue_id, s.annotator_id, opts_.weights);
    for (const auto& l : labels) scorer.Add(l);
    series = scorer.Provisional();
  }
  json accepted = SessionToJson(s);
  accepted["corpus"] = name;
  return {{"accepted", std::move(accepted)},
          {"provisional_series", MetricSeriesToJson(series, opts_.weights)},
          {"canonical", s.status == SessionStatus::kComplete}};
}

json Service::GetReport(const std::string& kind,
                        const std::map<std::string, std::string>& params) {
  const CorpusEntry& entry = FindCorpus(Param(params, "corpus"));
  std::string key = kind + '\n' + json(params).dump() + '\n' +
                    std::to_string(entry.sessions->revision()) + '\n' +
                    opts_.weights.HashHex();
  if (kind == "llm-comparison") {
    // Run files can change underneath; fold their manifests into the key.
    for (const auto& run_id : SplitList(Param(params, "runs").value_or(""))) {
      RunStore store(opts_.runs_root, run_id);
      if (store.Exists()) key += '\n' + store.Load().ManifestJson().dump();
    }
  }
  {
    std::lock_guard lock(cache_mu_);
    if (auto it = report_cache_.find(key); it != report_cache_.end()) {
      ++cache_hits_;
      return it->second;
    }
  }
  json report = BuildReport(kind, params, entry);
  report["weights_hash"] = opts_.weights.HashHex();
  std::lock_guard lock(cache_mu_);
  report_cache_[key] = report;
  return report;
}

std::size_t Service::report_cache_hits() const {
  std::lock_guard lock(cache_mu_);
  return cache_hits_;
}

json Service::BuildReport(const std::string& kind,
                          const std::map<std::string, std::string>& params,
                          const CorpusEntry& entry) {
  const Corpus corpus = Merged(entry);
  const WeightConfig& cfg = opts_.weights;
  if (kind == "agreement") {
    const auto raters = SplitList(Param(params, "raters").value_or(""));
    const std::size_t available = raters.empty() ? corpus.Annotators().size() : raters.size();
    if (available < 2) {
      throw Error(ErrorCode::kInsufficientData,
                  "agreement needs labels from at least two raters; this corpus has " +
                      std::to_string(available));
    }
    try {
      const AgreementReport r = AgreementAmongRaters(corpus, raters, cfg);
      return {{"kind", kind}, {"agreement", AgreementToJson(r)}};
    } catch (const Error& e) {
      if (IsDataShortage(e)) InsufficientFor("agreement", e);
      throw;
    }
  }
  if (kind == "regression") {
    LogisticOptions lo;
    lo.auc_bootstrap.seed = opts_.seed;
    const auto annotators = SplitList(Param(params, "annotators").value_or(""));
    try {
      if (auto reason_text = Param(params, "reason")) {
        auto reason = ParseReason(*reason_text);
        if (!reason) {
          throw Error(ErrorCode::kOutOfRange,
                      "reason must be logical, credibility or emotional", "reason");
        }
        const ConditionedFits fits = ConditionedOutcomeModels(corpus, cfg, *reason, lo);
        return {{"kind", kind},
                {"reason", ReasonName(*reason)},
                {"baseline", RegressionToJson(fits.baseline)},
                {"conditioned", RegressionToJson(fits.conditioned)}};
      }
      const OutcomeDataset data = BuildOutcomeDataset(corpus, cfg, annotators);
      if (data.size() == 0) {
        throw Error(ErrorCode::kInsufficientData,
                    "regression needs turns labelled with an outcome; none found");
      }
      return {{"kind", kind}, {"fit", RegressionToJson(FitOutcomeModel(data, lo))}};
    } catch (const Error& e) {
      if (IsDataShortage(e)) InsufficientFor("regression", e);
      throw;
    }
  }
  if (kind == "llm-comparison") {
    const auto run_ids = SplitList(Param(params, "runs").value_or(""));
    if (run_ids.empty()) {
      throw Error(ErrorCode::kInsufficientData,
                  "llm-comparison needs runs=<run_id,...>", "runs");
    }
    const auto annotators = corpus.Annotators();
    std::string gold = Param(params, "gold").value_or(
        annotators.empty() ? std::string() : annotators.front());
    if (gold.empty()) {
      throw Error(ErrorCode::kInsufficientData, "corpus has no human labels to compare with");
    }
    std::vector<std::pair<std::string, AgreementReport>> rows;
    json comparisons = json::array();
    for (const auto& run_id : run_ids) {
      RunStore store(opts_.runs_root, run_id);
      if (!store.Exists()) {
        throw Error(ErrorCode::kRunNotFound, "no eval run '" + run_id + "'", run_id);
      }
      const EvalRun run = store.Load();
      try {
        HumanComparison c = CompareToHuman(run, corpus, gold, cfg);
        rows.emplace_back(run.annotator_id, c.agreement);
        json cj = HumanComparisonToJson(c);
        cj["run_id"] = run_id;
        comparisons.push_back(std::move(cj));
      } catch (const Error& e) {
        if (IsDataShortage(e)) InsufficientFor("llm-comparison for " + run_id, e);
        throw;
      }
    }
    const ReportGrid grid = AgreementGrid("Agreement with " + gold, rows);
    return {{"kind", kind},
            {"gold", gold},
            {"grid", grid.ToJson()},
            {"rendered", grid.Render()},
            {"comparisons", std::move(comparisons)}};
  }
  if (kind == "series") {
    const auto dialogue_id = Param(params, "dialogue_id");
    const auto annotator = Param(params, "annotator_id");
    if (!dialogue_id || !annotator) {
      throw Error(ErrorCode::kInsufficientData,
                  "series needs dialogue_id and annotator_id", "dialogue_id");
    }
    const Dialogue* d = corpus.FindDialogue(*dialogue_id);
    if (d == nullptr) {
      throw Error(ErrorCode::kDialogueNotFound, "no dialogue '" + *dialogue_id + "'",
                  *dialogue_id);
    }
    const auto labels = corpus.AnnotationsFor(*dialogue_id, *annotator);
    if (labels.empty()) {
      throw Error(ErrorCode::kInsufficientData,
                  *annotator + " has no labels on " + *dialogue_id, *annotator);
    }
    std::size_t qa = 0;
    for (const Turn& t : d->turns) qa += t.is_qa_pair ? 1 : 0;
    MetricSeries s = labels.size() == qa ? ScoreDialogue(*d, labels, cfg)
                                         : ScoreSequence(labels, cfg);
    s.provisional = labels.size() != qa;
    return {{"kind", kind}, {"series", MetricSeriesToJson(s, cfg)}};
  }
  throw Error(ErrorCode::kOutOfRange,
              "unknown report kind '" + kind +
                  "' (agreement, regression, llm-comparison, series)",
              kind);
}

json Service::StartEvalRun(const json& body) {
  if (!body.is_object() || !body.contains("model")) {
    throw Error(ErrorCode::kSchemaViolation, "eval-run request needs a model object",
                "model");
  }
  const ModelConfig cfg = ModelConfig::FromJson(body["model"]);
  std::optional<std::string> corpus_name;
  if (body.contains("corpus")) corpus_name = body["corpus"].get<std::string>();
  const CorpusEntry& entry = FindCorpus(corpus_name);
  std::string name = corpus_name.value_or(corpora_.begin()->first);

  RunOptions ro;
  ro.runs_root = opts_.runs_root;
  ro.corpus_ref = name;
  ro.seed = opts_.seed;
  ro.concurrency = body.value("concurrency", 1);
  ro.run_id = body.value("run_id", DefaultRunId(cfg, name));
  if (body.contains("dialogue_ids")) {
    ro.dialogue_ids = body["dialogue_ids"].get<std::vector<std::string>>();
  }
  const std::string run_id = *ro.run_id;

  {
    std::lock_guard lock(runs_mu_);
    auto it = runs_.find(run_id);
    if (it != runs_.end() && it->second.status == "running") {
      return {{"run_id", run_id}, {"status", "running"}};
    }
    runs_[run_id] = {"running", json(), json()};
  }
  std::shared_ptr<ChatClient> client = opts_.client_factory(cfg);
  auto job = [this, &entry, cfg, ro, client, run_id] {
    RunEntry result;
    try {
      const EvalRun run = RunEvaluation(entry.corpus, cfg, *client, ro);
      result.status = "complete";
      result.summary = run.ManifestJson();
    } catch (const Error& e) {
      result.status = "failed";
      result.error = ErrorJson(e);
    } catch (const std::exception& e) {
      result.status = "failed";
      result.error = {{"code", "Internal"}, {"message", e.what()}, {"detail", ""}};
    }
    std::lock_guard lock(runs_mu_);
    runs_[run_id] = std::move(result);
  };
  if (body.value("wait", false)) {
    job();
  } else {
    std::lock_guard lock(runs_mu_);
    workers_.emplace_back(job);
  }
  return GetEvalRun(run_id);
}

json Service::GetEvalRun(const std::string& id) const {
  {
    std::lock_guard lock(runs_mu_);
    if (auto it = runs_.find(id); it != runs_.end()) {
      json j = {{"run_id", id}, {"status", it->second.status}};
      if (!it->second.summary.is_null()) j["summary"] = it->second.summary;
      if (!it->second.error.is_null()) j["error"] = it->second.error;
      if (it->second.status != "running") return j;
    }
  }
  RunStore store(opts_.runs_root, id);
  if (!store.Exists()) {
    std::lock_guard lock(runs_mu_);
    if (runs_.count(id)) return {{"run_id", id}, {"status", "running"}};
    throw Error(ErrorCode::kRunNotFound, "no eval run '" + id + "'", id);
  }
  const EvalRun run = store.Load();
  std::string status = run.complete ? "complete" : "incomplete";
  {
    std::lock_guard lock(runs_mu_);
    if (auto it = runs_.find(id); it != runs_.end() && it->second.status == "running") {
      status = "running";
    }
  }
  return {{"run_id", id}, {"status", status}, {"summary", run.ManifestJson()}};
}

}  // namespace cobra

#include "cli.h"

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "cobra/agreement.h"
#include "cobra/compare.h"
#include "cobra/corpus.h"
#include "cobra/error.h"
#include "cobra/eval_run.h"
#include "cobra/http_server.h"
#include "cobra/metrics.h"
#include "cobra/regression.h"
#include "cobra/report.h"
#include "cobra/service.h"

namespace cobra {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommonOptions {
  std::string corpus;
  std::string weights;
  std::string out;
  std::uint64_t seed = kDefaultSeed;
  int jobs = std::max(1u, std::thread::hardware_concurrency());
  bool verbose = false;
};

Corpus Load(const CommonOptions& o, std::ostream& err,
            const std::optional<TableMapping>& mapping = std::nullopt) {
  Corpus corpus = LoadCorpus(o.corpus, mapping);
  if (o.verbose) {
    err << "loaded " << o.corpus << ": " << corpus.dialogues.size() << " dialogues, "
        << corpus.annotations.size() << " annotations, " << corpus.Annotators().size()
        << " annotators\n";
  }
  return corpus;
}

WeightConfig LoadWeights(const CommonOptions& o, std::ostream& err) {
  WeightConfig cfg = o.weights.empty() ? WeightConfig{} : WeightConfig::Load(o.weights);
  for (const std::string& w : cfg.Warnings()) err << "warning: " << w << '\n';
  return cfg;
}

void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw Error(ErrorCode::kIoError, "cannot write " + path.string(), path.string());
}

std::string FileSafe(std::string s) {
  for (char& c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) {
      c = '_';
    }
  }
  return s;
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

// One series per (dialogue, annotator), sorted. Partial coverage scores the
// labelled Q/A turns only.
std::vector<MetricSeries> ScoreCorpus(const Corpus& corpus, const WeightConfig& cfg,
                                      int jobs) {
  std::vector<const Dialogue*> dialogues;
  for (const Dialogue& d : corpus.dialogues) dialogues.push_back(&d);
  std::sort(dialogues.begin(), dialogues.end(),
            [](const Dialogue* a, const Dialogue* b) { return a->id < b->id; });
  const std::vector<std::string> annotators = corpus.Annotators();
  std::vector<std::vector<MetricSeries>> per_dialogue(dialogues.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t i = next++; i < dialogues.size(); i = next++) {
      try {
        const Dialogue& d = *dialogues[i];
        std::size_t qa = 0;
        for (const Turn& t : d.turns) qa += t.is_qa_pair ? 1 : 0;
        for (const std::string& annotator : annotators) {
          const auto labels = corpus.AnnotationsFor(d.id, annotator);
          if (labels.empty()) continue;
          per_dialogue[i].push_back(labels.size() == qa ? ScoreDialogue(d, labels, cfg)
                                                        : ScoreSequence(labels, cfg));
        }
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n = std::min<std::size_t>(std::max(1, jobs), dialogues.size());
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  std::vector<MetricSeries> out;
  for (auto& v : per_dialogue) {
    for (auto& s : v) out.push_back(std::move(s));
  }
  return out;
}

int CmdIngest(const CommonOptions& o, const std::string& mapping_path,
              std::ostream& out, std::ostream& err) {
  std::optional<TableMapping> mapping;
  if (!mapping_path.empty()) {
    std::ifstream f(mapping_path);
    if (!f) throw Error(ErrorCode::kIoError, "cannot open " + mapping_path, mapping_path);
    json j = json::parse(f, nullptr, false);
    if (j.is_discarded()) {
      throw Error(ErrorCode::kMalformedFile, mapping_path + " is not JSON", mapping_path);
    }
    mapping = TableMapping::FromJson(j);
  }
  const Corpus corpus = Load(o, err, mapping);
  const std::string text = CorpusToJson(corpus).dump(2) + "\n";
  if (o.out.empty()) {
    out << text;
  } else {
    WriteText(o.out, text);
    out << "wrote " << corpus.dialogues.size() << " dialogues, "
        << corpus.annotations.size() << " annotations to " << o.out << '\n';
  }
  return 0;
}

int CmdScore(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  const WeightConfig cfg = LoadWeights(o, err);
  const Corpus corpus = Load(o, err);
  const auto series = ScoreCorpus(corpus, cfg, o.jobs);
  std::string long_csv = "dialogue_id,annotator_id,";
  bool header = true;
  json all = json::array();
  for (const MetricSeries& s : series) {
    const std::string csv = MetricSeriesToCsv(s);
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    if (header) {
      long_csv += line + "\n";
      header = false;
    }
    while (std::getline(lines, line)) {
      long_csv += CsvField(s.dialogue_id) + "," + CsvField(s.annotator_id) + "," + line + "\n";
    }
    if (!o.out.empty()) {
      WriteText(fs::path(o.out) / "series" /
                    (FileSafe(s.dialogue_id) + "__" + FileSafe(s.annotator_id) + ".csv"),
                csv);
    }
    all.push_back(MetricSeriesToJson(s, cfg));
  }
  if (header) long_csv += "turn_index,bat,pat,cum_bat,cum_pat,nrbat,net_move_benefit,nra\n";
  if (o.out.empty()) {
    out << long_csv;
  } else {
    WriteText(fs::path(o.out) / "scores.csv", long_csv);
    WriteText(fs::path(o.out) / "scores.json", all.dump(2) + "\n");
    out << "scored " << series.size() << " series into " << o.out << '\n';
  }
  return 0;
}

std::string RenderAgreement(const AgreementReport& r) {
  std::ostringstream s;
  s << "raters: ";
  for (std::size_t i = 0; i < r.raters.size(); ++i) s << (i ? ", " : "") << r.raters[i];
  s << "\nitems: " << r.n_items << " (excluded " << r.excluded_items << ")\n";
  auto opt = [](const std::optional<double>& v) {
    return v ? FormatFixed(*v, 3) : std::string("-");
  };
  for (const char* m : {"bat", "pat", "nrbat"}) {
    auto it = r.spearman.find(m);
    s << "spearman " << m << ": ";
    if (it != r.spearman.end() && it->second) {
      s << FormatFixed(it->second->rho, 3) << " (p "
        << (it->second->p < 0.001 ? std::string("<.001") : FormatFixed(it->second->p, 3))
        << ")\n";
    } else {
      s << "-\n";
    }
  }
  s << "cohen kappa commitment: " << opt(r.cohen_kappa_commitment) << '\n';
  for (const char* m : {"rel", "man", "qual"}) {
    auto it = r.randolph_kappa.find(m);
    s << "randolph kappa " << m << ": "
      << (it != r.randolph_kappa.end() ? opt(it->second) : std::string("-")) << '\n';
  }
  s << "consistency tpr: "
    << (r.consistency_no_positives ? std::string("- (no inconsistencies marked)")
                                   : FormatFixed(r.consistency_tpr, 3))
    << '\n';
  s << "cohen kappa outcome: " << opt(r.outcome_kappa) << '\n';
  s << "reasons jaccard: " << opt(r.reasons_jaccard) << '\n';
  return s.str();
}

int CmdAgree(const CommonOptions& o, const std::vector<std::string>& raters,
             std::ostream& out, std::ostream& err) {
  const WeightConfig cfg = LoadWeights(o, err);
  const Corpus corpus = Load(o, err);
  const std::size_t available = raters.empty() ? corpus.Annotators().size() : raters.size();
  if (available < 2) {
    throw Error(ErrorCode::kInsufficientData,
                "agreement needs at least two raters, corpus has " +
                    std::to_string(available));
  }
  const AgreementReport r = AgreementAmongRaters(corpus, raters, cfg);
  out << RenderAgreement(r);
  if (!o.out.empty()) WriteText(o.out, AgreementToJson(r).dump(2) + "\n");
  return 0;
}

int CmdRegress(const CommonOptions& o, const std::string& reason_name,
               std::ostream& out, std::ostream& err) {
  const WeightConfig cfg = LoadWeights(o, err);
  const Corpus corpus = Load(o, err);
  LogisticOptions lo;
  lo.auc_bootstrap.seed = o.seed;
  const OutcomeDataset data = BuildOutcomeDataset(corpus, cfg);
  const RegressionFit base = FitOutcomeModel(data, lo);
  out << RenderRegression(base, "Outcome ~ BaT + PaT (all turns)");
  json doc = {{"baseline", RegressionToJson(base)}};

  std::vector<Reason> reasons;
  if (reason_name == "all") {
    reasons = {Reason::kLogical, Reason::kCredibility, Reason::kEmotional};
  } else if (reason_name == "logical") {
    reasons = {Reason::kLogical};
  } else if (reason_name == "credibility") {
    reasons = {Reason::kCredibility};
  } else if (reason_name == "emotional") {
    reasons = {Reason::kEmotional};
  }
  json conditioned = json::object();
  for (Reason r : reasons) {
    const std::string name(ReasonName(r));
    try {
      const RegressionFit fit = FitOutcomeModel(FilterByReason(data, r), lo);
      out << '\n' << RenderRegression(fit, "Outcome ~ BaT + PaT (reason: " + name + ")");
      conditioned[name] = RegressionToJson(fit);
    } catch (const Error& e) {
      err << "warning: reason " << name << ": " << e.what() << '\n';
      conditioned[name] = {{"error", ErrorCodeName(e.code())}, {"message", e.what()}};
    }
  }
  if (!reasons.empty()) doc["conditioned"] = conditioned;
  if (!o.out.empty()) WriteText(o.out, doc.dump(2) + "\n");
  return 0;
}

struct LlmOptions {
  std::string endpoint;
  std::string model;
  std::string variant = "zero";
  std::string api_key_env;
  double temperature = 0.1;
  int max_retries = 3;
  double rate_limit = 60.0;
  std::string run_id;
  std::string reasoning_budget;
  std::vector<std::string> dialogues;
  std::string record_cassette;
  int max_turns = 0;
};

int CmdLlmEval(const CommonOptions& o, const LlmOptions& l, std::ostream& out,
               std::ostream& err) {
  const Corpus corpus = Load(o, err);
  ModelConfig cfg;
  cfg.endpoint_url = l.endpoint;
  cfg.model_name = l.model;
  cfg.api_key_ref = l.api_key_env;
  cfg.temperature = l.temperature;
  cfg.max_retries = l.max_retries;
  cfg.rate_limit = l.rate_limit;
  cfg.prompt_variant = *ParsePromptVariant(l.variant);
  if (!l.reasoning_budget.empty()) {
    cfg.reasoning_budget = json::parse(l.reasoning_budget, nullptr, false);
    if (cfg.reasoning_budget.is_discarded()) {
      throw Error(ErrorCode::kOutOfRange, "--reasoning-budget must be a JSON object",
                  "reasoning_budget");
    }
  }
  cfg.Validate();
  std::shared_ptr<ChatClient> client = MakeChatClient(cfg);
  if (!l.record_cassette.empty()) {
    client = std::make_shared<RecordingClient>(client, l.record_cassette);
  }
  RunOptions ro;
  ro.runs_root = o.out.empty() ? fs::path("runs") : fs::path(o.out);
  if (!l.run_id.empty()) ro.run_id = l.run_id;
  ro.corpus_ref = fs::path(o.corpus).filename().string();
  ro.concurrency = o.jobs;
  ro.seed = o.seed;
  ro.dialogue_ids = l.dialogues;
  if (l.max_turns > 0) ro.max_turns = l.max_turns;
  const EvalRun run = RunEvaluation(corpus, cfg, *client, ro);
  out << run.ManifestJson().dump(2) << '\n';
  return 0;
}

struct CompareOptions {
  std::vector<std::string> runs;
  std::string runs_root = "runs";
  std::string gold;
  std::vector<std::string> effects;  // treatment:control
  double alpha = 0.05;
};

int CmdCompare(const CommonOptions& o, const CompareOptions& c, std::ostream& out,
               std::ostream& err) {
  const WeightConfig cfg = LoadWeights(o, err);
  const Corpus corpus = Load(o, err);
  const auto annotators = corpus.Annotators();
  const std::string gold = !c.gold.empty() ? c.gold
                           : annotators.empty() ? std::string() : annotators.front();
  if (gold.empty()) {
    throw Error(ErrorCode::kInsufficientData, "corpus has no human labels to compare with");
  }
  std::vector<std::string> run_ids = c.runs;
  for (const std::string& e : c.effects) {
    const auto colon = e.find(':');
    if (colon == std::string::npos) {
      throw Error(ErrorCode::kOutOfRange, "--effect expects TREATMENT:CONTROL", e);
    }
    for (std::string id : {e.substr(0, colon), e.substr(colon + 1)}) {
      if (std::find(run_ids.begin(), run_ids.end(), id) == run_ids.end()) {
        run_ids.push_back(id);
      }
    }
  }
  if (run_ids.empty()) {
    throw Error(ErrorCode::kInsufficientData, "compare needs at least one --run");
  }
  std::map<std::string, EvalRun> runs;
  std::vector<std::pair<std::string, AgreementReport>> rows;
  json doc = {{"gold", gold}, {"comparisons", json::array()}};
  for (const std::string& id : run_ids) {
    RunStore store(c.runs_root, id);
    if (!store.Exists()) {
      throw Error(ErrorCode::kRunNotFound, "no eval run '" + id + "' under " + c.runs_root, id);
    }
    EvalRun run = store.Load();
    const HumanComparison hc = CompareToHuman(run, corpus, gold, cfg);
    rows.emplace_back(run.annotator_id, hc.agreement);
    json cj = HumanComparisonToJson(hc);
    cj["run_id"] = id;
    doc["comparisons"].push_back(std::move(cj));
    runs.emplace(id, std::move(run));
  }
  const ReportGrid grid = AgreementGrid("Agreement with " + gold, rows, c.alpha);
  out << grid.Render();
  doc["grid"] = grid.ToJson();
  for (const auto& cj : doc["comparisons"]) {
    out << cj["model"].get<std::string>() << ": shared " << cj["shared_turns"].get<std::size_t>()
        << " turns, excluded " << cj["excluded_turns"].get<std::size_t>()
        << ", outcome AUC "
        << (cj["outcome_auc"].is_null() ? std::string("-")
                                        : FormatFixed(cj["outcome_auc"].get<double>(), 3))
        << '\n';
  }

  std::vector<TurnAnnotation> gold_labels;
  for (const auto& a : corpus.annotations) {
    if (a.annotator_id == gold) gold_labels.push_back(a);
  }
  json effects = json::array();
  EffectSizeOptions eo;
  eo.alpha = c.alpha;
  eo.bootstrap.seed = o.seed;
  for (const std::string& e : c.effects) {
    const auto colon = e.find(':');
    const EvalRun& t = runs.at(e.substr(0, colon));
    const EvalRun& k = runs.at(e.substr(colon + 1));
    const auto summaries =
        CompareConditions(GroupAgreement(corpus, t.Annotations(), gold_labels, cfg),
                          GroupAgreement(corpus, k.Annotations(), gold_labels, cfg),
                          BatteryMetrics(), eo);
    out << '\n'
        << RenderEffectSizes(summaries, t.annotator_id + " vs " + k.annotator_id);
    json rows_json = json::array();
    for (const auto& s : summaries) rows_json.push_back(EffectSizeToJson(s));
    effects.push_back({{"treatment", t.run_id}, {"control", k.run_id}, {"rows", rows_json}});
  }
  if (!c.effects.empty()) doc["effects"] = effects;
  if (!o.out.empty()) WriteText(o.out, doc.dump(2) + "\n");
  return 0;
}

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir = "data";
  std::string runs_root = "runs";
  std::string token_env;
  std::string static_dir;
  std::string corpus_name;
};

HttpServer* g_server = nullptr;

void HandleSignal(int) {
  if (g_server) g_server->Stop();
}

int CmdServe(const CommonOptions& o, const ServeOptions& s, std::ostream& out,
             std::ostream& err) {
  ServiceOptions so;
  so.data_dir = s.data_dir;
  so.runs_root = s.runs_root;
  so.weights = LoadWeights(o, err);
  so.seed = o.seed;
  if (!s.token_env.empty()) {
    const char* token = std::getenv(s.token_env.c_str());
    if (token == nullptr) {
      throw Error(ErrorCode::kAuthFailure,
                  "environment variable " + s.token_env + " is not set", s.token_env);
    }
    so.bearer_token = token;
  }
  if (!s.static_dir.empty()) so.static_dir = s.static_dir;
  Service service(so);
  const std::string name =
      s.corpus_name.empty() ? fs::path(o.corpus).stem().string() : s.corpus_name;
  service.AddCorpus(name, Load(o, err));
  HttpServer server(service);
  if (!server.Bind(s.host, s.port)) {
    throw Error(ErrorCode::kIoError,
                "cannot bind " + s.host + ":" + std::to_string(s.port));
  }
  out << "serving corpus '" << name << "' on http://" << s.host << ':' << s.port << '\n'
      << std::flush;
  g_server = &server;
  std::signal(SIGINT, HandleSignal);
  std::signal(SIGTERM, HandleSignal);
  server.ListenAfterBind();
  g_server = nullptr;
  return 0;
}

void AddCommon(CLI::App* sub, CommonOptions& o, bool weights, bool seed) {
  sub->add_option("--corpus", o.corpus, "Corpus file (canonical JSON or table)")
      ->required();
  if (weights) {
    sub->add_option("--weights", o.weights, "Weight configuration JSON (defaults if omitted)");
  }
  if (seed) sub->add_option("--seed", o.seed, "Seed for every random draw")->capture_default_str();
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Strategic discourse metrics: scoring, agreement, regression and LLM evaluation",
               "cobra"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  CommonOptions common;
  app.add_flag("-v,--verbose", common.verbose, "Progress notes on stderr");

  auto* ingest = app.add_subcommand("ingest", "Convert an annotation table into canonical JSON");
  std::string mapping;
  AddCommon(ingest, common, false, false);
  ingest->add_option("--mapping", mapping, "Column mapping JSON for the table");
  ingest->add_option("--out", common.out, "Output JSON file (stdout if omitted)");

  auto* score = app.add_subcommand("score", "Score every (dialogue, annotator) into metric series");
  AddCommon(score, common, true, false);
  score->add_option("--out", common.out,
                    "Output directory for scores.csv, scores.json and series/*.csv "
                    "(long CSV on stdout if omitted)");
  score->add_option("--jobs", common.jobs, "Parallel workers across dialogues");

  auto* agree = app.add_subcommand("agree", "Inter-annotator agreement report");
  std::vector<std::string> raters;
  AddCommon(agree, common, true, false);
  agree->add_option("--raters", raters, "Annotators to compare (all if omitted)")
      ->delimiter(',');
  agree->add_option("--out", common.out, "Write the report as JSON");

  auto* regress = app.add_subcommand("regress", "Outcome logistic regression on BaT and PaT");
  std::string reason = "all";
  AddCommon(regress, common, true, true);
  regress->add_option("--reason", reason, "Reason-conditioned fits to add")
      ->check(CLI::IsMember({"none", "all", "logical", "credibility", "emotional"}))
      ->capture_default_str();
  regress->add_option("--out", common.out, "Write the fits as JSON");

  auto* llm = app.add_subcommand("llm-eval", "Label a corpus with a chat-completion model");
  LlmOptions lo;
  AddCommon(llm, common, false, true);
  llm->add_option("--model-endpoint", lo.endpoint,
                  "Chat-completion URL, or cassette:<file> to replay a recording")
      ->required();
  llm->add_option("--model-name", lo.model, "Model identifier sent to the endpoint")->required();
  llm->add_option("--variant", lo.variant, "Prompt variant")
      ->check(CLI::IsMember({"zero", "few", "constitution"}))
      ->capture_default_str();
  llm->add_option("--api-key-env", lo.api_key_env,
                  "Environment variable holding the API key");
  llm->add_option("--temperature", lo.temperature, "Sampling temperature")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  llm->add_option("--max-retries", lo.max_retries, "Retries for transient failures")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  llm->add_option("--rate-limit", lo.rate_limit, "Requests per minute across workers")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  llm->add_option("--run-id", lo.run_id, "Run id (derived from model and corpus if omitted)");
  llm->add_option("--reasoning-budget", lo.reasoning_budget,
                  "JSON object merged into each request body");
  llm->add_option("--dialogue", lo.dialogues, "Restrict to these dialogue ids");
  llm->add_option("--record-cassette", lo.record_cassette,
                  "Append every exchange to this cassette file");
  llm->add_option("--max-turns", lo.max_turns, "Stop after this many new requests");
  llm->add_option("--jobs", common.jobs, "Dialogues queried concurrently");
  llm->add_option("--out", common.out, "Runs directory (default runs)");

  auto* compare = app.add_subcommand("compare", "Model x metric agreement grid against human labels");
  CompareOptions co;
  AddCommon(compare, common, true, true);
  compare->add_option("--run", co.runs, "Eval run id (repeatable)");
  compare->add_option("--runs-root", co.runs_root, "Directory holding eval runs")
      ->capture_default_str();
  compare->add_option("--gold", co.gold, "Human annotator used as reference (first if omitted)");
  compare->add_option("--effect", co.effects,
                      "TREATMENT:CONTROL run pair for paired effect sizes (repeatable)");
  compare->add_option("--alpha", co.alpha, "Significance level")->capture_default_str();
  compare->add_option("--out", common.out, "Write the grid and comparisons as JSON");

  auto* serve = app.add_subcommand("serve", "Run the annotation and report HTTP service");
  ServeOptions so;
  AddCommon(serve, common, true, true);
  serve->add_option("--host", so.host, "Bind address")->capture_default_str();
  serve->add_option("--port", so.port, "Port")->capture_default_str();
  serve->add_option("--data-dir", so.data_dir, "Session log directory")->capture_default_str();
  serve->add_option("--runs-root", so.runs_root, "Eval run directory")->capture_default_str();
  serve->add_option("--token-env", so.token_env,
                    "Environment variable holding the bearer token");
  serve->add_option("--static", so.static_dir, "Directory served at /")
      ->check(CLI::ExistingDirectory);
  serve->add_option("--name", so.corpus_name, "Corpus name (file stem if omitted)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    const CLI::App* failing = &app;
    for (const CLI::App* sub : app.get_subcommands()) failing = sub;
    err << "error: " << e.what() << "\n\n" << failing->help();
    return 2;
  }

  try {
    if (ingest->parsed()) return CmdIngest(common, mapping, out, err);
    if (score->parsed()) return CmdScore(common, out, err);
    if (agree->parsed()) return CmdAgree(common, raters, out, err);
    if (regress->parsed()) return CmdRegress(common, reason, out, err);
    if (llm->parsed()) return CmdLlmEval(common, lo, out, err);
    if (compare->parsed()) return CmdCompare(common, co, out, err);
    if (serve->parsed()) return CmdServe(common, so, out, err);
  } catch (const Error& e) {
    err << "error: " << ErrorCodeName(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace cobra

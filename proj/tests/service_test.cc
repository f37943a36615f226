#include <fstream>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "cobra/error.h"
#include "cobra/http_server.h"
#include "cobra/metrics.h"
#include "cobra/prompt.h"
#include "cobra/service.h"
#include "cobra/session_store.h"
#include "support/fixtures.h"
#include "support/mock_endpoint.h"

namespace cobra {
namespace {

using nlohmann::json;

template <typename F>
ErrorCode CodeOf(F f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIoError;
}

json Record(const TurnAnnotation& a) {
  json j = AnnotationToJson(a);
  j.erase("dialogue_ref");
  j.erase("annotator_id");
  j.erase("turn_index");
  return j;
}

json LabelBody(const TurnAnnotation& a, bool correction = false) {
  json body = {{"turn_index", a.turn_index}, {"record", Record(a)}};
  if (correction) body["correction"] = true;
  return body;
}

// Answers every prompt with the gold label, without a network hop.
class GoldClient : public ChatClient {
 public:
  GoldClient(const Corpus& corpus, const std::string& annotator, PromptVariant v)
      : respond_(fixtures::GoldResponder(corpus, annotator, v)) {}
  ChatResponse Complete(const ChatRequest& request) override {
    return {respond_(request.user), 1.0};
  }

 private:
  fixtures::MockEndpoint::Responder respond_;
};

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fixtures::TempDir(std::string("svc-") +
                             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    corpus_ = LoadCorpus(fixtures::DataDir() / "four_turn.json");
  }

  ServiceOptions Options() {
    ServiceOptions o;
    o.data_dir = dir_ / "data";
    o.runs_root = dir_ / "runs";
    o.clock = [] { return std::string("2026-01-01T00:00:00Z"); };
    return o;
  }

  std::unique_ptr<Service> Make(ServiceOptions o) {
    auto s = std::make_unique<Service>(std::move(o));
    s->AddCorpus("fixture", corpus_);
    return s;
  }
  std::unique_ptr<Service> Make() { return Make(Options()); }

  std::vector<TurnAnnotation> Labels(const std::string& who) {
    auto out = corpus_.AnnotationsFor("fixture-4", who);
    for (auto& a : out) a.annotator_id = "carol";
    return out;
  }

  std::filesystem::path dir_;
  Corpus corpus_;
};

TEST_F(ServiceTest, ListsCorporaAndDialogues) {
  auto svc = Make();
  json list = svc->ListCorpora();
  ASSERT_EQ(list["corpora"].size(), 1u);
  EXPECT_EQ(list["corpora"][0]["name"], "fixture");
  EXPECT_EQ(list["corpora"][0]["qa_turns"], 4);
  EXPECT_EQ(svc->GetDialogue("fixture-4")["corpus"], "fixture");
  EXPECT_EQ(CodeOf([&] { svc->GetDialogue("nope"); }), ErrorCode::kDialogueNotFound);
}

TEST_F(ServiceTest, NewSessionStartsAtFirstTurn) {
  auto svc = Make();
  json s = svc->CreateSession({{"dialogue_id", "fixture-4"}, {"annotator_id", "carol"}});
  EXPECT_EQ(s["cursor"], 1);
  EXPECT_EQ(s["status"], "active");
  EXPECT_EQ(s["created_at"], "2026-01-01T00:00:00Z");
  json again = svc->CreateSession({{"dialogue_id", "fixture-4"}, {"annotator_id", "carol"}});
  EXPECT_EQ(again["session_id"], s["session_id"]);
  EXPECT_EQ(CodeOf([&] {
              svc->CreateSession({{"dialogue_id", "missing"}, {"annotator_id", "carol"}});
            }),
            ErrorCode::kDialogueNotFound);
  EXPECT_EQ(CodeOf([&] { svc->GetSession("no-such-session"); }), ErrorCode::kSessionNotFound);
}

TEST_F(ServiceTest, NextItemShowsHistoryAndBackground) {
  auto svc = Make();
  const std::string id =
      svc->CreateSession({{"dialogue_id", "fixture-4"}, {"annotator_id", "carol"}})["session_id"];
  json next = svc->NextItem(id);
  EXPECT_TRUE(next["history"].empty());
  EXPECT_EQ(next["current"]["turn_index"], 1);
  EXPECT_TRUE(next["background"].is_string());
  EXPECT_FALSE(next["schema"].empty());
  svc->SubmitLabel(id, LabelBody(Labels("alice")[0]));
  next = svc->NextItem(id);
  EXPECT_EQ(next["history"].size(), 1u);
  EXPECT_EQ(next["current"]["turn_index"], 2);
}

TEST_F(ServiceTest, LabelsMustFollowTheCursor) {
  auto svc = Make();
  const std::string id =
      svc->CreateSession({{"dialogue_id", "fixture-4"}, {"annotator_id", "carol"}})["session_id"];
  auto labels = Labels("alice");
  EXPECT_EQ(CodeOf([&] { svc->SubmitLabel(id, LabelBody(labels[2])); }),
            ErrorCode::kOutOfOrder);
  json bad = LabelBody(labels[0]);
  bad["record"]["relevance"] = 5;
  EXPECT_EQ(CodeOf([&] { svc->SubmitLabel(id, bad); }), ErrorCode::kSchemaViolation);
  EXPECT_EQ(svc->GetSession(id)["cursor"], 1);
}

TEST_F(ServiceTest, CompletingASessionYieldsCanonicalSeries) {
  auto svc = Make();
  const std::string id =
      svc->CreateSession({{"dialogue_id", "fixture-4"}, {"annotator_id", "carol"}})["session_id"];
  auto labels = Labels("alice");
  json last;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    last = svc->SubmitLabel(id, LabelBody(labels[i]));
    EXPECT_EQ(last["canonical"], i + 1 == labels.size());
  }
  EXPECT_EQ(last["accepted"]["status"], "complete");
  EXPECT_EQ(last["accepted"]["cursor"], 0);
  const Dialogue& d = *corpus_.FindDialogue("fixture-4");
  MetricSeries expect = ScoreDialogue(d, labels, WeightConfig{});
  const json& turns = last["provisional_series"]["turns"];
  ASSERT_EQ(turns.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(turns[i]["bat"].get<double>(), expect.bat[i]);
    EXPECT_DOUBLE_EQ(turns[i]["nrbat"].get<double>(), expect.nrbat[i]);
  }
  EXPECT_EQ(CodeOf([&] { svc->SubmitLabel(id, LabelBody(labels[0])); }),
            ErrorCode::kSessionComplete);
}

TEST_F(ServiceTest, ProvisionalAgreesWithCanonicalOnEachTurn) {
  auto svc = Make();
  const std::string id =
      svc->CreateSession({{"dialogue_id", "fixture-4"}, {"annotator_id", "carol"}})["session_id"];
  auto labels = Labels("bob");
  MetricSeries canonical =
      ScoreDialogue(*corpus_.FindDialogue("fixture-4"), labels, WeightConfig{});
  for (std::size_t k = 0; k < labels.size(); ++k) {
    json out = svc->SubmitLabel(id, LabelBody(labels[k]));
    const json& turns = out["provisional_series"]["turns"];
    ASSERT_EQ(turns.size(), k + 1);
    for (std::size_t i = 0; i <= k; ++i) {
      EXPECT_NEAR(turns[i]["bat"].get<double>(), canonical.bat[i], 1e-12);
      EXPECT_NEAR(turns[i]["pat"].get<double>(), canonical.pat[i], 1e-12);
    }
  }
}

TEST_F(ServiceTest, CorrectionOverrideReplacesAndAudits) {
  auto svc = Make();
  const std::string id =
      svc->CreateSession({{"dialogue_id", "fixture-4"}, {"annotator_id", "carol"}})["session_id"];
  auto labels = Labels("alice");
  svc->SubmitLabel(id, LabelBody(labels[0]));
  svc->SubmitLabel(id, LabelBody(labels[1]));
  auto fixed = labels[0];
  fixed.commitment = CommitmentType::kDetrimental;
  json out = svc->SubmitLabel(id, LabelBody(fixed, true));
  EXPECT_EQ(out["accepted"]["cursor"], 3);
  EXPECT_EQ(out["accepted"]["corrected_turns"], json::array({1}));
  EXPECT_DOUBLE_EQ(out["provisional_series"]["turns"][0]["bat"].get<double>(), 0.0);
  EXPECT_EQ(CodeOf([&] { svc->SubmitLabel(id, LabelBody(labels[3], true)); }),
            ErrorCode::kOutOfOrder);
}

TEST_F(ServiceTest, SessionsSurviveRestart) {
  auto labels = Labels("alice");
  std::string id;
  {
    auto svc = Make();
    id = svc->CreateSession({{"dialogue_id", "fixture-4"}, {"annotator_id", "carol"}})[
        "session_id"];
    svc->SubmitLabel(id, LabelBody(labels[0]));
    svc->SubmitLabel(id, LabelBody(labels[1]));
  }
  auto svc = Make();
  json s = svc->GetSession(id);
  EXPECT_EQ(s["cursor"], 3);
  EXPECT_EQ(s["submitted"].size(), 2u);
}

TEST_F(ServiceTest, TornLogLineIsIgnoredOnReplay) {
  const Corpus* c = &corpus_;
  const auto log = dir_ / "s.jsonl";
  std::string id;
  auto labels = Labels("alice");
  {
    SessionStore store("fixture", c, log);
    id = store.Create("fixture-4", "carol").session_id;
    store.Submit(id, 1, labels[0]);
  }
  {
    std::ofstream out(log, std::ios::app);
    out << R"({"op": "submit", "session_id": ")" << id << R"(", "turn_ind)";
  }
  SessionStore reopened("fixture", c, log);
  AnnotationSession s = reopened.Get(id);
  EXPECT_EQ(s.cursor, 2);
  EXPECT_EQ(s.submitted.size(), 1u);
  reopened.Submit(id, 2, labels[1]);
  SessionStore third("fixture", c, log);
  EXPECT_EQ(third.Get(id).cursor, 3);
}

TEST_F(ServiceTest, CompactKeepsState) {
  const auto log = dir_ / "c.jsonl";
  auto labels = Labels("alice");
  SessionStore store("fixture", &corpus_, log);
  const std::string id = store.Create("fixture-4", "carol").session_id;
  store.Submit(id, 1, labels[0]);
  store.Submit(id, 2, labels[1]);
  store.Submit(id, 1, labels[2], true);
  const AnnotationSession before = store.Get(id);
  store.Compact();
  SessionStore reopened("fixture", &corpus_, log);
  EXPECT_EQ(reopened.Get(id), before);
}

TEST_F(ServiceTest, AgreementNeedsTwoRaters) {
  corpus_ = LoadCorpus(fixtures::DataDir() / "four_turn_single.json");
  auto svc = Make();
  EXPECT_EQ(CodeOf([&] { svc->GetReport("agreement", {}); }), ErrorCode::kInsufficientData);
}

TEST_F(ServiceTest, DuplicatedRaterAgreesPerfectly) {
  for (auto a : corpus_.AnnotationsFor("fixture-4", "bob")) {
    a.annotator_id = "bob2";
    corpus_.annotations.push_back(a);
  }
  FinalizeCorpus(corpus_);
  auto svc = Make();
  json r = svc->GetReport("agreement", {{"raters", "bob,bob2"}});
  const json& a = r["agreement"];
  EXPECT_NEAR(a["cohen_kappa_commitment"].get<double>(), 1.0, 1e-12);
  EXPECT_NEAR(a["consistency_tpr"].get<double>(), 1.0, 1e-12);
  EXPECT_NEAR(a["spearman"]["bat"]["rho"].get<double>(), 1.0, 1e-12);
}

TEST_F(ServiceTest, ReportsAreCachedUntilLabelsChange) {
  auto svc = Make();
  json first = svc->GetReport("agreement", {});
  EXPECT_EQ(svc->report_cache_hits(), 0u);
  EXPECT_EQ(svc->GetReport("agreement", {}), first);
  EXPECT_EQ(svc->report_cache_hits(), 1u);
  const std::string id =
      svc->CreateSession({{"dialogue_id", "fixture-4"}, {"annotator_id", "carol"}})["session_id"];
  svc->SubmitLabel(id, LabelBody(Labels("alice")[0]));
  svc->GetReport("agreement", {});
  EXPECT_EQ(svc->report_cache_hits(), 1u);
}

TEST_F(ServiceTest, SeriesReport) {
  auto svc = Make();
  json r = svc->GetReport("series", {{"dialogue_id", "fixture-4"}, {"annotator_id", "alice"}});
  EXPECT_EQ(r["series"]["turns"].size(), 4u);
  EXPECT_EQ(r["series"]["provisional"], false);
  EXPECT_EQ(CodeOf([&] { svc->GetReport("series", {{"dialogue_id", "fixture-4"}}); }),
            ErrorCode::kInsufficientData);
  EXPECT_EQ(CodeOf([&] { svc->GetReport("histogram", {}); }), ErrorCode::kOutOfRange);
}

TEST_F(ServiceTest, EvalRunThroughFactoryThenCompare) {
  ServiceOptions o = Options();
  const Corpus gold = corpus_;
  o.client_factory = [gold](const ModelConfig& cfg) -> std::shared_ptr<ChatClient> {
    return std::make_shared<GoldClient>(gold, "alice", cfg.prompt_variant);
  };
  auto svc = Make(std::move(o));
  ModelConfig cfg;
  cfg.endpoint_url = "http://unused";
  cfg.model_name = "fake";
  cfg.rate_limit = 1e9;
  json started = svc->StartEvalRun({{"model", cfg.ToJson()}, {"run_id", "r1"}, {"wait", true}});
  EXPECT_EQ(started["status"], "complete");
  EXPECT_EQ(started["summary"]["summary"]["parsed"], 4);
  EXPECT_EQ(svc->GetEvalRun("r1")["status"], "complete");
  EXPECT_EQ(CodeOf([&] { svc->GetEvalRun("r2"); }), ErrorCode::kRunNotFound);

  json cmp = svc->GetReport("llm-comparison", {{"runs", "r1"}, {"gold", "alice"}});
  EXPECT_EQ(cmp["gold"], "alice");
  EXPECT_NEAR(cmp["comparisons"][0]["agreement"]["cohen_kappa_commitment"].get<double>(), 1.0,
              1e-12);
  EXPECT_EQ(CodeOf([&] { svc->GetReport("llm-comparison", {{"runs", "zzz"}}); }),
            ErrorCode::kRunNotFound);
}

TEST_F(ServiceTest, BackgroundEvalRunFinishes) {
  ServiceOptions o = Options();
  const Corpus gold = corpus_;
  o.client_factory = [gold](const ModelConfig& cfg) -> std::shared_ptr<ChatClient> {
    return std::make_shared<GoldClient>(gold, "bob", cfg.prompt_variant);
  };
  auto svc = Make(std::move(o));
  ModelConfig cfg;
  cfg.endpoint_url = "http://unused";
  cfg.model_name = "fake";
  cfg.rate_limit = 1e9;
  json started = svc->StartEvalRun({{"model", cfg.ToJson()}, {"run_id", "bg"}});
  EXPECT_EQ(started["run_id"], "bg");
  svc->WaitForEvalRuns();
  EXPECT_EQ(svc->GetEvalRun("bg")["status"], "complete");
}

class HttpTest : public ServiceTest {
 protected:
  void Start(std::optional<std::string> token = std::nullopt) {
    ServiceOptions o = Options();
    o.bearer_token = std::move(token);
    svc_ = Make(std::move(o));
    http_ = std::make_unique<HttpServer>(*svc_);
    port_ = http_->BindToAnyPort("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { http_->ListenAfterBind(); });
    http_->WaitUntilReady();
  }
  void TearDown() override {
    if (http_) {
      http_->Stop();
      thread_.join();
    }
  }
  httplib::Client Client() { return httplib::Client("127.0.0.1", port_); }

  std::unique_ptr<Service> svc_;
  std::unique_ptr<HttpServer> http_;
  std::thread thread_;
  int port_ = 0;
};

TEST_F(HttpTest, SessionLifecycleOverHttp) {
  Start();
  auto cli = Client();
  auto res = cli.Post("/sessions",
                      json{{"dialogue_id", "fixture-4"}, {"annotator_id", "carol"}}.dump(),
                      "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 201);
  const std::string id = json::parse(res->body)["session_id"];

  res = cli.Get("/sessions/" + id + "/next");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["current"]["turn_index"], 1);

  auto labels = Labels("alice");
  res = cli.Post("/sessions/" + id + "/labels", LabelBody(labels[2]).dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 409);
  EXPECT_EQ(json::parse(res->body)["code"], "OutOfOrder");

  res = cli.Post("/sessions/" + id + "/labels", LabelBody(labels[0]).dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["accepted"]["cursor"], 2);

  res = cli.Get("/sessions/unknown");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  res = cli.Get("/dialogues/fixture-4");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  res = cli.Get("/health");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
}

TEST_F(HttpTest, ReportsOverHttp) {
  Start();
  auto cli = Client();
  auto res = cli.Get("/reports/agreement?raters=alice");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 422);
  EXPECT_EQ(json::parse(res->body)["code"], "InsufficientData");
  res = cli.Get("/reports/agreement?raters=alice,bob");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_TRUE(json::parse(res->body)["agreement"].contains("spearman"));
  res = cli.Get("/eval-runs/none");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
}

TEST_F(HttpTest, BearerTokenRequired) {
  Start("s3cret");
  auto cli = Client();
  auto res = cli.Get("/corpora");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 401);
  EXPECT_EQ(json::parse(res->body)["code"], "Unauthorized");
  cli.set_bearer_token_auth("wrong");
  res = cli.Get("/corpora");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 401);
  cli.set_bearer_token_auth("s3cret");
  res = cli.Get("/corpora");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
}

TEST(HttpStatus, Mapping) {
  EXPECT_EQ(HttpStatusFor(ErrorCode::kOutOfOrder), 409);
  EXPECT_EQ(HttpStatusFor(ErrorCode::kInsufficientData), 422);
  EXPECT_EQ(HttpStatusFor(ErrorCode::kSessionNotFound), 404);
  EXPECT_EQ(HttpStatusFor(ErrorCode::kSchemaViolation), 400);
}

}  // namespace
}  // namespace cobra

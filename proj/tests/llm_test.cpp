// Copyright 2026-present the wipcast project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace wipcast {
namespace {

ChatRequest predictor_request(std::vector<RetrievedContext> retrieved, std::optional<double> current = std::nullopt) {
  ChatRequest req;
  req.user_text = "forecast";
  StructuredContext ctx;
  ctx.role = ContextRole::predictor;
  ctx.retrieved = std::move(retrieved);
  ctx.current_close = current;
  req.context = ctx;
  return req;
}

TEST(Llm, FormatPrediction) {
  EXPECT_EQ(format_prediction(11.833333), "PREDICTION: 11.83");
  EXPECT_EQ(format_prediction(70), "PREDICTION: 70.00");
}

TEST(Llm, StubPredictorWeightedMean) {
  StubBackend stub;
  // (0.9*10 + 0.8*12 + 0.7*14) / 2.4 = 28.4 / 2.4 = 11.8333
  const auto resp = stub.chat(predictor_request({{"2024-01-01", 10, 0.9}, {"2024-01-02", 12, 0.8}, {"2024-01-03", 14, 0.7}}));
  EXPECT_NE(resp.text.find("PREDICTION: 11.83"), std::string::npos) << resp.text;
  EXPECT_NEAR(extract_prediction(resp.text), 11.83, 1e-12);
  EXPECT_EQ(resp.backend_id, "stub");
}

TEST(Llm, StubPredictorEdgeCases) {
  StubBackend stub;
  EXPECT_EQ(extract_prediction(stub.chat(predictor_request({}, 42)).text), 42.0);
  EXPECT_THROW(stub.chat(predictor_request({})), InvalidArgument);
  // Negative similarities carry no weight; all non-positive falls back to the plain mean.
  EXPECT_EQ(StubBackend::weighted_target_mean({{"a", 10, 1.0}, {"b", 100, -0.5}}), 10.0);
  EXPECT_EQ(StubBackend::weighted_target_mean({{"a", 10, -1.0}, {"b", 20, 0.0}}), 15.0);
  ChatRequest bare;
  EXPECT_THROW(stub.chat(bare), InvalidArgument);
}

TEST(Llm, StubFusionFollowsSuppliedWeights) {
  StubBackend stub;
  ChatRequest req;
  StructuredContext ctx;
  ctx.role = ContextRole::fusion;
  ctx.predictions = {{"daily", 10}, {"weekday", 12}, {"windowed", 20}};
  ctx.trend_label = "stable";
  ctx.weights = std::array<double, 3>{0.2, 0.2, 0.6};
  req.context = ctx;
  EXPECT_NE(stub.chat(req).text.find("PREDICTION: 16.40"), std::string::npos);
  req.context->weights.reset();
  EXPECT_NE(stub.chat(req).text.find("PREDICTION: 14.00"), std::string::npos);
  // ReAct decoding without a trend observation asks for one first.
  req.context->trend_label.reset();
  req.decoding.max_steps = 4;
  EXPECT_NE(stub.chat(req).text.find("Action: get_trend()"), std::string::npos);
}

TEST(Llm, StubParaphraseEchoes) {
  StubBackend stub;
  ChatRequest req;
  StructuredContext ctx;
  ctx.role = ContextRole::paraphrase;
  ctx.source_text = "The WiP items opened at 5.";
  req.context = ctx;
  EXPECT_EQ(stub.chat(req).text, "The WiP items opened at 5.");
}

TEST(Llm, ExtractPrediction) {
  EXPECT_EQ(extract_prediction("Reasoning... PREDICTION: 71.5"), 71.5);
  EXPECT_EQ(extract_prediction("prediction: 3\nthen PREDICTION: **42.25**"), 42.25);
  EXPECT_EQ(extract_prediction("I think about 12 items, maybe 13."), 13.0);
  EXPECT_EQ(extract_prediction("PREDICTION: -4"), -4.0);
  EXPECT_EQ(extract_prediction("PREDICTION: n/a but value 9"), 9.0);
  EXPECT_EQ(extract_prediction("step2 gives 7"), 7.0);  // "step2" is not a standalone number
  EXPECT_THROW(extract_prediction("no digits here"), NoNumberFound);
  EXPECT_THROW(extract_prediction("v2 and x3"), NoNumberFound);
}

TEST(Llm, RecordingBackendOrdersByTag) {
  auto rec = std::make_shared<RecordingBackend>(std::make_shared<StubBackend>());
  auto req = predictor_request({}, 5);
  req.tag = "2024-01-02/daily";
  rec->chat(req);
  req.tag = "2024-01-01/weekday";
  rec->chat(req);
  ChatRequest bad;
  bad.tag = "2024-01-01/broken";
  EXPECT_THROW(rec->chat(bad), InvalidArgument);
  EXPECT_EQ(rec->size(), 3u);
  const auto text = rec->jsonl();
  const auto a = text.find("2024-01-01/broken");
  const auto b = text.find("2024-01-01/weekday");
  const auto c = text.find("2024-01-02/daily");
  EXPECT_LT(a, b);
  EXPECT_LT(b, c);
  EXPECT_NE(text.find("\"error\""), std::string::npos);
}

TEST(Llm, LoggingBackendAppendsJsonl) {
  const auto dir = testing::temp_dir("llm_log");
  const auto path = dir + "/log.jsonl";
  {
    LoggingBackend log(std::make_shared<StubBackend>(), path);
    auto req = predictor_request({{"2024-01-01", 8, 1.0}});
    req.tag = "t1";
    log.chat(req);
  }
  const auto text = read_text_file(path);
  const auto j = nlohmann::json::parse(text.substr(0, text.find('\n')));
  EXPECT_EQ(j["tag"], "t1");
  EXPECT_EQ(j["backend"], "stub");
  EXPECT_EQ(j["context"]["retrieved"][0]["target"], 8.0);
  EXPECT_NE(j["response"].get<std::string>().find("PREDICTION: 8.00"), std::string::npos);
}

}  // namespace
}  // namespace wipcast

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
#pragma once

// Chat-model client abstraction.
//
// Every prompt asks the model to finish with a line "PREDICTION: <number>".
// Requests may carry a machine-readable copy of the numbers shown in the
// prompt; the stub backend answers from that copy alone, which makes whole
// pipeline runs reproducible without a model.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wipcast/error.hpp"
#include "wipcast/http.hpp"

namespace wipcast {

inline constexpr std::string_view kPredictionMarker = "PREDICTION:";

/// "PREDICTION: 11.83"
inline std::string format_prediction(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "PREDICTION: %.2f", value);
  return buf;
}

class NoNumberFound : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Parses a decimal number starting at s[i]; returns the length consumed.
inline std::size_t scan_number(std::string_view s, std::size_t i, double& out) {
  std::size_t j = i;
  if (j < s.size() && (s[j] == '-' || s[j] == '+')) ++j;
  const std::size_t digits_start = j;
  while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
  if (j == digits_start) return 0;
  if (j + 1 < s.size() && s[j] == '.' && std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
    ++j;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
  }
  std::string_view token = s.substr(i, j - i);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto res = std::from_chars(token.data(), token.data() + token.size(), out);
  if (res.ec != std::errc{}) return 0;
  return j - i;
}

}  // namespace detail

/// The number after the last "PREDICTION:" marker; without a usable marker,
/// the last standalone number in the text.
inline double extract_prediction(std::string_view text) {
  std::string upper(text);
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  const auto marker = upper.rfind(kPredictionMarker);
  if (marker != std::string::npos) {
    std::size_t i = marker + kPredictionMarker.size();
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '*' || text[i] == '$')) ++i;
    double v = 0;
    if (detail::scan_number(text, i, v) > 0) return v;
  }
  std::optional<double> last;
  for (std::size_t i = 0; i < text.size();) {
    const bool boundary = i == 0 || !(detail::is_word_char(text[i - 1]) || text[i - 1] == '.');
    double v = 0;
    const std::size_t n = boundary ? detail::scan_number(text, i, v) : 0;
    if (n > 0 && (i + n == text.size() || !detail::is_word_char(text[i + n]))) {
      last = v;
      i += n;
    } else {
      ++i;
    }
  }
  if (!last) throw NoNumberFound("no number found in model response");
  return *last;
}

// ---------------------------------------------------------------------------
// Requests

enum class ContextRole { predictor, fusion, paraphrase };

struct RetrievedContext {
  std::string date;
  double target = 0;
  double similarity = 0;

  friend bool operator==(const RetrievedContext&, const RetrievedContext&) = default;
};

/// Machine-readable mirror of the numbers in a prompt.
struct StructuredContext {
  ContextRole role = ContextRole::predictor;
  std::vector<RetrievedContext> retrieved;
  std::optional<double> current_close;
  std::map<std::string, double> predictions;    // agent id -> value
  std::optional<std::string> trend_label;
  std::optional<std::array<double, 3>> weights;  // daily, weekday, windowed
  std::vector<std::string> observations;         // tool results, ReAct mode
  std::optional<std::string> source_text;        // paraphrase input

  friend bool operator==(const StructuredContext&, const StructuredContext&) = default;
};

struct Decoding {
  bool deterministic = true;
  int max_steps = 1;
};

struct ChatRequest {
  std::string system_text;
  std::string user_text;
  std::optional<StructuredContext> context;
  Decoding decoding;
  std::string tag;  // prompt reference recorded in logs, e.g. "2012-03-01/daily"
};

struct ChatResponse {
  std::string text;
  std::string backend_id;
};

inline nlohmann::json to_json(const StructuredContext& c) {
  nlohmann::json j;
  j["role"] = c.role == ContextRole::predictor ? "predictor" : c.role == ContextRole::fusion ? "fusion" : "paraphrase";
  j["retrieved"] = nlohmann::json::array();
  for (const auto& r : c.retrieved) j["retrieved"].push_back({{"date", r.date}, {"target", r.target}, {"similarity", r.similarity}});
  if (c.current_close) j["current_close"] = *c.current_close;
  if (!c.predictions.empty()) j["predictions"] = c.predictions;
  if (c.trend_label) j["trend_label"] = *c.trend_label;
  if (c.weights) j["weights"] = *c.weights;
  if (!c.observations.empty()) j["observations"] = c.observations;
  if (c.source_text) j["source_text"] = *c.source_text;
  return j;
}

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse chat(const ChatRequest& req) = 0;
  virtual std::string id() const = 0;
};

/// Deterministic backend computing its answer from the structured context.
///
/// predictor: similarity-weighted mean of retrieved targets (negative
///   similarities count as zero; all-zero weights fall back to the plain
///   mean); with nothing retrieved, the current close (persistence).
/// fusion: weighted mean of the agent predictions using the supplied weights
///   (equal weights when none). In ReAct mode (max_steps > 1) the stub first
///   asks for the trend when it has not been observed yet.
/// paraphrase: echoes the source text.
class StubBackend final : public ChatBackend {
 public:
  ChatResponse chat(const ChatRequest& req) override {
    if (!req.context) throw InvalidArgument("stub backend needs a structured context");
    const auto& c = *req.context;
    switch (c.role) {
      case ContextRole::predictor: return {predictor_answer(c), id()};
      case ContextRole::fusion: return {fusion_answer(c, req.decoding), id()};
      case ContextRole::paraphrase: return {c.source_text.value_or(req.user_text), id()};
    }
    throw InvalidArgument("unknown context role");
  }

  std::string id() const override { return "stub"; }

  static double weighted_target_mean(const std::vector<RetrievedContext>& retrieved) {
    double num = 0.0;
    double den = 0.0;
    for (const auto& r : retrieved) {
      const double w = std::max(0.0, r.similarity);
      num += w * r.target;
      den += w;
    }
    if (den > 0.0) return num / den;
    double sum = 0.0;
    for (const auto& r : retrieved) sum += r.target;
    return sum / static_cast<double>(retrieved.size());
  }

 private:
  static std::string predictor_answer(const StructuredContext& c) {
    if (c.retrieved.empty()) {
      if (!c.current_close) throw InvalidArgument("stub predictor needs retrieved stories or a current close");
      return "No historical examples available; assuming persistence.\n" + format_prediction(*c.current_close);
    }
    return "Similarity-weighted mean of " + std::to_string(c.retrieved.size()) + " retrieved outcomes.\n" +
           format_prediction(weighted_target_mean(c.retrieved));
  }

  static std::string fusion_answer(const StructuredContext& c, const Decoding& d) {
    if (d.max_steps > 1 && !c.trend_label) {
      return "Thought: I should check the recent trend before weighting the agents.\nAction: get_trend()";
    }
    static constexpr std::array<const char*, 3> kAgents = {"daily", "weekday", "windowed"};
    std::array<double, 3> w = c.weights.value_or(std::array<double, 3>{1.0 / 3, 1.0 / 3, 1.0 / 3});
    std::array<double, 3> v{};
    for (std::size_t i = 0; i < 3; ++i) {
      auto it = c.predictions.find(kAgents[i]);
      if (it == c.predictions.end()) throw InvalidArgument(std::string("stub fusion: missing prediction for ") + kAgents[i]);
      v[i] = it->second;
    }
    const double lo = std::min({v[0], v[1], v[2]});
    const double hi = std::max({v[0], v[1], v[2]});
    double acc = 0.0;
    for (std::size_t i = 0; i < 3; ++i) acc += w[i] * (v[i] - lo);
    const double value = std::clamp(lo + acc, lo, hi);
    return "Thought: weighting agents for a " + c.trend_label.value_or("unknown") + " trend.\n" +
           format_prediction(value);
  }
};

/// Chat-completions over HTTP: {model, messages[], <decoding params>} ->
/// choices[0].message.content. Concurrent requests are throttled.
class RemoteChatBackend final : public ChatBackend {
 public:
  static constexpr int kMaxConcurrency = 64;

  struct Options {
    std::string endpoint;
    std::string model = "o3-mini";
    HttpOptions http;
    int max_concurrent = 4;
    /// Merged into the request body when deterministic decoding is asked for.
    nlohmann::json deterministic_params = {{"temperature", 0}, {"seed", 0}};
  };

  explicit RemoteChatBackend(Options opt)
      : opt_(std::move(opt)), slots_(std::clamp(opt_.max_concurrent, 1, kMaxConcurrency)) {
    if (opt_.endpoint.empty()) throw ConfigError("remote chat backend needs an endpoint");
    Url::parse(opt_.endpoint);
  }

  ChatResponse chat(const ChatRequest& req) override {
    nlohmann::json body = {{"model", opt_.model},
                           {"messages",
                            {{{"role", "system"}, {"content", req.system_text}},
                             {{"role", "user"}, {"content", req.user_text}}}}};
    if (req.decoding.deterministic && opt_.deterministic_params.is_object()) {
      for (const auto& [k, v] : opt_.deterministic_params.items()) body[k] = v;
    }
    slots_.acquire();
    struct Release {
      std::counting_semaphore<kMaxConcurrency>& s;
      ~Release() { s.release(); }
    } release{slots_};
    std::string text = post_json(opt_.endpoint, body, opt_.http, [](const nlohmann::json& j) {
      std::string content = j.at("choices").at(0).at("message").at("content").get<std::string>();
      if (content.empty()) throw MalformedResponse("empty completion", 0);
      return content;
    });
    return {std::move(text), id()};
  }

  std::string id() const override { return "remote:" + opt_.model; }

 private:
  Options opt_;
  std::counting_semaphore<kMaxConcurrency> slots_;
};

/// Decorator appending every request and response (or error) to a
/// JSON-lines file.
class LoggingBackend final : public ChatBackend {
 public:
  LoggingBackend(std::shared_ptr<ChatBackend> inner, const std::string& path)
      : inner_(std::move(inner)), out_(path, std::ios::app) {
    if (!inner_) throw InvalidArgument("logging backend needs an inner backend");
    if (!out_) throw Error("cannot open chat log '" + path + "'");
  }

  ChatResponse chat(const ChatRequest& req) override {
    nlohmann::json rec = {{"tag", req.tag}, {"backend", inner_->id()}, {"system", req.system_text},
                          {"user", req.user_text}};
    if (req.context) rec["context"] = to_json(*req.context);
    try {
      ChatResponse resp = inner_->chat(req);
      rec["response"] = resp.text;
      write(rec);
      return resp;
    } catch (const std::exception& e) {
      rec["error"] = e.what();
      write(rec);
      throw;
    }
  }

  std::string id() const override { return inner_->id(); }

 private:
  void write(const nlohmann::json& rec) {
    std::lock_guard lock(mutex_);
    out_ << rec.dump() << '\n';
    out_.flush();
  }

  std::shared_ptr<ChatBackend> inner_;
  std::mutex mutex_;
  std::ofstream out_;
};

/// Decorator that keeps request/response records in memory; jsonl() emits
/// them ordered by tag (stable, so multi-step exchanges keep their order),
/// which makes the log independent of thread scheduling.
class RecordingBackend final : public ChatBackend {
 public:
  explicit RecordingBackend(std::shared_ptr<ChatBackend> inner) : inner_(std::move(inner)) {
    if (!inner_) throw InvalidArgument("recording backend needs an inner backend");
  }

  ChatResponse chat(const ChatRequest& req) override {
    nlohmann::json rec = {{"tag", req.tag}, {"backend", inner_->id()}, {"system", req.system_text},
                          {"user", req.user_text}};
    if (req.context) rec["context"] = to_json(*req.context);
    try {
      ChatResponse resp = inner_->chat(req);
      rec["response"] = resp.text;
      push(req.tag, std::move(rec));
      return resp;
    } catch (const std::exception& e) {
      rec["error"] = e.what();
      push(req.tag, std::move(rec));
      throw;
    }
  }

  std::string id() const override { return inner_->id(); }

  std::string jsonl() const {
    std::lock_guard lock(mutex_);
    auto recs = records_;
    std::stable_sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::string out;
    for (const auto& [tag, rec] : recs) out += rec.dump() + "\n";
    return out;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
  }

 private:
  void push(const std::string& tag, nlohmann::json rec) {
    std::lock_guard lock(mutex_);
    records_.emplace_back(tag, std::move(rec));
  }

  std::shared_ptr<ChatBackend> inner_;
  mutable std::mutex mutex_;
  std::vector<std::pair<std::string, nlohmann::json>> records_;
};

}  // namespace wipcast

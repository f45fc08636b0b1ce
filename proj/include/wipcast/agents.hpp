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

// Predictor agents, the trend analyst and the fusion agent.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wipcast/error.hpp"
#include "wipcast/llm.hpp"
#include "wipcast/memory.hpp"
#include "wipcast/narrative.hpp"
#include "wipcast/wipseries.hpp"

namespace wipcast {

/// Agents are identified by the story granularity they work on.
using AgentId = Granularity;

inline std::string_view agent_name(AgentId id) {
  switch (id) {
    case AgentId::daily: return "DailyMemoryAgent";
    case AgentId::weekday: return "WeekdayAwareAgent";
    case AgentId::windowed: return "WindowedAgent";
  }
  return "DailyMemoryAgent";
}

namespace detail {

inline std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Predictor agents

struct Prediction {
  AgentId agent = AgentId::daily;
  double value = 0.0;
  std::vector<RetrievalResult> retrieved;
  std::string prompt_ref;
  std::string response_text;
};

struct PredictorOptions {
  std::size_t k = 5;
  std::size_t window = 7;
};

/// Retrieval plus model inference for one temporal view.
class PredictorAgent {
 public:
  PredictorAgent(AgentId id, const ProcessMemory& memory, ChatBackend& backend, PredictorOptions opt = {})
      : id_(id), memory_(memory), backend_(backend), opt_(opt) {
    if (memory.granularity() != id) throw InvalidArgument("predictor agent must use its own granularity's memory");
  }

  AgentId id() const { return id_; }

  /// The query story for the latest day of `history` (trailing window for
  /// the windowed agent).
  Story query_story(std::span<const WipEvent> history) const {
    if (history.empty()) throw InvalidArgument("predictor needs at least one day of history");
    if (id_ == AgentId::windowed) {
      const std::size_t n = std::min(opt_.window, history.size());
      return render_windowed_story(history.subspan(history.size() - n, n));
    }
    return render_query_story(history.back(), id_);
  }

  /// Forecasts the close of `forecast_date` from `history`, whose last entry
  /// is the current day. Retrieval is restricted to stories dated before
  /// `forecast_date`.
  Prediction predict(std::span<const WipEvent> history, Day forecast_date) const {
    const Story query = query_story(history);
    return predict_with(history, forecast_date, memory_.retrieve(query, forecast_date, opt_.k), query);
  }

  /// Same as predict() with retrieval already done.
  Prediction predict_with(std::span<const WipEvent> history, Day forecast_date, std::vector<RetrievalResult> retrieved,
                          const Story& query) const {
    const WipEvent& current = history.back();
    ChatRequest req;
    req.tag = format_date(forecast_date) + "/" + std::string(to_string(id_));
    req.system_text = "You are the " + std::string(agent_name(id_)) +
                      ", a forecasting agent for business-process work-in-progress (WiP). "
                      "Given a description of the current state and similar historical situations with the WiP "
                      "value that followed them, estimate the WiP close for the next day. Explain briefly, then "
                      "finish with a single line of the form 'PREDICTION: <number>'.";
    std::string user = "Current situation (" + format_date(current.date) + "):\n" + query.text + "\n\n";
    StructuredContext ctx;
    ctx.role = ContextRole::predictor;
    ctx.current_close = static_cast<double>(current.close);
    if (retrieved.empty()) {
      user += "No historical examples available.\n";
    } else {
      user += "Similar historical situations:\n";
      for (std::size_t i = 0; i < retrieved.size(); ++i) {
        const auto& doc = *retrieved[i].document;
        user += std::to_string(i + 1) + ". [" + format_date(doc.story.date) + ", similarity " +
                detail::fixed4(retrieved[i].similarity) + "] " + doc.story.text + "\n";
        ctx.retrieved.push_back({format_date(doc.story.date), *doc.story.target, retrieved[i].similarity});
      }
    }
    user += "\nWhat will the WiP close be on " + format_date(forecast_date) + "?";
    req.user_text = std::move(user);
    req.context = std::move(ctx);

    const ChatResponse resp = backend_.chat(req);
    Prediction p;
    p.agent = id_;
    p.value = std::max(0.0, extract_prediction(resp.text));
    p.retrieved = std::move(retrieved);
    p.prompt_ref = req.tag;
    p.response_text = resp.text;
    return p;
  }

 private:
  AgentId id_;
  const ProcessMemory& memory_;
  ChatBackend& backend_;
  PredictorOptions opt_;
};

// ---------------------------------------------------------------------------
// Trend analyst

enum class TrendLabel { increasing_significantly, increasing, stable, decreasing, decreasing_significantly };

inline constexpr TrendLabel kAllTrendLabels[] = {TrendLabel::increasing_significantly, TrendLabel::increasing,
                                                 TrendLabel::stable, TrendLabel::decreasing,
                                                 TrendLabel::decreasing_significantly};

inline std::string_view to_string(TrendLabel l) {
  switch (l) {
    case TrendLabel::increasing_significantly: return "increasing_significantly";
    case TrendLabel::increasing: return "increasing";
    case TrendLabel::stable: return "stable";
    case TrendLabel::decreasing: return "decreasing";
    case TrendLabel::decreasing_significantly: return "decreasing_significantly";
  }
  return "stable";
}

inline TrendLabel parse_trend_label(std::string_view s) {
  for (auto l : kAllTrendLabels)
    if (to_string(l) == s) return l;
  throw ConfigError("unknown trend label '" + std::string(s) + "'");
}

inline std::string_view trend_phrase(TrendLabel l) {
  switch (l) {
    case TrendLabel::increasing_significantly: return "WiP has been increasing significantly.";
    case TrendLabel::increasing: return "WiP has been increasing.";
    case TrendLabel::stable: return "WiP has been relatively stable.";
    case TrendLabel::decreasing: return "WiP has been decreasing.";
    case TrendLabel::decreasing_significantly: return "WiP has been decreasing significantly.";
  }
  return "WiP has been relatively stable.";
}

struct TrendConfig {
  std::size_t window = 7;
  std::size_t lookback = 14;
  double stable_threshold = 0.01;       // |rc| below -> stable
  double significant_threshold = 0.05;  // |rc| at or above -> significant

  friend bool operator==(const TrendConfig&, const TrendConfig&) = default;
};

struct TrendInsight {
  TrendLabel label = TrendLabel::stable;
  double sma_first = 0.0;
  double sma_last = 0.0;
  double relative_change = 0.0;
  std::string text;
  bool low_data = false;
};

inline TrendLabel classify_trend(double rc, const TrendConfig& cfg = {}) {
  if (rc >= cfg.significant_threshold) return TrendLabel::increasing_significantly;
  if (rc >= cfg.stable_threshold) return TrendLabel::increasing;
  if (rc <= -cfg.significant_threshold) return TrendLabel::decreasing_significantly;
  if (rc <= -cfg.stable_threshold) return TrendLabel::decreasing;
  return TrendLabel::stable;
}

/// Compares the simple moving average of the earliest and the latest window
/// within the trailing lookback span of `closes`.
///
/// With fewer than window + 1 values the insight is "stable" and flagged as
/// low-data.
inline TrendInsight trend_analyze(std::span<const double> closes, const TrendConfig& cfg = {}) {
  if (closes.empty()) throw InvalidArgument("trend analysis needs at least one close value");
  if (cfg.window == 0) throw ConfigError("trend window must be positive");
  const std::size_t span_len = std::min(closes.size(), std::max(cfg.lookback, cfg.window + 1));
  const auto recent = closes.subspan(closes.size() - span_len);
  const auto mean = [](std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
  };
  TrendInsight out;
  if (recent.size() < cfg.window + 1) {
    out.sma_first = out.sma_last = mean(recent);
    out.relative_change = 0.0;
    out.label = TrendLabel::stable;
    out.low_data = true;
  } else {
    out.sma_first = mean(recent.first(cfg.window));
    out.sma_last = mean(recent.last(cfg.window));
    out.relative_change = (out.sma_last - out.sma_first) / std::max(out.sma_first, 1e-9);
    out.label = classify_trend(out.relative_change, cfg);
  }
  out.text = std::string(trend_phrase(out.label));
  return out;
}

// ---------------------------------------------------------------------------
// Fusion agent

enum class FusionMode { rules, react };

inline std::string_view to_string(FusionMode m) { return m == FusionMode::rules ? "rules" : "react"; }

inline FusionMode parse_fusion_mode(std::string_view s) {
  if (s == "rules") return FusionMode::rules;
  if (s == "react") return FusionMode::react;
  throw ConfigError("unknown fusion mode '" + std::string(s) + "' (expected rules or react)");
}

/// Per trend label, weights for (daily, weekday, windowed).
struct FusionWeights {
  std::array<std::array<double, 3>, 5> by_label{{
      {0.6, 0.2, 0.2},                    // increasing_significantly
      {1.0 / 3, 1.0 / 3, 1.0 / 3},        // increasing
      {0.2, 0.2, 0.6},                    // stable
      {1.0 / 3, 1.0 / 3, 1.0 / 3},        // decreasing
      {0.6, 0.2, 0.2},                    // decreasing_significantly
  }};

  const std::array<double, 3>& operator[](TrendLabel l) const { return by_label[static_cast<std::size_t>(l)]; }
  std::array<double, 3>& operator[](TrendLabel l) { return by_label[static_cast<std::size_t>(l)]; }

  void validate() const {
    for (auto l : kAllTrendLabels) {
      const auto& w = (*this)[l];
      if (w[0] < 0 || w[1] < 0 || w[2] < 0) {
        throw ConfigError("fusion weights for " + std::string(to_string(l)) + " must be non-negative");
      }
      if (std::fabs(w[0] + w[1] + w[2] - 1.0) > 1e-9) {
        throw ConfigError("fusion weights for " + std::string(to_string(l)) + " must sum to 1");
      }
    }
  }

  friend bool operator==(const FusionWeights&, const FusionWeights&) = default;
};

struct FusionOptions {
  FusionMode mode = FusionMode::rules;
  FusionWeights weights;
  int max_steps = 4;
  double margin_fraction = 0.10;
  double min_margin = 1.0;
  std::size_t retrieve_k = 5;
};

struct ForecastReport {
  Day date;
  double final_value = 0.0;
  std::array<Prediction, 3> predictions;  // daily, weekday, windowed
  TrendInsight trend;
  FusionMode mode = FusionMode::rules;
  std::string rationale;
};

namespace detail {

inline std::array<Prediction, 3> order_predictions(std::span<const Prediction> preds) {
  std::array<Prediction, 3> out;
  std::array<bool, 3> seen{};
  for (const auto& p : preds) {
    const auto i = static_cast<std::size_t>(p.agent);
    if (seen[i]) throw InvalidArgument("duplicate prediction for " + std::string(agent_name(p.agent)));
    seen[i] = true;
    out[i] = p;
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (!seen[i]) throw InvalidArgument("missing prediction for " + std::string(agent_name(static_cast<AgentId>(i))));
  }
  return out;
}

/// min + sum w_i (v_i - min), clamped to [min, max]: a convex combination
/// that is exact when all values agree.
inline double convex_combination(const std::array<double, 3>& v, const std::array<double, 3>& w) {
  const double lo = std::min({v[0], v[1], v[2]});
  const double hi = std::max({v[0], v[1], v[2]});
  double acc = 0.0;
  for (std::size_t i = 0; i < 3; ++i) acc += w[i] * (v[i] - lo);
  return std::clamp(lo + acc, lo, hi);
}

inline std::string rules_rationale(const std::array<double, 3>& v, const std::array<double, 3>& w,
                                   const TrendInsight& trend, double result) {
  return "Trend " + std::string(to_string(trend.label)) + " (" + trend.text + "); weights daily " + fixed4(w[0]) +
         ", weekday " + fixed4(w[1]) + ", windowed " + fixed4(w[2]) + " over predictions " + fixed2(v[0]) + ", " +
         fixed2(v[1]) + ", " + fixed2(v[2]) + " -> " + fixed2(result) + ".";
}

}  // namespace detail

/// Rule-based fusion: weighted mean of the agent predictions with weights
/// chosen by the trend label.
inline ForecastReport fuse_rules(Day date, std::span<const Prediction> preds, const TrendInsight& trend,
                                 const FusionWeights& weights = {}) {
  ForecastReport r;
  r.date = date;
  r.predictions = detail::order_predictions(preds);
  r.trend = trend;
  r.mode = FusionMode::rules;
  const std::array<double, 3> v = {r.predictions[0].value, r.predictions[1].value, r.predictions[2].value};
  const auto& w = weights[trend.label];
  r.final_value = detail::convex_combination(v, w);
  r.rationale = detail::rules_rationale(v, w, trend, r.final_value);
  return r;
}

/// Fuses the three predictions. In react mode the backend drives a
/// Thought/Action/Observation loop with the tools get_prediction(agent),
/// get_trend() and retrieve(story_text); its final answer is accepted only
/// within [min - m, max + m] of the agent values (m = max(margin_fraction *
/// spread, min_margin)). Any failure falls back to rules and is recorded in
/// the rationale.
inline ForecastReport fuse(Day date, std::span<const Prediction> preds, const TrendInsight& trend,
                           const ProcessMemory* memory, ChatBackend* backend, const FusionOptions& opt = {}) {
  ForecastReport rules = fuse_rules(date, preds, trend, opt.weights);
  if (opt.mode == FusionMode::rules) return rules;
  if (!backend) {
    rules.rationale = "react fusion unavailable (no backend); " + rules.rationale;
    return rules;
  }

  const auto& p = rules.predictions;
  const std::array<double, 3> v = {p[0].value, p[1].value, p[2].value};
  ChatRequest req;
  req.tag = format_date(date) + "/fusion";
  req.decoding.max_steps = opt.max_steps;
  req.system_text =
      "You are the Fusion Agent combining the forecasts of three predictor agents (DailyMemoryAgent, "
      "WeekdayAwareAgent, WindowedAgent) into one next-day WiP forecast. Reason step by step. To use a tool, "
      "write 'Action: <tool>(<argument>)' and stop; the observation will be returned to you. Tools: "
      "get_prediction(agent_id) with agent_id in {daily, weekday, windowed}; get_trend(); retrieve(story_text). "
      "Prioritize the WindowedAgent in stable periods and the DailyMemoryAgent during rapid shifts. When done, "
      "finish with a single line 'PREDICTION: <number>'.";
  std::string transcript = "Forecast date: " + format_date(date) +
                           "\nCollected predictions: DailyMemoryAgent " + detail::fixed2(v[0]) +
                           ", WeekdayAwareAgent " + detail::fixed2(v[1]) + ", WindowedAgent " + detail::fixed2(v[2]) +
                           ".\n";
  StructuredContext ctx;
  ctx.role = ContextRole::fusion;
  ctx.predictions = {{"daily", v[0]}, {"weekday", v[1]}, {"windowed", v[2]}};

  static const std::regex action_re(R"(Action:\s*(get_prediction|get_trend|retrieve)\s*\(([^)]*)\))",
                                    std::regex::icase);
  const auto fallback = [&](const std::string& why) {
    ForecastReport r = rules;
    r.rationale = "react fusion fell back to rules: " + why + "; " + rules.rationale;
    return r;
  };

  std::optional<double> answer;
  std::string final_text;
  try {
    for (int step = 1; step <= opt.max_steps && !answer; ++step) {
      req.user_text = transcript;
      req.context = ctx;
      const ChatResponse resp = backend->chat(req);
      std::string upper = resp.text;
      for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      if (upper.find(kPredictionMarker) != std::string::npos) {
        answer = extract_prediction(resp.text);
        final_text = resp.text;
        break;
      }
      std::smatch m;
      if (!std::regex_search(resp.text, m, action_re)) {
        answer = extract_prediction(resp.text);  // throws when no number at all
        final_text = resp.text;
        break;
      }
      std::string tool = m[1].str();
      for (char& c : tool) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      std::string arg = m[2].str();
      arg.erase(std::remove_if(arg.begin(), arg.end(), [](char c) { return c == '"' || c == '\''; }), arg.end());
      while (!arg.empty() && std::isspace(static_cast<unsigned char>(arg.front()))) arg.erase(arg.begin());
      while (!arg.empty() && std::isspace(static_cast<unsigned char>(arg.back()))) arg.pop_back();

      std::string observation;
      if (tool == "get_trend") {
        observation = trend.text + " (label " + std::string(to_string(trend.label)) + ", 7-day SMA " +
                      detail::fixed2(trend.sma_first) + " -> " + detail::fixed2(trend.sma_last) + ")";
        ctx.trend_label = std::string(to_string(trend.label));
        ctx.weights = opt.weights[trend.label];
      } else if (tool == "get_prediction") {
        try {
          const auto id = parse_granularity(arg);
          observation = std::string(agent_name(id)) + " predicts " + detail::fixed2(v[static_cast<std::size_t>(id)]);
        } catch (const Error&) {
          observation = "unknown agent '" + arg + "'";
        }
      } else {
        if (!memory) {
          observation = "process memory not available";
        } else {
          const auto hits = memory->retrieve_text(arg.empty() ? std::string("WiP") : arg, date, opt.retrieve_k);
          if (hits.empty()) observation = "no stories found";
          for (const auto& h : hits) {
            observation += "[" + format_date(h.document->story.date) + ", similarity " + detail::fixed4(h.similarity) +
                           "] " + h.document->story.text + " ";
          }
        }
      }
      ctx.observations.push_back(observation);
      transcript += resp.text + "\nObservation: " + observation + "\n";
    }
  } catch (const BackendError& e) {
    return fallback(std::string("backend unavailable (") + e.what() + ")");
  } catch (const NoNumberFound&) {
    return fallback("no numeric answer in model response");
  }
  if (!answer) return fallback("step budget of " + std::to_string(opt.max_steps) + " exhausted");

  const double lo = std::min({v[0], v[1], v[2]});
  const double hi = std::max({v[0], v[1], v[2]});
  const double margin = std::max(opt.margin_fraction * (hi - lo), opt.min_margin);
  if (!std::isfinite(*answer) || *answer < lo - margin || *answer > hi + margin) {
    return fallback("answer " + detail::fixed2(*answer) + " outside [" + detail::fixed2(lo - margin) + ", " +
                    detail::fixed2(hi + margin) + "]");
  }
  ForecastReport r = rules;
  r.mode = FusionMode::react;
  r.final_value = *answer;
  r.rationale = final_text;
  return r;
}

/// Optional model paraphrase of a story. Numbers are not re-checked; the
/// canonical templated text stays the default corpus.
inline Story paraphrase_story(const Story& story, ChatBackend& backend) {
  ChatRequest req;
  req.tag = format_date(story.date) + "/paraphrase";
  req.system_text = "Rewrite the following process description fluently. Keep every number unchanged.";
  req.user_text = story.text;
  StructuredContext ctx;
  ctx.role = ContextRole::paraphrase;
  ctx.source_text = story.text;
  req.context = std::move(ctx);
  Story out = story;
  out.text = backend.chat(req).text;
  return out;
}

}  // namespace wipcast

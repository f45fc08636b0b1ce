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

// Pipeline configuration (JSON). Missing keys take their defaults, unknown
// keys are rejected, and credentials are never read from the file.

#include <chrono>
#include <memory>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "wipcast/agents.hpp"
#include "wipcast/embedding.hpp"
#include "wipcast/error.hpp"
#include "wipcast/eval.hpp"
#include "wipcast/eventlog.hpp"
#include "wipcast/llm.hpp"
#include "wipcast/memory.hpp"
#include "wipcast/wipseries.hpp"

namespace wipcast {

struct InputConfig {
  std::string path;
  std::string format = "auto";  // auto | xes | csv
  ColumnMapping csv;

  friend bool operator==(const InputConfig& a, const InputConfig& b) {
    return a.path == b.path && a.format == b.format && a.csv.case_column == b.csv.case_column &&
           a.csv.activity_column == b.csv.activity_column && a.csv.timestamp_column == b.csv.timestamp_column &&
           a.csv.lifecycle_column == b.csv.lifecycle_column && a.csv.timestamp_format == b.csv.timestamp_format &&
           a.csv.input_offset == b.csv.input_offset && a.csv.attributes_json_column == b.csv.attributes_json_column &&
           a.csv.separator == b.csv.separator;
  }
};

struct EmbeddingConfig {
  std::string provider = "deterministic";  // deterministic | remote
  DeterministicEmbedder::Options deterministic;
  std::string endpoint;
  std::string model = RemoteEmbedder::kDefaultModel;

  friend bool operator==(const EmbeddingConfig&, const EmbeddingConfig&) = default;
};

struct ChatConfig {
  std::string backend = "stub";  // stub | remote
  std::string endpoint;
  std::string model = "o3-mini";
  std::int64_t timeout_ms = 60'000;
  int retries = 2;
  std::int64_t backoff_ms = 1'000;
  int max_concurrent = 4;
  std::string api_key_env = "WIPCAST_API_KEY";

  HttpOptions http() const {
    HttpOptions h;
    h.timeout = std::chrono::milliseconds{timeout_ms};
    h.retries = retries;
    h.backoff_base = std::chrono::milliseconds{backoff_ms};
    h.api_key_env = api_key_env;
    return h;
  }

  friend bool operator==(const ChatConfig&, const ChatConfig&) = default;
};

struct PipelineConfig {
  InputConfig input;
  LifecycleConfig lifecycle;
  GapPolicy gap_policy = GapPolicy::carry;
  std::size_t story_window = 7;
  bool paraphrase_stories = false;
  std::size_t retrieval_k = 5;
  RetentionPolicy retention;
  EmbeddingConfig embedding;
  ChatConfig chat;
  TrendConfig trend;
  FusionMode fusion_mode = FusionMode::rules;
  FusionWeights fusion_weights;
  int react_max_steps = 4;
  double react_margin_fraction = 0.10;
  double react_min_margin = 1.0;
  std::optional<Day> split_date;
  double test_fraction = 0.2;
  bool parallel_agents = true;
  std::string output_dir = "out";
  bool freeze_timestamps = false;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;

  void validate() const {
    const auto positive = [](bool ok, const char* what) {
      if (!ok) throw ConfigError(std::string(what) + " must be positive");
    };
    positive(story_window > 0, "stories.window");
    positive(retrieval_k > 0, "retrieval.k");
    if (retention.recency_days) positive(*retention.recency_days > 0, "retrieval.recency_days");
    positive(embedding.deterministic.trigram_dim > 0, "embedding.trigram_dim");
    positive(embedding.deterministic.numeric_scale > 0, "embedding.numeric_scale");
    positive(embedding.deterministic.numeric_weight >= 0, "embedding.numeric_weight");
    positive(chat.timeout_ms > 0, "chat.timeout_ms");
    positive(chat.retries >= 0, "chat.retries");
    positive(chat.backoff_ms >= 0, "chat.backoff_ms");
    positive(chat.max_concurrent > 0, "chat.max_concurrent");
    positive(trend.window > 0, "trend.window");
    positive(trend.lookback > 0, "trend.lookback");
    positive(trend.stable_threshold > 0, "trend.stable_threshold");
    if (!(trend.significant_threshold > trend.stable_threshold)) {
      throw ConfigError("trend.significant_threshold must exceed trend.stable_threshold");
    }
    positive(react_max_steps > 0, "fusion.max_steps");
    positive(react_margin_fraction >= 0, "fusion.margin_fraction");
    positive(react_min_margin >= 0, "fusion.min_margin");
    if (!(test_fraction > 0 && test_fraction < 1)) throw ConfigError("evaluation.test_fraction must be in (0, 1)");
    fusion_weights.validate();
    if (embedding.provider != "deterministic" && embedding.provider != "remote") {
      throw ConfigError("embedding.provider must be deterministic or remote");
    }
    if (embedding.provider == "remote" && embedding.endpoint.empty()) {
      throw ConfigError("embedding.endpoint is required for the remote provider");
    }
    if (chat.backend != "stub" && chat.backend != "remote") throw ConfigError("chat.backend must be stub or remote");
    if (chat.backend == "remote" && chat.endpoint.empty()) {
      throw ConfigError("chat.endpoint is required for the remote backend");
    }
    if (input.format != "auto" && input.format != "xes" && input.format != "csv") {
      throw ConfigError("input.format must be auto, xes or csv");
    }
  }

  EvalOptions eval_options() const {
    EvalOptions e;
    e.split_date = split_date;
    e.test_fraction = test_fraction;
    e.story_window = story_window;
    e.k = retrieval_k;
    e.retention = retention;
    e.trend = trend;
    e.fusion.mode = fusion_mode;
    e.fusion.weights = fusion_weights;
    e.fusion.max_steps = react_max_steps;
    e.fusion.margin_fraction = react_margin_fraction;
    e.fusion.min_margin = react_min_margin;
    e.fusion.retrieve_k = retrieval_k;
    e.parallel_agents = parallel_agents;
    return e;
  }

  std::shared_ptr<const EmbeddingProvider> make_embedder() const {
    if (embedding.provider == "remote") {
      return std::make_shared<RemoteEmbedder>(embedding.endpoint, embedding.model, chat.http());
    }
    return std::make_shared<DeterministicEmbedder>(embedding.deterministic);
  }

  std::shared_ptr<ChatBackend> make_backend() const {
    if (chat.backend == "remote") {
      RemoteChatBackend::Options o;
      o.endpoint = chat.endpoint;
      o.model = chat.model;
      o.http = chat.http();
      o.max_concurrent = chat.max_concurrent;
      return std::make_shared<RemoteChatBackend>(std::move(o));
    }
    return std::make_shared<StubBackend>();
  }
};

namespace detail {

using nlohmann::json;

inline json opt_json(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

inline json selector_json(const EventSelector& s) {
  return {{"pick", s.pick == EventSelector::Pick::first ? "first" : "last"},
          {"activity", opt_json(s.activity)},
          {"lifecycle", opt_json(s.lifecycle)},
          {"fallback_to_any", s.fallback_to_any}};
}

/// Walks a JSON object, rejecting keys that no reader consumed.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
  }
  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown configuration key '" + path_ + "." + k + "'");
    }
  }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (const json* v = get(key)) {
      try {
        out = v->get<T>();
      } catch (const json::exception&) {
        throw ConfigError("configuration key '" + path_ + "." + key + "' has the wrong type");
      }
    }
  }

  void read(const std::string& key, std::optional<std::string>& out) {
    if (const json* v = get(key)) {
      if (v->is_null()) out.reset();
      else if (v->is_string()) out = v->get<std::string>();
      else throw ConfigError("configuration key '" + path_ + "." + key + "' must be a string or null");
    }
  }

  template <typename T>
  void read_optional(const std::string& key, std::optional<T>& out) {
    if (const json* v = get(key)) {
      if (v->is_null()) {
        out.reset();
      } else {
        try {
          out = v->get<T>();
        } catch (const json::exception&) {
          throw ConfigError("configuration key '" + path_ + "." + key + "' has the wrong type");
        }
      }
    }
  }

  std::string child(const std::string& key) const { return path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline EventSelector selector_from_json(const json& j, const std::string& path, EventSelector s) {
  ObjectReader r(j, path);
  std::string pick = s.pick == EventSelector::Pick::first ? "first" : "last";
  r.read("pick", pick);
  if (pick == "first") s.pick = EventSelector::Pick::first;
  else if (pick == "last") s.pick = EventSelector::Pick::last;
  else throw ConfigError(path + ".pick must be first or last");
  r.read("activity", s.activity);
  r.read("lifecycle", s.lifecycle);
  r.read("fallback_to_any", s.fallback_to_any);
  return s;
}

}  // namespace detail

inline nlohmann::json to_json(const PipelineConfig& c) {
  using nlohmann::json;
  json weights = json::object();
  for (auto l : kAllTrendLabels) weights[std::string(to_string(l))] = c.fusion_weights[l];
  return {
      {"input",
       {{"path", c.input.path},
        {"format", c.input.format},
        {"timezone", c.lifecycle.timezone.to_string()},
        {"csv",
         {{"case_column", c.input.csv.case_column},
          {"activity_column", c.input.csv.activity_column},
          {"timestamp_column", c.input.csv.timestamp_column},
          {"lifecycle_column", detail::opt_json(c.input.csv.lifecycle_column)},
          {"timestamp_format", c.input.csv.timestamp_format},
          {"input_offset", c.input.csv.input_offset.to_string()},
          {"attributes_json_column", detail::opt_json(c.input.csv.attributes_json_column)},
          {"separator", std::string(1, c.input.csv.separator)}}}}},
      {"lifecycle",
       {{"new", detail::selector_json(c.lifecycle.new_rule)},
        {"done", detail::selector_json(c.lifecycle.done_rule)},
        {"started", detail::selector_json(c.lifecycle.started_rule)}}},
      {"gap_policy", to_string(c.gap_policy)},
      {"stories", {{"window", c.story_window}, {"paraphrase", c.paraphrase_stories}}},
      {"retrieval",
       {{"k", c.retrieval_k},
        {"recency_days", c.retention.recency_days ? json(*c.retention.recency_days) : json(nullptr)},
        {"min_similarity", c.retention.min_similarity ? json(*c.retention.min_similarity) : json(nullptr)}}},
      {"embedding",
       {{"provider", c.embedding.provider},
        {"trigram_dim", c.embedding.deterministic.trigram_dim},
        {"numeric_weight", c.embedding.deterministic.numeric_weight},
        {"numeric_scale", c.embedding.deterministic.numeric_scale},
        {"seed", c.embedding.deterministic.seed},
        {"endpoint", c.embedding.endpoint},
        {"model", c.embedding.model}}},
      {"chat",
       {{"backend", c.chat.backend},
        {"endpoint", c.chat.endpoint},
        {"model", c.chat.model},
        {"timeout_ms", c.chat.timeout_ms},
        {"retries", c.chat.retries},
        {"backoff_ms", c.chat.backoff_ms},
        {"max_concurrent", c.chat.max_concurrent},
        {"api_key_env", c.chat.api_key_env}}},
      {"trend",
       {{"window", c.trend.window},
        {"lookback", c.trend.lookback},
        {"stable_threshold", c.trend.stable_threshold},
        {"significant_threshold", c.trend.significant_threshold}}},
      {"fusion",
       {{"mode", to_string(c.fusion_mode)},
        {"weights", weights},
        {"max_steps", c.react_max_steps},
        {"margin_fraction", c.react_margin_fraction},
        {"min_margin", c.react_min_margin}}},
      {"evaluation",
       {{"split_date", c.split_date ? json(format_date(*c.split_date)) : json(nullptr)},
        {"test_fraction", c.test_fraction},
        {"parallel_agents", c.parallel_agents}}},
      {"output_dir", c.output_dir},
      {"freeze_timestamps", c.freeze_timestamps},
  };
}

inline PipelineConfig config_from_json(const nlohmann::json& j) {
  using detail::ObjectReader;
  PipelineConfig c;
  {
    ObjectReader root(j, "config");
    for (const char* secret : {"api_key", "apiKey", "token", "password"}) {
      if (j.contains(secret)) throw ConfigError("credentials are read from the environment, never from the config file");
    }
    if (const auto* in = root.get("input")) {
      ObjectReader r(*in, "input");
      r.read("path", c.input.path);
      r.read("format", c.input.format);
      std::string tz = c.lifecycle.timezone.to_string();
      r.read("timezone", tz);
      c.lifecycle.timezone = UtcOffset::parse(tz);
      if (const auto* cj = r.get("csv")) {
        ObjectReader m(*cj, "input.csv");
        m.read("case_column", c.input.csv.case_column);
        m.read("activity_column", c.input.csv.activity_column);
        m.read("timestamp_column", c.input.csv.timestamp_column);
        m.read("lifecycle_column", c.input.csv.lifecycle_column);
        m.read("timestamp_format", c.input.csv.timestamp_format);
        std::string off = c.input.csv.input_offset.to_string();
        m.read("input_offset", off);
        c.input.csv.input_offset = UtcOffset::parse(off);
        m.read("attributes_json_column", c.input.csv.attributes_json_column);
        std::string sep(1, c.input.csv.separator);
        m.read("separator", sep);
        if (sep.size() != 1) throw ConfigError("input.csv.separator must be one character");
        c.input.csv.separator = sep[0];
      }
    }
    if (const auto* lc = root.get("lifecycle")) {
      ObjectReader r(*lc, "lifecycle");
      if (const auto* s = r.get("new")) c.lifecycle.new_rule = detail::selector_from_json(*s, "lifecycle.new", c.lifecycle.new_rule);
      if (const auto* s = r.get("done")) c.lifecycle.done_rule = detail::selector_from_json(*s, "lifecycle.done", c.lifecycle.done_rule);
      if (const auto* s = r.get("started"))
        c.lifecycle.started_rule = detail::selector_from_json(*s, "lifecycle.started", c.lifecycle.started_rule);
    }
    std::string gap(to_string(c.gap_policy));
    root.read("gap_policy", gap);
    c.gap_policy = parse_gap_policy(gap);
    if (const auto* st = root.get("stories")) {
      ObjectReader r(*st, "stories");
      r.read("window", c.story_window);
      r.read("paraphrase", c.paraphrase_stories);
    }
    if (const auto* rt = root.get("retrieval")) {
      ObjectReader r(*rt, "retrieval");
      r.read("k", c.retrieval_k);
      r.read_optional("recency_days", c.retention.recency_days);
      r.read_optional("min_similarity", c.retention.min_similarity);
    }
    if (const auto* em = root.get("embedding")) {
      ObjectReader r(*em, "embedding");
      r.read("provider", c.embedding.provider);
      r.read("trigram_dim", c.embedding.deterministic.trigram_dim);
      r.read("numeric_weight", c.embedding.deterministic.numeric_weight);
      r.read("numeric_scale", c.embedding.deterministic.numeric_scale);
      r.read("seed", c.embedding.deterministic.seed);
      r.read("endpoint", c.embedding.endpoint);
      r.read("model", c.embedding.model);
    }
    if (const auto* ch = root.get("chat")) {
      ObjectReader r(*ch, "chat");
      if (ch->contains("api_key")) throw ConfigError("credentials are read from the environment, never from the config file");
      r.read("backend", c.chat.backend);
      r.read("endpoint", c.chat.endpoint);
      r.read("model", c.chat.model);
      r.read("timeout_ms", c.chat.timeout_ms);
      r.read("retries", c.chat.retries);
      r.read("backoff_ms", c.chat.backoff_ms);
      r.read("max_concurrent", c.chat.max_concurrent);
      r.read("api_key_env", c.chat.api_key_env);
    }
    if (const auto* tr = root.get("trend")) {
      ObjectReader r(*tr, "trend");
      r.read("window", c.trend.window);
      r.read("lookback", c.trend.lookback);
      r.read("stable_threshold", c.trend.stable_threshold);
      r.read("significant_threshold", c.trend.significant_threshold);
    }
    if (const auto* fu = root.get("fusion")) {
      ObjectReader r(*fu, "fusion");
      std::string mode(to_string(c.fusion_mode));
      r.read("mode", mode);
      c.fusion_mode = parse_fusion_mode(mode);
      if (const auto* w = r.get("weights")) {
        ObjectReader wr(*w, "fusion.weights");
        for (auto l : kAllTrendLabels) wr.read(std::string(to_string(l)), c.fusion_weights[l]);
      }
      r.read("max_steps", c.react_max_steps);
      r.read("margin_fraction", c.react_margin_fraction);
      r.read("min_margin", c.react_min_margin);
    }
    if (const auto* ev = root.get("evaluation")) {
      ObjectReader r(*ev, "evaluation");
      std::optional<std::string> split;
      r.read("split_date", split);
      c.split_date = split ? std::optional<Day>(parse_date(*split)) : std::nullopt;
      r.read("test_fraction", c.test_fraction);
      r.read("parallel_agents", c.parallel_agents);
    }
    root.read("output_dir", c.output_dir);
    root.read("freeze_timestamps", c.freeze_timestamps);
  }
  c.validate();
  return c;
}

inline PipelineConfig parse_config(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace wipcast

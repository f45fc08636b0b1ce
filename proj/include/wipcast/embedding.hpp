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

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wipcast/error.hpp"
#include "wipcast/http.hpp"
#include "wipcast/narrative.hpp"

namespace wipcast {

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual EmbeddingVector embed(std::string_view text) const = 0;

  virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed(t));
    return out;
  }

  virtual std::string id() const = 0;
};

/// Offline embedding: hashed character trigrams plus the story's numbers.
///
/// The trigram block holds L2-normalized term frequencies of lower-cased
/// character trigrams hashed (FNV-1a, seeded) into `trigram_dim` buckets.
/// The numeric block holds open/high/low/close/done/new/started mapped to
/// [0, 1) by x / (x + numeric_scale) and multiplied by `numeric_weight`;
/// it is zero for text that is not a story. The concatenation is
/// L2-normalized.
class DeterministicEmbedder final : public EmbeddingProvider {
 public:
  struct Options {
    std::size_t trigram_dim = 256;
    double numeric_weight = 2.0;
    double numeric_scale = 100.0;
    std::uint64_t seed = 0x9E3779B97F4A7C15ull;

    friend bool operator==(const Options&, const Options&) = default;
  };

  static constexpr std::size_t kNumericFeatures = 7;

  DeterministicEmbedder() = default;
  explicit DeterministicEmbedder(Options opt) : opt_(opt) {
    if (opt_.trigram_dim == 0) throw ConfigError("trigram_dim must be positive");
    if (!(opt_.numeric_scale > 0)) throw ConfigError("numeric_scale must be positive");
  }

  std::size_t dim() const { return opt_.trigram_dim + kNumericFeatures; }

  EmbeddingVector embed(std::string_view text) const override {
    if (text.empty()) throw InvalidArgument("cannot embed empty text");
    std::vector<double> v(dim(), 0.0);

    std::string padded = "  ";
    for (char c : text) padded.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    padded += "  ";
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
      v[hash(std::string_view(padded).substr(i, 3)) % opt_.trigram_dim] += 1.0;
    }
    double tn = 0.0;
    for (std::size_t i = 0; i < opt_.trigram_dim; ++i) tn += v[i] * v[i];
    tn = std::sqrt(tn);
    for (std::size_t i = 0; i < opt_.trigram_dim; ++i) v[i] /= tn;

    if (const auto facts = extract_story_facts(text)) {
      const std::array<double, kNumericFeatures> xs = {facts->open, facts->high,      facts->low,    facts->close,
                                                       facts->done, facts->new_cases, facts->started};
      for (std::size_t k = 0; k < kNumericFeatures; ++k) {
        const double x = std::max(0.0, xs[k]);
        v[opt_.trigram_dim + k] = opt_.numeric_weight * x / (x + opt_.numeric_scale);
      }
    }

    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    for (double& x : v) x /= n;
    return EmbeddingVector{std::move(v)};
  }

  std::string id() const override { return "deterministic-trigram-" + std::to_string(dim()); }

  const Options& options() const { return opt_; }

 private:
  std::uint64_t hash(std::string_view s) const {
    std::uint64_t h = 0xcbf29ce484222325ull ^ opt_.seed;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    return h;
  }

  Options opt_;
};

/// Embeddings from an HTTP endpoint speaking the common embeddings API:
/// request {model, input: [texts]}, response {data: [{embedding: [...]}]}
/// (a bare {embeddings: [[...]]} is accepted too).
class RemoteEmbedder final : public EmbeddingProvider {
 public:
  static constexpr const char* kDefaultModel = "BAAI/bge-base-en-v1.5";

  RemoteEmbedder(std::string endpoint, std::string model = kDefaultModel, HttpOptions http = {})
      : endpoint_(std::move(endpoint)), model_(std::move(model)), http_(std::move(http)) {}

  EmbeddingVector embed(std::string_view text) const override {
    const std::string t(text);
    return embed_batch(std::span<const std::string>(&t, 1)).front();
  }

  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override {
    for (const auto& t : texts) {
      if (t.empty()) throw InvalidArgument("cannot embed empty text");
    }
    if (texts.empty()) return {};
    const nlohmann::json body = {{"model", model_}, {"input", std::vector<std::string>(texts.begin(), texts.end())}};
    auto vectors = post_json(endpoint_, body, http_, [&](const nlohmann::json& j) {
      std::vector<EmbeddingVector> out;
      const auto& rows = j.contains("data") ? j.at("data") : j.at("embeddings");
      for (const auto& row : rows) {
        const auto& values = row.is_object() ? row.at("embedding") : row;
        EmbeddingVector v{values.get<std::vector<double>>()};
        if (v.values.empty() || !std::all_of(v.values.begin(), v.values.end(), [](double x) { return std::isfinite(x); })) {
          throw MalformedResponse("embedding with no or non-finite values", 0);
        }
        out.push_back(std::move(v));
      }
      if (out.size() != texts.size()) {
        throw MalformedResponse("expected " + std::to_string(texts.size()) + " embeddings, got " +
                                    std::to_string(out.size()),
                                0);
      }
      return out;
    });
    std::lock_guard lock(mutex_);
    for (const auto& v : vectors) {
      if (dim_ == 0) dim_ = v.dim();
      if (v.dim() != dim_) throw MalformedResponse("embedding dimension changed between calls", 0);
    }
    return vectors;
  }

  std::string id() const override { return "remote:" + model_; }

 private:
  std::string endpoint_;
  std::string model_;
  HttpOptions http_;
  mutable std::mutex mutex_;
  mutable std::size_t dim_ = 0;
};

}  // namespace wipcast

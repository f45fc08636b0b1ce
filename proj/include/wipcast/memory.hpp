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

// Process memory: an exact (flat) cosine index over embedded contextual
// stories with a strict temporal causality filter.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "wipcast/embedding.hpp"
#include "wipcast/error.hpp"
#include "wipcast/narrative.hpp"

namespace wipcast {

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace detail

/// dot(u, v) / (|u| |v|). Throws on dimension mismatch or a zero vector.
inline double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dim() != v.dim()) {
    throw InvalidArgument("cosine: dimension mismatch (" + std::to_string(u.dim()) + " vs " +
                          std::to_string(v.dim()) + ")");
  }
  const double nu = detail::norm(u.values);
  const double nv = detail::norm(v.values);
  if (nu == 0.0 || nv == 0.0) throw InvalidArgument("cosine: zero-norm vector");
  return detail::dot(u.values, v.values) / (nu * nv);
}

struct MemoryDocument {
  std::string doc_id;
  Story story;  // contextual, with target
  EmbeddingVector embedding;
};

struct RetrievalResult {
  std::shared_ptr<const MemoryDocument> document;
  double similarity = 0.0;
};

/// Extra filters on top of causality. Unset members mean "unlimited".
struct RetentionPolicy {
  std::optional<int> recency_days;       // keep stories dated >= as_of - recency_days
  std::optional<double> min_similarity;  // drop results below this cosine

  friend bool operator==(const RetentionPolicy&, const RetentionPolicy&) = default;
};

/// Result order: similarity descending, then more recent story date, then
/// doc_id ascending.
inline bool retrieval_order(const RetrievalResult& a, const RetrievalResult& b) {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  if (a.document->story.date != b.document->story.date) return a.document->story.date > b.document->story.date;
  return a.document->doc_id < b.document->doc_id;
}

/// Flat cosine index. One writer or many concurrent readers.
class VectorIndex {
 public:
  /// Inserts or replaces (same doc_id). The first insert fixes the dimension.
  void add(MemoryDocument doc) {
    if (doc.story.kind != StoryKind::contextual || !doc.story.target) {
      throw InvalidArgument("memory documents must be contextual stories with a target");
    }
    if (doc.embedding.dim() == 0) throw InvalidArgument("empty embedding");
    for (double x : doc.embedding.values) {
      if (!std::isfinite(x)) throw InvalidArgument("embedding has a non-finite entry");
    }
    const double n = detail::norm(doc.embedding.values);
    if (n == 0.0) throw InvalidArgument("embedding has zero norm");
    std::unique_lock lock(mutex_);
    if (dim_ == 0) {
      dim_ = doc.embedding.dim();
    } else if (doc.embedding.dim() != dim_) {
      throw InvalidArgument("embedding dimension " + std::to_string(doc.embedding.dim()) +
                            " does not match index dimension " + std::to_string(dim_));
    }
    auto ptr = std::make_shared<const MemoryDocument>(std::move(doc));
    if (auto it = by_id_.find(ptr->doc_id); it != by_id_.end()) {
      docs_[it->second] = ptr;
      norms_[it->second] = n;
    } else {
      by_id_.emplace(ptr->doc_id, docs_.size());
      docs_.push_back(std::move(ptr));
      norms_.push_back(n);
    }
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return docs_.size();
  }

  std::size_t dim() const {
    std::shared_lock lock(mutex_);
    return dim_;
  }

  std::shared_ptr<const MemoryDocument> find(const std::string& doc_id) const {
    std::shared_lock lock(mutex_);
    auto it = by_id_.find(doc_id);
    return it == by_id_.end() ? nullptr : docs_[it->second];
  }

  std::vector<std::shared_ptr<const MemoryDocument>> documents() const {
    std::shared_lock lock(mutex_);
    return docs_;
  }

  /// Number of documents dated strictly before `as_of`.
  std::size_t count_before(Day as_of) const {
    std::shared_lock lock(mutex_);
    return static_cast<std::size_t>(std::count_if(
        docs_.begin(), docs_.end(), [&](const auto& d) { return d->story.date < as_of; }));
  }

  std::optional<Day> latest_date() const {
    std::shared_lock lock(mutex_);
    std::optional<Day> out;
    for (const auto& d : docs_) {
      if (!out || d->story.date > *out) out = d->story.date;
    }
    return out;
  }

  /// The k most similar documents dated strictly before `as_of`. Fewer are
  /// returned when the filtered corpus is smaller; none is not an error.
  std::vector<RetrievalResult> search(const EmbeddingVector& query, Day as_of, std::size_t k,
                                      const RetentionPolicy& retention = {}) const {
    std::shared_lock lock(mutex_);
    std::vector<RetrievalResult> hits;
    if (docs_.empty() || k == 0) return hits;
    if (query.dim() != dim_) {
      throw InvalidArgument("query dimension " + std::to_string(query.dim()) + " does not match index dimension " +
                            std::to_string(dim_));
    }
    const double qn = detail::norm(query.values);
    if (qn == 0.0) throw InvalidArgument("query embedding has zero norm");
    std::optional<Day> oldest;
    if (retention.recency_days) oldest = as_of - std::chrono::days{*retention.recency_days};
    hits.reserve(docs_.size());
    for (std::size_t i = 0; i < docs_.size(); ++i) {
      const auto& d = docs_[i];
      if (!(d->story.date < as_of)) continue;
      if (oldest && d->story.date < *oldest) continue;
      const double sim = detail::dot(query.values, d->embedding.values) / (qn * norms_[i]);
      if (retention.min_similarity && sim < *retention.min_similarity) continue;
      hits.push_back({d, sim});
    }
    const std::size_t n = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n), hits.end(), retrieval_order);
    hits.resize(n);
    return hits;
  }

 private:
  mutable std::shared_mutex mutex_;
  std::size_t dim_ = 0;
  std::vector<std::shared_ptr<const MemoryDocument>> docs_;
  std::vector<double> norms_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

inline std::string make_doc_id(const Story& s) {
  return std::string(to_string(s.granularity)) + ":" + format_date(s.date);
}

/// A granularity's memory: an embedding provider plus its index.
class ProcessMemory {
 public:
  ProcessMemory(std::shared_ptr<const EmbeddingProvider> provider, Granularity granularity,
                RetentionPolicy retention = {})
      : provider_(std::move(provider)), granularity_(granularity), retention_(retention) {
    if (!provider_) throw InvalidArgument("process memory needs an embedding provider");
  }

  Granularity granularity() const { return granularity_; }
  const VectorIndex& index() const { return index_; }
  const EmbeddingProvider& provider() const { return *provider_; }
  const RetentionPolicy& retention() const { return retention_; }

  void add(const Story& story) {
    if (story.granularity != granularity_) {
      throw InvalidArgument("story granularity " + std::string(to_string(story.granularity)) +
                            " does not match memory granularity " + std::string(to_string(granularity_)));
    }
    index_.add(MemoryDocument{make_doc_id(story), story, provider_->embed(story.text)});
  }

  void add_batch(std::span<const Story> stories) {
    std::vector<std::string> texts;
    texts.reserve(stories.size());
    for (const auto& s : stories) texts.push_back(s.text);
    const auto embeddings = provider_->embed_batch(texts);
    for (std::size_t i = 0; i < stories.size(); ++i) {
      if (stories[i].granularity != granularity_) throw InvalidArgument("story granularity mismatch");
      index_.add(MemoryDocument{make_doc_id(stories[i]), stories[i], embeddings[i]});
    }
  }

  /// Adds a pre-embedded document (e.g. loaded from a snapshot).
  void add_document(MemoryDocument doc) { index_.add(std::move(doc)); }

  std::vector<RetrievalResult> retrieve(const Story& query, Day as_of, std::size_t k = 5) const {
    if (query.kind != StoryKind::query) throw InvalidArgument("retrieval expects a query story");
    if (index_.size() == 0) return {};
    return index_.search(provider_->embed(query.text), as_of, k, retention_);
  }

  /// Free-text retrieval, used by the fusion agent's retrieve tool.
  std::vector<RetrievalResult> retrieve_text(std::string_view text, Day as_of, std::size_t k = 5) const {
    if (index_.size() == 0) return {};
    return index_.search(provider_->embed(text), as_of, k, retention_);
  }

 private:
  std::shared_ptr<const EmbeddingProvider> provider_;
  Granularity granularity_;
  RetentionPolicy retention_;
  VectorIndex index_;
};

// ---------------------------------------------------------------------------
// Snapshot: JSON-lines of {doc_id, date, granularity, text, target, embedding}

inline std::string to_jsonl(const VectorIndex& index) {
  auto docs = index.documents();
  std::sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) { return a->doc_id < b->doc_id; });
  std::string out;
  for (const auto& d : docs) {
    nlohmann::json j;
    j["doc_id"] = d->doc_id;
    j["date"] = format_date(d->story.date);
    j["granularity"] = to_string(d->story.granularity);
    j["text"] = d->story.text;
    j["target"] = *d->story.target;
    j["embedding"] = d->embedding.values;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

inline std::vector<MemoryDocument> documents_from_jsonl(std::string_view text) {
  std::vector<MemoryDocument> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      MemoryDocument d;
      d.doc_id = j.at("doc_id").get<std::string>();
      d.story.date = parse_date(j.at("date").get<std::string>());
      d.story.granularity = parse_granularity(j.at("granularity").get<std::string>());
      d.story.text = j.at("text").get<std::string>();
      d.story.kind = StoryKind::contextual;
      d.story.target = j.at("target").get<double>();
      d.embedding.values = j.at("embedding").get<std::vector<double>>();
      out.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad index snapshot record: ") + e.what(), line_no, 1);
    }
  }
  return out;
}

}  // namespace wipcast

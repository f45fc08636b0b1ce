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

#include <algorithm>
#include <cmath>
#include <thread>

#include "test_support.hpp"

namespace wipcast {
namespace {

using testing::day;

Story contextual(Day d, double target, Granularity g = Granularity::daily) {
  Story s;
  s.text = "story " + format_date(d);
  s.kind = StoryKind::contextual;
  s.granularity = g;
  s.date = d;
  s.target = target;
  return s;
}

MemoryDocument doc(Day d, std::vector<double> v, double target = 1.0) {
  const auto s = contextual(d, target);
  return MemoryDocument{make_doc_id(s), s, EmbeddingVector{std::move(v)}};
}

/// Exhaustive scan: cosine against every causal document, sorted by the
/// documented tie rule (similarity desc, date desc, doc_id asc).
std::vector<std::pair<std::string, double>> brute_force(const std::vector<MemoryDocument>& docs,
                                                        const std::vector<double>& q, Day as_of, std::size_t k) {
  std::vector<std::tuple<double, Day, std::string>> all;
  for (const auto& d : docs) {
    if (d.story.date >= as_of) continue;
    double dot = 0, nq = 0, nd = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      dot += q[i] * d.embedding.values[i];
      nq += q[i] * q[i];
      nd += d.embedding.values[i] * d.embedding.values[i];
    }
    all.emplace_back(dot / (std::sqrt(nq) * std::sqrt(nd)), d.story.date, d.doc_id);
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) > std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.emplace_back(std::get<2>(all[i]), std::get<0>(all[i]));
  return out;
}

TEST(Memory, CosineByHand) {
  EXPECT_NEAR(cosine({{1, 2}}, {{3, 4}}), 11.0 / (std::sqrt(5.0) * 5.0), 1e-15);
  EXPECT_NEAR(cosine({{1, 2}}, {{3, 4}}), 0.98387, 1e-5);
  EXPECT_THROW(cosine({{1, 2}}, {{1, 2, 3}}), InvalidArgument);
  EXPECT_THROW(cosine({{0, 0}}, {{1, 2}}), InvalidArgument);
}

TEST(Memory, HundredDocumentsAllRetrievable) {
  VectorIndex index;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int i = 0; i < 100; ++i) index.add(doc(day(2024, 1, 1) + std::chrono::days{i}, {g(rng), g(rng), g(rng), 1.0}));
  EXPECT_EQ(index.size(), 100u);
  EXPECT_EQ(index.dim(), 4u);
  for (const auto& d : index.documents()) {
    const auto hits = index.search(d->embedding, day(2030, 1, 1), 1);
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_NEAR(hits[0].similarity, 1.0, 1e-12);
  }
  EXPECT_EQ(index.search(EmbeddingVector{{1, 0, 0, 0}}, day(2030, 1, 1), 1000).size(), 100u);
}

TEST(Memory, FiftyDocCorpusMatchesExhaustiveScan) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g;
  std::vector<MemoryDocument> docs;
  for (int i = 0; i < 50; ++i) {
    std::vector<double> v = {g(rng), g(rng), g(rng)};
    // Every fifth vector duplicates an earlier one to exercise ties.
    if (i % 5 == 4) v = docs[static_cast<std::size_t>(i - 3)].embedding.values;
    docs.push_back(doc(day(2024, 1, 1) + std::chrono::days{i}, v));
  }
  VectorIndex index;
  for (const auto& d : docs) index.add(d);
  for (int q = 0; q < 200; ++q) {
    std::vector<double> qv = {g(rng), g(rng), g(rng)};
    if (q % 4 == 0) qv = docs[static_cast<std::size_t>(q % 50)].embedding.values;
    const Day as_of = day(2024, 1, 1) + std::chrono::days{q % 55};
    const auto hits = index.search(EmbeddingVector{qv}, as_of, 5);
    const auto expect = brute_force(docs, qv, as_of, 5);
    ASSERT_EQ(hits.size(), expect.size());
    for (std::size_t i = 0; i < hits.size(); ++i) {
      EXPECT_EQ(hits[i].document->doc_id, expect[i].first) << q;
      EXPECT_NEAR(hits[i].similarity, expect[i].second, 1e-12);
      EXPECT_LT(hits[i].document->story.date, as_of);
    }
  }
}

TEST(Memory, TieRulePrefersRecentThenDocId) {
  VectorIndex index;
  index.add(doc(day(2024, 1, 1), {1, 0}));
  index.add(doc(day(2024, 1, 3), {2, 0}));
  index.add(doc(day(2024, 1, 2), {1, 0}));
  const auto hits = index.search(EmbeddingVector{{1, 0}}, day(2024, 2, 1), 3);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].document->story.date, day(2024, 1, 3));
  EXPECT_EQ(hits[1].document->story.date, day(2024, 1, 2));
  EXPECT_EQ(hits[2].document->story.date, day(2024, 1, 1));
}

TEST(Memory, CausalityAndRetention) {
  VectorIndex index;
  for (int i = 0; i < 10; ++i) index.add(doc(day(2024, 1, 1) + std::chrono::days{i}, {1.0, 0.1 * i}));
  EXPECT_TRUE(index.search(EmbeddingVector{{1, 0}}, day(2024, 1, 1), 5).empty());
  EXPECT_EQ(index.search(EmbeddingVector{{1, 0}}, day(2024, 1, 4), 5).size(), 3u);
  EXPECT_EQ(index.count_before(day(2024, 1, 4)), 3u);
  RetentionPolicy recent;
  recent.recency_days = 2;
  const auto hits = index.search(EmbeddingVector{{1, 0}}, day(2024, 1, 11), 10, recent);
  ASSERT_EQ(hits.size(), 2u);  // 2024-01-09 and 2024-01-10
  for (const auto& h : hits) EXPECT_GE(h.document->story.date, day(2024, 1, 9));
  RetentionPolicy strict;
  strict.min_similarity = 0.999;
  for (const auto& h : index.search(EmbeddingVector{{1, 0}}, day(2024, 2, 1), 10, strict)) EXPECT_GE(h.similarity, 0.999);
}

TEST(Memory, InsertRules) {
  VectorIndex index;
  index.add(doc(day(2024, 1, 1), {1, 0}, 5));
  index.add(doc(day(2024, 1, 1), {0, 1}, 6));  // same doc_id replaces
  EXPECT_EQ(index.size(), 1u);
  EXPECT_EQ(*index.find("daily:2024-01-01")->story.target, 6.0);
  EXPECT_THROW(index.add(doc(day(2024, 1, 2), {1, 0, 0})), InvalidArgument);
  EXPECT_THROW(index.add(doc(day(2024, 1, 2), {0, 0})), InvalidArgument);
  EXPECT_THROW(index.search(EmbeddingVector{{1, 0, 0}}, day(2024, 2, 1), 1), InvalidArgument);
  auto query_doc = doc(day(2024, 1, 3), {1, 0});
  query_doc.story.kind = StoryKind::query;
  EXPECT_THROW(index.add(query_doc), InvalidArgument);
}

TEST(Memory, ConcurrentReadersWithWriter) {
  VectorIndex index;
  index.add(doc(day(2020, 1, 1), {1, 1}));
  std::atomic<bool> done{false};
  std::atomic<int> violations{0};
  std::vector<std::thread> readers;
  for (int r = 0; r < 4; ++r) {
    readers.emplace_back([&] {
      while (!done) {
        const auto hits = index.search(EmbeddingVector{{1, 0.5}}, day(2021, 1, 1), 5);
        for (const auto& h : hits)
          if (h.document->story.date >= day(2021, 1, 1)) ++violations;
      }
    });
  }
  for (int i = 0; i < 2000; ++i) index.add(doc(day(2020, 1, 2) + std::chrono::days{i}, {1.0, 0.001 * i}));
  done = true;
  for (auto& t : readers) t.join();
  EXPECT_EQ(violations.load(), 0);
  EXPECT_EQ(index.size(), 2001u);
}

TEST(Memory, ProcessMemoryRetrieve) {
  auto emb = std::make_shared<DeterministicEmbedder>();
  ProcessMemory mem(emb, Granularity::daily);
  const auto series = testing::synthetic_series(30, 11);
  std::vector<Story> ctx;
  for (const auto& s : render_corpus(series, Granularity::daily))
    if (s.kind == StoryKind::contextual) ctx.push_back(s);
  mem.add_batch(ctx);
  EXPECT_EQ(mem.index().size(), 29u);
  const auto q = render_query_story(series.events[20]);
  const auto hits = mem.retrieve(q, series.events[20].date, 5);
  ASSERT_EQ(hits.size(), 5u);
  for (const auto& h : hits) EXPECT_LT(h.document->story.date, series.events[20].date);
  EXPECT_THROW(mem.retrieve(ctx[0], series.events[20].date), InvalidArgument);
  EXPECT_THROW(mem.add(render_contextual_story(series.events[0], 1, Granularity::weekday)), InvalidArgument);
  ProcessMemory empty(emb, Granularity::daily);
  EXPECT_TRUE(empty.retrieve(q, series.events[20].date).empty());
}

TEST(Memory, SnapshotRoundTrip) {
  auto emb = std::make_shared<DeterministicEmbedder>();
  ProcessMemory mem(emb, Granularity::weekday);
  for (const auto& s : render_corpus(testing::synthetic_series(10, 2), Granularity::weekday))
    if (s.kind == StoryKind::contextual) mem.add(s);
  const auto text = to_jsonl(mem.index());
  const auto docs = documents_from_jsonl(text);
  ASSERT_EQ(docs.size(), 9u);
  VectorIndex copy;
  for (const auto& d : docs) {
    const auto orig = mem.index().find(d.doc_id);
    ASSERT_TRUE(orig);
    EXPECT_EQ(d.embedding, orig->embedding);
    EXPECT_EQ(d.story, orig->story);
    copy.add(d);
  }
  EXPECT_EQ(to_jsonl(copy), text);
}

}  // namespace
}  // namespace wipcast

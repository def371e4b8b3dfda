#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "retrieval.hpp"
#include "types.hpp"

namespace ccfr {

// How the retrieval pool is limited before the similarity threshold: a fixed
// top-m cut, or the whole database with t_sc as the sole filter.
enum class TopmMode { fixed_topm, threshold_only };

struct RerankConfig {
  int topn = 5;
  int topm = 50;
  double t_sf = 0.5;   // softmax confidence gate
  double t_sc = 0.7;   // minimum neighbor similarity
  double alpha = 0.0;  // softmax weight in the blended score
  double beta = 1.0;   // retrieval weight in the blended score
  TopmMode topm_mode = TopmMode::fixed_topm;
};

// Throws std::invalid_argument naming the offending field.
void validate(const RerankConfig& cfg);

enum class Gate { softmax_kept, reranked, fallback_softmax };

const char* to_string(Gate gate);

struct RerankOutcome {
  std::string id;
  int predicted_class = -1;
  std::vector<std::pair<int, double>> scores;  // (class, score) in candidate order
  Gate gate = Gate::softmax_kept;
};

// The topn classes by descending probability, ties broken by ascending
// class index.
std::vector<int> top_candidates(const std::vector<double>& probs, int topn);

// Normalized per-class similarity mass over the candidate classes:
// numerator(c) sums the similarities of retrieved hits with label c passing
// t_sc, the denominator sums the numerators across all candidates. Hits
// labeled outside the candidate set are ignored entirely. A zero denominator
// yields an empty map (the caller falls back to softmax ranking).
std::map<int, double> class_similarity_scores(const SearchResult& retrievals,
                                              const std::vector<int>& candidates,
                                              double t_sc);

// Gate + blend over an already retrieved neighbor pool (the pool must have
// been limited per cfg.topm_mode). Used directly by the sweep harness, which
// caches retrievals across grid cells.
RerankOutcome rerank_with_retrievals(const PredictionRecord& pred,
                                     const SearchResult& retrievals,
                                     const RerankConfig& cfg);

// Full single-query path: keep the softmax ranking when the top-1
// probability clears t_sf, otherwise retrieve neighbors and blend
// alpha * softmax + beta * similarity scores over the topn candidates. The
// prediction is always one of the topn candidates.
RerankOutcome rerank_query(const PredictionRecord& pred,
                           const Database& db,
                           const std::vector<double>& query_embedding,
                           const RerankConfig& cfg);

using EmbeddingIndex = std::unordered_map<std::string, std::vector<double>>;

EmbeddingIndex make_embedding_index(const std::vector<EmbeddingRecord>& records);

// Element-wise rerank_query in input order; with threads > 1 the batch is
// partitioned by index so results do not depend on the thread count. A
// missing query embedding aborts with its id.
std::vector<RerankOutcome> rerank_batch(const std::vector<PredictionRecord>& preds,
                                        const Database& db,
                                        const EmbeddingIndex& queries,
                                        const RerankConfig& cfg,
                                        int threads = 1);

}  // namespace ccfr

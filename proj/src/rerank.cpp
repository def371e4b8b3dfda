#include "rerank.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace ccfr {

namespace {

int argmax_class(const std::vector<std::pair<int, double>>& scores) {
  int best_class = scores.front().first;
  double best = scores.front().second;
  for (const auto& [cls, score] : scores) {
    if (score > best || (score == best && cls < best_class)) {
      best = score;
      best_class = cls;
    }
  }
  return best_class;
}

}  // namespace

void validate(const RerankConfig& cfg) {
  if (cfg.topn < 1) throw std::invalid_argument("topn must be >= 1");
  if (cfg.topm < 1) throw std::invalid_argument("topm must be >= 1");
  if (cfg.t_sf < 0.0 || cfg.t_sf > 1.0) throw std::invalid_argument("t_sf must be in [0, 1]");
  if (cfg.t_sc < -1.0 || cfg.t_sc > 1.0) throw std::invalid_argument("t_sc must be in [-1, 1]");
  if (cfg.alpha < 0.0) throw std::invalid_argument("alpha must be non-negative");
  if (cfg.beta < 0.0) throw std::invalid_argument("beta must be non-negative");
}

const char* to_string(Gate gate) {
  switch (gate) {
    case Gate::softmax_kept: return "softmax_kept";
    case Gate::reranked: return "reranked";
    case Gate::fallback_softmax: return "fallback_softmax";
  }
  return "?";
}

std::vector<int> top_candidates(const std::vector<double>& probs, int topn) {
  if (probs.empty()) throw std::invalid_argument("probs must be non-empty");
  if (topn < 1) throw std::invalid_argument("topn must be >= 1");
  std::vector<int> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(topn), probs.size());
  std::partial_sort(order.begin(), order.begin() + n, order.end(), [&probs](int a, int b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    return a < b;
  });
  order.resize(n);
  return order;
}

std::map<int, double> class_similarity_scores(const SearchResult& retrievals,
                                              const std::vector<int>& candidates,
                                              double t_sc) {
  std::map<int, double> numerators;
  for (int c : candidates) numerators[c] = 0.0;

  double denominator = 0.0;
  for (const auto& hit : retrievals) {
    if (hit.similarity <= t_sc) continue;
    auto it = numerators.find(hit.label);
    if (it == numerators.end()) continue;  // outside the candidate set
    it->second += hit.similarity;
    denominator += hit.similarity;
  }
  if (denominator == 0.0) return {};
  for (auto& [cls, num] : numerators) num /= denominator;
  return numerators;
}

RerankOutcome rerank_with_retrievals(const PredictionRecord& pred,
                                     const SearchResult& retrievals,
                                     const RerankConfig& cfg) {
  validate(cfg);
  const std::vector<int> candidates = top_candidates(pred.probs, cfg.topn);

  RerankOutcome out;
  out.id = pred.id;
  const double top1 = pred.probs[candidates.front()];
  if (top1 >= cfg.t_sf) {
    out.gate = Gate::softmax_kept;
  } else {
    const std::map<int, double> sc = class_similarity_scores(retrievals, candidates, cfg.t_sc);
    if (sc.empty()) {
      out.gate = Gate::fallback_softmax;
    } else {
      out.gate = Gate::reranked;
      for (int c : candidates) {
        out.scores.emplace_back(c, cfg.alpha * pred.probs[c] + cfg.beta * sc.at(c));
      }
    }
  }
  if (out.gate != Gate::reranked) {
    for (int c : candidates) out.scores.emplace_back(c, pred.probs[c]);
  }
  out.predicted_class = argmax_class(out.scores);
  return out;
}

RerankOutcome rerank_query(const PredictionRecord& pred,
                           const Database& db,
                           const std::vector<double>& query_embedding,
                           const RerankConfig& cfg) {
  validate(cfg);
  const std::vector<int> candidates = top_candidates(pred.probs, cfg.topn);
  if (pred.probs[candidates.front()] >= cfg.t_sf) {
    // The retrieval pool is irrelevant above the gate; skip the scan.
    return rerank_with_retrievals(pred, {}, cfg);
  }
  const int topm =
      cfg.topm_mode == TopmMode::fixed_topm ? cfg.topm : static_cast<int>(db.size());
  return rerank_with_retrievals(pred, db.query_topm(query_embedding, topm), cfg);
}

EmbeddingIndex make_embedding_index(const std::vector<EmbeddingRecord>& records) {
  EmbeddingIndex index;
  index.reserve(records.size());
  for (const auto& r : records) index[r.id] = r.embedding;
  return index;
}

std::vector<RerankOutcome> rerank_batch(const std::vector<PredictionRecord>& preds,
                                        const Database& db,
                                        const EmbeddingIndex& queries,
                                        const RerankConfig& cfg,
                                        int threads) {
  validate(cfg);
  // Resolve every embedding up front so the first missing id aborts
  // regardless of the thread count.
  std::vector<const std::vector<double>*> embeddings;
  embeddings.reserve(preds.size());
  for (const auto& p : preds) {
    auto it = queries.find(p.id);
    if (it == queries.end()) {
      throw std::runtime_error("no query embedding for id \"" + p.id + "\"");
    }
    embeddings.push_back(&it->second);
  }

  std::vector<RerankOutcome> out(preds.size());
  const auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = rerank_query(preds[i], db, *embeddings[i], cfg);
    }
  };

  if (threads <= 1 || preds.size() < 2) {
    run(0, preds.size());
    return out;
  }

  const std::size_t worker_count = std::min<std::size_t>(threads, preds.size());
  const std::size_t chunk = (preds.size() + worker_count - 1) / worker_count;
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(worker_count);
  for (std::size_t w = 0; w < worker_count; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(preds.size(), begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([&, w, begin, end] {
      try {
        run(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace ccfr

#include "eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace ccfr {

namespace {

int truth_for(const TruthMap& truth, const std::string& id) {
  auto it = truth.find(id);
  if (it == truth.end()) {
    throw std::runtime_error("no ground-truth label for id \"" + id + "\"");
  }
  return it->second;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::size_t begin = 0;
  while (true) {
    const std::size_t end = text.find(sep, begin);
    if (end == std::string::npos) {
      parts.push_back(text.substr(begin));
      return parts;
    }
    parts.push_back(text.substr(begin, end - begin));
    begin = end + 1;
  }
}

double parse_number(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad axis value \"" + text + "\"");
  }
  if (used != text.size()) throw std::invalid_argument("bad axis value \"" + text + "\"");
  return v;
}

// Per-query state shared by every sweep cell.
struct SweepEntry {
  std::vector<int> class_order;  // all classes, (prob desc, class asc)
  double top1_prob = 0.0;
  int truth = 0;
  SearchResult pool;  // topm-limited retrievals, similarity-descending
};

}  // namespace

TruthMap make_truth_map(const std::vector<EmbeddingRecord>& queries) {
  TruthMap truth;
  truth.reserve(queries.size());
  for (const auto& q : queries) truth[q.id] = q.label;
  return truth;
}

EvalReport accuracy(const std::vector<RerankOutcome>& outcomes, const TruthMap& truth) {
  EvalReport report;
  if (outcomes.empty()) return report;

  std::int64_t top1 = 0;
  std::int64_t topn = 0;
  std::map<std::pair<int, int>, std::int64_t> confusion;
  for (const auto& o : outcomes) {
    const int expected = truth_for(truth, o.id);
    if (o.predicted_class == expected) ++top1;
    for (const auto& [cls, score] : o.scores) {
      if (cls == expected) {
        ++topn;
        break;
      }
    }
    ++confusion[{expected, o.predicted_class}];
    switch (o.gate) {
      case Gate::softmax_kept: ++report.gates.softmax_kept; break;
      case Gate::reranked: ++report.gates.reranked; break;
      case Gate::fallback_softmax: ++report.gates.fallback_softmax; break;
    }
  }
  const double n = static_cast<double>(outcomes.size());
  report.top1_accuracy = static_cast<double>(top1) / n;
  report.topn_accuracy = static_cast<double>(topn) / n;
  report.confusion.reserve(confusion.size());
  for (const auto& [key, count] : confusion) {
    report.confusion.push_back({key.first, key.second, count});
  }
  return report;
}

ModeComparison compare_modes(const std::vector<PredictionRecord>& preds,
                             const Database& db,
                             const EmbeddingIndex& queries,
                             const RerankConfig& cfg,
                             const TruthMap& truth,
                             int threads) {
  validate(cfg);

  std::vector<RerankOutcome> retrieval_outcomes;
  std::vector<RerankOutcome> classification_outcomes;
  retrieval_outcomes.reserve(preds.size());
  classification_outcomes.reserve(preds.size());
  for (const auto& p : preds) {
    auto it = queries.find(p.id);
    if (it == queries.end()) {
      throw std::runtime_error("no query embedding for id \"" + p.id + "\"");
    }
    const SearchResult nn = db.query_topm(it->second, 1);
    RerankOutcome r;
    r.id = p.id;
    r.predicted_class = nn.front().label;
    r.scores.emplace_back(nn.front().label, nn.front().similarity);
    r.gate = Gate::reranked;
    retrieval_outcomes.push_back(std::move(r));

    RerankOutcome c;
    c.id = p.id;
    c.gate = Gate::softmax_kept;
    for (int cls : top_candidates(p.probs, cfg.topn)) {
      c.scores.emplace_back(cls, p.probs[cls]);
    }
    c.predicted_class = c.scores.front().first;
    classification_outcomes.push_back(std::move(c));
  }

  ModeComparison cmp;
  cmp.retrieval_only = accuracy(retrieval_outcomes, truth);
  cmp.classification_only = accuracy(classification_outcomes, truth);
  cmp.ccfr = accuracy(rerank_batch(preds, db, queries, cfg, threads), truth);
  return cmp;
}

SweepGrid sweep(const std::vector<PredictionRecord>& preds,
                const Database& db,
                const EmbeddingIndex& queries,
                const TruthMap& truth,
                const RerankConfig& base_cfg,
                const std::vector<int>& topn_values,
                const std::vector<double>& t_sf_values,
                const std::vector<double>& t_sc_values,
                int threads) {
  validate(base_cfg);
  if (topn_values.empty() || t_sf_values.empty() || t_sc_values.empty()) {
    throw std::invalid_argument("sweep axes must be non-empty");
  }
  for (int n : topn_values) {
    if (n < 1) throw std::invalid_argument("topn must be >= 1");
  }

  SweepGrid grid;
  grid.topn_values = topn_values;
  grid.t_sf_values = t_sf_values;
  grid.t_sc_values = t_sc_values;
  grid.cells.assign(topn_values.size() * t_sf_values.size() * t_sc_values.size(), 0.0);
  if (preds.empty()) return grid;

  // Retrieval pools and candidate orderings do not depend on the swept
  // parameters, so compute them once per query.
  const int pool_size = base_cfg.topm_mode == TopmMode::fixed_topm
                            ? base_cfg.topm
                            : static_cast<int>(db.size());
  std::vector<SweepEntry> entries(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& p = preds[i];
    SweepEntry& e = entries[i];
    e.truth = truth_for(truth, p.id);
    e.class_order = top_candidates(p.probs, static_cast<int>(p.probs.size()));
    e.top1_prob = p.probs[e.class_order.front()];
    auto it = queries.find(p.id);
    if (it == queries.end()) {
      throw std::runtime_error("no query embedding for id \"" + p.id + "\"");
    }
    e.pool = db.query_topm(it->second, pool_size);
  }

  const std::size_t cell_count = grid.cells.size();
  const auto eval_cells = [&](std::size_t begin, std::size_t end) {
    for (std::size_t cell = begin; cell < end; ++cell) {
      const std::size_t i_tsc = cell % t_sc_values.size();
      const std::size_t i_tsf = (cell / t_sc_values.size()) % t_sf_values.size();
      const std::size_t i_topn = cell / (t_sc_values.size() * t_sf_values.size());
      RerankConfig cfg = base_cfg;
      cfg.topn = topn_values[i_topn];
      cfg.t_sf = t_sf_values[i_tsf];
      cfg.t_sc = t_sc_values[i_tsc];

      std::int64_t correct = 0;
      std::vector<int> candidates;
      for (std::size_t q = 0; q < preds.size(); ++q) {
        const SweepEntry& e = entries[q];
        int predicted;
        if (e.top1_prob >= cfg.t_sf) {
          predicted = e.class_order.front();
        } else {
          const std::size_t n =
              std::min<std::size_t>(static_cast<std::size_t>(cfg.topn), e.class_order.size());
          candidates.assign(e.class_order.begin(), e.class_order.begin() + n);
          const std::map<int, double> sc =
              class_similarity_scores(e.pool, candidates, cfg.t_sc);
          if (sc.empty()) {
            predicted = e.class_order.front();
          } else {
            predicted = candidates.front();
            double best = -std::numeric_limits<double>::infinity();
            for (int c : candidates) {
              const double score = cfg.alpha * preds[q].probs[c] + cfg.beta * sc.at(c);
              if (score > best || (score == best && c < predicted)) {
                best = score;
                predicted = c;
              }
            }
          }
        }
        if (predicted == e.truth) ++correct;
      }
      grid.cells[cell] = static_cast<double>(correct) / static_cast<double>(preds.size());
    }
  };

  if (threads <= 1 || cell_count < 2) {
    eval_cells(0, cell_count);
    return grid;
  }
  const std::size_t worker_count = std::min<std::size_t>(threads, cell_count);
  const std::size_t chunk = (cell_count + worker_count - 1) / worker_count;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < worker_count; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(cell_count, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back(eval_cells, begin, end);
  }
  for (auto& t : workers) t.join();
  return grid;
}

std::string sweep_to_csv(const SweepGrid& grid) {
  std::string out = "topn,t_sf,t_sc,top1_acc\n";
  char line[128];
  for (std::size_t i = 0; i < grid.topn_values.size(); ++i) {
    for (std::size_t j = 0; j < grid.t_sf_values.size(); ++j) {
      for (std::size_t k = 0; k < grid.t_sc_values.size(); ++k) {
        std::snprintf(line, sizeof(line), "%d,%g,%g,%.6f\n", grid.topn_values[i],
                      grid.t_sf_values[j], grid.t_sc_values[k], grid.at(i, j, k));
        out += line;
      }
    }
  }
  return out;
}

std::vector<double> parse_axis(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty axis");
  std::vector<double> values;
  if (text.find(':') != std::string::npos) {
    const std::vector<std::string> parts = split(text, ':');
    if (parts.size() != 3) {
      throw std::invalid_argument("range axis must be start:stop:step, got \"" + text + "\"");
    }
    const double start = parse_number(parts[0]);
    const double stop = parse_number(parts[1]);
    const double step = parse_number(parts[2]);
    if (step <= 0.0) throw std::invalid_argument("axis step must be positive");
    if (stop < start) throw std::invalid_argument("axis stop must be >= start");
    // start + k*step, inclusive of stop up to a small slack against float
    // accumulation at the high end.
    for (int k = 0;; ++k) {
      const double v = start + k * step;
      if (v > stop + step * 1e-9) break;
      values.push_back(v);
    }
  } else {
    for (const std::string& part : split(text, ',')) {
      values.push_back(parse_number(part));
    }
  }
  return values;
}

std::vector<int> parse_int_axis(const std::string& text) {
  std::vector<int> values;
  for (double v : parse_axis(text)) {
    const double rounded = std::round(v);
    if (std::abs(v - rounded) > 1e-9) {
      throw std::invalid_argument("axis value " + std::to_string(v) + " is not an integer");
    }
    values.push_back(static_cast<int>(rounded));
  }
  return values;
}

}  // namespace ccfr

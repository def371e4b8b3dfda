#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "types.hpp"

namespace ccfr {

struct SearchHit {
  std::string id;
  int label = 0;
  double similarity = 0.0;
};

// Ordered by (similarity desc, id asc).
using SearchResult = std::vector<SearchHit>;

// Immutable brute-force cosine index. Rows are L2-normalized at build time,
// so similarity is a plain dot product; queries are exact and read-only.
class Database {
 public:
  static Database build(const std::vector<EmbeddingRecord>& records);

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  const std::string& id_at(std::size_t i) const { return ids_[i]; }
  int label_at(std::size_t i) const { return labels_[i]; }
  std::span<const double> vector_at(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }

  // Exact top-m by cosine similarity, ties broken by ascending id.
  SearchResult query_topm(const std::vector<double>& query, int topm) const;

  // Binary format: "CCFRDB1", u32 count, u32 dim, then per record
  // (u32 id length, id bytes, u32 label, dim little-endian f32 values).
  void save(const std::string& path) const;
  static Database load(const std::string& path);

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<int> labels_;
  std::vector<double> data_;  // size() * dim(), unit rows
};

// Keeps hits with similarity strictly greater than t_sc, order preserved.
SearchResult filter_by_threshold(const SearchResult& hits, double t_sc);

}  // namespace ccfr

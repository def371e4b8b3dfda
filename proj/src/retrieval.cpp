#include "retrieval.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "io.hpp"
#include "vec.hpp"

namespace ccfr {

namespace {

void append_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void append_f32(std::string& out, float v) {
  append_u32(out, std::bit_cast<std::uint32_t>(v));
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& path) : bytes_(bytes), path_(path) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) {
      v = (v << 8) | static_cast<std::uint8_t>(bytes_[pos_ + i]);
    }
    pos_ += 4;
    return v;
  }

  float f32() { return std::bit_cast<float>(u32()); }

  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size()) {
      throw io::ParseError(path_ + ": truncated database file");
    }
  }

  const std::string& bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

constexpr char kMagic[] = "CCFRDB1";
constexpr std::size_t kMagicLen = 7;

}  // namespace

Database Database::build(const std::vector<EmbeddingRecord>& records) {
  if (records.empty()) throw std::invalid_argument("database input must be non-empty");

  Database db;
  db.dim_ = records.front().embedding.size();
  if (db.dim_ == 0) throw std::invalid_argument("embeddings must be non-empty");

  std::unordered_set<std::string> seen;
  db.ids_.reserve(records.size());
  db.labels_.reserve(records.size());
  db.data_.reserve(records.size() * db.dim_);
  for (const auto& r : records) {
    if (r.embedding.size() != db.dim_) {
      throw std::invalid_argument("embedding dimension mismatch for id \"" + r.id + "\"");
    }
    if (!seen.insert(r.id).second) {
      throw std::invalid_argument("duplicate id \"" + r.id + "\"");
    }
    std::vector<double> v = r.embedding;
    const double n = l2_norm(v);
    if (n < 1e-300) {
      throw std::invalid_argument("zero-norm embedding for id \"" + r.id + "\"");
    }
    for (double& x : v) x /= n;
    db.ids_.push_back(r.id);
    db.labels_.push_back(r.label);
    db.data_.insert(db.data_.end(), v.begin(), v.end());
  }
  return db;
}

SearchResult Database::query_topm(const std::vector<double>& query, int topm) const {
  if (topm < 1) throw std::invalid_argument("topm must be >= 1");
  if (query.size() != dim_) {
    throw std::invalid_argument("query dimension mismatch: expected " + std::to_string(dim_) +
                                ", got " + std::to_string(query.size()));
  }
  std::vector<double> qn = query;
  const double n = l2_norm(qn);
  if (n < 1e-300) throw std::invalid_argument("zero-norm query");
  for (double& x : qn) x /= n;

  std::vector<double> sims(size());
  for (std::size_t i = 0; i < size(); ++i) sims[i] = dot(qn, vector_at(i));

  std::vector<std::size_t> order(size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(topm), size());
  const auto better = [&](std::size_t a, std::size_t b) {
    if (sims[a] != sims[b]) return sims[a] > sims[b];
    return ids_[a] < ids_[b];
  };
  std::partial_sort(order.begin(), order.begin() + m, order.end(), better);

  SearchResult out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    out.push_back({ids_[order[i]], labels_[order[i]], sims[order[i]]});
  }
  return out;
}

void Database::save(const std::string& path) const {
  std::string bytes;
  bytes.append(kMagic, kMagicLen);
  append_u32(bytes, static_cast<std::uint32_t>(size()));
  append_u32(bytes, static_cast<std::uint32_t>(dim_));
  for (std::size_t i = 0; i < size(); ++i) {
    append_u32(bytes, static_cast<std::uint32_t>(ids_[i].size()));
    bytes.append(ids_[i]);
    append_u32(bytes, static_cast<std::uint32_t>(labels_[i]));
    for (double x : vector_at(i)) append_f32(bytes, static_cast<float>(x));
  }
  io::atomic_write(path, bytes);
}

Database Database::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open database file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  Reader r(bytes, path);
  if (r.str(kMagicLen) != std::string(kMagic, kMagicLen)) {
    throw io::ParseError(path + ": bad magic, not a database file");
  }
  const std::uint32_t count = r.u32();
  const std::uint32_t dim = r.u32();
  std::vector<EmbeddingRecord> records;
  records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    EmbeddingRecord rec;
    const std::uint32_t id_len = r.u32();
    rec.id = r.str(id_len);
    rec.label = static_cast<int>(r.u32());
    rec.embedding.resize(dim);
    for (std::uint32_t d = 0; d < dim; ++d) rec.embedding[d] = r.f32();
    records.push_back(std::move(rec));
  }
  if (!r.done()) throw io::ParseError(path + ": trailing bytes after last record");
  return build(records);
}

SearchResult filter_by_threshold(const SearchResult& hits, double t_sc) {
  SearchResult out;
  for (const auto& h : hits) {
    if (h.similarity > t_sc) out.push_back(h);
  }
  return out;
}

}  // namespace ccfr

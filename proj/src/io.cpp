#include "io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "losses.hpp"

namespace ccfr::io {

using nlohmann::json;

namespace {

json parse_json(const std::string& text, const std::string& context) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(context + ": " + e.what());
  }
}

std::vector<double> number_array(const json& j, const std::string& key,
                                 const std::string& context) {
  if (!j.contains(key)) throw ParseError(context + ": missing field \"" + key + "\"");
  const json& a = j.at(key);
  if (!a.is_array()) throw ParseError(context + ": \"" + key + "\" must be an array");
  std::vector<double> out;
  out.reserve(a.size());
  for (const json& x : a) {
    if (!x.is_number()) {
      throw ParseError(context + ": \"" + key + "\" must contain numbers");
    }
    const double v = x.get<double>();
    if (!std::isfinite(v)) {
      throw ParseError(context + ": \"" + key + "\" contains a non-finite value");
    }
    out.push_back(v);
  }
  return out;
}

std::string string_field(const json& j, const std::string& key, const std::string& context) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw ParseError(context + ": missing string field \"" + key + "\"");
  }
  return j.at(key).get<std::string>();
}

int int_field(const json& j, const std::string& key, const std::string& context) {
  if (!j.contains(key) || !j.at(key).is_number_integer()) {
    throw ParseError(context + ": missing integer field \"" + key + "\"");
  }
  return j.at(key).get<int>();
}

// Invokes fn once per non-empty line with 1-based line numbers in error
// context strings.
void for_each_jsonl_line(const std::string& path,
                         const std::function<void(const json&, const std::string&)>& fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    const std::string context = path + ": line " + std::to_string(line_number);
    fn(parse_json(line, context), context);
  }
}

json double_array_json(const std::vector<double>& v) {
  return json(v);
}

}  // namespace

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open file for writing: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("failed writing file: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("failed to move " + tmp + " into place: " + ec.message());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<EmbeddingRecord> read_embeddings_jsonl(const std::string& path) {
  std::vector<EmbeddingRecord> records;
  for_each_jsonl_line(path, [&records](const json& j, const std::string& context) {
    EmbeddingRecord r;
    r.id = string_field(j, "id", context);
    r.label = int_field(j, "label", context);
    if (r.label < 0) throw ParseError(context + ": \"label\" must be non-negative");
    r.embedding = number_array(j, "embedding", context);
    if (r.embedding.empty()) throw ParseError(context + ": \"embedding\" is empty");
    records.push_back(std::move(r));
  });
  return records;
}

void write_embeddings_jsonl(const std::string& path,
                            const std::vector<EmbeddingRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    json j;
    j["id"] = r.id;
    j["label"] = r.label;
    j["embedding"] = double_array_json(r.embedding);
    out += j.dump();
    out += '\n';
  }
  atomic_write(path, out);
}

std::vector<PredictionRecord> read_predictions_jsonl(const std::string& path) {
  std::vector<PredictionRecord> preds;
  for_each_jsonl_line(path, [&preds](const json& j, const std::string& context) {
    PredictionRecord p;
    p.id = string_field(j, "id", context);
    const bool has_logits = j.contains("logits");
    const bool has_probs = j.contains("probs");
    if (has_logits == has_probs) {
      throw ParseError(context + ": exactly one of \"logits\" or \"probs\" is required");
    }
    if (has_logits) {
      p.probs = softmax(number_array(j, "logits", context));
    } else {
      p.probs = number_array(j, "probs", context);
      double sum = 0.0;
      for (double v : p.probs) {
        if (v < 0.0) throw ParseError(context + ": probabilities must be non-negative");
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-6) {
        throw ParseError(context + ": probabilities must sum to 1");
      }
    }
    if (p.probs.empty()) throw ParseError(context + ": empty prediction vector");
    preds.push_back(std::move(p));
  });
  return preds;
}

void write_predictions_jsonl(const std::string& path,
                             const std::vector<PredictionRecord>& preds) {
  std::string out;
  for (const auto& p : preds) {
    json j;
    j["id"] = p.id;
    j["probs"] = double_array_json(p.probs);
    out += j.dump();
    out += '\n';
  }
  atomic_write(path, out);
}

std::vector<BoxRecord> read_boxes_jsonl(const std::string& path) {
  std::vector<BoxRecord> records;
  for_each_jsonl_line(path, [&records](const json& j, const std::string& context) {
    BoxRecord r;
    r.id = string_field(j, "id", context);
    r.box.scale_index = int_field(j, "scale", context);
    if (r.box.scale_index < 0) throw ParseError(context + ": \"scale\" must be >= 0");
    const std::vector<double> corners = number_array(j, "box", context);
    if (corners.size() != 4) {
      throw ParseError(context + ": \"box\" must be [x1, y1, x2, y2]");
    }
    r.box.x1 = corners[0];
    r.box.y1 = corners[1];
    r.box.x2 = corners[2];
    r.box.y2 = corners[3];
    if (!(r.box.x2 > r.box.x1) || !(r.box.y2 > r.box.y1)) {
      throw ParseError(context + ": box must have positive area");
    }
    if (!j.contains("score") || !j.at("score").is_number()) {
      throw ParseError(context + ": missing number field \"score\"");
    }
    r.box.score = j.at("score").get<double>();
    records.push_back(std::move(r));
  });
  return records;
}

void write_boxes_jsonl(const std::string& path, const std::vector<BoxRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    json j;
    j["id"] = r.id;
    j["scale"] = r.box.scale_index;
    j["box"] = json::array({r.box.x1, r.box.y1, r.box.x2, r.box.y2});
    j["score"] = r.box.score;
    out += j.dump();
    out += '\n';
  }
  atomic_write(path, out);
}

Hierarchy read_hierarchy_json(const std::string& path) {
  const json j = parse_json(read_file(path), path);
  Hierarchy h;
  h.num_children = int_field(j, "num_children", path);
  h.num_super = int_field(j, "num_super", path);
  if (!j.contains("parent") || !j.at("parent").is_array()) {
    throw ParseError(path + ": missing array field \"parent\"");
  }
  for (const json& x : j.at("parent")) {
    if (!x.is_number_integer()) {
      throw ParseError(path + ": \"parent\" must contain integers");
    }
    h.parent.push_back(x.get<int>());
  }
  validate(h);
  return h;
}

std::string hierarchy_to_json(const Hierarchy& h) {
  json j;
  j["num_children"] = h.num_children;
  j["num_super"] = h.num_super;
  j["parent"] = h.parent;
  return j.dump();
}

void write_hierarchy_json(const std::string& path, const Hierarchy& h) {
  atomic_write(path, hierarchy_to_json(h) + "\n");
}

FusionWeights read_fusion_weights_json(const std::string& path) {
  const json j = parse_json(read_file(path), path);
  if (!j.contains("scales") || !j.at("scales").is_array()) {
    throw ParseError(path + ": missing array field \"scales\"");
  }
  FusionWeights w;
  for (const json& s : j.at("scales")) {
    ScaleFusion fusion;
    if (!s.contains("matrix") || !s.at("matrix").is_array()) {
      throw ParseError(path + ": scale entry missing array field \"matrix\"");
    }
    for (const json& row : s.at("matrix")) {
      if (!row.is_array()) throw ParseError(path + ": \"matrix\" must be 2-d");
      std::vector<double> r;
      for (const json& x : row) {
        if (!x.is_number()) throw ParseError(path + ": \"matrix\" must hold numbers");
        r.push_back(x.get<double>());
      }
      fusion.matrix.push_back(std::move(r));
    }
    fusion.bias = number_array(s, "bias", path);
    w.scales.push_back(std::move(fusion));
  }
  return w;
}

void write_fusion_weights_json(const std::string& path, const FusionWeights& w) {
  json scales = json::array();
  for (const auto& s : w.scales) {
    json entry;
    entry["matrix"] = s.matrix;
    entry["bias"] = s.bias;
    scales.push_back(std::move(entry));
  }
  json j;
  j["scales"] = std::move(scales);
  atomic_write(path, j.dump() + "\n");
}

std::vector<BundleRecord> read_bundles_jsonl(const std::string& path) {
  std::vector<BundleRecord> records;
  for_each_jsonl_line(path, [&records](const json& j, const std::string& context) {
    BundleRecord r;
    r.id = string_field(j, "id", context);
    r.label = j.contains("label") ? int_field(j, "label", context) : 0;
    r.bundle.global_feature = number_array(j, "global_feature", context);
    if (!j.contains("local_features") || !j.at("local_features").is_array()) {
      throw ParseError(context + ": missing array field \"local_features\"");
    }
    for (const json& scale : j.at("local_features")) {
      if (!scale.is_array()) {
        throw ParseError(context + ": \"local_features\" must be a list of scales");
      }
      std::vector<std::vector<double>> vectors;
      for (const json& vec : scale) {
        if (!vec.is_array()) {
          throw ParseError(context + ": local features must be vectors");
        }
        std::vector<double> v;
        for (const json& x : vec) {
          if (!x.is_number()) {
            throw ParseError(context + ": local features must hold numbers");
          }
          v.push_back(x.get<double>());
        }
        vectors.push_back(std::move(v));
      }
      r.bundle.local_features.push_back(std::move(vectors));
    }
    records.push_back(std::move(r));
  });
  return records;
}

RerankConfig parse_rerank_config_json(const std::string& text) {
  RerankConfig cfg;
  if (!text.empty()) {
    const json j = parse_json(text, "config");
    for (const auto& [key, value] : j.items()) {
      if (key == "topn") {
        cfg.topn = value.get<int>();
      } else if (key == "topm") {
        cfg.topm = value.get<int>();
      } else if (key == "t_sf") {
        cfg.t_sf = value.get<double>();
      } else if (key == "t_sc") {
        cfg.t_sc = value.get<double>();
      } else if (key == "alpha") {
        cfg.alpha = value.get<double>();
      } else if (key == "beta") {
        cfg.beta = value.get<double>();
      } else if (key == "topm_mode") {
        const std::string mode = value.get<std::string>();
        if (mode == "fixed_topm") {
          cfg.topm_mode = TopmMode::fixed_topm;
        } else if (mode == "threshold_only") {
          cfg.topm_mode = TopmMode::threshold_only;
        } else {
          throw std::invalid_argument("topm_mode must be \"fixed_topm\" or \"threshold_only\"");
        }
      } else {
        throw std::invalid_argument("unknown config field \"" + key + "\"");
      }
    }
  }
  validate(cfg);
  return cfg;
}

std::string rerank_config_to_json(const RerankConfig& cfg) {
  json j;
  j["topn"] = cfg.topn;
  j["topm"] = cfg.topm;
  j["t_sf"] = cfg.t_sf;
  j["t_sc"] = cfg.t_sc;
  j["alpha"] = cfg.alpha;
  j["beta"] = cfg.beta;
  j["topm_mode"] = cfg.topm_mode == TopmMode::fixed_topm ? "fixed_topm" : "threshold_only";
  return j.dump();
}

void write_outcomes_jsonl(const std::string& path,
                          const std::vector<RerankOutcome>& outcomes) {
  std::string out;
  for (const auto& o : outcomes) {
    json scores = json::object();
    for (const auto& [cls, score] : o.scores) {
      scores[std::to_string(cls)] = score;
    }
    json j;
    j["id"] = o.id;
    j["predicted_class"] = o.predicted_class;
    j["gate"] = to_string(o.gate);
    j["scores"] = std::move(scores);
    out += j.dump();
    out += '\n';
  }
  atomic_write(path, out);
}

namespace {

json report_json(const EvalReport& report) {
  json gates;
  gates["softmax_kept"] = report.gates.softmax_kept;
  gates["reranked"] = report.gates.reranked;
  gates["fallback_softmax"] = report.gates.fallback_softmax;
  json confusion = json::array();
  for (const auto& cell : report.confusion) {
    json c;
    c["true"] = cell.true_class;
    c["predicted"] = cell.predicted_class;
    c["count"] = cell.count;
    confusion.push_back(std::move(c));
  }
  json j;
  j["top1_accuracy"] = report.top1_accuracy;
  j["topn_accuracy"] = report.topn_accuracy;
  j["gate_counts"] = std::move(gates);
  j["confusion"] = std::move(confusion);
  return j;
}

}  // namespace

std::string eval_report_to_json(const EvalReport& report) {
  return report_json(report).dump();
}

std::string mode_comparison_to_json(const ModeComparison& cmp) {
  json j;
  j["retrieval"] = report_json(cmp.retrieval_only);
  j["classification"] = report_json(cmp.classification_only);
  j["ccfr"] = report_json(cmp.ccfr);
  return j.dump();
}

}  // namespace ccfr::io

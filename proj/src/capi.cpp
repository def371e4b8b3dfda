#include "ccfr/ccfr.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "eval.hpp"
#include "fixture.hpp"
#include "geometry.hpp"
#include "hierarchy.hpp"
#include "io.hpp"
#include "json.hpp"
#include "log.hpp"
#include "losscheck.hpp"
#include "rerank.hpp"
#include "retrieval.hpp"

namespace {

thread_local std::string g_last_error;

ccfr_status fail(ccfr_status code, const std::string& message) {
  g_last_error = message;
  ccfr::log::error(message);
  return code;
}

// Maps the core's exception idiom onto status codes + the thread-local
// message.
template <typename Fn>
ccfr_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return CCFR_OK;
  } catch (const std::invalid_argument& e) {
    return fail(CCFR_ERR_INVALID_ARGUMENT, e.what());
  } catch (const ccfr::io::ParseError& e) {
    return fail(CCFR_ERR_PARSE, e.what());
  } catch (const std::runtime_error& e) {
    return fail(CCFR_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(CCFR_ERR_INTERNAL, e.what());
  }
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

ccfr::RerankConfig config_from(const char* config_json) {
  return ccfr::io::parse_rerank_config_json(config_json == nullptr ? "" : config_json);
}

}  // namespace

struct ccfr_database {
  ccfr::Database db;
};

struct ccfr_search_result {
  ccfr::SearchResult hits;
};

extern "C" {

const char* ccfr_version(void) { return "0.1.0"; }

const char* ccfr_last_error(void) { return g_last_error.c_str(); }

ccfr_status ccfr_database_build_from_jsonl(const char* embeddings_jsonl_path,
                                           ccfr_database** out_db) {
  return guarded([&] {
    if (embeddings_jsonl_path == nullptr || out_db == nullptr) {
      throw std::invalid_argument("null argument");
    }
    auto records = ccfr::io::read_embeddings_jsonl(embeddings_jsonl_path);
    *out_db = new ccfr_database{ccfr::Database::build(records)};
  });
}

ccfr_status ccfr_database_open(const char* db_path, ccfr_database** out_db) {
  return guarded([&] {
    if (db_path == nullptr || out_db == nullptr) throw std::invalid_argument("null argument");
    *out_db = new ccfr_database{ccfr::Database::load(db_path)};
  });
}

ccfr_status ccfr_database_save(const ccfr_database* db, const char* db_path) {
  return guarded([&] {
    if (db == nullptr || db_path == nullptr) throw std::invalid_argument("null argument");
    db->db.save(db_path);
  });
}

size_t ccfr_database_size(const ccfr_database* db) {
  return db == nullptr ? 0 : db->db.size();
}

size_t ccfr_database_dim(const ccfr_database* db) {
  return db == nullptr ? 0 : db->db.dim();
}

void ccfr_database_free(ccfr_database* db) { delete db; }

ccfr_status ccfr_database_query(const ccfr_database* db,
                                const double* query,
                                size_t dim,
                                int topm,
                                ccfr_search_result** out_result) {
  return guarded([&] {
    if (db == nullptr || query == nullptr || out_result == nullptr) {
      throw std::invalid_argument("null argument");
    }
    std::vector<double> q(query, query + dim);
    *out_result = new ccfr_search_result{db->db.query_topm(q, topm)};
  });
}

size_t ccfr_search_result_size(const ccfr_search_result* result) {
  return result == nullptr ? 0 : result->hits.size();
}

const char* ccfr_search_result_id(const ccfr_search_result* result, size_t index) {
  if (result == nullptr || index >= result->hits.size()) return nullptr;
  return result->hits[index].id.c_str();
}

int ccfr_search_result_label(const ccfr_search_result* result, size_t index) {
  if (result == nullptr || index >= result->hits.size()) return -1;
  return result->hits[index].label;
}

double ccfr_search_result_similarity(const ccfr_search_result* result, size_t index) {
  if (result == nullptr || index >= result->hits.size()) return -2.0;
  return result->hits[index].similarity;
}

void ccfr_search_result_free(ccfr_search_result* result) { delete result; }

ccfr_status ccfr_build_db_file(const char* embeddings_jsonl_path, const char* out_db_path) {
  return guarded([&] {
    if (embeddings_jsonl_path == nullptr || out_db_path == nullptr) {
      throw std::invalid_argument("null argument");
    }
    Timer timer;
    auto records = ccfr::io::read_embeddings_jsonl(embeddings_jsonl_path);
    const ccfr::Database db = ccfr::Database::build(records);
    db.save(out_db_path);
    ccfr::log::info("build-db: " + std::to_string(db.size()) + " records, dim " +
                    std::to_string(db.dim()) + ", " + std::to_string(timer.seconds()) + " s");
  });
}

ccfr_status ccfr_build_hierarchy_file(const char* embeddings_jsonl_path,
                                      int num_super,
                                      const char* out_json_path) {
  return guarded([&] {
    if (embeddings_jsonl_path == nullptr || out_json_path == nullptr) {
      throw std::invalid_argument("null argument");
    }
    Timer timer;
    auto records = ccfr::io::read_embeddings_jsonl(embeddings_jsonl_path);
    int num_classes = 0;
    for (const auto& r : records) num_classes = std::max(num_classes, r.label + 1);
    const auto means = ccfr::class_means(records, num_classes);
    const ccfr::Hierarchy h = ccfr::build_hierarchy(means, num_super);
    ccfr::io::write_hierarchy_json(out_json_path, h);
    ccfr::log::info("hierarchy: " + std::to_string(num_classes) + " classes -> " +
                    std::to_string(num_super) + " supers, " + std::to_string(timer.seconds()) +
                    " s");
  });
}

ccfr_status ccfr_generate_anchors_file(int image_size,
                                       const double* scales,
                                       const double* strides,
                                       size_t num_scales,
                                       double aspect_ratio,
                                       int clip,
                                       const char* out_boxes_jsonl_path) {
  return guarded([&] {
    if (scales == nullptr || strides == nullptr || out_boxes_jsonl_path == nullptr) {
      throw std::invalid_argument("null argument");
    }
    ccfr::AnchorSpec spec;
    spec.image_size = image_size;
    spec.scales.assign(scales, scales + num_scales);
    spec.strides.assign(strides, strides + num_scales);
    spec.aspect_ratio = aspect_ratio;
    spec.clip = clip != 0;
    const std::vector<ccfr::Box> anchors = ccfr::generate_anchors(spec);
    std::vector<ccfr::io::BoxRecord> records;
    records.reserve(anchors.size());
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      records.push_back({"a" + std::to_string(i), anchors[i]});
    }
    ccfr::io::write_boxes_jsonl(out_boxes_jsonl_path, records);
    ccfr::log::info("anchors: " + std::to_string(records.size()) + " boxes");
  });
}

ccfr_status ccfr_nms_file(const char* boxes_jsonl_path,
                          double iou_threshold,
                          int keep_per_scale,
                          const char* out_boxes_jsonl_path) {
  return guarded([&] {
    if (boxes_jsonl_path == nullptr || out_boxes_jsonl_path == nullptr) {
      throw std::invalid_argument("null argument");
    }
    Timer timer;
    const auto records = ccfr::io::read_boxes_jsonl(boxes_jsonl_path);
    std::vector<ccfr::Box> boxes;
    boxes.reserve(records.size());
    for (const auto& r : records) boxes.push_back(r.box);
    const auto keep = ccfr::scale_separated_nms_indices(boxes, iou_threshold, keep_per_scale);
    std::vector<ccfr::io::BoxRecord> survivors;
    survivors.reserve(keep.size());
    for (std::size_t i : keep) survivors.push_back(records[i]);
    ccfr::io::write_boxes_jsonl(out_boxes_jsonl_path, survivors);
    ccfr::log::info("nms: " + std::to_string(records.size()) + " boxes -> " +
                    std::to_string(survivors.size()) + " survivors, " +
                    std::to_string(timer.seconds()) + " s");
  });
}

ccfr_status ccfr_fuse_file(const char* bundles_jsonl_path,
                           const char* weights_json_path,
                           int normalize,
                           const char* out_embeddings_jsonl_path) {
  return guarded([&] {
    if (bundles_jsonl_path == nullptr || weights_json_path == nullptr ||
        out_embeddings_jsonl_path == nullptr) {
      throw std::invalid_argument("null argument");
    }
    Timer timer;
    const ccfr::FusionWeights weights = ccfr::io::read_fusion_weights_json(weights_json_path);
    const auto bundles = ccfr::io::read_bundles_jsonl(bundles_jsonl_path);
    std::vector<ccfr::EmbeddingRecord> out;
    out.reserve(bundles.size());
    for (const auto& b : bundles) {
      ccfr::FeatureBundle padded = b.bundle;
      // Locals share the global feature's dimension; the keep count per
      // scale is implied by the fusion matrix shape.
      const std::size_t dim = b.bundle.global_feature.size();
      for (std::size_t s = 0; s < padded.local_features.size() && dim > 0; ++s) {
        if (s >= weights.scales.size()) break;
        const std::size_t rows = weights.scales[s].matrix.size();
        if (rows % dim != 0) continue;  // let assemble_embedding report the mismatch
        padded.local_features[s] = ccfr::pad_missing_regions(
            padded.local_features[s], static_cast<int>(rows / dim), dim);
      }
      ccfr::EmbeddingRecord r;
      r.id = b.id;
      r.label = b.label;
      r.embedding = ccfr::assemble_embedding(padded, weights, normalize != 0);
      out.push_back(std::move(r));
    }
    ccfr::io::write_embeddings_jsonl(out_embeddings_jsonl_path, out);
    ccfr::log::info("fuse: " + std::to_string(out.size()) + " embeddings, " +
                    std::to_string(timer.seconds()) + " s");
  });
}

ccfr_status ccfr_rerank_file(const char* db_path,
                             const char* preds_jsonl_path,
                             const char* queries_jsonl_path,
                             const char* config_json,
                             int threads,
                             const char* out_outcomes_jsonl_path) {
  return guarded([&] {
    if (db_path == nullptr || preds_jsonl_path == nullptr || queries_jsonl_path == nullptr ||
        out_outcomes_jsonl_path == nullptr) {
      throw std::invalid_argument("null argument");
    }
    Timer timer;
    const ccfr::RerankConfig cfg = config_from(config_json);
    const ccfr::Database db = ccfr::Database::load(db_path);
    const auto preds = ccfr::io::read_predictions_jsonl(preds_jsonl_path);
    const auto queries = ccfr::io::read_embeddings_jsonl(queries_jsonl_path);
    const ccfr::EmbeddingIndex index = ccfr::make_embedding_index(queries);
    const auto outcomes = ccfr::rerank_batch(preds, db, index, cfg, threads);
    ccfr::io::write_outcomes_jsonl(out_outcomes_jsonl_path, outcomes);
    ccfr::log::info("rerank: " + std::to_string(outcomes.size()) + " queries, " +
                    std::to_string(timer.seconds()) + " s");
  });
}

ccfr_status ccfr_eval_file(const char* db_path,
                           const char* preds_jsonl_path,
                           const char* queries_jsonl_path,
                           const char* config_json,
                           int threads,
                           const char* out_report_json_path) {
  return guarded([&] {
    if (db_path == nullptr || preds_jsonl_path == nullptr || queries_jsonl_path == nullptr ||
        out_report_json_path == nullptr) {
      throw std::invalid_argument("null argument");
    }
    Timer timer;
    const ccfr::RerankConfig cfg = config_from(config_json);
    const ccfr::Database db = ccfr::Database::load(db_path);
    const auto preds = ccfr::io::read_predictions_jsonl(preds_jsonl_path);
    const auto queries = ccfr::io::read_embeddings_jsonl(queries_jsonl_path);
    const ccfr::EmbeddingIndex index = ccfr::make_embedding_index(queries);
    const ccfr::TruthMap truth = ccfr::make_truth_map(queries);
    const ccfr::ModeComparison cmp = ccfr::compare_modes(preds, db, index, cfg, truth, threads);
    ccfr::io::atomic_write(out_report_json_path, ccfr::io::mode_comparison_to_json(cmp) + "\n");
    ccfr::log::info("eval: " + std::to_string(preds.size()) + " queries, " +
                    std::to_string(timer.seconds()) + " s");
  });
}

ccfr_status ccfr_sweep_file(const char* db_path,
                            const char* preds_jsonl_path,
                            const char* queries_jsonl_path,
                            const char* config_json,
                            const char* topn_axis,
                            const char* t_sf_axis,
                            const char* t_sc_axis,
                            int threads,
                            const char* out_csv_path) {
  return guarded([&] {
    if (db_path == nullptr || preds_jsonl_path == nullptr || queries_jsonl_path == nullptr ||
        topn_axis == nullptr || t_sf_axis == nullptr || t_sc_axis == nullptr ||
        out_csv_path == nullptr) {
      throw std::invalid_argument("null argument");
    }
    Timer timer;
    const ccfr::RerankConfig cfg = config_from(config_json);
    const ccfr::Database db = ccfr::Database::load(db_path);
    const auto preds = ccfr::io::read_predictions_jsonl(preds_jsonl_path);
    const auto queries = ccfr::io::read_embeddings_jsonl(queries_jsonl_path);
    const ccfr::EmbeddingIndex index = ccfr::make_embedding_index(queries);
    const ccfr::TruthMap truth = ccfr::make_truth_map(queries);
    const ccfr::SweepGrid grid =
        ccfr::sweep(preds, db, index, truth, cfg, ccfr::parse_int_axis(topn_axis),
                    ccfr::parse_axis(t_sf_axis), ccfr::parse_axis(t_sc_axis), threads);
    ccfr::io::atomic_write(out_csv_path, ccfr::sweep_to_csv(grid));
    ccfr::log::info("sweep: " + std::to_string(grid.cells.size()) + " cells, " +
                    std::to_string(timer.seconds()) + " s");
  });
}

ccfr_status ccfr_gen_fixture(const char* params_json, const char* out_dir) {
  return guarded([&] {
    if (out_dir == nullptr) throw std::invalid_argument("null argument");
    ccfr::FixtureSpec spec;
    if (params_json != nullptr && params_json[0] != '\0') {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(params_json);
      } catch (const nlohmann::json::exception& e) {
        throw ccfr::io::ParseError(std::string("fixture params: ") + e.what());
      }
      for (const auto& [key, value] : j.items()) {
        if (key == "num_classes") {
          spec.num_classes = value.get<int>();
        } else if (key == "train_per_class") {
          spec.train_per_class = value.get<int>();
        } else if (key == "test_per_class") {
          spec.test_per_class = value.get<int>();
        } else if (key == "dim") {
          spec.dim = value.get<int>();
        } else if (key == "confusable_fraction") {
          spec.confusable_fraction = value.get<double>();
        } else if (key == "seed") {
          spec.seed = value.get<std::uint64_t>();
        } else {
          throw std::invalid_argument("unknown fixture field \"" + key + "\"");
        }
      }
    }
    Timer timer;
    const ccfr::Fixture fx = ccfr::generate_fixture(spec);
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    ccfr::io::write_embeddings_jsonl((dir / "train.jsonl").string(), fx.train);
    ccfr::io::write_embeddings_jsonl((dir / "queries.jsonl").string(), fx.queries);
    ccfr::io::write_predictions_jsonl((dir / "preds.jsonl").string(), fx.preds);
    ccfr::log::info("gen-fixture: " + std::to_string(fx.train.size()) + " train, " +
                    std::to_string(fx.queries.size()) + " queries, " +
                    std::to_string(timer.seconds()) + " s");
  });
}

ccfr_status ccfr_loss_check(uint64_t seed,
                            int trials,
                            double epsilon,
                            ccfr_loss_check_report* out_report) {
  return guarded([&] {
    if (out_report == nullptr) throw std::invalid_argument("null argument");
    const auto entries = ccfr::run_loss_checks(seed, trials, epsilon);
    out_report->count = entries.size();
    for (std::size_t i = 0; i < entries.size() && i < CCFR_LOSS_CHECK_MAX; ++i) {
      std::snprintf(out_report->names[i], sizeof(out_report->names[i]), "%s",
                    entries[i].name.c_str());
      out_report->max_rel_error[i] = entries[i].max_rel_error;
    }
  });
}

}  // extern "C"

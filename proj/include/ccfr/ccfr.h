#ifndef CCFR_H
#define CCFR_H

/* C interface to the CCFR library: coarse softmax classification re-ranked
 * by cosine retrieval over local-region-enhanced embeddings. All functions
 * return ccfr_status; on failure ccfr_last_error() carries a message for the
 * calling thread. Handles are opaque and freed with their _free function. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CCFR_API __declspec(dllexport)
#else
#define CCFR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ccfr_status {
  CCFR_OK = 0,
  CCFR_ERR_INVALID_ARGUMENT = 1,
  CCFR_ERR_IO = 2,
  CCFR_ERR_PARSE = 3,
  CCFR_ERR_INTERNAL = 4
} ccfr_status;

CCFR_API const char* ccfr_version(void);

/* Message for the most recent failure on this thread; empty string when the
 * last call succeeded. The pointer stays valid until the next library call
 * on the same thread. */
CCFR_API const char* ccfr_last_error(void);

/* ---- searching database ------------------------------------------------ */

typedef struct ccfr_database ccfr_database;
typedef struct ccfr_search_result ccfr_search_result;

/* Build from embedding JSONL ({"id", "label", "embedding"} per line). */
CCFR_API ccfr_status ccfr_database_build_from_jsonl(const char* embeddings_jsonl_path,
                                                    ccfr_database** out_db);
CCFR_API ccfr_status ccfr_database_open(const char* db_path, ccfr_database** out_db);
CCFR_API ccfr_status ccfr_database_save(const ccfr_database* db, const char* db_path);
CCFR_API size_t ccfr_database_size(const ccfr_database* db);
CCFR_API size_t ccfr_database_dim(const ccfr_database* db);
CCFR_API void ccfr_database_free(ccfr_database* db);

/* Exact top-m cosine search; ties broken by ascending id. */
CCFR_API ccfr_status ccfr_database_query(const ccfr_database* db,
                                         const double* query,
                                         size_t dim,
                                         int topm,
                                         ccfr_search_result** out_result);
CCFR_API size_t ccfr_search_result_size(const ccfr_search_result* result);
CCFR_API const char* ccfr_search_result_id(const ccfr_search_result* result, size_t index);
CCFR_API int ccfr_search_result_label(const ccfr_search_result* result, size_t index);
CCFR_API double ccfr_search_result_similarity(const ccfr_search_result* result, size_t index);
CCFR_API void ccfr_search_result_free(ccfr_search_result* result);

/* ---- file-level pipeline ------------------------------------------------ */

/* Embedding JSONL in, binary database out. */
CCFR_API ccfr_status ccfr_build_db_file(const char* embeddings_jsonl_path,
                                        const char* out_db_path);

/* Cluster per-class mean embeddings into num_super parents; writes
 * {"num_children", "num_super", "parent"} JSON. */
CCFR_API ccfr_status ccfr_build_hierarchy_file(const char* embeddings_jsonl_path,
                                               int num_super,
                                               const char* out_json_path);

/* Anchor grid over a square image, one entry per scale; writes box JSONL
 * with zero scores. */
CCFR_API ccfr_status ccfr_generate_anchors_file(int image_size,
                                                const double* scales,
                                                const double* strides,
                                                size_t num_scales,
                                                double aspect_ratio,
                                                int clip,
                                                const char* out_boxes_jsonl_path);

/* Scale-separated NMS over box JSONL. */
CCFR_API ccfr_status ccfr_nms_file(const char* boxes_jsonl_path,
                                   double iou_threshold,
                                   int keep_per_scale,
                                   const char* out_boxes_jsonl_path);

/* Fuse local features and concatenate with the global feature; bundle JSONL
 * in, embedding JSONL out. */
CCFR_API ccfr_status ccfr_fuse_file(const char* bundles_jsonl_path,
                                    const char* weights_json_path,
                                    int normalize,
                                    const char* out_embeddings_jsonl_path);

/* config_json is a flat object ({"topn", "topm", "t_sf", "t_sc", "alpha",
 * "beta", "topm_mode"}); NULL or "" keeps the defaults. */
CCFR_API ccfr_status ccfr_rerank_file(const char* db_path,
                                      const char* preds_jsonl_path,
                                      const char* queries_jsonl_path,
                                      const char* config_json,
                                      int threads,
                                      const char* out_outcomes_jsonl_path);

/* Retrieval-only vs classification-only vs re-ranked accuracy over the same
 * queries; ground truth comes from the query records' labels. */
CCFR_API ccfr_status ccfr_eval_file(const char* db_path,
                                    const char* preds_jsonl_path,
                                    const char* queries_jsonl_path,
                                    const char* config_json,
                                    int threads,
                                    const char* out_report_json_path);

/* Axes accept "a,b,c" lists or inclusive "start:stop:step" ranges; writes
 * CSV "topn,t_sf,t_sc,top1_acc". */
CCFR_API ccfr_status ccfr_sweep_file(const char* db_path,
                                     const char* preds_jsonl_path,
                                     const char* queries_jsonl_path,
                                     const char* config_json,
                                     const char* topn_axis,
                                     const char* t_sf_axis,
                                     const char* t_sc_axis,
                                     int threads,
                                     const char* out_csv_path);

/* Synthetic Gaussian-cluster benchmark; params_json may set num_classes,
 * train_per_class, test_per_class, dim, confusable_fraction, seed. Writes
 * train.jsonl, queries.jsonl, preds.jsonl under out_dir. */
CCFR_API ccfr_status ccfr_gen_fixture(const char* params_json, const char* out_dir);

/* ---- gradient checks ----------------------------------------------------- */

#define CCFR_LOSS_CHECK_MAX 8

typedef struct ccfr_loss_check_report {
  size_t count;
  char names[CCFR_LOSS_CHECK_MAX][32];
  double max_rel_error[CCFR_LOSS_CHECK_MAX];
} ccfr_loss_check_report;

/* Analytic gradients vs central finite differences on seeded random
 * instances of every loss. */
CCFR_API ccfr_status ccfr_loss_check(uint64_t seed,
                                     int trials,
                                     double epsilon,
                                     ccfr_loss_check_report* out_report);

#ifdef __cplusplus
}
#endif

#endif /* CCFR_H */

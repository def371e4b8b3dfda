// ccfr command line: ingestion, database construction, NMS, fusion,
// re-ranking, evaluation, and the parameter sweep, all on top of the C API.

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ccfr/ccfr.h"
#include "json.hpp"

namespace {

using nlohmann::json;

int report(ccfr_status status) {
  if (status == CCFR_OK) return 0;
  std::fprintf(stderr, "ccfr: error: %s\n", ccfr_last_error());
  return 1;
}

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  FILE* f = std::fopen(path.c_str(), "rb");
  if (f == nullptr) throw CLI::ValidationError("--config", "cannot open file: " + path);
  std::string text;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) text.append(buf, n);
  std::fclose(f);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw CLI::ValidationError("--config", path + ": " + e.what());
  }
}

// Shared flags for the commands that take a rerank configuration. Flag
// values override config-file values, which override the defaults.
struct ConfigFlags {
  std::string config_path;
  int topn = 0;
  int topm = 0;
  double t_sf = 0;
  double t_sc = 0;
  double alpha = 0;
  double beta = 0;
  std::string topm_mode;

  CLI::Option* topn_opt = nullptr;
  CLI::Option* topm_opt = nullptr;
  CLI::Option* t_sf_opt = nullptr;
  CLI::Option* t_sc_opt = nullptr;
  CLI::Option* alpha_opt = nullptr;
  CLI::Option* beta_opt = nullptr;
  CLI::Option* mode_opt = nullptr;

  // The sweep owns --topn/--t-sf/--t-sc as axis flags, so it skips the
  // per-query gate parameters here.
  void attach(CLI::App* cmd, bool with_gate_params) {
    cmd->add_option("--config", config_path, "JSON config file");
    if (with_gate_params) {
      topn_opt = cmd->add_option("--topn", topn, "candidate classes to re-rank");
      t_sf_opt = cmd->add_option("--t-sf", t_sf, "softmax confidence gate");
      t_sc_opt = cmd->add_option("--t-sc", t_sc, "minimum neighbor similarity");
    }
    topm_opt = cmd->add_option("--topm", topm, "neighbors retrieved per query");
    alpha_opt = cmd->add_option("--alpha", alpha, "softmax weight in the blend");
    beta_opt = cmd->add_option("--beta", beta, "retrieval weight in the blend");
    mode_opt = cmd->add_option("--topm-mode", topm_mode,
                               "neighbor pool mode: fixed_topm or threshold_only");
  }

  std::string merged() const {
    json j = load_config_file(config_path);
    if (topn_opt != nullptr && topn_opt->count() > 0) j["topn"] = topn;
    if (t_sf_opt != nullptr && t_sf_opt->count() > 0) j["t_sf"] = t_sf;
    if (t_sc_opt != nullptr && t_sc_opt->count() > 0) j["t_sc"] = t_sc;
    if (topm_opt->count() > 0) j["topm"] = topm;
    if (alpha_opt->count() > 0) j["alpha"] = alpha;
    if (beta_opt->count() > 0) j["beta"] = beta;
    if (mode_opt->count() > 0) j["topm_mode"] = topm_mode;
    return j.dump();
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coarse classification with retrieval-based fine re-ranking"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ccfr_version()));

  // build-db
  auto* build_db = app.add_subcommand("build-db", "build the searching database");
  std::string bd_embeddings, bd_out;
  build_db->add_option("--embeddings", bd_embeddings, "embedding JSONL")->required();
  build_db->add_option("--out", bd_out, "output database file")->required();

  // hierarchy
  auto* hierarchy = app.add_subcommand("hierarchy", "cluster classes into super classes");
  std::string hi_embeddings, hi_out;
  int hi_num_super = 0;
  hierarchy->add_option("--embeddings", hi_embeddings, "embedding JSONL")->required();
  hierarchy->add_option("--num-super", hi_num_super, "number of super classes")->required();
  hierarchy->add_option("--out", hi_out, "output hierarchy JSON")->required();

  // fuse
  auto* fuse = app.add_subcommand("fuse", "fuse local features into embeddings");
  std::string fu_bundle, fu_weights, fu_out;
  bool fu_no_normalize = false;
  fuse->add_option("--bundle", fu_bundle, "feature bundle JSONL")->required();
  fuse->add_option("--weights", fu_weights, "fusion weights JSON")->required();
  fuse->add_flag("--no-normalize", fu_no_normalize, "skip final L2 normalization");
  fuse->add_option("--out", fu_out, "output embedding JSONL")->required();

  // nms
  auto* nms = app.add_subcommand("nms", "scale-separated NMS / anchor generation");
  std::string nm_boxes, nm_out;
  double nm_threshold = 0.25;
  int nm_keep = 2;
  bool nm_gen_anchors = false;
  int nm_image_size = 448;
  std::vector<double> nm_scales = {96.0, 192.0};
  std::vector<double> nm_strides = {32.0, 64.0};
  double nm_ratio = 1.0;
  bool nm_no_clip = false;
  nms->add_option("--boxes", nm_boxes, "input box JSONL");
  nms->add_option("--iou-threshold", nm_threshold, "suppression IoU threshold");
  nms->add_option("--keep-per-scale", nm_keep, "survivors kept per scale");
  nms->add_flag("--gen-anchors", nm_gen_anchors, "emit the anchor grid instead");
  nms->add_option("--image-size", nm_image_size, "square image side in pixels");
  nms->add_option("--scales", nm_scales, "anchor side lengths")->delimiter(',');
  nms->add_option("--strides", nm_strides, "grid strides, one per scale")->delimiter(',');
  nms->add_option("--aspect-ratio", nm_ratio, "anchor width/height ratio");
  nms->add_flag("--no-clip", nm_no_clip, "keep anchors unclipped");
  nms->add_option("--out", nm_out, "output box JSONL")->required();

  // rerank
  auto* rerank = app.add_subcommand("rerank", "re-rank coarse predictions");
  std::string rr_db, rr_preds, rr_queries, rr_out;
  int rr_threads = 1;
  ConfigFlags rr_cfg;
  rerank->add_option("--db", rr_db, "database file")->required();
  rerank->add_option("--preds", rr_preds, "prediction JSONL")->required();
  rerank->add_option("--queries", rr_queries, "query embedding JSONL")->required();
  rr_cfg.attach(rerank, true);
  rerank->add_option("--threads", rr_threads, "worker threads");
  rerank->add_option("--out", rr_out, "output outcome JSONL")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "retrieval vs classification vs re-ranked accuracy");
  std::string ev_db, ev_preds, ev_queries, ev_out;
  int ev_threads = 1;
  ConfigFlags ev_cfg;
  eval->add_option("--db", ev_db, "database file")->required();
  eval->add_option("--preds", ev_preds, "prediction JSONL")->required();
  eval->add_option("--queries", ev_queries, "query embedding JSONL (labels are truth)")
      ->required();
  ev_cfg.attach(eval, true);
  eval->add_option("--threads", ev_threads, "worker threads");
  eval->add_option("--out", ev_out, "output report JSON")->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "grid sweep over topn, t_sf, t_sc");
  std::string sw_db, sw_preds, sw_queries, sw_out;
  std::string sw_topn = "2:6:1";
  std::string sw_tsf = "0.4:0.95:0.05";
  std::string sw_tsc = "0.5:0.95:0.05";
  int sw_threads = 1;
  ConfigFlags sw_cfg;
  sweep->add_option("--db", sw_db, "database file")->required();
  sweep->add_option("--preds", sw_preds, "prediction JSONL")->required();
  sweep->add_option("--queries", sw_queries, "query embedding JSONL (labels are truth)")
      ->required();
  sweep->add_option("--topn", sw_topn, "topn axis (comma list or start:stop:step)");
  sweep->add_option("--t-sf", sw_tsf, "t_sf axis (comma list or start:stop:step)");
  sweep->add_option("--t-sc", sw_tsc, "t_sc axis (comma list or start:stop:step)");
  sw_cfg.attach(sweep, false);
  sweep->add_option("--threads", sw_threads, "worker threads");
  sweep->add_option("--out", sw_out, "output CSV")->required();

  // loss-check
  auto* loss_check = app.add_subcommand("loss-check", "gradient checks for every loss");
  std::uint64_t lc_seed = 20240811;
  int lc_trials = 100;
  double lc_epsilon = 1e-5;
  double lc_tolerance = 1e-4;
  loss_check->add_option("--seed", lc_seed, "random seed");
  loss_check->add_option("--trials", lc_trials, "instances per loss");
  loss_check->add_option("--epsilon", lc_epsilon, "finite-difference step");
  loss_check->add_option("--tolerance", lc_tolerance, "max allowed relative error");

  // gen-fixture
  auto* gen_fixture = app.add_subcommand("gen-fixture", "write the synthetic benchmark");
  std::string gf_out_dir;
  int gf_classes = 0, gf_train = 0, gf_test = 0, gf_dim = 0;
  double gf_confusable = 0;
  std::uint64_t gf_seed = 0;
  gen_fixture->add_option("--out-dir", gf_out_dir, "output directory")->required();
  auto* gf_classes_opt = gen_fixture->add_option("--classes", gf_classes, "number of classes");
  auto* gf_train_opt =
      gen_fixture->add_option("--train-per-class", gf_train, "training samples per class");
  auto* gf_test_opt =
      gen_fixture->add_option("--test-per-class", gf_test, "test queries per class");
  auto* gf_dim_opt = gen_fixture->add_option("--dim", gf_dim, "embedding dimension");
  auto* gf_confusable_opt = gen_fixture->add_option(
      "--confusable", gf_confusable, "fraction of classes arranged in confusable pairs");
  auto* gf_seed_opt = gen_fixture->add_option("--seed", gf_seed, "random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (build_db->parsed()) {
      return report(ccfr_build_db_file(bd_embeddings.c_str(), bd_out.c_str()));
    }
    if (hierarchy->parsed()) {
      return report(
          ccfr_build_hierarchy_file(hi_embeddings.c_str(), hi_num_super, hi_out.c_str()));
    }
    if (fuse->parsed()) {
      return report(ccfr_fuse_file(fu_bundle.c_str(), fu_weights.c_str(),
                                   fu_no_normalize ? 0 : 1, fu_out.c_str()));
    }
    if (nms->parsed()) {
      if (nm_gen_anchors) {
        return report(ccfr_generate_anchors_file(nm_image_size, nm_scales.data(),
                                                 nm_strides.data(), nm_scales.size(), nm_ratio,
                                                 nm_no_clip ? 0 : 1, nm_out.c_str()));
      }
      if (nm_boxes.empty()) {
        std::fprintf(stderr, "ccfr: error: nms requires --boxes (or --gen-anchors)\n");
        return 1;
      }
      return report(
          ccfr_nms_file(nm_boxes.c_str(), nm_threshold, nm_keep, nm_out.c_str()));
    }
    if (rerank->parsed()) {
      const std::string cfg = rr_cfg.merged();
      return report(ccfr_rerank_file(rr_db.c_str(), rr_preds.c_str(), rr_queries.c_str(),
                                     cfg.c_str(), rr_threads, rr_out.c_str()));
    }
    if (eval->parsed()) {
      const std::string cfg = ev_cfg.merged();
      return report(ccfr_eval_file(ev_db.c_str(), ev_preds.c_str(), ev_queries.c_str(),
                                   cfg.c_str(), ev_threads, ev_out.c_str()));
    }
    if (sweep->parsed()) {
      const std::string cfg = sw_cfg.merged();
      return report(ccfr_sweep_file(sw_db.c_str(), sw_preds.c_str(), sw_queries.c_str(),
                                    cfg.c_str(), sw_topn.c_str(), sw_tsf.c_str(),
                                    sw_tsc.c_str(), sw_threads, sw_out.c_str()));
    }
    if (loss_check->parsed()) {
      ccfr_loss_check_report rep;
      const ccfr_status status = ccfr_loss_check(lc_seed, lc_trials, lc_epsilon, &rep);
      if (status != CCFR_OK) return report(status);
      bool ok = true;
      std::printf("%-20s %-14s %s\n", "loss", "max_rel_error", "status");
      for (size_t i = 0; i < rep.count; ++i) {
        const bool pass = rep.max_rel_error[i] < lc_tolerance;
        ok = ok && pass;
        std::printf("%-20s %-14.3e %s\n", rep.names[i], rep.max_rel_error[i],
                    pass ? "ok" : "FAIL");
      }
      return ok ? 0 : 1;
    }
    if (gen_fixture->parsed()) {
      json params = json::object();
      if (gf_classes_opt->count() > 0) params["num_classes"] = gf_classes;
      if (gf_train_opt->count() > 0) params["train_per_class"] = gf_train;
      if (gf_test_opt->count() > 0) params["test_per_class"] = gf_test;
      if (gf_dim_opt->count() > 0) params["dim"] = gf_dim;
      if (gf_confusable_opt->count() > 0) params["confusable_fraction"] = gf_confusable;
      if (gf_seed_opt->count() > 0) params["seed"] = gf_seed;
      const std::string text = params.dump();
      return report(ccfr_gen_fixture(text.c_str(), gf_out_dir.c_str()));
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  }
  return 0;
}

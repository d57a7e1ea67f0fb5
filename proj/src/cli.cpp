#include "motif/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <ostream>

#include "motif/cluster.hpp"
#include "motif/config.hpp"
#include "motif/data.hpp"
#include "motif/errors.hpp"
#include "motif/sweep.hpp"
#include "motif/trainer.hpp"

namespace motif::cli {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

// Overrides for the train subcommand; each applies only if given.
struct TrainFlags {
  std::string config, out, manifest, store;
  std::uint64_t seed = 0;
  TrainConfig defaults{};
  std::vector<std::size_t> hidden{256};
  std::size_t input_dim = 1024;
  std::size_t output_dim = 20;
  bool normalize = false;
};

DatasetManifest split_if_needed(DatasetManifest manifest, const TrainConfig& cfg, std::ostream& out) {
  if (manifest.has_split()) return manifest;
  out << "manifest has no split; assigning stratified split (test_fraction " << cfg.test_fraction << ", seed "
      << cfg.seed << ")\n";
  return stratified_split(manifest, cfg.test_fraction, cfg.seed);
}

void print_reports(std::ostream& out, const std::vector<MetricsReport>& reports) {
  write_metrics_table(out, reports);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Train, evaluate and ablate multi-label motif classification heads over frozen embeddings"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  // train
  TrainFlags tf;
  auto* train_cmd = app.add_subcommand("train", "Train a head; writes a run directory");
  train_cmd->option_defaults()->always_capture_default();
  train_cmd->add_option("--config", tf.config, "Run-config JSON file");
  train_cmd->add_option("--out", tf.out, "Run directory")->required();
  auto* o_manifest = train_cmd->add_option("--manifest", tf.manifest, "Manifest (overrides config)");
  auto* o_store = train_cmd->add_option("--store", tf.store, "Embedding store (overrides config)");
  auto* o_seed = train_cmd->add_option("--seed", tf.seed, "Run seed (required here or in the config)")
                    ->default_str("");
  auto* o_epochs = train_cmd->add_option("--epochs", tf.defaults.epochs, "Training epochs");
  auto* o_batch = train_cmd->add_option("--batch-size", tf.defaults.batch_size, "Batch size");
  auto* o_lr = train_cmd->add_option("--lr", tf.defaults.lr, "Adam learning rate");
  auto* o_smt = train_cmd->add_option("--smt", tf.defaults.loss.smt, "Secondary Motif Target");
  auto* o_rfw = train_cmd->add_option("--rfw", tf.defaults.loss.rfw, "Red Flag Weight");
  auto* o_cw = train_cmd->add_option("--cw", tf.defaults.loss.cw, "Canonical Weight");
  auto* o_hidden = train_cmd->add_option("--hidden", tf.hidden, "Hidden layer sizes")->delimiter(',');
  auto* o_input = train_cmd->add_option("--input-dim", tf.input_dim,
                                       "Embedding dimension (without --config: the store's)");
  auto* o_output = train_cmd->add_option("--output-dim", tf.output_dim,
                                        "Number of head outputs (without --config: the manifest's motif count)");
  auto* o_fraction = train_cmd->add_option("--test-fraction", tf.defaults.test_fraction, "Test split fraction");
  auto* o_eval = train_cmd->add_option("--eval-every", tf.defaults.eval_every, "Evaluate every N epochs (0 = off)");
  auto* o_threshold = train_cmd->add_option("--threshold", tf.defaults.metrics.threshold, "Prediction threshold");
  auto* o_normalize = train_cmd->add_flag("--normalize-input", tf.normalize, "L2-normalize embeddings first");

  // eval
  std::string ev_ckpt, ev_manifest, ev_store, ev_out, ev_split = "test";
  MetricOptions ev_opts;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the all / red_flag / canonical slices");
  eval_cmd->option_defaults()->always_capture_default();
  eval_cmd->add_option("--checkpoint", ev_ckpt, "Checkpoint file")->required();
  eval_cmd->add_option("--manifest", ev_manifest, "Manifest with split")->required();
  eval_cmd->add_option("--store", ev_store, "Embedding store")->required();
  eval_cmd->add_option("--threshold", ev_opts.threshold, "Prediction threshold");
  eval_cmd->add_flag("--conventional-pr", ev_opts.conventional_pr, "Precision over |O|, recall over |GT|");
  eval_cmd->add_option("--split", ev_split, "Images to evaluate")->check(CLI::IsMember({"test", "all"}));
  eval_cmd->add_option("--out", ev_out, "Directory for report files");

  // predict
  std::string pr_ckpt, pr_store, pr_manifest, pr_out;
  std::vector<std::string> pr_ids;
  double pr_threshold = 0.5;
  auto* predict_cmd = app.add_subcommand("predict", "Per-image probability table");
  predict_cmd->option_defaults()->always_capture_default();
  predict_cmd->add_option("--checkpoint", pr_ckpt, "Checkpoint file")->required();
  predict_cmd->add_option("--store", pr_store, "Embedding store")->required();
  predict_cmd->add_option("--ids", pr_ids, "Comma-separated image ids (default: whole store)")->delimiter(',');
  predict_cmd->add_option("--manifest", pr_manifest, "Manifest for motif names");
  predict_cmd->add_option("--threshold", pr_threshold, "Prediction threshold");
  predict_cmd->add_option("--out", pr_out, "Output file (default: stdout)");

  // sweep
  std::string sw_spec, sw_out, sw_rank;
  bool sw_parallel = false;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run an ablation grid");
  sweep_cmd->option_defaults()->always_capture_default();
  sweep_cmd->add_option("--spec", sw_spec, "Sweep spec JSON file")->required();
  sweep_cmd->add_option("--out", sw_out, "Output directory (overrides the spec)");
  sweep_cmd->add_flag("--parallel", sw_parallel, "Run grid points concurrently");
  sweep_cmd->add_option("--rank", sw_rank, "Print a ranking by this metric");

  // cluster
  std::string cl_manifest, cl_store, cl_out, cl_split = "all";
  KMeansOptions cl_opts;
  auto* cluster_cmd = app.add_subcommand("cluster", "k-means over normalized embeddings vs motif labels");
  cluster_cmd->option_defaults()->always_capture_default();
  cluster_cmd->add_option("--manifest", cl_manifest, "Manifest")->required();
  cluster_cmd->add_option("--store", cl_store, "Embedding store")->required();
  cluster_cmd->add_option("--k", cl_opts.k, "Number of clusters");
  cluster_cmd->add_option("--seed", cl_opts.seed, "Seed for k-means++");
  cluster_cmd->add_option("--max-iters", cl_opts.max_iters, "Lloyd iteration cap");
  cluster_cmd->add_option("--tol", cl_opts.tol, "Centroid shift tolerance");
  cluster_cmd->add_option("--split", cl_split, "Images to cluster")->check(CLI::IsMember({"all", "train", "test"}));
  cluster_cmd->add_option("--out", cl_out, "Output directory")->required();

  // gen-synth
  SyntheticSpec gs;
  std::string gs_out;
  auto* synth_cmd = app.add_subcommand("gen-synth", "Generate a synthetic annotated dataset and store");
  synth_cmd->option_defaults()->always_capture_default();
  synth_cmd->add_option("--classes", gs.n_classes, "Number of motifs");
  synth_cmd->add_option("--dim", gs.dim, "Embedding dimension");
  synth_cmd->add_option("--per-class", gs.per_class, "Images per motif");
  synth_cmd->add_option("--sm-rate", gs.sm_rate, "Fraction of images with a Secondary Motif");
  synth_cmd->add_option("--rf-rate", gs.rf_rate, "Fraction tagged Red Flag");
  synth_cmd->add_option("--can-rate", gs.can_rate, "Fraction tagged Canonical");
  synth_cmd->add_option("--noise", gs.noise, "Isotropic noise scale");
  synth_cmd->add_option("--blend", gs.secondary_blend, "Secondary anchor weight");
  synth_cmd->add_option("--seed", gs.seed, "Generator seed")->required()->default_str("");
  synth_cmd->add_option("--out", gs_out, "Output directory")->required();

  // extract-check
  std::string xc_store, xc_manifest;
  std::size_t xc_dim = 0;
  auto* check_cmd = app.add_subcommand("extract-check", "Validate an embedding store file");
  check_cmd->option_defaults()->always_capture_default();
  check_cmd->add_option("--store", xc_store, "Embedding store")->required();
  check_cmd->add_option("--manifest", xc_manifest, "Require every manifest id to be present");
  check_cmd->add_option("--dim", xc_dim, "Required embedding dimension (0 = any)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train_cmd) {
      RunConfig rc = tf.config.empty() ? RunConfig{} : load_run_config(tf.config);
      TrainConfig& t = rc.train;
      if (*o_manifest) rc.manifest = tf.manifest;
      if (*o_store) rc.store = tf.store;
      if (*o_seed) rc.seed = tf.seed;
      if (*o_epochs) t.epochs = tf.defaults.epochs;
      if (*o_batch) t.batch_size = tf.defaults.batch_size;
      if (*o_lr) t.lr = tf.defaults.lr;
      if (*o_smt) t.loss.smt = tf.defaults.loss.smt;
      if (*o_rfw) t.loss.rfw = tf.defaults.loss.rfw;
      if (*o_cw) t.loss.cw = tf.defaults.loss.cw;
      if (*o_hidden) t.head.hidden_dims = tf.hidden;
      if (*o_input) t.head.input_dim = tf.input_dim;
      if (*o_output) t.head.output_dim = tf.output_dim;
      if (*o_fraction) t.test_fraction = tf.defaults.test_fraction;
      if (*o_eval) t.eval_every = tf.defaults.eval_every;
      if (*o_threshold) t.metrics.threshold = tf.defaults.metrics.threshold;
      if (*o_normalize) t.head.normalize_input = tf.normalize;
      rc.finalize();
      if (rc.manifest.empty() || rc.store.empty()) throw ConfigError("manifest and store paths are required");

      const DatasetManifest manifest = split_if_needed(load_manifest(rc.manifest), t, out);
      const EmbeddingStore store = EmbeddingStore::open(rc.store);
      if (tf.config.empty()) {
        if (!*o_input && t.head.kind == HeadKind::mlp) t.head.input_dim = store.dim();
        if (!*o_output) t.head.output_dim = manifest.n_classes();
      }
      const fs::path run_dir = tf.out;
      fs::create_directories(run_dir);
      write_manifest(run_dir / "manifest.split.jsonl", manifest);
      const RunRecord rec = train(manifest, store, t, run_dir);
      out << "trained " << rec.epoch_losses.size() << " epochs, final loss " << rec.epoch_losses.back() << " ("
          << rec.wall_seconds << " s)\n";
      print_reports(out, rec.final_reports);
      out << "run directory: " << run_dir.string() << '\n';
      return kOk;
    }

    if (*eval_cmd) {
      const DatasetManifest manifest = load_manifest(ev_manifest);
      const EmbeddingStore store = EmbeddingStore::open(ev_store);
      std::vector<std::string> ids;
      if (ev_split == "all") {
        ids = manifest.all_ids();
      } else {
        if (!manifest.has_split()) throw DataError("manifest has no train/test split; use --split all");
        ids = manifest.ids_in(SplitRole::test);
      }
      if (ids.empty()) throw DataError("no images to evaluate (empty " + ev_split + " split)");
      const HeadParams params = load_checkpoint(ev_ckpt);
      if (params.config.output_dim != manifest.n_classes())
        throw DataError("checkpoint predicts " + std::to_string(params.config.output_dim) + " motifs, manifest has " +
                        std::to_string(manifest.n_classes()));
      const auto preds = predict(params, store, ids, ev_opts.threshold);
      const auto reports = evaluate_slices(preds, manifest, ev_opts);
      print_reports(out, reports);
      if (!ev_out.empty()) {
        fs::create_directories(ev_out);
        for (const auto& r : reports) open_out(fs::path(ev_out) / ("metrics_" + r.slice + ".json")) << report_to_json(r) << '\n';
        auto table = open_out(fs::path(ev_out) / "metrics.dat");
        write_metrics_table(table, reports);
      }
      return kOk;
    }

    if (*predict_cmd) {
      const EmbeddingStore store = EmbeddingStore::open(pr_store);
      if (pr_ids.empty()) pr_ids = store.ids();
      std::vector<std::string> names;
      if (!pr_manifest.empty()) names = load_manifest(pr_manifest).motif_names;
      const auto preds = predict(fs::path(pr_ckpt), store, pr_ids, pr_threshold);
      if (pr_out.empty()) {
        write_predictions(out, preds, names);
      } else {
        auto file = open_out(pr_out);
        write_predictions(file, preds, names);
      }
      return kOk;
    }

    if (*sweep_cmd) {
      SweepSpec spec = load_sweep_spec(sw_spec);
      if (!sw_out.empty()) spec.output_dir = sw_out;
      if (sw_parallel) spec.parallel = true;
      if (spec.output_dir.empty()) throw ConfigError("sweep needs an output directory (--out or output_dir)");
      if (spec.base.manifest.empty() || spec.base.store.empty())
        throw ConfigError("sweep base config needs data.manifest and data.store");
      const DatasetManifest manifest = split_if_needed(load_manifest(spec.base.manifest), spec.base.train, out);
      const EmbeddingStore store = EmbeddingStore::open(spec.base.store);
      fs::create_directories(spec.output_dir);
      write_manifest(spec.output_dir / "manifest.split.jsonl", manifest);
      const SweepTable table = run_sweep(spec, manifest, store);
      write_sweep_table(out, table);
      if (!sw_rank.empty())
        for (const auto& e : rank_models(table, sw_rank)) out << e.rank << ' ' << e.point << ' ' << e.value << '\n';
      return kOk;
    }

    if (*cluster_cmd) {
      const DatasetManifest manifest = load_manifest(cl_manifest);
      const EmbeddingStore store = EmbeddingStore::open(cl_store);
      std::vector<std::string> ids;
      if (cl_split == "all") {
        ids = manifest.all_ids();
      } else {
        if (!manifest.has_split()) throw DataError("manifest has no train/test split; use --split all");
        ids = manifest.ids_in(cl_split == "train" ? SplitRole::train : SplitRole::test);
      }
      const ClusterAssignment a = kmeans(store, ids, cl_opts);
      const ClusterAgreement agreement = cluster_label_agreement(a, manifest);
      const fs::path dir = cl_out;
      fs::create_directories(dir);
      {
        auto f = open_out(dir / "assignment.tsv");
        write_assignment(f, a);
      }
      {
        auto f = open_out(dir / "contingency.tsv");
        write_contingency(f, agreement, manifest.motif_names);
      }
      {
        auto f = open_out(dir / "inertia.tsv");
        f << "step\tinertia\n";
        char buf[40];
        for (std::size_t i = 0; i < a.inertia_history.size(); ++i) {
          std::snprintf(buf, sizeof buf, "%.17g", a.inertia_history[i]);
          f << i << '\t' << buf << '\n';
        }
      }
      out << "k=" << a.k << " iterations=" << a.iterations << (a.converged ? " (converged)" : " (iteration cap)")
          << " inertia=" << a.inertia << " purity=" << agreement.purity << '\n';
      return kOk;
    }

    if (*synth_cmd) {
      const SyntheticDataset ds = generate_synthetic(gs);
      const fs::path dir = gs_out;
      fs::create_directories(dir);
      write_manifest(dir / "manifest.jsonl", ds.manifest);
      write_embedding_store(dir / "embeddings.mhed", gs.dim, ds.embeddings);
      std::size_t rf = 0, can = 0, sm = 0;
      for (const auto& r : ds.manifest.records) {
        rf += r.tag == Tag::red_flag;
        can += r.tag == Tag::canonical;
        sm += !r.secondary.empty();
      }
      out << "wrote " << ds.manifest.records.size() << " records (" << sm << " with secondary motifs, " << rf
          << " red_flag, " << can << " canonical) to " << dir.string() << '\n';
      return kOk;
    }

    if (*check_cmd) {
      const StoreReport report = verify_store(xc_store);
      std::vector<std::string> problems = report.problems;
      if (report.ok && xc_dim != 0 && report.dim != xc_dim)
        problems.push_back("dimension " + std::to_string(report.dim) + " does not match required " +
                           std::to_string(xc_dim));
      if (report.ok && !xc_manifest.empty()) {
        const DatasetManifest manifest = load_manifest(xc_manifest);
        const EmbeddingStore store = EmbeddingStore::open(xc_store);
        for (const auto& id : manifest.all_ids())
          if (!store.contains(id)) problems.push_back("manifest id '" + id + "' missing from store");
      }
      if (problems.empty()) {
        out << "OK, count=" << report.count << ", dim=" << report.dim << '\n';
        return kOk;
      }
      for (const auto& p : problems) err << "error: " << p << '\n';
      return kDataError;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const ShapeError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  }
  return kUsage;
}

}  // namespace motif::cli

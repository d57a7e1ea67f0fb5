// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "../gradcheck.hpp"
#include "../metrics_oracle.hpp"
#include "../test_util.hpp"
#include "motif/cli.hpp"
#include "motif/cluster.hpp"
#include "motif/loss.hpp"
#include "motif/sweep.hpp"

namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------- gradients

motif::HeadConfig mlp(std::size_t in, std::vector<std::size_t> hidden, std::size_t out) {
  motif::HeadConfig c;
  c.input_dim = in;
  c.hidden_dims = std::move(hidden);
  c.output_dim = out;
  return c;
}

Verdict gradient_check() {
  std::mt19937_64 rng(20240);
  const motif::LossConfig lc{0.5, 0.5, 2.0};
  double worst = 0;
  std::size_t checked = 0;
  std::string per_head;

  auto run = [&](const std::string& name, const motif::HeadConfig& cfg, std::uint64_t seed, std::size_t batch,
                 const std::vector<std::size_t>* sample) {
    const auto p = gradcheck::random_params(cfg, seed);
    const auto x = gradcheck::random_inputs(batch, cfg.input_dim, rng);
    const auto ann = gradcheck::random_batch(batch, cfg.output_dim, rng);
    const auto r = gradcheck::check(p, x, ann, lc, sample ? *sample : gradcheck::all_coords(p));
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
    per_head += (per_head.empty() ? "" : ", ") + name + " " + fmt("%.1e", r.max_rel_error);
  };

  // Full-size head: every output-layer parameter, every hidden bias and a
  // random sample of the 262,144 first-layer weights.
  const auto big = mlp(1024, {256}, 20);
  const auto layout = motif::make_layout(big);
  std::vector<std::size_t> coords;
  const auto& l0 = layout.linears[0];
  const auto& l1 = layout.linears[1];
  for (std::size_t i = l1.weight_offset; i < l1.weight_offset + l1.in * l1.out; ++i) coords.push_back(i);
  for (std::size_t i = l1.bias_offset; i < l1.bias_offset + l1.out; ++i) coords.push_back(i);
  for (std::size_t i = l0.bias_offset; i < l0.bias_offset + l0.out; ++i) coords.push_back(i);
  std::uniform_int_distribution<std::size_t> pick(l0.weight_offset, l0.weight_offset + l0.in * l0.out - 1);
  for (int i = 0; i < 2000; ++i) coords.push_back(pick(rng));
  run("1024-256-20", big, 1, 6, &coords);

  run("16-8-4", mlp(16, {8}, 4), 2, 6, nullptr);
  run("8-4-4-3", mlp(8, {4, 4}, 3), 3, 6, nullptr);

  motif::HeadConfig conv;
  conv.kind = motif::HeadKind::conv;
  conv.grid = {8, 5, 5};
  conv.input_dim = conv.grid.size();
  conv.conv_kernel = 2;
  conv.conv_channels = {4, 3};
  conv.hidden_dims = {6};
  conv.output_dim = 5;
  run("conv 8x5x5", conv, 4, 4, nullptr);

  return {worst < 1e-4, per_head + "; " + std::to_string(checked) + " coordinates, max rel err " + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------- loss

Verdict loss_fixtures() {
  const std::vector<double> zeros(20, 0.0);
  motif::AnnotationRecord rec{"x", {3}, {}, motif::Tag::standard, std::nullopt};
  const motif::LossConfig lc{0.5, 0.5, 2.0};
  const double ln2 = 0.69314718055994530942;
  const double standard = motif::image_loss(zeros, rec, lc);
  rec.tag = motif::Tag::canonical;
  const double canonical = motif::image_loss(zeros, rec, lc);
  const double b = motif::bce_per_class(5, 1);
  const bool ok = std::abs(standard - ln2) <= 1e-12 && canonical == 2 * standard && std::abs(b - 0.0067153) <= 1e-6;
  return {ok, "standard " + fmt("%.15f", standard) + ", canonical/standard " + fmt("%.17g", canonical / standard) +
                  ", bce(5,1) " + fmt("%.10f", b)};
}

// ---------------------------------------------------------------- metrics

Verdict metrics_oracle() {
  std::size_t sets = 0, mismatches = 0;
  for (std::uint32_t n = 1; n <= 4; ++n) {
    const auto pairs = oracle::all_pairs(n);
    const auto st = oracle::sweep(pairs, n, 3);
    sets += st.test_sets;
    mismatches += st.mismatches;
  }
  return {mismatches == 0, std::to_string(sets) + " test sets, " + std::to_string(mismatches) + " mismatches"};
}

// ---------------------------------------------------------------- model size

Verdict parameter_count() {
  const auto n = motif::parameter_count(motif::HeadConfig{});
  return {n == 267540, std::to_string(n) + " parameters"};
}

// ---------------------------------------------------------------- end to end

struct Split {
  motif::DatasetManifest manifest;
  std::vector<motif::EmbeddingRecord> embeddings;
};

Split synthetic(double noise, double sm_rate = 0.015) {
  motif::SyntheticSpec s;
  s.noise = noise;
  s.sm_rate = sm_rate;
  s.seed = 1;
  auto ds = motif::generate_synthetic(s);
  return {motif::stratified_split(ds.manifest, 0.2, 1), std::move(ds.embeddings)};
}

motif::TrainConfig default_config(std::size_t input_dim) {
  motif::TrainConfig c;
  c.seed = 1;
  c.head.input_dim = input_dim;
  return c;
}

Verdict synthetic_end_to_end() {
  const auto noisy = synthetic(0.05);
  const motif::InMemoryFeatures f1(64, noisy.embeddings);
  const auto a = motif::train(noisy.manifest, f1, default_config(64)).final_report(motif::Slice::all);

  const auto clean = synthetic(0.0);
  const motif::InMemoryFeatures f0(64, clean.embeddings);
  const auto b = motif::train(clean.manifest, f0, default_config(64)).final_report(motif::Slice::all);

  const bool ok = a.f1 >= 0.99 && a.max_accuracy >= 0.99 && b.f1 == 1.0;
  return {ok, "noise 0.05: F1 " + fmt("%.4f", a.f1) + " MA " + fmt("%.4f", a.max_accuracy) + " on " +
                  std::to_string(a.n_images) + " test images; noise 0: F1 " + fmt("%.17g", b.f1)};
}

// ---------------------------------------------------------------- ablation

motif::SweepTable smt_sweep(const Split& data) {
  motif::SweepSpec spec;
  spec.base.seed = 1;
  spec.base.train = default_config(64);
  spec.axes = {{"smt", {0.0, 0.25, 0.5, 0.75, 1.0}}};
  const motif::InMemoryFeatures f(64, data.embeddings);
  return motif::run_sweep(spec, data.manifest, f);
}

bool all_rows_equal(const motif::SweepTable& t) {
  return std::all_of(t.rows.begin(), t.rows.end(), [&](const auto& r) { return r.metrics == t.rows[0].metrics; });
}

Verdict ablation_coherence() {
  const auto none = smt_sweep(synthetic(0.05, 0.0));
  const auto some = smt_sweep(synthetic(0.05, 0.2));
  std::set<std::vector<double>> distinct;
  for (const auto& r : some.rows) distinct.insert(r.metrics);
  const bool ok = none.rows.size() == 5 && all_rows_equal(none) && some.rows.size() == 5 && !all_rows_equal(some);
  return {ok, "secondary rate 0: " + std::string(all_rows_equal(none) ? "identical" : "DIFFERENT") +
                  " tables; rate 0.2: " + std::to_string(distinct.size()) + " distinct tables over 5 points"};
}

// ---------------------------------------------------------------- smt = 0

Verdict target_equivalence() {
  const auto data = synthetic(0.05, 0.2);
  auto stripped = data.manifest;
  std::size_t had = 0;
  for (auto& r : stripped.records) {
    had += !r.secondary.empty();
    r.secondary.clear();
  }
  const motif::InMemoryFeatures f(64, data.embeddings);
  auto cfg = default_config(64);
  cfg.epochs = 50;
  cfg.loss.smt = 0.0;
  const auto a = motif::train(data.manifest, f, cfg);
  const auto b = motif::train(stripped, f, cfg);
  const bool ok = had > 0 && a.epoch_losses == b.epoch_losses && a.params.values == b.params.values;
  return {ok, std::to_string(had) + " images with secondary labels; " + std::to_string(cfg.epochs) +
                  " epochs of losses and final parameters " + (ok ? "bit-identical" : "DIFFER")};
}

// ---------------------------------------------------------------- k-means

Verdict kmeans_properties() {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  motif::DenseMatrix pts(1000, 64);
  for (double& v : pts.values()) v = g(rng);
  const auto a = motif::kmeans(motif::l2_normalized(pts), {.k = 20, .seed = 1});
  bool monotone = true;
  for (std::size_t i = 1; i < a.inertia_history.size(); ++i)
    monotone &= a.inertia_history[i] <= a.inertia_history[i - 1];

  // four tight groups around orthogonal directions
  motif::DenseMatrix groups(100, 16, 0.0);
  std::vector<std::size_t> truth;
  for (std::size_t i = 0; i < 100; ++i) {
    truth.push_back(i % 4);
    for (std::size_t d = 0; d < 16; ++d) groups(i, d) = 0.02 * g(rng);
    groups(i, (i % 4) * 4) += 1.0;
  }
  std::size_t recovered = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = motif::kmeans(motif::l2_normalized(groups), {.k = 4, .seed = seed});
    std::map<std::size_t, std::size_t> to_group, to_cluster;
    bool exact = true;
    for (std::size_t i = 0; i < 100; ++i) {
      exact &= to_group.emplace(r.assignment[i], truth[i]).first->second == truth[i];
      exact &= to_cluster.emplace(truth[i], r.assignment[i]).first->second == r.assignment[i];
    }
    recovered += exact;
  }
  return {monotone && recovered == 10, std::to_string(a.inertia_history.size()) + " inertia steps " +
                                           (monotone ? "non-increasing" : "NOT monotone") + "; 4 groups recovered in " +
                                           std::to_string(recovered) + "/10 seeds"};
}

// ---------------------------------------------------------------- determinism

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "motif");
  std::ostringstream out, err;
  return motif::cli::run(args, out, err);
}

// Relative path -> bytes for every file under dir.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = testutil::read_file(e.path());
  return files;
}

Verdict determinism() {
  testutil::TempDir dir("acceptance-determinism");
  const auto root = dir.path();
  std::string differing;
  std::size_t files = 0;

  auto twice = [&](const std::string& name, const std::function<int(const fs::path&)>& produce) {
    const auto a = root / (name + "-1"), b = root / (name + "-2");
    const bool ran = produce(a) == 0 && produce(b) == 0;
    const auto sa = snapshot(a), sb = snapshot(b);
    files += sa.size();
    if (!ran || sa.empty() || sa != sb) differing += (differing.empty() ? "" : ", ") + name;
  };

  twice("gen-synth", [](const fs::path& out) {
    return cli({"gen-synth", "--seed", "5", "--noise", "0.05", "--out", out.string()});
  });
  const auto data = root / "gen-synth-1";
  const auto manifest = (data / "manifest.jsonl").string(), store = (data / "embeddings.mhed").string();
  twice("train", [&](const fs::path& out) {
    return cli({"train", "--manifest", manifest, "--store", store, "--seed", "3", "--epochs", "20", "--eval-every",
                "5", "--out", out.string()});
  });
  twice("cluster", [&](const fs::path& out) {
    return cli({"cluster", "--manifest", manifest, "--store", store, "--k", "20", "--seed", "3", "--out",
                out.string()});
  });
  testutil::write_file(root / "spec.json", R"({"base": {"seed": 3, "data": {"manifest": "gen-synth-1/manifest.jsonl",
      "store": "gen-synth-1/embeddings.mhed"}, "train": {"epochs": 10}, "head": {"input_dim": 64}},
      "axes": [{"name": "rfw", "values": [0.5, 1]}, {"name": "cw", "values": [1, 2]}]})");
  twice("sweep", [&](const fs::path& out) {
    return cli({"sweep", "--spec", (root / "spec.json").string(), "--out", out.string()});
  });

  return {differing.empty(), differing.empty() ? "gen-synth, train, cluster, sweep: " + std::to_string(files) +
                                                     " artifacts byte-identical across repeated runs"
                                               : "differing or failed: " + differing};
}

// ---------------------------------------------------------------- published numbers

Verdict published_numbers() {
  // The reported P and R must be consistent with the reported F1 at the
  // printed precision; the values themselves are only format fixtures.
  const double p = 0.9055, r = 0.9223, f1 = 2 * p * r / (p + r);
  motif::MetricsReport headline{"all", 0, false, p, r, 0.9138, 0.9136, 0.9459, 0.88, 0, 0};
  std::ostringstream table;
  const std::vector<motif::MetricsReport> rows{headline};
  motif::write_metrics_table(table, rows);
  const bool ok = std::abs(f1 - 0.9138) < 5e-5 && table.str().find("0.913800") != std::string::npos;
  return {ok, "NOT REPRODUCIBLE: the headline F1 0.9138 / MA 0.9459 and the per-slice table come from an unreleased "
              "dataset; they serve only as output-format fixtures (2PR/(P+R) = " +
                  fmt("%.5f", f1) + "), and acceptance rests on the property checks above"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Verdict (*)()>> criteria{
      {"gradient-correctness", gradient_check},
      {"loss-fixtures", loss_fixtures},
      {"metrics-oracle-equivalence", metrics_oracle},
      {"parameter-count", parameter_count},
      {"synthetic-end-to-end", synthetic_end_to_end},
      {"ablation-coherence", ablation_coherence},
      {"target-equivalence-trajectory", target_equivalence},
      {"kmeans", kmeans_properties},
      {"determinism", determinism},
      {"published-numbers-statement", published_numbers},
  };
  // Runtime budgets in seconds, where one is set.
  const std::map<std::string, double> budget{{"gradient-correctness", 30},
                                             {"metrics-oracle-equivalence", 5},
                                             {"synthetic-end-to-end", 120},
                                             {"ablation-coherence", 600}};
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (const auto it = budget.find(name); it != budget.end() && secs > it->second) {
      v.pass = false;
      v.detail += "; over the " + fmt("%.0f", it->second) + " s budget";
    }
    failed += !v.pass;
    std::printf("%s %s (%s) [%.2f s]\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

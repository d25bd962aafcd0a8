// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances are fixed here and never adjusted per run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "../fixtures.hpp"
#include "../support.hpp"
#include "dknn/binary_io.hpp"
#include "dknn/harness.hpp"
#include "dknn/retrieval.hpp"
#include "dknn/synth.hpp"

#ifndef DKNN_CLI_PATH
#error "DKNN_CLI_PATH must name the dknn executable"
#endif

using namespace dknn;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. Analytic gradients against central differences.
Outcome gradient_correctness() {
  constexpr double kTol = 1e-4;
  constexpr double kStep = 1e-5;
  Rng rng(20240101);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    ModelParams p = ModelParams::zeros(20, 8, 5);
    p.for_each_tensor([&](const char*, std::span<double> v) {
      for (double& x : v) x = (rng.uniform() * 2.0 - 1.0) * 0.8;
    });
    const auto x = test::random_vector(rng, 20, 1.0);
    const std::size_t y = rng.below(5);
    LLConfig cfg;  // CE, KL and CL all enabled
    const Gradients analytic = gradients(x, y, p, cfg);

    std::vector<std::span<double>> params;
    std::vector<std::span<const double>> grads;
    p.for_each_tensor([&](const char*, std::span<double> v) { params.push_back(v); });
    analytic.for_each_tensor([&](const char*, std::span<const double> v) { grads.push_back(v); });
    for (std::size_t k = 0; k < params.size(); ++k)
      for (std::size_t i = 0; i < params[k].size(); ++i) {
        double& w = params[k][i];
        const double saved = w;
        w = saved + kStep;
        const double up = total_loss(x, y, p, cfg).total;
        w = saved - kStep;
        const double down = total_loss(x, y, p, cfg).total;
        w = saved;
        const double numeric = (up - down) / (2.0 * kStep);
        const double a = grads[k][i];
        // Relative to the larger magnitude; near-zero pairs use a 1e-6 floor.
        const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
        worst = std::max(worst, rel);
      }
  }
  return {worst <= kTol, fmt("max relative error %.3e over 100 instances (tol %.0e)", worst, kTol)};
}

RepresentationStore random_store(Rng& rng, Metric metric, std::size_t n, std::size_t dim, std::size_t c) {
  std::vector<float> keys;
  std::vector<std::uint32_t> labels;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row =
        metric == Metric::L2 ? test::random_vector(rng, dim, 1.0) : test::random_distribution(rng, dim);
    if (i > 0 && rng.below(10) == 0) {
      const auto src = rng.below(i);
      row.assign(keys.begin() + src * dim, keys.begin() + (src + 1) * dim);
    }
    for (double v : row) keys.push_back(static_cast<float>(v));
    labels.push_back(static_cast<std::uint32_t>(rng.below(c)));
  }
  return RepresentationStore(metric, dim, c, 1, std::move(keys), std::move(labels));
}

// 2. Heap top-k against a full sort of independently computed distances.
Outcome knn_oracle() {
  Rng rng(77);
  std::size_t mismatches = 0, pairs = 0;
  for (const Metric metric : {Metric::L2, Metric::KL}) {
    for (int t = 0; t < 1000; ++t) {
      const std::size_t dim = 1 + rng.below(64);
      const std::size_t n = 1 + rng.below(500);
      const auto store = random_store(rng, metric, n, dim, 1 + rng.below(10));
      std::vector<double> q =
          metric == Metric::L2 ? test::random_vector(rng, dim, 1.0) : test::random_distribution(rng, dim);
      const std::size_t k = 1 + rng.below(n + 20);
      std::vector<double> dist(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto key = store.key(i);
        if (metric == Metric::L2) {
          double s = 0.0;
          for (std::size_t j = 0; j < dim; ++j) s += (key[j] - q[j]) * (key[j] - q[j]);
          dist[i] = std::sqrt(s);
        } else {
          dist[i] = test::oracle_kl(std::vector<double>(key.begin(), key.end()), q);
        }
      }
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return dist[a] != dist[b] ? dist[a] < dist[b] : a < b; });
      order.resize(std::min(k, n));
      const auto got = query(store, q, k);
      bool same = got.size() == order.size();
      for (std::size_t i = 0; same && i < got.size(); ++i) same = got[i].index == order[i];
      mismatches += !same;
      ++pairs;
    }
  }
  return {mismatches == 0, fmt("%zu of %zu (store, query) pairs differ from the full-sort oracle", mismatches, pairs)};
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// 3. Six-point fixture against the step-by-step oracle.
Outcome pipeline_oracle() {
  const auto f = test::six_point_fixture();
  const auto want = test::oracle_predict(f);
  std::vector<SparseVector> xs;
  for (const auto& x : f.train_x) xs.push_back(SparseVector::from_dense(x));
  const auto fp = model_fingerprint(f.params);
  const auto stores = build_stores(f.params, xs, f.train_y, fp);
  InferenceConfig ic;
  ic.k = f.k;
  ic.lambda = f.lambda;
  const auto got = predict(SparseVector::from_dense(f.query), f.params, fp, stores, ic);
  const double err = std::max({max_abs_diff(got.p_model.vec(), want.p_model),
                               max_abs_diff(got.p_text_sharp->vec(), want.p_text_sharp),
                               max_abs_diff(got.p_pro_sharp->vec(), want.p_pro_sharp),
                               max_abs_diff(got.p_knn->vec(), want.p_knn),
                               max_abs_diff(got.p_final.vec(), want.p_final)});
  return {err <= 1e-10, fmt("max component error %.3e (tol 1e-10)", err)};
}

// 4. Degenerate settings reduce exactly to the pure model or to k = N.
Outcome degeneracies() {
  SynthConfig sc;
  const auto data = generate_synthetic(sc);
  const auto [train_set, test_set] = split(data, 0.7, 1);
  const auto featurizer = Featurizer::fit(train_set.texts(), FeaturizerConfig{});
  TrainConfig tc;
  tc.seed = 1;
  const auto params = train(train_set, nullptr, featurizer, tc).params;
  const auto stores = build_stores(params, featurizer, train_set);

  InferenceConfig lambda0, flags_off, k_n, k_big;
  lambda0.lambda = 0.0;
  flags_off.use_text_knn = flags_off.use_pro_knn = false;
  k_n.k = train_set.size();
  k_big.k = 10 * train_set.size();
  double lam_err = 0.0, flag_err = 0.0, k_err = 0.0;
  for (const auto& ex : test_set.examples) {
    const auto x = featurizer.transform_sparse(ex.text);
    const auto pure = classify(encode(x, params), params).vec();
    const auto fp = model_fingerprint(params);
    lam_err = std::max(lam_err, max_abs_diff(predict(x, params, fp, stores, lambda0).p_final.vec(), pure));
    flag_err = std::max(flag_err, max_abs_diff(predict(x, params, fp, stores, flags_off).p_final.vec(), pure));
    k_err = std::max(k_err, max_abs_diff(predict(x, params, fp, stores, k_n).p_final.vec(),
                                         predict(x, params, fp, stores, k_big).p_final.vec()));
  }
  return {lam_err == 0.0 && flag_err == 0.0 && k_err == 0.0,
          fmt("over %zu test texts: |lambda=0 - model|inf %.1e, |flags off - model|inf %.1e, |k>=N - k=N|inf %.1e",
              test_set.size(), lam_err, flag_err, k_err)};
}

ExperimentConfig corpus_experiment() {
  ExperimentConfig ec;
  ec.data = generate_synthetic(SynthConfig{});  // 2,000 texts, 10 labels in 3 coarse groups
  ec.repeats = 5;
  ec.seed = 0;
  return ec;
}

struct LadderAcc {
  double base, dknn, ll, ll_dknn;
};

LadderAcc ladder(bool cosine_m) {
  auto plain = corpus_experiment();
  plain.train.ll.enable_kl = plain.train.ll.enable_cl = false;
  const auto a = run_experiment(plain);
  auto with_ll = corpus_experiment();
  with_ll.train.ll.cosine_m = cosine_m;
  const auto b = run_experiment(with_ll);
  return {a.row("model").mean, a.row("dknn").mean, b.row("model").mean, b.row("dknn").mean};
}

// 5. Ordering of the four headline configurations on the synthetic corpus.
Outcome ablation_ordering() {
  const auto r = ladder(false);
  const bool c1 = r.ll_dknn >= r.base + 0.002;
  const bool c2 = r.ll >= r.base - 0.002;
  const bool c3 = r.ll_dknn >= r.dknn - 0.002;
  return {c1 && c2 && c3,
          fmt("base %.4f, +dknn %.4f, +ll %.4f, +ll+dknn %.4f | ll+dknn>=base+0.002 %s, ll>=base-0.002 %s, "
              "ll+dknn>=dknn-0.002 %s",
              r.base, r.dknn, r.ll, r.ll_dknn, c1 ? "yes" : "no", c2 ? "yes" : "no", c3 ? "yes" : "no")};
}

// 6. Retrieval gain under training label noise, base model vs base + dkNN
// (same row naming as criterion 5, so no label distribution learning).
Outcome noise_trend() {
  auto config = corpus_experiment();
  config.train.ll.enable_kl = config.train.ll.enable_cl = false;
  const auto report = sweep(config, SweepParam::NoiseRatio, {0.0, 0.3, 0.5});
  const auto gain = [&](std::size_t row) { return sample_mean(report.rows[row].extra[1].values); };
  const double g0 = gain(0), g3 = gain(1), g5 = gain(2);
  return {g5 >= g0 - 0.002, fmt("mean gain at noise 0 %+.4f, 0.3 %+.4f, 0.5 %+.4f (need gain(0.5) >= gain(0) - 0.002)",
                                g0, g3, g5)};
}

// 7. Randomized invariants of the probability primitives.
Outcome invariants() {
  constexpr int kCases = 10000;
  Rng rng(4242);
  std::size_t failures = 0;
  std::string first;
  const auto check = [&](bool ok, const char* what) {
    if (!ok && failures++ == 0) first = what;
  };
  for (int t = 0; t < kCases; ++t) {
    const std::size_t c = 1 + rng.below(40);

    // Distribution
    const auto p = test::random_distribution(rng, c);
    check(is_distribution(p), "random distribution accepted");
    auto off = p;
    off[rng.below(c)] += 1e-6;
    bool threw = false;
    try {
      Distribution{off};
    } catch (const Error&) {
      threw = true;
    }
    check(threw, "distribution with sum 1 + 1e-6 rejected");

    // softmax
    const double scale = std::pow(10.0, static_cast<double>(rng.below(7)) - 3.0);
    const auto z = test::random_vector(rng, c, scale);
    const auto s = softmax(z);
    check(is_distribution(s.vec()), "softmax is a distribution");
    auto shifted = z;
    const double shift = (rng.uniform() - 0.5) * 1000.0;
    for (double& v : shifted) v += shift;
    check(max_abs_diff(softmax(shifted).vec(), s.vec()) <= 1e-12, "softmax shift invariance");
    check(s.argmax() == argmax(z), "softmax preserves argmax");
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t j = 0; j < c; ++j)
        if (z[i] < z[j]) check(s[i] <= s[j], "softmax monotone");

    // sharpen
    const auto sh = sharpen(p);
    check(is_distribution(sh.vec()), "sharpen is a distribution");
    check(sh.argmax() == argmax(p), "sharpen preserves argmax");
    check(*std::max_element(sh.vec().begin(), sh.vec().end()) >= *std::max_element(p.begin(), p.end()) - 1e-15,
          "sharpen does not lower the maximum");
    for (std::size_t i = 0; i < c; ++i) check(p[i] != 0.0 || sh[i] == 0.0, "sharpen keeps zeros");

    // KL
    const auto q = test::random_distribution(rng, c);
    const double kl = kl_divergence(p, q);
    check(std::isfinite(kl), "kl finite");
    check(kl >= -1e-9, "kl non-negative");
    check(kl_divergence(p, p) <= 1e-12, "kl(p, p) is zero");
    check(std::abs(kl - test::oracle_kl(p, q)) <= 1e-9 * std::max(1.0, std::abs(kl)), "kl matches definition");
  }
  return {failures == 0, fmt("%d cases per primitive, %zu violations%s%s", kCases, failures,
                             failures ? ", first: " : "", first.c_str())};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + DKNN_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 8. Identical reports from identical runs; artifacts survive a round trip.
Outcome determinism() {
  test::TempDir dir("acceptance_determinism");
  const auto q = [](const std::filesystem::path& p) { return "\"" + p.string() + "\""; };
  const auto data = dir / "corpus.jsonl";
  if (run_cli("gen-synth --out " + q(data)) != 0) return {false, "gen-synth failed"};
  const std::string args = "experiment --data " + q(data) + " --seed 7 --repeats 2 --out ";
  if (run_cli(args + q(dir / "a")) != 0 || run_cli(args + q(dir / "b")) != 0) return {false, "experiment failed"};
  const bool reports = read_file(dir / "a" / "report.json") == read_file(dir / "b" / "report.json") &&
                       read_file(dir / "a" / "report.txt") == read_file(dir / "b" / "report.txt");

  const auto set = generate_synthetic(SynthConfig{});
  const auto featurizer = Featurizer::fit(set.texts(), FeaturizerConfig{});
  TrainConfig tc;
  tc.epochs = 2;
  const auto params = train(set, nullptr, featurizer, tc).params;
  write_checkpoint(dir / "m.dknm", params);
  const auto ck = read_file(dir / "m.dknm");
  write_checkpoint(dir / "m2.dknm", read_checkpoint(dir / "m.dknm"));
  const bool checkpoint = read_file(dir / "m2.dknm") == ck;

  const auto stores = build_stores(params, featurizer, set);
  bool store_ok = true;
  for (const auto* s : {&stores.text, &stores.prob}) {
    s->write(dir / "s.dkns");
    RepresentationStore::read(dir / "s.dkns").write(dir / "s2.dkns");
    store_ok &= read_file(dir / "s.dkns") == read_file(dir / "s2.dkns") &&
                RepresentationStore::read(dir / "s2.dkns") == *s;
  }
  return {reports && checkpoint && store_ok,
          fmt("experiment reports identical: %s, checkpoint round trip: %s, store round trip: %s",
              reports ? "yes" : "no", checkpoint ? "yes" : "no", store_ok ? "yes" : "no")};
}

// 9. Noise injection changes exactly floor(ratio N) labels within groups.
Outcome noise_contract() {
  SynthConfig sc;
  sc.examples = 1000;
  const auto data = generate_synthetic(sc);
  bool ok = true;
  std::string detail;
  for (const double ratio : {0.03, 0.06, 0.30, 0.50}) {
    const auto noisy = inject_noise(data, ratio, 9);
    std::size_t changed = 0, outside = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto a = data.examples[i].label, b = noisy.examples[i].label;
      if (a == b) continue;
      ++changed;
      outside += data.coarse_group[a] != data.coarse_group[b];
    }
    const auto expected = static_cast<std::size_t>(std::floor(ratio * 1000.0));
    ok &= changed == expected && outside == 0;
    detail += fmt("%s%.2f: %zu/%zu changed, %zu outside group", detail.empty() ? "" : "; ", ratio, changed,
                  expected, outside);
  }
  return {ok, detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    double budget_seconds;  // 0: no runtime bound
  };
  const std::vector<Criterion> criteria{
      {1, "gradient correctness", gradient_correctness, 60},
      {2, "knn oracle equivalence", knn_oracle, 30},
      {3, "pipeline oracle", pipeline_oracle, 0},
      {4, "degeneracy identities", degeneracies, 0},
      {5, "ablation ordering", ablation_ordering, 300},
      {6, "noise robustness trend", noise_trend, 0},
      {7, "invariant suites", invariants, 60},
      {8, "determinism and persistence", determinism, 0},
      {9, "inject_noise contract", noise_contract, 0},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0 && secs >= c.budget_seconds) {
      o.pass = false;
      o.detail += fmt(" [over budget of %.0f s]", c.budget_seconds);
    }
    failed += !o.pass;
    std::printf("%s %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (c.id == 5) {
      // Informational only: the same ladder with row-normalized label
      // embeddings in the similarity matrix. Not part of the verdict.
      const auto r = ladder(true);
      std::printf("INFO 5 ablation ordering with cosine_m=on: base %.4f, +dknn %.4f, +ll %.4f, +ll+dknn %.4f\n",
                  r.base, r.dknn, r.ll, r.ll_dknn);
      std::fflush(stdout);
    }
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}

// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <malloc.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tacdiff/cli.hpp"
#include "tacdiff/dataset.hpp"
#include "tacdiff/diffusion.hpp"
#include "tacdiff/evaluation.hpp"
#include "tacdiff/hashing.hpp"
#include "tacdiff/png_io.hpp"
#include "tacdiff/rng.hpp"
#include "tacdiff/training.hpp"

namespace fs = std::filesystem;
using namespace tacdiff;

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

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Schedule recurrence, y0 inversion, reverse step vs posterior mean, sigma_1.
Outcome diffusion_math() {
  const auto s = make_linear_schedule(500, 1e-4, 0.02);
  double rec = 0.0;
  for (int t = 1; t <= 500; ++t) {
    rec = std::max(rec, std::abs(s.alpha_bar(t) - s.alpha_bar(t - 1) * (1.0 - s.beta(t))));
  }
  Rng rng(101);
  const Shape shape{3, 8, 8};
  double inv = 0.0, post = 0.0;
  const Image zero(shape);
  for (int trial = 0; trial < 100; ++trial) {
    const int t = static_cast<int>(rng.uniform_int(1, 500));
    const auto y0 = rng.normal_field(shape);
    const auto eps = rng.normal_field(shape);
    const auto back = estimate_y0(forward_sample(y0, t, eps, s), t, eps, s);
    for (std::size_t i = 0; i < y0.size(); ++i) inv = std::max(inv, std::abs(back[i] - y0[i]));
    const auto y_t = rng.normal_field(shape);
    const auto eps_hat = rng.normal_field(shape);
    const auto step = reverse_step(y_t, t, eps_hat, zero, s);
    const auto mean = posterior_params(y_t, estimate_y0(y_t, t, eps_hat, s), t, s).mean;
    for (std::size_t i = 0; i < step.size(); ++i) post = std::max(post, std::abs(step[i] - mean[i]));
  }
  const double var1 = posterior_params(zero, zero, 1, s).variance;
  return {rec <= 1e-12 && inv <= 1e-5 && post <= 1e-6 && var1 == 0.0 && s.sigma(1) == 0.0,
          fmt("recurrence %.2e, y0 inversion %.2e, reverse-vs-posterior %.2e, var(t=1) %g", rec,
              inv, post, var1)};
}

// 2. Monte Carlo forward marginals, iterative chain vs closed form.
Outcome marginal_equivalence() {
  const auto s = make_linear_schedule(500, 1e-4, 0.02);
  const Shape shape{1, 2, 2};
  const Image y0 = [&] {
    Image img(shape);
    const double v[] = {0.8, -0.3, 0.1, -0.9};
    for (int i = 0; i < 4; ++i) img[i] = v[i];
    return img;
  }();
  const int trials = 10000;
  bool ok = true;
  double worst_z = 0.0, worst_var = 0.0;
  for (int t : {1, 50, 500}) {
    Rng rng(derive_seed(202, {static_cast<std::uint64_t>(t)}));
    std::vector<double> sum_it(4), sq_it(4), sum_cf(4), sq_cf(4);
    std::vector<NoiseField> eps_seq(t);
    for (int k = 0; k < trials; ++k) {
      for (auto& e : eps_seq) e = rng.normal_field(shape);
      const auto it = iterative_forward(y0, t, eps_seq, s);
      const auto cf = forward_sample(y0, t, rng.normal_field(shape), s);
      for (int i = 0; i < 4; ++i) {
        sum_it[i] += it[i];
        sq_it[i] += it[i] * it[i];
        sum_cf[i] += cf[i];
        sq_cf[i] += cf[i] * cf[i];
      }
    }
    const double var_true = 1.0 - s.alpha_bar(t);
    for (int i = 0; i < 4; ++i) {
      const double m_it = sum_it[i] / trials, m_cf = sum_cf[i] / trials;
      const double v_it = sq_it[i] / trials - m_it * m_it;
      const double v_cf = sq_cf[i] / trials - m_cf * m_cf;
      // Means of the two estimators differ by at most 4 standard errors of the difference.
      const double se = std::sqrt((v_it + v_cf) / trials);
      const double z = std::abs(m_it - m_cf) / se;
      const double m_true = std::sqrt(s.alpha_bar(t)) * y0[i];
      const double z_it = std::abs(m_it - m_true) / std::sqrt(v_it / trials);
      const double z_cf = std::abs(m_cf - m_true) / std::sqrt(v_cf / trials);
      // Both variances against the exact 1 - abar_t; a ratio of two estimates doubles the noise.
      const double dv = std::max(std::abs(v_it / var_true - 1.0), std::abs(v_cf / var_true - 1.0));
      worst_z = std::max({worst_z, z, z_it, z_cf});
      worst_var = std::max(worst_var, dv);
      ok = ok && z <= 4.0 && z_it <= 4.0 && z_cf <= 4.0 && dv <= 0.05;
    }
  }
  return {ok, fmt("%d trials at t in {1, 50, 500}: worst mean gap %.2f SE, worst variance gap %.2f%%",
                  trials, worst_z, 100.0 * worst_var)};
}

std::vector<PairedSample> random_pairs(int n, int size, std::uint64_t seed) {
  Rng rng(seed);
  auto bg = std::make_shared<TactileImage>(3, size, size, 0.4);
  std::vector<PairedSample> out;
  for (int i = 0; i < n; ++i) {
    PairedSample p;
    p.depth = DepthMap(size, size);
    for (double& d : p.depth.values()) d = std::max(0.0, rng.uniform(-1.0, 2.0));
    p.target = TactileImage(3, size, size);
    for (double& v : p.target.values()) v = rng.uniform(0.0, 1.0);
    p.background = bg;
    out.push_back(std::move(p));
  }
  return out;
}

// 3. Analytic loss gradient against central differences on an 821-parameter denoiser.
Outcome gradient_check() {
  DenoiserConfig c;
  c.height = c.width = 8;
  c.base_channels = 2;
  c.channel_multipliers = {1, 1};
  c.blocks_per_stage = 1;
  c.noise_embed_dim = 4;
  Denoiser<double> model(c);
  Rng init(303);
  for (double& v : model.params().values()) v = 0.4 * init.normal();
  const auto batch = random_pairs(2, 8, 304);
  const auto s = make_linear_schedule(10, 1e-4, 0.02);
  model.params().zero_grad();
  diffusion_loss_and_grad(model, batch, s, 305);
  const std::vector<double> grad(model.params().grads().begin(), model.params().grads().end());
  Rng pick(306);
  double worst = 0.0;
  const int checks = 60;
  for (int k = 0; k < checks; ++k) {
    const auto i = static_cast<std::size_t>(pick.uniform_int(0, model.parameter_count() - 1));
    double& w = model.params().values()[i];
    const double w0 = w, h = 1e-5;
    w = w0 + h;
    const double lp = diffusion_loss(model, batch, s, 305);
    w = w0 - h;
    const double lm = diffusion_loss(model, batch, s, 305);
    w = w0;
    const double fd = (lp - lm) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-7}));
  }
  return {model.parameter_count() <= 1000 && worst < 1e-3,
          fmt("%zu parameters, %d checked, worst relative error %.2e", model.parameter_count(),
              checks, worst)};
}

// 4. Zero predictor gives E||eps||^2 = 1 per element.
Outcome loss_calibration() {
  const auto batch = random_pairs(4, 64, 404);
  const auto s = make_linear_schedule(500, 1e-4, 0.02);
  TrainingPredictor zero = [](std::span<const DepthMap>, std::span<const LatentImage> y,
                              std::span<const int>) {
    std::vector<NoiseField> out;
    for (const auto& img : y) out.emplace_back(img.shape());
    return out;
  };
  const double loss = diffusion_loss(zero, batch, s, 405);
  const std::size_t n = batch.size() * 3 * 64 * 64;
  return {std::abs(loss - 1.0) <= 0.05 && n >= 10000,
          fmt("per-element loss %.4f over %zu elements", loss, n)};
}

// 5. Overfit 8 pairs, then sample them back.
Outcome overfit() {
  const SensorSpec sensor = default_sensor();
  CorpusConfig cc;
  cc.classifier_train_per_char = 1;
  const auto all = generate_samples(CorpusKind::kClassifierTrain, sensor, cc, 7);
  std::vector<PairedSample> pairs;
  for (int i = 0; i < 8; ++i) pairs.push_back(all[3 * i]);
  TrainConfig tc;
  tc.epochs = 1500;
  tc.batch_size = 8;
  tc.learning_rate = 1e-3;
  tc.seed = 1;
  tc.schedule.timesteps = 100;
  tc.checkpoint_every_epochs = 0;
  const auto result = train_diffusion(tc, pairs, DenoiserConfig{}, nullptr);
  const auto& m = result.log.epoch_mean_losses;
  const double ratio = m.back() / m.front();
  std::vector<DepthMap> depth;
  for (const auto& p : pairs) depth.push_back(p.depth);
  const auto fg = sample_foregrounds(result.model, tc.schedule.build(), depth, 99, 8);
  double mean_ssim = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    mean_ssim += ssim(composite_background(fg[i], *pairs[i].background), pairs[i].target);
  }
  mean_ssim /= pairs.size();
  return {ratio < 0.05 && mean_ssim >= 0.75,
          fmt("%zu steps: loss %.4f -> %.5f (ratio %.4f), sample SSIM %.3f", m.size(), m.front(),
              m.back(), ratio, mean_ssim)};
}

// 6. Desk-scale Table I analog through the command-line pipeline.
Outcome desk_experiment(const fs::path& work, bool verbose) {
  cli::RunConfig run;
  run.out_dir = work / "desk";
  run.verbose = verbose;
  std::ostringstream log;
  cli::cmd_simulate(run, log);
  const cli::Layout layout{run.out_dir};
  const auto pre = read_manifest(layout.corpus(CorpusKind::kPretrain));
  const auto fine = read_manifest(layout.corpus(CorpusKind::kFinetune));
  cli::cmd_train(run, log);
  cli::cmd_finetune(run, log);
  cli::cmd_sample(run, log);
  cli::cmd_eval(run, log);
  cli::cmd_compare(run, log);
  if (verbose) std::cerr << log.str();
  std::ifstream in(layout.compare() / "report.json");
  const auto report = nlohmann::json::parse(in);
  auto acc = [&](const std::string& source) {
    for (const auto& r : report.at("rows")) {
      if (r.at("source") == source) return r.at("accuracy_pct").get<double>();
    }
    throw std::runtime_error("report lacks row " + source);
  };
  const double sim = acc("sim"), aug = acc("sim+aug"), ft = acc("sim+finetune"),
               diff = acc("diffusion"), real = acc("real");
  std::ifstream sin(layout.eval() / "similarity.json");
  const double gen_ssim = nlohmann::json::parse(sin).at("mean_ssim").get<double>();
  const bool sizes = pre.samples.size() >= 1000 && fine.samples.size() >= 27 * 20;
  return {sizes && diff >= sim + 10.0 && diff > aug,
          fmt("corpora %zu/%zu; accuracy sim %.2f, sim+aug %.2f, sim+finetune %.2f, diffusion "
              "%.2f, real %.2f; generated SSIM %.3f",
              pre.samples.size(), fine.samples.size(), sim, aug, ft, diff, real, gen_ssim)};
}

// 7. Metric oracles and foreground round trip.
Outcome metric_oracles() {
  const fs::path data(TACDIFF_TEST_DATA);
  std::ifstream in(data / "metrics_oracle.json");
  const auto oracle = nlohmann::json::parse(in);
  double worst_ssim = 0.0, worst_mse = 0.0;
  int pairs = 0;
  for (const auto& p : oracle.at("pairs")) {
    const auto a = read_rgb_png((data / "metric_pairs" / p.at("a").get<std::string>()).string());
    const auto b = read_rgb_png((data / "metric_pairs" / p.at("b").get<std::string>()).string());
    worst_ssim = std::max(worst_ssim, std::abs(ssim(a, b) - p.at("ssim").get<double>()));
    double direct = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) direct += std::pow(255.0 * a[i] - 255.0 * b[i], 2);
    direct /= a.size();
    worst_mse = std::max({worst_mse, std::abs(mse(a, b) - direct),
                          std::abs(mse(a, b) - p.at("mse").get<double>()) /
                              std::max(1.0, p.at("mse").get<double>())});
    ++pairs;
  }
  CorpusConfig cc;
  cc.finetune_per_char = 2;
  double worst_rt = 0.0;
  for (const auto& s : generate_samples(CorpusKind::kFinetune, default_sensor(), cc, 3)) {
    const auto back = composite_background(extract_foreground(s.target, *s.background), *s.background);
    for (std::size_t i = 0; i < back.size(); ++i) {
      worst_rt = std::max(worst_rt, std::abs(back[i] - s.target[i]));
    }
  }
  return {pairs == 20 && worst_ssim <= 1e-3 && worst_mse <= 1e-9 && worst_rt <= 1.0 / 255.0,
          fmt("%d pairs: SSIM gap %.2e, MSE gap %.2e; foreground round trip %.2e", pairs,
              worst_ssim, worst_mse, worst_rt)};
}

// 8. Repeat simulation and training with the same seed.
Outcome determinism(const fs::path& work) {
  nlohmann::json small = {{"corpus",
                           {{"pretrain_poses_per_shape", 20},
                            {"finetune_per_char", 4},
                            {"classifier_train_per_char", 2},
                            {"classifier_test_per_char", 2}}}};
  const fs::path cfg_path = work / "determinism.json";
  std::ofstream(cfg_path) << small.dump();
  std::vector<std::string> hashes;
  std::vector<std::vector<double>> losses;
  for (int rep = 0; rep < 2; ++rep) {
    cli::RunConfig run;
    run.config_path = cfg_path;
    run.out_dir = work / ("determinism_" + std::to_string(rep));
    run.seed = 77;
    fs::remove_all(run.out_dir);
    std::ostringstream log;
    cli::cmd_simulate(run, log);
    std::string joined;
    for (auto kind : {CorpusKind::kPretrain, CorpusKind::kFinetune, CorpusKind::kClassifierTrain,
                      CorpusKind::kClassifierTest}) {
      joined += sha256_file((cli::Layout{run.out_dir}.corpus(kind) / kManifestName).string());
    }
    hashes.push_back(joined);
    const auto manifest = read_manifest(cli::Layout{run.out_dir}.corpus(CorpusKind::kFinetune));
    TrainConfig tc;
    tc.epochs = 1;
    tc.max_steps = 12;
    tc.learning_rate = 5e-4;
    tc.seed = 77;
    tc.schedule.timesteps = 100;
    losses.push_back(train_diffusion(tc, manifest, DenoiserConfig{}, nullptr).log.step_losses);
  }
  double worst = 0.0;
  bool same_len = losses[0].size() == losses[1].size() && !losses[0].empty();
  for (std::size_t i = 0; same_len && i < losses[0].size(); ++i) {
    worst = std::max(worst, std::abs(losses[0][i] - losses[1][i]));
  }
  return {hashes[0] == hashes[1] && same_len && worst <= 1e-5,
          fmt("manifests %s, %zu training losses, max difference %.2e",
              hashes[0] == hashes[1] ? "byte-identical" : "DIFFER", losses[0].size(), worst)};
}

}  // namespace

int main(int argc, char** argv) {
  mallopt(M_MMAP_THRESHOLD, 1 << 28);
  mallopt(M_TRIM_THRESHOLD, 1 << 29);
  CLI::App app{"tacdiff acceptance run"};
  std::string work = "acceptance_work";
  bool reuse = false, verbose = false;
  std::vector<int> only;
  app.add_option("--work", work, "Scratch directory");
  app.add_flag("--reuse", reuse, "Keep artifacts of an earlier desk run instead of starting fresh");
  app.add_option("--only", only, "Run only these criteria");
  app.add_flag("-v,--verbose", verbose);
  CLI11_PARSE(app, argc, argv);

  const fs::path work_dir(work);
  if (!reuse) fs::remove_all(work_dir);
  fs::create_directories(work_dir);

  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "diffusion math", 60, diffusion_math},
      {2, "marginal equivalence", 120, marginal_equivalence},
      {3, "gradient check", 120, gradient_check},
      {4, "loss calibration", 60, loss_calibration},
      {5, "overfit convergence", 1800, overfit},
      {6, "desk-scale comparison", 7200, [&] { return desk_experiment(work_dir, verbose); }},
      {7, "metric oracles", 60, metric_oracles},
      {8, "determinism", 600, [&] { return determinism(work_dir); }},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("%s criterion %d (%s): %s [%.1f s of %.0f s budget]\n", pass ? "PASS" : "FAIL", c.id,
                c.name, o.detail.c_str(), secs, c.budget_s);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

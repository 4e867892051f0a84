// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tacdiff/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "tacdiff/diffusion.hpp"
#include "tacdiff/errors.hpp"
#include "tacdiff/rng.hpp"

namespace tacdiff {

namespace fs = std::filesystem;
using nn::Tensor;

namespace {

constexpr std::uint64_t kEpochStream = 0xe90c;
constexpr std::uint64_t kStepStream = 0x57e9;
constexpr std::uint64_t kFractionStream = 0xf4ac;

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct PreparedBatch {
  std::vector<LossDraw> draws;
  std::vector<DepthMap> depth;
  std::vector<LatentImage> y_t;
  std::vector<int> t;
};

PreparedBatch prepare(std::span<const PairedSample> batch, const NoiseSchedule& schedule,
                      std::uint64_t seed) {
  if (batch.empty()) throw ArgumentError("diffusion_loss: empty batch");
  PreparedBatch p;
  for (const auto& s : batch) {
    p.draws.push_back(draw_loss_terms(s, schedule, seed));
    p.depth.push_back(s.depth);
    p.y_t.push_back(p.draws.back().y_t);
    p.t.push_back(p.draws.back().t);
  }
  return p;
}

template <class T>
double mean_sq_error(const PreparedBatch& p, const Tensor<T>& out, Tensor<T>* grad) {
  const std::size_t per = p.draws.front().eps.size();
  const double n = static_cast<double>(per * p.draws.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.draws.size(); ++i) {
    const T* f = out.sample(static_cast<int>(i));
    T* g = grad ? grad->sample(static_cast<int>(i)) : nullptr;
    const auto& eps = p.draws[i].eps;
    for (std::size_t j = 0; j < per; ++j) {
      const double d = static_cast<double>(f[j]) - eps[j];
      sum += d * d;
      if (g) g[j] = static_cast<T>(2.0 * d / n);
    }
  }
  const double loss = sum / n;
  if (!std::isfinite(loss)) throw TrainingHealthError("non-finite diffusion loss");
  return loss;
}

template <class T>
Tensor<T> model_inputs(const Denoiser<T>& model, const PreparedBatch& p,
                       const NoiseSchedule& schedule, std::vector<double>* levels) {
  const DenoiserConfig& cfg = model.config();
  const auto cond = normalize_conditions(cfg, p.depth);
  *levels = noise_levels(cfg, schedule, p.t);
  return pack_inputs<T>(cfg, cond, p.y_t);
}

std::string epoch_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%04d.ckpt", epoch);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(data_fraction > 0.0 && data_fraction <= 1.0)) {
    throw ConfigError("data_fraction must lie in (0, 1]");
  }
  if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
  if (checkpoint_every_epochs < 0) throw ConfigError("checkpoint_every_epochs must be >= 0");
  schedule.build();
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"seed", c.seed},
          {"schedule", to_json(c.schedule)},
          {"data_fraction", c.data_fraction},
          {"max_steps", c.max_steps},
          {"max_grad_norm", c.max_grad_norm},
          {"checkpoint_every_epochs", c.checkpoint_every_epochs},
          {"divergence_factor", c.divergence_factor},
          {"device", c.device}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  if (j.contains("schedule")) c.schedule = schedule_descriptor_from_json(j.at("schedule"));
  c.data_fraction = j.value("data_fraction", c.data_fraction);
  c.max_steps = j.value("max_steps", c.max_steps);
  c.max_grad_norm = j.value("max_grad_norm", c.max_grad_norm);
  c.checkpoint_every_epochs = j.value("checkpoint_every_epochs", c.checkpoint_every_epochs);
  c.divergence_factor = j.value("divergence_factor", c.divergence_factor);
  c.device = j.value("device", c.device);
  c.validate();
  return c;
}

std::uint64_t sample_key(const PairedSample& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(s.depth.values().data(), s.depth.size() * sizeof(double), h);
  h = fnv1a(s.target.values().data(), s.target.size() * sizeof(double), h);
  return h;
}

LossDraw draw_loss_terms(const PairedSample& s, const NoiseSchedule& schedule, std::uint64_t seed) {
  if (!s.background) throw ArgumentError("sample has no background");
  Rng rng(derive_seed(seed, {sample_key(s)}));
  LossDraw d;
  d.t = static_cast<int>(rng.uniform_int(1, schedule.timesteps()));
  d.y0 = extract_foreground(s.target, *s.background);
  d.eps = rng.normal_field(d.y0.shape());
  d.y_t = forward_sample(d.y0, d.t, d.eps, schedule);
  return d;
}

double diffusion_loss(const TrainingPredictor& predict, std::span<const PairedSample> batch,
                      const NoiseSchedule& schedule, std::uint64_t seed) {
  const PreparedBatch p = prepare(batch, schedule, seed);
  const auto out = predict(p.depth, p.y_t, p.t);
  if (out.size() != p.draws.size()) throw ModelContractError("predictor returned wrong batch size");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].shape() != p.draws[i].eps.shape()) {
      throw ModelContractError("predictor output has shape " + to_string(out[i].shape()));
    }
    for (std::size_t j = 0; j < out[i].size(); ++j) {
      const double d = p.draws[i].eps[j] - out[i][j];
      sum += d * d;
    }
    n += out[i].size();
  }
  const double loss = sum / static_cast<double>(n);
  if (!std::isfinite(loss)) throw TrainingHealthError("non-finite diffusion loss");
  return loss;
}

template <class T>
double diffusion_loss(const Denoiser<T>& model, std::span<const PairedSample> batch,
                      const NoiseSchedule& schedule, std::uint64_t seed) {
  const PreparedBatch p = prepare(batch, schedule, seed);
  std::vector<double> levels;
  const Tensor<T> input = model_inputs(model, p, schedule, &levels);
  return mean_sq_error<T>(p, model.forward(input, levels), nullptr);
}

template <class T>
double diffusion_loss_and_grad(Denoiser<T>& model, std::span<const PairedSample> batch,
                               const NoiseSchedule& schedule, std::uint64_t seed) {
  const PreparedBatch p = prepare(batch, schedule, seed);
  std::vector<double> levels;
  const Tensor<T> input = model_inputs(model, p, schedule, &levels);
  typename Denoiser<T>::Cache cache;
  const Tensor<T> out = model.forward(input, levels, &cache);
  Tensor<T> grad(out.n(), out.c(), out.h(), out.w());
  const double loss = mean_sq_error<T>(p, out, &grad);
  model.backward(cache, grad);
  return loss;
}

std::vector<std::size_t> select_fraction(std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("fraction must lie in (0, 1]");
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  if (k == 0) throw ConfigError("fraction selects no samples out of " + std::to_string(n));
  auto perm = seeded_permutation(n, derive_seed(seed, {kFractionStream}));
  perm.resize(k);
  return perm;
}

TrainResult train_diffusion(const TrainConfig& config, std::span<const PairedSample> corpus,
                            const DenoiserConfig& model_config, const DenoiserParams* init,
                            const TrainOptions& options) {
  config.validate();
  model_config.validate();
  if (corpus.empty()) throw ConfigError("training corpus is empty");
  const NoiseSchedule schedule = config.schedule.build();
  for (const auto& s : corpus) {
    if (s.depth.height() != model_config.height || s.depth.width() != model_config.width) {
      throw ConfigError("corpus images do not match the denoiser resolution");
    }
  }

  const auto subset = select_fraction(corpus.size(), config.data_fraction, config.seed);
  std::vector<PairedSample> data;
  data.reserve(subset.size());
  for (std::size_t i : subset) data.push_back(corpus[i]);
  const std::uint64_t data_signature = [&] {
    std::uint64_t h = 0;
    for (const auto& s : data) h = derive_seed(h, {sample_key(s)});
    return h;
  }();

  DenoiserParams model = [&] {
    if (!init) return init_denoiser(model_config, config.seed);
    if (!(init->config() == model_config)) {
      throw ConfigError("initial model config does not match the requested config");
    }
    return *init;
  }();
  nn::Adam<float> adam({config.learning_rate, 0.9, 0.999, 1e-8, config.max_grad_norm});

  TrainResult result{model, {}};
  TrainLog& log = result.log;
  int start_epoch = 0;
  std::int64_t step = 0;
  double first_epoch_mean = 0.0;

  if (options.resume_from) {
    const Checkpoint ck = load_checkpoint(options.resume_from->string());
    model = restore_denoiser(ck, &model_config);
    if (!(ck.schedule == config.schedule)) {
      throw ConfigError("checkpoint schedule differs from the training config");
    }
    const auto& st = ck.training_state;
    if (st.value("data_signature", std::uint64_t{0}) != data_signature ||
        st.value("seed", std::uint64_t{0}) != config.seed) {
      throw ConfigError("checkpoint was trained on different data or seed");
    }
    if (!ck.optimizer) throw ConfigError("checkpoint has no optimizer state to resume from");
    adam.state() = *ck.optimizer;
    start_epoch = st.at("epochs_completed").get<int>();
    step = st.at("step").get<std::int64_t>();
    log.epoch_mean_losses = st.at("epoch_mean_losses").get<std::vector<double>>();
    if (!log.epoch_mean_losses.empty()) first_epoch_mean = log.epoch_mean_losses.front();
  }
  log.first_step = step;

  std::ofstream log_file;
  if (!options.out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(options.out_dir, ec);
    if (ec) throw PersistenceError("cannot create directory", options.out_dir.string());
    const fs::path path = options.out_dir / "train.log";
    log_file.open(path, options.resume_from ? std::ios::app : std::ios::trunc);
    if (!log_file) throw PersistenceError("cannot open training log", path.string());
    if (!options.resume_from) log_file << "# step loss lr wall_seconds\n";
  }

  auto state_json = [&](int epochs_completed) {
    return nlohmann::json{{"epochs_completed", epochs_completed},
                          {"step", step},
                          {"seed", config.seed},
                          {"data_signature", data_signature},
                          {"data_size", data.size()},
                          {"epoch_mean_losses", log.epoch_mean_losses},
                          {"train_config", to_json(config)}};
  };

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  const std::size_t n = data.size();
  const std::size_t bs = std::min<std::size_t>(config.batch_size, n);
  bool stopped = false;
  int epoch = start_epoch;
  for (; epoch < config.epochs && !stopped; ++epoch) {
    const auto perm = seeded_permutation(n, derive_seed(config.seed, {kEpochStream,
                                                                     static_cast<std::uint64_t>(epoch)}));
    double epoch_sum = 0.0;
    int epoch_steps = 0;
    for (std::size_t b = 0; b < n; b += bs) {
      if (config.max_steps > 0 && step >= config.max_steps) break;
      if (options.stop_after_steps > 0 &&
          static_cast<int>(log.step_losses.size()) >= options.stop_after_steps) {
        stopped = true;
        break;
      }
      std::vector<PairedSample> batch;
      for (std::size_t k = b; k < std::min(n, b + bs); ++k) batch.push_back(data[perm[k]]);
      model.params().zero_grad();
      const double loss = diffusion_loss_and_grad(
          model, batch, schedule, derive_seed(config.seed, {kStepStream, static_cast<std::uint64_t>(step)}));
      adam.step(model.params());
      if (!model.params().all_finite()) throw TrainingHealthError("parameters became non-finite");
      ++step;
      log.step_losses.push_back(loss);
      epoch_sum += loss;
      ++epoch_steps;
      if (log_file) {
        char line[128];
        std::snprintf(line, sizeof line, "%lld %.8g %.6g %.3f\n", static_cast<long long>(step),
                      loss, config.learning_rate, elapsed());
        log_file << line;
      }
    }
    if (stopped || epoch_steps == 0) break;
    const double mean = epoch_sum / epoch_steps;
    log.epoch_mean_losses.push_back(mean);
    if (log.epoch_mean_losses.size() == 1) first_epoch_mean = mean;
    if (config.divergence_factor > 0.0 && log.epoch_mean_losses.size() > 1 &&
        mean > config.divergence_factor * first_epoch_mean) {
      throw TrainingHealthError("training diverged: epoch " + std::to_string(epoch) +
                                " mean loss " + std::to_string(mean) + " exceeds " +
                                std::to_string(config.divergence_factor) + "x the first epoch's " +
                                std::to_string(first_epoch_mean));
    }
    if (options.verbose) {
      std::fprintf(stderr, "epoch %d step %lld mean loss %.5f (%.1fs)\n", epoch,
                   static_cast<long long>(step), mean, elapsed());
    }
    if (!options.out_dir.empty() && config.checkpoint_every_epochs > 0 &&
        (epoch + 1) % config.checkpoint_every_epochs == 0) {
      save_checkpoint((options.out_dir / epoch_name(epoch + 1)).string(),
                      make_checkpoint(model, config.schedule, state_json(epoch + 1), &adam.state()));
    }
    if (config.max_steps > 0 && step >= config.max_steps) {
      ++epoch;
      break;
    }
  }
  log.wall_seconds = elapsed();
  if (!stopped && !options.out_dir.empty()) {
    const fs::path final_path = options.out_dir / "final.ckpt";
    save_checkpoint(final_path.string(),
                    make_checkpoint(model, config.schedule, state_json(epoch), &adam.state()));
    log.final_checkpoint = final_path.string();
  }
  result.model = std::move(model);
  return result;
}

TrainResult train_diffusion(const TrainConfig& config, const CorpusManifest& corpus,
                            const DenoiserConfig& model_config, const DenoiserParams* init,
                            const TrainOptions& options) {
  if (corpus.kind != CorpusKind::kPretrain && corpus.kind != CorpusKind::kFinetune) {
    throw ConfigError("diffusion training needs a pretrain or finetune corpus, got " +
                      to_string(corpus.kind));
  }
  const auto samples = load_corpus(corpus, std::string("train"));
  return train_diffusion(config, samples, model_config, init, options);
}

std::vector<LatentImage> sample_foregrounds(const DenoiserParams& model,
                                            const NoiseSchedule& schedule,
                                            std::span<const DepthMap> depth, std::uint64_t seed,
                                            int batch_size) {
  const DenoiserConfig& cfg = model.config();
  const Shape shape{DenoiserConfig::kImageChannels, cfg.height, cfg.width};
  const BatchNoisePredictor predict = [&](std::span<const DepthMap> x,
                                          std::span<const LatentImage> y_t, int t) {
    return predict_noise_batch(model, x, y_t, t, schedule);
  };
  std::vector<LatentImage> out;
  out.reserve(depth.size());
  const std::size_t bs = static_cast<std::size_t>(std::max(batch_size, 1));
  for (std::size_t b = 0; b < depth.size(); b += bs) {
    const std::size_t e = std::min(depth.size(), b + bs);
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = b; i < e; ++i) seeds.push_back(derive_seed(seed, {i}));
    auto part = ancestral_sample_batch(predict, depth.subspan(b, e - b), shape, schedule, seeds);
    for (auto& img : part) out.push_back(std::move(img));
  }
  return out;
}

template double diffusion_loss<float>(const Denoiser<float>&, std::span<const PairedSample>,
                                      const NoiseSchedule&, std::uint64_t);
template double diffusion_loss<double>(const Denoiser<double>&, std::span<const PairedSample>,
                                       const NoiseSchedule&, std::uint64_t);
template double diffusion_loss_and_grad<float>(Denoiser<float>&, std::span<const PairedSample>,
                                               const NoiseSchedule&, std::uint64_t);
template double diffusion_loss_and_grad<double>(Denoiser<double>&, std::span<const PairedSample>,
                                                const NoiseSchedule&, std::uint64_t);

}  // namespace tacdiff

#include "cookgen/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>

#include "cookgen/csv.hpp"
#include "cookgen/optim.hpp"
#include "cookgen/version.hpp"

namespace cookgen {

std::string to_string(PerceptualImpl impl) {
  return impl == PerceptualImpl::PyramidL1 ? "pyramid-l1" : "external-lpips";
}

PerceptualImpl perceptual_impl_from_string(const std::string& s) {
  if (s == "pyramid-l1") return PerceptualImpl::PyramidL1;
  if (s == "external-lpips") return PerceptualImpl::ExternalLpips;
  throw ConfigError("unknown perceptual_impl '" + s + "' (expected pyramid-l1 or external-lpips)");
}

template <typename Scalar>
Var<Scalar> pyramid_l1(const Var<Scalar>& a, const Var<Scalar>& b, int levels) {
  if (levels < 1) throw InvalidArgument("pyramid_l1: need at least one level");
  require_shape(b.shape(), a.shape(), "pyramid_l1");
  Var<Scalar> x = a, y = b;
  Var<Scalar> total = mean_abs_diff(x, y);
  for (int l = 1; l < levels; ++l) {
    x = blur_downsample(x);
    y = blur_downsample(y);
    total = total + mean_abs_diff(x, y);
  }
  return (Scalar(1) / static_cast<Scalar>(levels)) * total;
}

template <typename Scalar>
Var<Scalar> perceptual_loss(const Var<Scalar>& a, const Var<Scalar>& b, PerceptualImpl impl,
                            const PerceptualPlugin<Scalar>& plugin) {
  if (impl == PerceptualImpl::PyramidL1) return pyramid_l1(a, b);
  if (!plugin) throw ConfigError("perceptual_impl is external-lpips but no perceptual plugin was supplied");
  require_shape(b.shape(), a.shape(), "perceptual_loss");
  return plugin(a, b);
}

double perceptual_loss(const Image& a, const Image& b, PerceptualImpl impl, const PerceptualPlugin<double>& plugin) {
  if (a.height() != b.height() || a.width() != b.width()) throw ShapeError("perceptual_loss: image sizes differ");
  Tape<double> tape;
  return perceptual_loss(tape.constant(to_tensor<double>(a)), tape.constant(to_tensor<double>(b)), impl, plugin)
      .value()
      .item();
}

template <typename Scalar>
Var<Scalar> gan_loss_d(DiscriminatorNet<Scalar>& d, const Var<Scalar>& raw, const Var<Scalar>& real,
                       const Var<Scalar>& fake) {
  const Var<Scalar> on_real = bce_with_logits(d.forward(raw, real), Scalar(1));
  const Var<Scalar> on_fake = bce_with_logits(d.forward(raw, fake), Scalar(0));
  return Scalar(0.5) * (on_real + on_fake);
}

template <typename Scalar>
Var<Scalar> gan_loss_g(DiscriminatorNet<Scalar>& d, const Var<Scalar>& raw, const Var<Scalar>& fake) {
  return bce_with_logits(d.forward(raw, fake), Scalar(1));
}

template <typename Scalar>
double gan_loss_d(DiscriminatorNet<Scalar>& d, const Image& raw, const Image& real, const Image& fake) {
  Tape<Scalar> t;
  return static_cast<double>(gan_loss_d(d, t.constant(to_tensor<Scalar>(raw)), t.constant(to_tensor<Scalar>(real)),
                                        t.constant(to_tensor<Scalar>(fake)))
                                 .value()
                                 .item());
}

template <typename Scalar>
double gan_loss_g(DiscriminatorNet<Scalar>& d, const Image& raw, const Image& fake) {
  Tape<Scalar> t;
  return static_cast<double>(
      gan_loss_g(d, t.constant(to_tensor<Scalar>(raw)), t.constant(to_tensor<Scalar>(fake))).value().item());
}

template <typename Scalar>
Var<Scalar> cis_loss(const EmbeddingNet<Scalar>& cis_net, const Var<Scalar>& real, const Var<Scalar>& fake) {
  require_shape(fake.shape(), real.shape(), "cis_loss");
  Tape<Scalar>& tape = fake.tape();
  Tensor<Scalar> real_embedding;
  {
    Tape<Scalar> side;
    real_embedding = cis_net.forward(side.constant(real.value())).value();
  }
  const Var<Scalar> e_real = tape.constant(std::move(real_embedding));
  const Var<Scalar> e_fake = cis_net.forward(fake);
  return affine(mean(row_dot(e_real, e_fake)), Scalar(-1), Scalar(1));
}

template <typename Scalar>
double cis_loss(const EmbeddingNet<Scalar>& cis_net, const Image& real, const Image& fake) {
  Tape<Scalar> t;
  return static_cast<double>(
      cis_loss(cis_net, t.constant(to_tensor<Scalar>(real)), t.constant(to_tensor<Scalar>(fake))).value().item());
}

double cis_loss(const Eigen::VectorXd& real_embedding, const Eigen::VectorXd& fake_embedding) {
  if (real_embedding.size() != fake_embedding.size()) throw ShapeError("cis_loss: embedding lengths differ");
  return 1.0 - real_embedding.dot(fake_embedding);
}

double composite_loss(const LossParts& parts, const LossWeights& w) {
  return w.gan * parts.gan + w.perc * parts.perc + w.cis * parts.cis;
}

template <typename Scalar>
Var<Scalar> composite_loss(const Var<Scalar>& gan, const Var<Scalar>& perc, const Var<Scalar>& cis,
                           const LossWeights& w) {
  return static_cast<Scalar>(w.gan) * gan + static_cast<Scalar>(w.perc) * perc + static_cast<Scalar>(w.cis) * cis;
}

void GenTrainConfig::validate() const {
  if (epochs_const < 0 || epochs_decay < 0 || total_epochs() <= 0)
    throw ConfigError("train_generator: epoch counts must be nonnegative with a positive total");
  if (lr <= 0) throw ConfigError("train_generator: lr must be positive");
  if (batch_size != 1) throw ConfigError("train_generator: only batch_size 1 is supported");
  if (lambda.gan < 0 || lambda.perc < 0 || lambda.cis < 0)
    throw ConfigError("train_generator: loss weights must be nonnegative");
}

nlohmann::json GenTrainConfig::to_json() const {
  return {{"epochs_const", epochs_const},
          {"epochs_decay", epochs_decay},
          {"lr", lr},
          {"adam_beta1", adam_beta1},
          {"adam_beta2", adam_beta2},
          {"batch_size", batch_size},
          {"lambda_gan", lambda.gan},
          {"lambda_perc", lambda.perc},
          {"lambda_cis", lambda.cis},
          {"perceptual_impl", to_string(perceptual_impl)},
          {"augment", augment},
          {"seed", seed}};
}

GenTrainConfig GenTrainConfig::from_json(const nlohmann::json& j) {
  GenTrainConfig c;
  c.epochs_const = j.value("epochs_const", c.epochs_const);
  c.epochs_decay = j.value("epochs_decay", c.epochs_decay);
  c.lr = j.value("lr", c.lr);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lambda.gan = j.value("lambda_gan", c.lambda.gan);
  c.lambda.perc = j.value("lambda_perc", c.lambda.perc);
  c.lambda.cis = j.value("lambda_cis", c.lambda.cis);
  c.perceptual_impl = perceptual_impl_from_string(j.value("perceptual_impl", to_string(c.perceptual_impl)));
  c.augment = j.value("augment", c.augment);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

double lr_schedule(int epoch, const GenTrainConfig& cfg) {
  const int total = cfg.total_epochs();
  if (epoch < 0 || epoch >= total)
    throw InvalidArgument("lr_schedule: epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(total) +
                          ")");
  if (epoch < cfg.epochs_const) return cfg.lr;
  return cfg.lr * static_cast<double>(total - epoch) / static_cast<double>(cfg.epochs_decay);
}

void register_contexts(ContextIndex& idx, const std::vector<const CookingSession*>& sessions) {
  for (const CookingSession* s : sessions)
    for (std::string_view state : kStateNames) {
      if (state == kStateNames[0]) continue;
      if (s->annotation(state)) idx.add(s->recipe_id, std::string(state));
    }
}

namespace {

struct TrainPair {
  StatePair pair;
  std::string session_id;
  int context = 0;
};

}  // namespace

template <typename Scalar>
std::vector<GenEpochStats> train_generator(const std::vector<const CookingSession*>& sessions,
                                           GeneratorNet<Scalar>& gen, DiscriminatorNet<Scalar>& disc,
                                           const EmbeddingNet<Scalar>& cis_net, const GenTrainConfig& cfg,
                                           const GenTrainOutputs& outputs,
                                           const std::function<void(const GenEpochStats&)>& on_epoch,
                                           const PerceptualPlugin<Scalar>& plugin) {
  cfg.validate();
  if (cfg.perceptual_impl == PerceptualImpl::ExternalLpips && !plugin)
    throw ConfigError("perceptual_impl is external-lpips but no perceptual plugin was supplied");

  std::vector<TrainPair> pairs;
  for (const CookingSession* s : sessions) {
    if (!s->annotation("raw")) continue;
    for (StatePair& p : pair_raw_state(*s)) {
      const int ctx = gen.contexts().index(p.recipe_id, p.state_name);
      pairs.push_back({std::move(p), s->session_id, ctx});
    }
  }
  if (pairs.empty()) throw InvalidArgument("train_generator: no (raw, state) pairs in the training split");

  EmbeddingNet<Scalar> cis = cis_net;
  set_trainable(cis, false);

  std::mt19937_64 rng(cfg.seed);
  AdamOptions ao;
  ao.lr = cfg.lr;
  ao.beta1 = cfg.adam_beta1;
  ao.beta2 = cfg.adam_beta2;
  Adam<Scalar> opt_g(gen, ao);
  Adam<Scalar> opt_d(disc, ao);

  std::optional<CsvWriter> csv;
  if (!outputs.loss_csv.empty())
    csv.emplace(outputs.loss_csv,
                std::vector<std::string>{"epoch", "gan_d", "gan_g", "perc", "cis", "composite", "lr"});

  std::vector<size_t> order(pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<GenEpochStats> history;
  const auto started = std::chrono::steady_clock::now();
  for (int epoch = 0; epoch < cfg.total_epochs(); ++epoch) {
    const double lr = lr_schedule(epoch, cfg);
    opt_g.set_lr(lr);
    opt_d.set_lr(lr);
    std::shuffle(order.begin(), order.end(), rng);
    GenEpochStats st;
    st.epoch = epoch;
    st.lr = lr;
    for (size_t i : order) {
      const TrainPair& tp = pairs[i];
      Image raw = tp.pair.raw_image, real = tp.pair.state_image;
      if (cfg.augment) {
        const AugmentParams ap = draw_augment(rng);
        raw = augment(raw, ap);
        real = augment(real, ap);
      }
      Tape<Scalar> tape;
      const Var<Scalar> x = tape.constant(to_tensor<Scalar>(raw));
      const Var<Scalar> y = tape.constant(to_tensor<Scalar>(real));
      const Var<Scalar> fake = gen.forward(x, tp.context);

      // Discriminator step on its own tape; the fake enters as a constant.
      double d_value;
      {
        Tape<Scalar> dt;
        const Var<Scalar> loss_d =
            gan_loss_d(disc, dt.constant(x.value()), dt.constant(y.value()), dt.constant(fake.value()));
        d_value = static_cast<double>(loss_d.value().item());
        if (!std::isfinite(d_value))
          throw NumericError("train_generator: non-finite discriminator loss at epoch " + std::to_string(epoch) +
                             ", pair " + tp.session_id + "/" + tp.pair.state_name + " (gan_d=" +
                             std::to_string(d_value) + ")");
        opt_d.zero_grad();
        dt.backward(loss_d);
        opt_d.step();
      }

      const Var<Scalar> l_gan = gan_loss_g(disc, x, fake);
      const Var<Scalar> l_perc = perceptual_loss(fake, y, cfg.perceptual_impl, plugin);
      const Var<Scalar> l_cis = cis_loss(cis, y, fake);
      const Var<Scalar> total = composite_loss(l_gan, l_perc, l_cis, cfg.lambda);
      const LossParts parts{static_cast<double>(l_gan.value().item()), static_cast<double>(l_perc.value().item()),
                            static_cast<double>(l_cis.value().item())};
      const double composite = static_cast<double>(total.value().item());
      if (!std::isfinite(composite))
        throw NumericError("train_generator: non-finite generator loss at epoch " + std::to_string(epoch) +
                           ", pair " + tp.session_id + "/" + tp.pair.state_name +
                           " (gan_g=" + std::to_string(parts.gan) + ", perc=" + std::to_string(parts.perc) +
                           ", cis=" + std::to_string(parts.cis) + ")");
      opt_g.zero_grad();
      tape.backward(total);
      opt_g.step();

      st.gan_d += d_value;
      st.gan_g += parts.gan;
      st.perc += parts.perc;
      st.cis += parts.cis;
      st.composite += composite;
    }
    const auto n = static_cast<double>(pairs.size());
    st.gan_d /= n;
    st.gan_g /= n;
    st.perc /= n;
    st.cis /= n;
    st.composite /= n;
    history.push_back(st);
    if (csv) csv->row({static_cast<long long>(epoch), st.gan_d, st.gan_g, st.perc, st.cis, st.composite, st.lr});
    if (on_epoch) on_epoch(st);
  }

  if (!outputs.manifest.empty()) {
    auto losses = [](const GenEpochStats& s) {
      return nlohmann::json{{"gan_d", s.gan_d}, {"gan_g", s.gan_g}, {"perc", s.perc},
                            {"cis", s.cis},     {"composite", s.composite}};
    };
    nlohmann::json m{{"version", version_string()},
                     {"config", cfg.to_json()},
                     {"seed", cfg.seed},
                     {"lambda", {cfg.lambda.gan, cfg.lambda.perc, cfg.lambda.cis}},
                     {"generator", gen.config().to_json()},
                     {"discriminator", disc.config().to_json()},
                     {"parameter_counts",
                      {{"generator", parameter_count(gen)},
                       {"discriminator", parameter_count(disc)},
                       {"cis", parameter_count(cis)}}},
                     {"contexts", gen.contexts().to_json()},
                     {"pairs", pairs.size()},
                     {"start_losses", losses(history.front())},
                     {"end_losses", losses(history.back())},
                     {"wall_seconds",
                      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count()}};
    std::ofstream(outputs.manifest) << m.dump(2) << '\n';
  }
  return history;
}

#define COOKGEN_INSTANTIATE_TRAINING(S)                                                                         \
  template Var<S> pyramid_l1(const Var<S>&, const Var<S>&, int);                                                \
  template Var<S> perceptual_loss(const Var<S>&, const Var<S>&, PerceptualImpl, const PerceptualPlugin<S>&);    \
  template Var<S> gan_loss_d(DiscriminatorNet<S>&, const Var<S>&, const Var<S>&, const Var<S>&);                \
  template Var<S> gan_loss_g(DiscriminatorNet<S>&, const Var<S>&, const Var<S>&);                               \
  template double gan_loss_d(DiscriminatorNet<S>&, const Image&, const Image&, const Image&);                   \
  template double gan_loss_g(DiscriminatorNet<S>&, const Image&, const Image&);                                 \
  template Var<S> cis_loss(const EmbeddingNet<S>&, const Var<S>&, const Var<S>&);                               \
  template double cis_loss(const EmbeddingNet<S>&, const Image&, const Image&);                                 \
  template Var<S> composite_loss(const Var<S>&, const Var<S>&, const Var<S>&, const LossWeights&);              \
  template std::vector<GenEpochStats> train_generator(                                                          \
      const std::vector<const CookingSession*>&, GeneratorNet<S>&, DiscriminatorNet<S>&, const EmbeddingNet<S>&, \
      const GenTrainConfig&, const GenTrainOutputs&, const std::function<void(const GenEpochStats&)>&,          \
      const PerceptualPlugin<S>&);

COOKGEN_INSTANTIATE_TRAINING(float)
COOKGEN_INSTANTIATE_TRAINING(double)

}  // namespace cookgen

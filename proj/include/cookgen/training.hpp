#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cookgen/cis.hpp"
#include "cookgen/nets.hpp"

namespace cookgen {

enum class PerceptualImpl { PyramidL1, ExternalLpips };

std::string to_string(PerceptualImpl impl);
PerceptualImpl perceptual_impl_from_string(const std::string& s);

// Differentiable distance supplied by the caller for ExternalLpips.
template <typename Scalar>
using PerceptualPlugin = std::function<Var<Scalar>(const Var<Scalar>&, const Var<Scalar>&)>;

// Mean over `levels` blur-downsampled pyramid levels of the mean absolute
// difference; level 0 is full resolution.
template <typename Scalar>
Var<Scalar> pyramid_l1(const Var<Scalar>& a, const Var<Scalar>& b, int levels = 3);

// Throws ConfigError when ExternalLpips is selected without a plugin.
template <typename Scalar>
Var<Scalar> perceptual_loss(const Var<Scalar>& a, const Var<Scalar>& b, PerceptualImpl impl,
                            const PerceptualPlugin<Scalar>& plugin = {});
double perceptual_loss(const Image& a, const Image& b, PerceptualImpl impl = PerceptualImpl::PyramidL1,
                       const PerceptualPlugin<double>& plugin = {});

// -[log s(D(raw, real)) + log(1 - s(D(raw, fake)))] / 2, averaged over the
// patch map. `fake` should be a constant on the tape (detached).
template <typename Scalar>
Var<Scalar> gan_loss_d(DiscriminatorNet<Scalar>& d, const Var<Scalar>& raw, const Var<Scalar>& real,
                       const Var<Scalar>& fake);
// -log s(D(raw, fake)), averaged over the patch map.
template <typename Scalar>
Var<Scalar> gan_loss_g(DiscriminatorNet<Scalar>& d, const Var<Scalar>& raw, const Var<Scalar>& fake);

template <typename Scalar>
double gan_loss_d(DiscriminatorNet<Scalar>& d, const Image& raw, const Image& real, const Image& fake);
template <typename Scalar>
double gan_loss_g(DiscriminatorNet<Scalar>& d, const Image& raw, const Image& fake);

// 1 - unclamped cosine between embeddings; the real branch is a constant,
// so gradients reach `fake` only. Mean over the batch.
template <typename Scalar>
Var<Scalar> cis_loss(const EmbeddingNet<Scalar>& cis_net, const Var<Scalar>& real, const Var<Scalar>& fake);
template <typename Scalar>
double cis_loss(const EmbeddingNet<Scalar>& cis_net, const Image& real, const Image& fake);
// Same quantity from precomputed unit embeddings.
double cis_loss(const Eigen::VectorXd& real_embedding, const Eigen::VectorXd& fake_embedding);

struct LossWeights {
  double gan = 1.0;
  double perc = 50.0;
  double cis = 50.0;
};

struct LossParts {
  double gan = 0.0;
  double perc = 0.0;
  double cis = 0.0;
};

double composite_loss(const LossParts& parts, const LossWeights& weights = {});
template <typename Scalar>
Var<Scalar> composite_loss(const Var<Scalar>& gan, const Var<Scalar>& perc, const Var<Scalar>& cis,
                           const LossWeights& weights);

struct GenTrainConfig {
  int epochs_const = 50;
  int epochs_decay = 50;
  double lr = 2e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  int batch_size = 1;
  LossWeights lambda;
  PerceptualImpl perceptual_impl = PerceptualImpl::PyramidL1;
  bool augment = true;
  std::uint64_t seed = 0;

  int total_epochs() const { return epochs_const + epochs_decay; }
  void validate() const;
  nlohmann::json to_json() const;
  static GenTrainConfig from_json(const nlohmann::json& j);
};

// lr for epochs_const epochs, then linear decay reaching zero after the
// last epoch: lr * (const + decay - e) / decay.
double lr_schedule(int epoch, const GenTrainConfig& cfg = {});

struct GenEpochStats {
  int epoch = 0;
  double gan_d = 0.0;
  double gan_g = 0.0;
  double perc = 0.0;
  double cis = 0.0;
  double composite = 0.0;
  double lr = 0.0;
};

struct GenTrainOutputs {
  std::filesystem::path loss_csv;  // epoch,gan_d,gan_g,perc,cis,composite,lr
  std::filesystem::path manifest;  // run manifest JSON
};

// Registers every (recipe, state) pair found in the sessions' annotations.
void register_contexts(ContextIndex& idx, const std::vector<const CookingSession*>& sessions);

// One discriminator step on a detached fake, then one generator step, per
// (raw, state) pair; the CIS network is copied and frozen.
template <typename Scalar>
std::vector<GenEpochStats> train_generator(const std::vector<const CookingSession*>& sessions,
                                           GeneratorNet<Scalar>& gen, DiscriminatorNet<Scalar>& disc,
                                           const EmbeddingNet<Scalar>& cis_net, const GenTrainConfig& cfg,
                                           const GenTrainOutputs& outputs = {},
                                           const std::function<void(const GenEpochStats&)>& on_epoch = {},
                                           const PerceptualPlugin<Scalar>& plugin = {});

}  // namespace cookgen

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "cookgen/conditioning.hpp"
#include "cookgen/image.hpp"

namespace cookgen {

struct GeneratorConfig {
  Index img_size = 224;
  Index in_ch = 3;
  Index out_ch = 3;
  Index base_dim = 32;
  std::vector<Index> dim_mults{1, 2, 4, 8};
  Index resnet_groups = 8;
  int n_down = 4;
  int n_up = 4;
  int n_mid = 2;
  int spe_dim = 32;
  double spe_theta = 10000.0;
  std::uint64_t seed = 0;

  void validate() const;
  // Channel width entering each encoder level, plus the bottleneck width
  // as the last entry: {base, base*m0, ..., base*m_last}.
  std::vector<Index> level_dims() const;
  nlohmann::json to_json() const;
  static GeneratorConfig from_json(const nlohmann::json& j);
};

struct FeatureShape {
  std::string stage;
  Index channels;
  Index spatial;
  friend bool operator==(const FeatureShape&, const FeatureShape&) = default;
};

// Output shape of every stage of the generator, derived from the config by
// shape arithmetic alone.
std::vector<FeatureShape> generator_feature_shapes(const GeneratorConfig& cfg);

// Trainable parameter count implied by the layer shapes of `cfg`.
Index generator_parameter_census(const GeneratorConfig& cfg);

// conv3x3 -> GN -> SiLU -> conv3x3 -> GN -> SiLU, plus a 1x1 residual
// projection when the width changes.
template <typename Scalar>
struct ResnetBlock {
  Conv2d<Scalar> conv1, conv2, skip;
  GroupNorm<Scalar> norm1, norm2;
  bool has_skip = false;

  ResnetBlock() = default;
  ResnetBlock(const std::string& name, Index in, Index out, Index groups, std::mt19937_64& rng);
  Var<Scalar> operator()(const Var<Scalar>& x) const;

  template <typename F> void visit(F&& f) { visit_impl(*this, f); }
  template <typename F> void visit(F&& f) const { visit_impl(*this, f); }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& s, F& f) {
    s.conv1.visit(f);
    s.norm1.visit(f);
    s.conv2.visit(f);
    s.norm2.visit(f);
    if (s.has_skip) s.skip.visit(f);
  }
};

// Recipe/state conditioned U-Net. Every encoder, bottleneck and decoder
// ResNet block output is FiLM-modulated by the context embedding.
template <typename Scalar>
class GeneratorNet {
 public:
  GeneratorNet() = default;
  GeneratorNet(GeneratorConfig cfg, ContextIndex contexts);

  const GeneratorConfig& config() const { return cfg_; }
  const ContextIndex& contexts() const { return contexts_; }
  ContextIndex& contexts() { return contexts_; }
  FilmBank<Scalar>& film_bank() { return film_; }
  const FilmBank<Scalar>& film_bank() const { return film_; }
  const ContextEmbedder<Scalar>& embedder() const { return embedder_; }

  // x: [N, 3, S, S]; one context index per sample. Output in [-1, 1].
  // `trace` receives the measured shape after each stage.
  Var<Scalar> forward(const Var<Scalar>& x, const std::vector<int>& context_ids,
                      std::vector<FeatureShape>* trace = nullptr) const;
  Var<Scalar> forward(const Var<Scalar>& x, int context_id) const {
    return forward(x, std::vector<int>(static_cast<size_t>(x.shape()[0]), context_id));
  }

  // Re-draw every FiLM head from a random distribution (tests and
  // gradient checks need non-identity conditioning).
  void randomize_film(std::mt19937_64& rng, Scalar scale);

  template <typename F> void visit(F&& f) { visit_impl(*this, f); }
  template <typename F> void visit(F&& f) const { visit_impl(*this, f); }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& s, F& f) {
    s.embedder_.visit(f);
    s.stem_.visit(f);
    for (auto& lvl : s.down_) {
      lvl.res0.visit(f);
      lvl.res1.visit(f);
      lvl.downsample.visit(f);
    }
    for (auto& m : s.mid_) m.visit(f);
    for (auto& lvl : s.up_) {
      lvl.upsample.visit(f);
      lvl.res0.visit(f);
      lvl.res1.visit(f);
    }
    s.final_.visit(f);
    s.out_.visit(f);
    s.film_.visit(f);
  }

  struct DownLevel {
    ResnetBlock<Scalar> res0, res1;
    Conv2d<Scalar> downsample;
  };
  struct UpLevel {
    Conv2d<Scalar> upsample;
    ResnetBlock<Scalar> res0, res1;
  };

  GeneratorConfig cfg_;
  ContextIndex contexts_;
  ContextEmbedder<Scalar> embedder_;
  Conv2d<Scalar> stem_;
  std::vector<DownLevel> down_;
  std::vector<ResnetBlock<Scalar>> mid_;
  std::vector<UpLevel> up_;  // ordered deepest level first
  ResnetBlock<Scalar> final_;
  Conv2d<Scalar> out_;
  FilmBank<Scalar> film_;
};

// Single-image inference. Throws ShapeError on a wrong input size and
// LookupError on an unknown context.
template <typename Scalar>
Image generate(const GeneratorNet<Scalar>& g, const Image& raw, const std::string& recipe_id,
               const std::string& state_name);

struct DiscriminatorConfig {
  Index in_ch = 6;
  Index ndf = 64;
  Index kernel = 4;
  int stride2_layers = 3;
  double leaky_slope = 0.2;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static DiscriminatorConfig from_json(const nlohmann::json& j);
};

// PatchGAN: stride-2 conv stack, one stride-1 conv, then a 1-channel
// stride-1 conv emitting raw logits. Batch norm on all but the first and
// last layers.
template <typename Scalar>
class DiscriminatorNet {
 public:
  DiscriminatorNet() = default;
  explicit DiscriminatorNet(DiscriminatorConfig cfg);

  const DiscriminatorConfig& config() const { return cfg_; }

  // cond, judged: [N, 3, H, W] -> [N, 1, h, w] logits.
  Var<Scalar> forward(const Var<Scalar>& cond, const Var<Scalar>& judged);

  template <typename F> void visit(F&& f) { visit_impl(*this, f); }
  template <typename F> void visit(F&& f) const { visit_impl(*this, f); }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& s, F& f) {
    for (size_t i = 0; i < s.convs_.size(); ++i) {
      s.convs_[i].visit(f);
      if (i > 0 && i + 1 < s.convs_.size()) s.norms_[i - 1].visit(f);
    }
  }

  DiscriminatorConfig cfg_;
  std::vector<Conv2d<Scalar>> convs_;
  std::vector<BatchNorm2d<Scalar>> norms_;
};

template <typename Scalar>
Tensor<Scalar> discriminate(DiscriminatorNet<Scalar>& d, const Image& cond, const Image& judged);

extern template struct ResnetBlock<float>;
extern template struct ResnetBlock<double>;
extern template class GeneratorNet<float>;
extern template class GeneratorNet<double>;
extern template class DiscriminatorNet<float>;
extern template class DiscriminatorNet<double>;

}  // namespace cookgen

#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cookgen/image.hpp"
#include "cookgen/layers.hpp"
#include "cookgen/sessions.hpp"

namespace cookgen {

struct EmbeddingNetConfig {
  // Only "small-conv" ships; other identifiers are rejected.
  std::string backbone = "small-conv";
  Index img_size = 224;
  Index embed_dim = 2048;
  std::vector<Index> proj_dims{2048, 128};
  std::vector<Index> widths{32, 64, 128, 256};
  Index groups = 8;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static EmbeddingNetConfig from_json(const nlohmann::json& j);
};

// Stride-2 conv blocks (conv s2 -> GN -> ReLU -> conv -> GN -> ReLU), global
// average pool, linear to embed_dim. Output is not normalized.
template <typename Scalar>
struct SmallConvEncoder {
  struct Block {
    Conv2d<Scalar> down, conv;
    GroupNorm<Scalar> norm1, norm2;
  };
  std::vector<Block> blocks;
  Linear<Scalar> head;

  SmallConvEncoder() = default;
  SmallConvEncoder(const EmbeddingNetConfig& cfg, std::mt19937_64& rng);
  Var<Scalar> operator()(const Var<Scalar>& x) const;

  template <typename F> void visit(F&& f) { visit_impl(*this, f); }
  template <typename F> void visit(F&& f) const { visit_impl(*this, f); }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& s, F& f) {
    for (auto& b : s.blocks) {
      b.down.visit(f);
      b.norm1.visit(f);
      b.conv.visit(f);
      b.norm2.visit(f);
    }
    s.head.visit(f);
  }
};

// Siamese branch: backbone -> L2 norm -> Linear -> ReLU -> Linear -> L2 norm.
template <typename Scalar>
class EmbeddingNet {
 public:
  EmbeddingNet() = default;
  explicit EmbeddingNet(EmbeddingNetConfig cfg);

  const EmbeddingNetConfig& config() const { return cfg_; }
  Index out_dim() const { return cfg_.proj_dims.back(); }

  // [N, 3, S, S] -> [N, out_dim], unit rows.
  Var<Scalar> forward(const Var<Scalar>& x) const;
  // Backbone output after its L2 normalization: [N, embed_dim].
  Var<Scalar> backbone(const Var<Scalar>& x) const;

  template <typename F> void visit(F&& f) { visit_impl(*this, f); }
  template <typename F> void visit(F&& f) const { visit_impl(*this, f); }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& s, F& f) {
    s.encoder_.visit(f);
    s.proj1_.visit(f);
    s.proj2_.visit(f);
  }

  EmbeddingNetConfig cfg_;
  SmallConvEncoder<Scalar> encoder_;
  Linear<Scalar> proj1_, proj2_;
};

template <typename Scalar>
Eigen::VectorXd embed(const EmbeddingNet<Scalar>& net, const Image& image);
// One unit row per image, evaluated in chunks of `chunk` images.
template <typename Scalar>
Eigen::MatrixXd embed_all(const EmbeddingNet<Scalar>& net, std::span<const Image> images, Index chunk = 32);

// Similarity of two unit embeddings, clamped to [0, 1].
double f_cul(const Eigen::VectorXd& u, const Eigen::VectorXd& v);
template <typename Scalar>
double f_cul(const EmbeddingNet<Scalar>& net, const Image& a, const Image& b);

// Unclamped pairwise cosines.
template <typename Scalar>
SimilarityMatrix predicted_matrix(const EmbeddingNet<Scalar>& net, std::span<const Image> frames);
template <typename Scalar>
SimilarityMatrix predicted_matrix(const EmbeddingNet<Scalar>& net, const CookingSession& session);

// Mean squared entry difference.
double cis_batch_loss(const SimilarityMatrix& predicted, const SimilarityMatrix& truth);

struct CisTrainConfig {
  int epochs = 100;
  Index batch_size = 32;
  double lr = 1e-4;
  double weight_decay = 1e-5;
  int decay_every = 10;
  double decay_factor = 0.6;
  bool augment = true;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static CisTrainConfig from_json(const nlohmann::json& j);
};

// lr * decay_factor^floor(epoch / decay_every).
double cis_lr(int epoch, const CisTrainConfig& cfg = {});

// Consecutive (begin, count) chunks of at most `batch_size` frames.
std::vector<std::pair<Index, Index>> session_batches(Index n_frames, Index batch_size);

struct CisEpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;
};

// Session-batched training against temporal matrices. Writes
// `epoch,mean_loss,lr` to `loss_csv` when a path is given.
template <typename Scalar>
std::vector<CisEpochStats> train_cis(EmbeddingNet<Scalar>& net, const std::vector<const CookingSession*>& sessions,
                                     const CisTrainConfig& cfg, const std::filesystem::path& loss_csv = {},
                                     const std::function<void(const CisEpochStats&)>& on_epoch = {});

extern template class EmbeddingNet<float>;
extern template class EmbeddingNet<double>;

}  // namespace cookgen

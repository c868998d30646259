#include "cookgen/cis.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "cookgen/csv.hpp"
#include "cookgen/optim.hpp"

namespace cookgen {

void EmbeddingNetConfig::validate() const {
  if (backbone != "small-conv") throw ConfigError("unknown CIS backbone '" + backbone + "' (available: small-conv)");
  if (img_size <= 0 || embed_dim <= 0) throw ConfigError("embedding net: sizes must be positive");
  if (proj_dims.size() != 2 || proj_dims[0] <= 0 || proj_dims[1] <= 0)
    throw ConfigError("embedding net: proj_dims must hold two positive widths");
  if (widths.empty()) throw ConfigError("embedding net: backbone needs at least one block");
  if (img_size % (Index{1} << widths.size()) != 0)
    throw ConfigError("embedding net: img_size must be divisible by 2^" + std::to_string(widths.size()));
  for (Index w : widths)
    if (w <= 0 || w % groups != 0)
      throw ConfigError("embedding net: width " + std::to_string(w) + " is not divisible by " +
                        std::to_string(groups) + " groups");
}

nlohmann::json EmbeddingNetConfig::to_json() const {
  return {{"backbone", backbone}, {"img_size", img_size}, {"embed_dim", embed_dim}, {"proj_dims", proj_dims},
          {"widths", widths},     {"groups", groups},     {"seed", seed}};
}

EmbeddingNetConfig EmbeddingNetConfig::from_json(const nlohmann::json& j) {
  EmbeddingNetConfig c;
  c.backbone = j.value("backbone", c.backbone);
  c.img_size = j.value("img_size", c.img_size);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.proj_dims = j.value("proj_dims", c.proj_dims);
  c.widths = j.value("widths", c.widths);
  c.groups = j.value("groups", c.groups);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

template <typename Scalar>
SmallConvEncoder<Scalar>::SmallConvEncoder(const EmbeddingNetConfig& cfg, std::mt19937_64& rng) {
  Index in = 3;
  for (size_t i = 0; i < cfg.widths.size(); ++i) {
    const std::string name = "backbone.block" + std::to_string(i);
    const Index w = cfg.widths[i];
    blocks.push_back(Block{Conv2d<Scalar>(name + ".down", in, w, 3, {2, 1}, rng),
                           Conv2d<Scalar>(name + ".conv", w, w, 3, {1, 1}, rng),
                           GroupNorm<Scalar>(name + ".norm1", w, cfg.groups),
                           GroupNorm<Scalar>(name + ".norm2", w, cfg.groups)});
    in = w;
  }
  // No bias before an L2 norm: it only adds a shared direction, which pulls
  // every cosine toward 1 and drifts under Adam until embeddings collapse.
  head = Linear<Scalar>("backbone.head", in, cfg.embed_dim, rng, ParamKind::LinearWeight, ParamKind::Bias, false);
}

template <typename Scalar>
Var<Scalar> SmallConvEncoder<Scalar>::operator()(const Var<Scalar>& x) const {
  Var<Scalar> h = x;
  for (const Block& b : blocks) {
    h = relu(b.norm1(b.down(h)));
    h = relu(b.norm2(b.conv(h)));
  }
  return head(global_avg_pool(h));
}

template <typename Scalar>
EmbeddingNet<Scalar>::EmbeddingNet(EmbeddingNetConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::mt19937_64 rng(cfg_.seed);
  encoder_ = SmallConvEncoder<Scalar>(cfg_, rng);
  proj1_ = Linear<Scalar>("proj.fc1", cfg_.embed_dim, cfg_.proj_dims[0], rng);
  proj2_ = Linear<Scalar>("proj.fc2", cfg_.proj_dims[0], cfg_.proj_dims[1], rng, ParamKind::LinearWeight,
                          ParamKind::Bias, false);
}

template <typename Scalar>
Var<Scalar> EmbeddingNet<Scalar>::backbone(const Var<Scalar>& x) const {
  const Shape& s = x.shape();
  if (s.rank() != 4 || s[1] != 3 || s[2] != cfg_.img_size || s[3] != cfg_.img_size)
    throw ShapeError("embedding net: expected [N,3," + std::to_string(cfg_.img_size) + "," +
                     std::to_string(cfg_.img_size) + "] input, got " + s.str());
  return l2_normalize_rows(encoder_(x));
}

template <typename Scalar>
Var<Scalar> EmbeddingNet<Scalar>::forward(const Var<Scalar>& x) const {
  return l2_normalize_rows(proj2_(relu(proj1_(backbone(x)))));
}

template <typename Scalar>
Eigen::MatrixXd embed_all(const EmbeddingNet<Scalar>& net, std::span<const Image> images, Index chunk) {
  const auto n = static_cast<Index>(images.size());
  Eigen::MatrixXd out(n, net.out_dim());
  for (Index b = 0; b < n; b += chunk) {
    const Index m = std::min(chunk, n - b);
    Tape<Scalar> tape;
    const Var<Scalar> z = net.forward(tape.constant(to_tensor<Scalar>(images.subspan(static_cast<size_t>(b),
                                                                                     static_cast<size_t>(m)))));
    out.middleRows(b, m) = z.value().matrix(m, net.out_dim()).template cast<double>();
  }
  return out;
}

template <typename Scalar>
Eigen::VectorXd embed(const EmbeddingNet<Scalar>& net, const Image& image) {
  return embed_all(net, std::span<const Image>(&image, 1)).row(0).transpose();
}

double f_cul(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != v.size()) throw ShapeError("f_cul: embedding lengths differ");
  return std::clamp(u.dot(v), 0.0, 1.0);
}

template <typename Scalar>
double f_cul(const EmbeddingNet<Scalar>& net, const Image& a, const Image& b) {
  const std::array<Image, 2> pair{a, b};
  const Eigen::MatrixXd e = embed_all(net, std::span<const Image>(pair));
  return f_cul(Eigen::VectorXd(e.row(0).transpose()), Eigen::VectorXd(e.row(1).transpose()));
}

template <typename Scalar>
SimilarityMatrix predicted_matrix(const EmbeddingNet<Scalar>& net, std::span<const Image> frames) {
  if (frames.size() < 2) throw InvalidArgument("predicted_matrix: need at least 2 frames");
  const Eigen::MatrixXd e = embed_all(net, frames);
  SimilarityMatrix m{e * e.transpose(), MatrixKind::Predicted};
  // Exact symmetry and unit diagonal despite rounding in the product.
  m.values = (0.5 * (m.values + m.values.transpose())).eval();
  m.values.diagonal().setOnes();
  return m;
}

template <typename Scalar>
SimilarityMatrix predicted_matrix(const EmbeddingNet<Scalar>& net, const CookingSession& session) {
  std::vector<Image> frames;
  frames.reserve(session.frames.size());
  for (const Frame& f : session.frames) frames.push_back(f.image);
  return predicted_matrix(net, std::span<const Image>(frames));
}

double cis_batch_loss(const SimilarityMatrix& predicted, const SimilarityMatrix& truth) {
  if (predicted.values.rows() != truth.values.rows() || predicted.values.cols() != truth.values.cols())
    throw ShapeError("cis_batch_loss: " + std::to_string(predicted.values.rows()) + "x" +
                     std::to_string(predicted.values.cols()) + " vs " + std::to_string(truth.values.rows()) + "x" +
                     std::to_string(truth.values.cols()));
  return (predicted.values - truth.values).array().square().mean();
}

void CisTrainConfig::validate() const {
  if (epochs <= 0) throw ConfigError("train_cis: epochs must be positive");
  if (batch_size < 2) throw ConfigError("train_cis: batch_size must be at least 2");
  if (lr <= 0 || weight_decay < 0) throw ConfigError("train_cis: lr must be positive, weight_decay nonnegative");
  if (decay_every <= 0 || decay_factor <= 0) throw ConfigError("train_cis: decay schedule must be positive");
}

nlohmann::json CisTrainConfig::to_json() const {
  return {{"epochs", epochs},           {"batch_size", batch_size},     {"lr", lr},
          {"weight_decay", weight_decay}, {"decay_every", decay_every}, {"decay_factor", decay_factor},
          {"augment", augment},         {"seed", seed}};
}

CisTrainConfig CisTrainConfig::from_json(const nlohmann::json& j) {
  CisTrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.decay_every = j.value("decay_every", c.decay_every);
  c.decay_factor = j.value("decay_factor", c.decay_factor);
  c.augment = j.value("augment", c.augment);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

double cis_lr(int epoch, const CisTrainConfig& cfg) {
  if (epoch < 0) throw InvalidArgument("cis_lr: negative epoch");
  double lr = cfg.lr;
  for (int k = 0; k < epoch / cfg.decay_every; ++k) lr *= cfg.decay_factor;
  return lr;
}

std::vector<std::pair<Index, Index>> session_batches(Index n_frames, Index batch_size) {
  if (batch_size <= 0) throw InvalidArgument("session_batches: batch_size must be positive");
  std::vector<std::pair<Index, Index>> out;
  for (Index b = 0; b < n_frames; b += batch_size) out.emplace_back(b, std::min(batch_size, n_frames - b));
  return out;
}

template <typename Scalar>
std::vector<CisEpochStats> train_cis(EmbeddingNet<Scalar>& net, const std::vector<const CookingSession*>& sessions,
                                     const CisTrainConfig& cfg, const std::filesystem::path& loss_csv,
                                     const std::function<void(const CisEpochStats&)>& on_epoch) {
  cfg.validate();
  struct Batch {
    size_t session;
    Index begin, count;
  };
  std::vector<Batch> batches;
  std::vector<SimilarityMatrix> truths(sessions.size());
  for (size_t s = 0; s < sessions.size(); ++s) {
    if (sessions[s]->size() < 2 || sessions[s]->duration_T <= 0) continue;
    truths[s] = temporal_matrix(*sessions[s]);
    for (auto [b, n] : session_batches(sessions[s]->size(), cfg.batch_size))
      if (n >= 2) batches.push_back({s, b, n});
  }
  if (batches.empty()) throw InvalidArgument("train_cis: no session with at least 2 frames");

  std::optional<CsvWriter> csv;
  if (!loss_csv.empty()) csv.emplace(loss_csv, std::vector<std::string>{"epoch", "mean_loss", "lr"});

  std::mt19937_64 rng(cfg.seed);
  AdamOptions opt_cfg;
  opt_cfg.lr = cfg.lr;
  opt_cfg.weight_decay = cfg.weight_decay;
  Adam<Scalar> opt(net, opt_cfg);
  std::vector<CisEpochStats> history;
  std::vector<Image> images;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cis_lr(epoch, cfg);
    opt.set_lr(lr);
    std::shuffle(batches.begin(), batches.end(), rng);
    double total = 0.0;
    for (const Batch& b : batches) {
      const CookingSession& s = *sessions[b.session];
      images.clear();
      for (Index i = 0; i < b.count; ++i) {
        const Image& src = s.frames[static_cast<size_t>(b.begin + i)].image;
        images.push_back(cfg.augment ? augment(src, rng) : src);
      }
      Tensor<Scalar> truth(Shape{b.count, b.count});
      truth.matrix(b.count, b.count) =
          truths[b.session].values.block(b.begin, b.begin, b.count, b.count).template cast<Scalar>();

      Tape<Scalar> tape;
      const Var<Scalar> z = net.forward(tape.constant(to_tensor<Scalar>(std::span<const Image>(images))));
      const Var<Scalar> loss = mse(matmul_abt(z, z), truth);
      const double value = static_cast<double>(loss.value().item());
      if (!std::isfinite(value))
        throw NumericError("train_cis: non-finite loss at epoch " + std::to_string(epoch) + ", session '" +
                           s.session_id + "'");
      opt.zero_grad();
      tape.backward(loss);
      opt.step();
      total += value;
    }
    const CisEpochStats stats{epoch, total / static_cast<double>(batches.size()), lr};
    history.push_back(stats);
    if (csv) csv->row({static_cast<long long>(epoch), stats.mean_loss, stats.lr});
    if (on_epoch) on_epoch(stats);
  }
  return history;
}

#define COOKGEN_INSTANTIATE_CIS(S)                                                                              \
  template struct SmallConvEncoder<S>;                                                                          \
  template class EmbeddingNet<S>;                                                                               \
  template Eigen::VectorXd embed(const EmbeddingNet<S>&, const Image&);                                         \
  template Eigen::MatrixXd embed_all(const EmbeddingNet<S>&, std::span<const Image>, Index);                    \
  template double f_cul(const EmbeddingNet<S>&, const Image&, const Image&);                                    \
  template SimilarityMatrix predicted_matrix(const EmbeddingNet<S>&, std::span<const Image>);                   \
  template SimilarityMatrix predicted_matrix(const EmbeddingNet<S>&, const CookingSession&);                    \
  template std::vector<CisEpochStats> train_cis(EmbeddingNet<S>&, const std::vector<const CookingSession*>&,    \
                                                const CisTrainConfig&, const std::filesystem::path&,            \
                                                const std::function<void(const CisEpochStats&)>&);

COOKGEN_INSTANTIATE_CIS(float)
COOKGEN_INSTANTIATE_CIS(double)

}  // namespace cookgen

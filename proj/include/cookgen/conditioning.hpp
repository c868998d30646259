#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cookgen/layers.hpp"

namespace cookgen {

// Bijection (recipe_id, state_name) -> contiguous index p, assigned in
// registration order.
class ContextIndex {
 public:
  int add(const std::string& recipe_id, const std::string& state_name);
  int index(const std::string& recipe_id, const std::string& state_name) const;
  bool contains(const std::string& recipe_id, const std::string& state_name) const;
  int size() const { return static_cast<int>(pairs_.size()); }
  const std::pair<std::string, std::string>& pair(int p) const { return pairs_.at(static_cast<size_t>(p)); }
  // States registered for a recipe, in index order.
  std::vector<std::string> states_of(const std::string& recipe_id) const;

  // {"recipe|state": p, ...}
  nlohmann::json to_json() const;
  static ContextIndex from_json(const nlohmann::json& j);

  friend bool operator==(const ContextIndex& a, const ContextIndex& b) { return a.pairs_ == b.pairs_; }

 private:
  static std::string key(const std::string& recipe_id, const std::string& state_name) {
    return recipe_id + "|" + state_name;
  }
  std::map<std::string, int> table_;
  std::vector<std::pair<std::string, std::string>> pairs_;
};

// Sinusoidal embedding: first dim/2 entries sin(p / theta^(2k/dim)), last
// dim/2 entries the matching cosines.
template <typename Scalar = double>
Vector<Scalar> spe(int p, int dim = 32, double theta = 10000.0) {
  if (dim <= 0 || dim % 2 != 0) throw InvalidArgument("spe: dimension must be a positive even number");
  if (p < 0) throw InvalidArgument("spe: index must be nonnegative");
  const int half = dim / 2;
  Vector<Scalar> out(dim);
  for (int k = 0; k < half; ++k) {
    const double freq = std::pow(theta, 2.0 * k / dim);
    out(k) = static_cast<Scalar>(std::sin(p / freq));
    out(half + k) = static_cast<Scalar>(std::cos(p / freq));
  }
  return out;
}

// E = Linear(spe_dim -> 4*spe_dim) -> SiLU -> Linear(4*spe_dim -> 4*spe_dim).
template <typename Scalar>
struct ContextEmbedder {
  int spe_dim = 32;
  double theta = 10000.0;
  Linear<Scalar> fc1;
  Linear<Scalar> fc2;

  ContextEmbedder() = default;
  ContextEmbedder(const std::string& name, int spe_dim_, double theta_, std::mt19937_64& rng)
      : spe_dim(spe_dim_),
        theta(theta_),
        fc1(name + ".fc1", spe_dim_, 4 * spe_dim_, rng),
        fc2(name + ".fc2", 4 * spe_dim_, 4 * spe_dim_, rng) {}

  int embed_dim() const { return 4 * spe_dim; }

  // [1, embed_dim]
  Var<Scalar> operator()(Tape<Scalar>& tape, int p) const { return (*this)(tape, std::vector<int>{p}); }

  // One row per context index: [N, embed_dim]
  Var<Scalar> operator()(Tape<Scalar>& tape, const std::vector<int>& ps) const {
    const auto n = static_cast<Index>(ps.size());
    Tensor<Scalar> t(Shape{n, spe_dim});
    auto m = t.matrix(n, spe_dim);
    for (Index i = 0; i < n; ++i) m.row(i) = spe<Scalar>(ps[static_cast<size_t>(i)], spe_dim, theta).transpose();
    return fc2(silu(fc1(tape.constant(std::move(t)))));
  }

  template <typename F> void visit(F&& f) { fc1.visit(f); fc2.visit(f); }
  template <typename F> void visit(F&& f) const { fc1.visit(f); fc2.visit(f); }
};

template <typename Scalar>
struct FiLMParams {
  Vector<Scalar> gamma;
  Vector<Scalar> beta;
};

// Per-layer affine head: embedding -> [gamma | beta]. Starts at the
// identity modulation (zero weight, bias = [1...1, 0...0]).
template <typename Scalar>
struct FilmHead {
  Linear<Scalar> proj;
  Index channels = 0;

  FilmHead() = default;
  FilmHead(const std::string& name, Index embed_dim, Index channels_, std::mt19937_64& rng)
      : proj(name, embed_dim, 2 * channels_, rng, ParamKind::Film, ParamKind::Film), channels(channels_) {
    reset_identity();
  }

  void reset_identity() {
    proj.weight.value.set_zero();
    proj.bias.value.array().head(channels).setOnes();
    proj.bias.value.array().tail(channels).setZero();
  }

  // Returns {gamma, beta}, each [N, channels].
  std::pair<Var<Scalar>, Var<Scalar>> operator()(const Var<Scalar>& embedding) const {
    Var<Scalar> out = proj(embedding);
    return {slice_cols(out, 0, channels), slice_cols(out, channels, channels)};
  }

  template <typename F> void visit(F&& f) { proj.visit(f); }
  template <typename F> void visit(F&& f) const { proj.visit(f); }
};

// FiLM heads keyed by layer id.
template <typename Scalar>
class FilmBank {
 public:
  void add(const std::string& layer_id, Index embed_dim, Index channels, std::mt19937_64& rng) {
    if (heads_.count(layer_id)) throw InvalidArgument("FiLM layer '" + layer_id + "' registered twice");
    order_.push_back(layer_id);
    heads_.emplace(layer_id, FilmHead<Scalar>("film." + layer_id, embed_dim, channels, rng));
  }

  const FilmHead<Scalar>& head(const std::string& layer_id) const {
    auto it = heads_.find(layer_id);
    if (it == heads_.end()) throw LookupError("no FiLM head registered for layer '" + layer_id + "'");
    return it->second;
  }
  FilmHead<Scalar>& head(const std::string& layer_id) {
    return const_cast<FilmHead<Scalar>&>(std::as_const(*this).head(layer_id));
  }
  const std::vector<std::string>& layers() const { return order_; }

  // Modulate features `z` of layer `layer_id` with context embedding `e`.
  Var<Scalar> modulate(const std::string& layer_id, const Var<Scalar>& z, const Var<Scalar>& e) const {
    auto [gamma, beta] = head(layer_id)(e);
    return film(z, gamma, beta);
  }

  template <typename F> void visit(F&& f) {
    for (const auto& id : order_) heads_.at(id).visit(f);
  }
  template <typename F> void visit(F&& f) const {
    for (const auto& id : order_) heads_.at(id).visit(f);
  }

 private:
  std::map<std::string, FilmHead<Scalar>> heads_;
  std::vector<std::string> order_;
};

// Gamma/beta produced by one head for an embedding vector.
template <typename Scalar>
FiLMParams<Scalar> film_params(const Vector<Scalar>& embedding, const FilmHead<Scalar>& head) {
  Tape<Scalar> tape;
  Tensor<Scalar> e(Shape{1, embedding.size()});
  e.matrix(1, embedding.size()) = embedding.transpose();
  auto [g, b] = head(tape.constant(std::move(e)));
  return {g.value().matrix(1, head.channels).row(0).transpose(), b.value().matrix(1, head.channels).row(0).transpose()};
}

template <typename Scalar>
FiLMParams<Scalar> film_params(const Vector<Scalar>& embedding, const std::string& layer_id,
                               const FilmBank<Scalar>& bank) {
  return film_params(embedding, bank.head(layer_id));
}

// Embedding vector for a registered (recipe, state) pair.
template <typename Scalar>
Vector<Scalar> embed_context(const ContextIndex& idx, const std::string& recipe_id, const std::string& state_name,
                             const ContextEmbedder<Scalar>& embedder) {
  Tape<Scalar> tape;
  Var<Scalar> e = embedder(tape, idx.index(recipe_id, state_name));
  return e.value().matrix(1, embedder.embed_dim()).row(0).transpose();
}

// FiLM on a single [C, H, W] feature tensor.
template <typename Scalar>
Tensor<Scalar> film(const Tensor<Scalar>& z, const FiLMParams<Scalar>& fp) {
  if (z.rank() != 3) throw ShapeError("film: expected [C,H,W] features, got " + z.shape().str());
  const Index c = z.dim(0);
  if (fp.gamma.size() != c || fp.beta.size() != c)
    throw ShapeError("film: " + std::to_string(fp.gamma.size()) + " modulation channels for " + std::to_string(c) +
                     " feature channels");
  Tape<Scalar> tape;
  Tensor<Scalar> g(Shape{1, c}), b(Shape{1, c});
  g.matrix(1, c) = fp.gamma.transpose();
  b.matrix(1, c) = fp.beta.transpose();
  Var<Scalar> out = film(tape.constant(z.reshaped(Shape{1, c, z.dim(1), z.dim(2)})), tape.constant(std::move(g)),
                         tape.constant(std::move(b)));
  return out.value().reshaped(z.shape());
}

}  // namespace cookgen

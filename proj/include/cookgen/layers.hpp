#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>

#include "cookgen/ops.hpp"

namespace cookgen {

namespace init {

template <typename Scalar>
void uniform(Tensor<Scalar>& t, Scalar bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-static_cast<double>(bound), static_cast<double>(bound));
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<Scalar>(dist(rng));
}

template <typename Scalar>
void normal(Tensor<Scalar>& t, Scalar mean, Scalar stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(static_cast<double>(mean), static_cast<double>(stddev));
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<Scalar>(dist(rng));
}

}  // namespace init

// 2-D convolution, weight [out, in, k, k].
template <typename Scalar>
struct Conv2d {
  Parameter<Scalar> weight;
  Parameter<Scalar> bias;
  Conv2dOptions options;
  bool has_bias = true;

  Conv2d() = default;
  Conv2d(const std::string& name, Index in, Index out, Index kernel, Conv2dOptions opt, std::mt19937_64& rng,
         bool with_bias = true)
      : weight(name + ".weight", ParamKind::ConvWeight, Shape{out, in, kernel, kernel}),
        bias(name + ".bias", ParamKind::Bias, Shape{with_bias ? out : 0}),
        options(opt),
        has_bias(with_bias) {
    // Same default as common frameworks: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    const Scalar bound = Scalar(1) / std::sqrt(static_cast<Scalar>(in * kernel * kernel));
    init::uniform(weight.value, bound, rng);
    if (has_bias) init::uniform(bias.value, bound, rng);
  }

  Index in_channels() const { return weight.value.dim(1); }
  Index out_channels() const { return weight.value.dim(0); }
  Index kernel() const { return weight.value.dim(2); }

  Var<Scalar> operator()(const Var<Scalar>& x) const {
    Tape<Scalar>& t = x.tape();
    std::optional<Var<Scalar>> b;
    if (has_bias) b = t.parameter(bias);
    return conv2d(x, t.parameter(weight), b, options);
  }

  template <typename F>
  void visit(F&& f) {
    f(weight);
    if (has_bias) f(bias);
  }
  template <typename F>
  void visit(F&& f) const {
    f(weight);
    if (has_bias) f(bias);
  }
};

// y = x W^T + b, weight [out, in].
template <typename Scalar>
struct Linear {
  Parameter<Scalar> weight;
  Parameter<Scalar> bias;
  bool has_bias = true;

  Linear() = default;
  Linear(const std::string& name, Index in, Index out, std::mt19937_64& rng,
         ParamKind weight_kind = ParamKind::LinearWeight, ParamKind bias_kind = ParamKind::Bias,
         bool with_bias = true)
      : weight(name + ".weight", weight_kind, Shape{out, in}),
        bias(name + ".bias", bias_kind, Shape{with_bias ? out : 0}),
        has_bias(with_bias) {
    const Scalar bound = Scalar(1) / std::sqrt(static_cast<Scalar>(in));
    init::uniform(weight.value, bound, rng);
    if (has_bias) init::uniform(bias.value, bound, rng);
  }

  Index in_features() const { return weight.value.dim(1); }
  Index out_features() const { return weight.value.dim(0); }

  Var<Scalar> operator()(const Var<Scalar>& x) const {
    Tape<Scalar>& t = x.tape();
    std::optional<Var<Scalar>> b;
    if (has_bias) b = t.parameter(bias);
    return linear(x, t.parameter(weight), b);
  }

  template <typename F>
  void visit(F&& f) {
    f(weight);
    if (has_bias) f(bias);
  }
  template <typename F>
  void visit(F&& f) const {
    f(weight);
    if (has_bias) f(bias);
  }
};

template <typename Scalar>
struct GroupNorm {
  Parameter<Scalar> gamma;
  Parameter<Scalar> beta;
  Index groups = 8;

  GroupNorm() = default;
  GroupNorm(const std::string& name, Index channels, Index n_groups)
      : gamma(name + ".gamma", ParamKind::Norm, Shape{channels}),
        beta(name + ".beta", ParamKind::Norm, Shape{channels}),
        groups(n_groups) {
    gamma.value.array().setOnes();
  }

  Var<Scalar> operator()(const Var<Scalar>& x) const {
    Tape<Scalar>& t = x.tape();
    return group_norm(x, t.parameter(gamma), t.parameter(beta), groups);
  }

  template <typename F>
  void visit(F&& f) {
    f(gamma);
    f(beta);
  }
  template <typename F>
  void visit(F&& f) const {
    f(gamma);
    f(beta);
  }
};

// Batch norm that always normalizes with batch statistics and tracks
// running estimates as buffers (momentum 0.1).
template <typename Scalar>
struct BatchNorm2d {
  Parameter<Scalar> gamma;
  Parameter<Scalar> beta;
  Parameter<Scalar> running_mean;
  Parameter<Scalar> running_var;
  Scalar momentum = Scalar(0.1);

  BatchNorm2d() = default;
  BatchNorm2d(const std::string& name, Index channels, std::mt19937_64& rng)
      : gamma(name + ".gamma", ParamKind::Norm, Shape{channels}),
        beta(name + ".beta", ParamKind::Norm, Shape{channels}),
        running_mean(name + ".running_mean", ParamKind::Buffer, Shape{channels}),
        running_var(name + ".running_var", ParamKind::Buffer, Shape{channels}) {
    init::normal(gamma.value, Scalar(1), Scalar(0.02), rng);
    running_var.value.array().setOnes();
  }

  Var<Scalar> operator()(const Var<Scalar>& x) {
    Tape<Scalar>& t = x.tape();
    Vector<Scalar> mu, var;
    Var<Scalar> y = batch_norm(x, t.parameter(gamma), t.parameter(beta), Scalar(1e-5), &mu, &var);
    running_mean.value.array() = (1 - momentum) * running_mean.value.array() + momentum * mu.array();
    running_var.value.array() = (1 - momentum) * running_var.value.array() + momentum * var.array();
    return y;
  }

  template <typename F>
  void visit(F&& f) {
    f(gamma);
    f(beta);
    f(running_mean);
    f(running_var);
  }
  template <typename F>
  void visit(F&& f) const {
    f(gamma);
    f(beta);
    f(running_mean);
    f(running_var);
  }
};

// Number of scalar entries over every visited tensor.
template <typename Net>
Index parameter_count(const Net& net, bool include_buffers = false) {
  Index total = 0;
  net.visit([&](auto& p) {
    if (include_buffers || p.kind != ParamKind::Buffer) total += p.value.size();
  });
  return total;
}

// FNV-1a over every visited tensor's bytes (buffers included); used to
// prove a step left a network untouched.
template <typename Net>
std::uint64_t parameter_hash(const Net& net) {
  std::uint64_t h = 1469598103934665603ull;
  net.visit([&](const auto& p) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p.value.data());
    const auto n = static_cast<size_t>(p.value.size()) * sizeof(*p.value.data());
    for (size_t i = 0; i < n; ++i) h = (h ^ bytes[i]) * 1099511628211ull;
  });
  return h;
}

template <typename Net>
void zero_grad(Net& net) {
  net.visit([](auto& p) { p.grad.set_zero(); });
}

template <typename Net>
void set_trainable(Net& net, bool trainable) {
  net.visit([&](auto& p) {
    if (p.kind != ParamKind::Buffer) p.trainable = trainable;
  });
}

}  // namespace cookgen

#pragma once

#include <cmath>
#include <vector>

#include "cookgen/autodiff.hpp"

namespace cookgen {

struct AdamOptions {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Coupled L2 penalty added to the gradient.
  double weight_decay = 0.0;
};

// Adam over a fixed set of parameters. Frozen parameters and buffers are
// skipped at registration.
template <typename Scalar>
class Adam {
 public:
  template <typename Net>
  Adam(Net& net, AdamOptions options) : options_(options) {
    net.visit([this](Parameter<Scalar>& p) {
      if (!p.trainable) return;
      slots_.push_back(Slot{&p, Tensor<Scalar>(p.value.shape()), Tensor<Scalar>(p.value.shape())});
    });
  }

  void set_lr(double lr) { options_.lr = lr; }
  double lr() const { return options_.lr; }
  long steps() const { return step_; }

  void step() {
    ++step_;
    const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(step_));
    const auto b1 = static_cast<Scalar>(options_.beta1), b2 = static_cast<Scalar>(options_.beta2);
    const auto step_size = static_cast<Scalar>(options_.lr / bc1);
    const auto inv_sqrt_bc2 = static_cast<Scalar>(1.0 / std::sqrt(bc2));
    const auto eps = static_cast<Scalar>(options_.eps);
    const auto wd = static_cast<Scalar>(options_.weight_decay);
    for (Slot& s : slots_) {
      auto& p = s.param->value.array();
      auto& g = s.param->grad.array();
      if (wd != Scalar(0)) g += wd * p;
      s.m.array() = b1 * s.m.array() + (Scalar(1) - b1) * g;
      s.v.array() = b2 * s.v.array() + (Scalar(1) - b2) * g.square();
      p -= step_size * s.m.array() / (s.v.array().sqrt() * inv_sqrt_bc2 + eps);
    }
  }

  void zero_grad() {
    for (Slot& s : slots_) s.param->grad.set_zero();
  }

 private:
  struct Slot {
    Parameter<Scalar>* param;
    Tensor<Scalar> m;
    Tensor<Scalar> v;
  };
  AdamOptions options_;
  std::vector<Slot> slots_;
  long step_ = 0;
};

}  // namespace cookgen

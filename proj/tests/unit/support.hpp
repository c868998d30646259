#pragma once

#include <doctest.h>

#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "cookgen/ops.hpp"
#include "cookgen/sessions.hpp"

namespace testing {

using namespace cookgen;

inline Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = u(rng);
  return t;
}

inline Image random_image(Index size, std::mt19937_64& rng) {
  Image img(size, size);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (int c = 0; c < 3; ++c)
    for (Index i = 0; i < img.plane(c).size(); ++i) img.plane(c).data()[i] = u(rng);
  return img;
}

// Scalar-valued function of several leaf tensors, evaluated on a fresh tape.
using LossFn = std::function<Var<double>(Tape<double>&, const std::vector<Var<double>>&)>;

// Largest error of reverse-mode gradients against central differences,
// measured as |analytic - numeric| / (atol + |numeric|).
inline double grad_check(const LossFn& f, std::vector<Tensor<double>> inputs, double h = 1e-6, double atol = 1e-6) {
  std::vector<Parameter<double>> params;
  for (size_t i = 0; i < inputs.size(); ++i) {
    Parameter<double> p("in" + std::to_string(i), ParamKind::ConvWeight, inputs[i].shape());
    p.value = inputs[i];
    params.push_back(std::move(p));
  }
  {
    Tape<double> tape;
    std::vector<Var<double>> vars;
    for (auto& p : params) vars.push_back(tape.parameter(p));
    tape.backward(f(tape, vars));
  }
  auto eval = [&]() {
    Tape<double> tape;
    std::vector<Var<double>> vars;
    for (auto& p : params) vars.push_back(tape.constant(p.value));
    return f(tape, vars).value().item();
  };
  double worst = 0.0;
  for (auto& p : params)
    for (Index k = 0; k < p.value.size(); ++k) {
      const double x0 = p.value.data()[k];
      p.value.data()[k] = x0 + h;
      const double up = eval();
      p.value.data()[k] = x0 - h;
      const double down = eval();
      p.value.data()[k] = x0;
      const double numeric = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(p.grad.data()[k] - numeric) / (atol + std::abs(numeric)));
    }
  return worst;
}

// Scratch directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("cookgen_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

inline SyntheticRecipeSpec cookie_spec(std::uint64_t seed = 11) {
  SyntheticRecipeSpec s;
  s.name = "cookie";
  s.size_factor = 1.15;
  s.seed = seed;
  return s;
}

}  // namespace testing

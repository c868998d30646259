#include "support.hpp"

#include "cookgen/nets.hpp"

using namespace cookgen;

namespace {

Index conv_out(Index n, Index k, Index s, Index p) { return (n + 2 * p - k) / s + 1; }

ContextIndex two_contexts() {
  ContextIndex idx;
  idx.add("cookie", "basic");
  idx.add("cookie", "extended");
  return idx;
}

GeneratorConfig small_config(Index size = 32) {
  GeneratorConfig c;
  c.img_size = size;
  c.base_dim = 8;
  c.resnet_groups = 4;
  c.spe_dim = 8;
  c.seed = 5;
  return c;
}

double loss_of(const GeneratorNet<double>& g, const Tensor<double>& x, const Tensor<double>& target) {
  Tape<double> tape;
  return mse(g.forward(tape.constant(x), std::vector<int>{0, 1}), target).value().item();
}

}  // namespace

TEST_CASE("generator config validation") {
  GeneratorConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.level_dims() == std::vector<Index>{32, 32, 64, 128, 256});
  c.img_size = 100;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = GeneratorConfig{};
  c.resnet_groups = 5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  const auto back = GeneratorConfig::from_json(small_config().to_json());
  CHECK(back.to_json() == small_config().to_json());
}

TEST_CASE("bottleneck shape from conv arithmetic") {
  for (Index size : {64, 128, 224}) {
    CAPTURE(size);
    GeneratorConfig c;
    c.img_size = size;
    Index n = size;
    for (int k = 0; k < 4; ++k) n = conv_out(n, 3, 2, 1);
    const auto shapes = generator_feature_shapes(c);
    const auto mid = std::find_if(shapes.begin(), shapes.end(), [](const auto& f) { return f.stage == "mid0"; });
    REQUIRE(mid != shapes.end());
    CHECK(mid->spatial == n);
    CHECK(mid->channels == 256);
    CHECK(shapes.back().spatial == size);
    CHECK(shapes.back().channels == 3);
  }
  GeneratorConfig c;
  c.img_size = 224;
  CHECK(generator_feature_shapes(c)[5].spatial == 14);
}

TEST_CASE("measured stage shapes agree with the shape table") {
  auto cfg = small_config(32);
  GeneratorNet<float> g(cfg, two_contexts());
  std::vector<FeatureShape> seen;
  Tape<float> tape;
  g.forward(tape.constant(Tensor<float>(Shape{1, 3, 32, 32})), std::vector<int>{0}, &seen);
  CHECK(seen == generator_feature_shapes(cfg));
}

TEST_CASE("parameter census matches the built network") {
  for (Index size : {32, 64}) {
    auto cfg = small_config(size);
    CHECK(generator_parameter_census(cfg) == parameter_count(GeneratorNet<float>(cfg, two_contexts())));
  }
  GeneratorConfig full;
  full.img_size = 64;
  CHECK(generator_parameter_census(full) == parameter_count(GeneratorNet<float>(full, two_contexts())));
}

TEST_CASE("generator output shape, range and determinism") {
  GeneratorNet<float> g(small_config(32), two_contexts());
  std::mt19937_64 rng(1);
  g.randomize_film(rng, 0.3f);
  const Image raw = testing::random_image(32, rng);
  const Image a = generate(g, raw, "cookie", "basic"), b = generate(g, raw, "cookie", "basic");
  CHECK(a.height() == 32);
  CHECK(a.min_value() >= -1.0f);
  CHECK(a.max_value() <= 1.0f);
  for (int c = 0; c < 3; ++c) CHECK(a.plane(c) == b.plane(c));
  CHECK(max_abs_diff(a, generate(g, raw, "cookie", "extended")) > 0.0f);
  CHECK_THROWS_AS(generate(g, raw, "cookie", "standard"), LookupError);
  CHECK_THROWS_AS(generate(g, testing::random_image(16, rng), "cookie", "basic"), ShapeError);
}

TEST_CASE("identity film initialization is context neutral") {
  GeneratorNet<float> g(small_config(32), two_contexts());
  std::mt19937_64 rng(2);
  const Image raw = testing::random_image(32, rng);
  CHECK(max_abs_diff(generate(g, raw, "cookie", "basic"), generate(g, raw, "cookie", "extended")) == 0.0f);
}

TEST_CASE("default generator produces 224 images") {
  GeneratorConfig c;
  GeneratorNet<float> g(c, two_contexts());
  Tape<float> tape;
  const auto out = g.forward(tape.constant(Tensor<float>(Shape{1, 3, 224, 224})), 0);
  CHECK(out.shape() == Shape{1, 3, 224, 224});
}

TEST_CASE("generator gradients match central differences") {
  auto cfg = small_config(16);
  GeneratorNet<double> g(cfg, two_contexts());
  std::mt19937_64 rng(3);
  g.randomize_film(rng, 0.2);
  const auto x = testing::random_tensor(Shape{2, 3, 16, 16}, rng);
  const auto target = testing::random_tensor(Shape{2, 3, 16, 16}, rng, -0.5, 0.5);

  std::vector<Parameter<double>*> params;
  g.visit([&](Parameter<double>& p) {
    if (p.trainable) params.push_back(&p);
  });
  zero_grad(g);
  {
    Tape<double> tape;
    tape.backward(mse(g.forward(tape.constant(x), std::vector<int>{0, 1}), target));
  }
  const double h = 1e-5;
  for (int trial = 0; trial < 12; ++trial) {
    Parameter<double>& p = *params[std::uniform_int_distribution<size_t>(0, params.size() - 1)(rng)];
    const Index k = std::uniform_int_distribution<Index>(0, p.value.size() - 1)(rng);
    CAPTURE(p.name);
    const double x0 = p.value.data()[k];
    p.value.data()[k] = x0 + h;
    const double up = loss_of(g, x, target);
    p.value.data()[k] = x0 - h;
    const double down = loss_of(g, x, target);
    p.value.data()[k] = x0;
    const double numeric = (up - down) / (2 * h), analytic = p.grad.data()[k];
    CHECK(std::abs(analytic - numeric) <= 1e-3 * std::max(std::abs(numeric), 1e-7));
  }
}

TEST_CASE("patch map size from conv arithmetic") {
  for (Index size : {64, 128, 224}) {
    CAPTURE(size);
    Index n = size;
    for (int i = 0; i < 3; ++i) n = conv_out(n, 4, 2, 1);
    n = conv_out(conv_out(n, 4, 1, 1), 4, 1, 1);
    DiscriminatorNet<float> d{DiscriminatorConfig{}};
    Tape<float> tape;
    auto x = tape.constant(Tensor<float>(Shape{1, 3, size, size}));
    CHECK(d.forward(x, x).shape() == Shape{1, 1, n, n});
  }
  DiscriminatorNet<float> d{DiscriminatorConfig{}};
  Image a(224, 224);
  CHECK(discriminate(d, a, a).shape() == Shape{1, 1, 26, 26});
  Image b(64, 64);
  CHECK(discriminate(d, b, b).shape() == Shape{1, 1, 6, 6});
}

TEST_CASE("patch receptive field is 70 pixels") {
  const DiscriminatorConfig c;
  std::vector<Index> strides(static_cast<size_t>(c.stride2_layers), 2);
  strides.push_back(1);
  strides.push_back(1);
  Index rf = 1, jump = 1;
  for (Index s : strides) {
    rf += (c.kernel - 1) * jump;
    jump *= s;
  }
  CHECK(rf == 70);
}

TEST_CASE("discriminator layout and initialization") {
  DiscriminatorNet<float> d{DiscriminatorConfig{}};
  std::vector<std::string> names;
  double sum = 0, sq = 0;
  Index n = 0;
  d.visit([&](const Parameter<float>& p) {
    names.push_back(p.name);
    if (p.kind == ParamKind::ConvWeight) {
      sum += p.value.array().template cast<double>().sum();
      sq += p.value.array().template cast<double>().square().sum();
      n += p.value.size();
    }
  });
  CHECK(names.front() == "conv0.weight");
  CHECK(names[1] == "conv0.bias");
  CHECK(std::find(names.begin(), names.end(), "conv1.bias") == names.end());
  CHECK(std::find(names.begin(), names.end(), "norm1.gamma") != names.end());
  CHECK(std::abs(sum / n) < 1e-3);
  CHECK(std::sqrt(sq / n) == doctest::Approx(0.02).epsilon(0.02));
  // Standard 70x70 PatchGAN size.
  CHECK(parameter_count(d) == 2768705);
  CHECK_THROWS_AS(DiscriminatorNet<float>(DiscriminatorConfig{.in_ch = 5}), ConfigError);
}

TEST_CASE("discriminator rejects mismatched inputs") {
  DiscriminatorNet<float> d{DiscriminatorConfig{}};
  CHECK_THROWS_AS(discriminate(d, Image(64, 64), Image(32, 32)), ShapeError);
}

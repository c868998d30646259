#include "cookgen/nets.hpp"

#include <algorithm>

namespace cookgen {

void GeneratorConfig::validate() const {
  if (img_size <= 0 || in_ch <= 0 || out_ch <= 0 || base_dim <= 0)
    throw ConfigError("generator: sizes and channel counts must be positive");
  if (n_down < 1) throw ConfigError("generator: n_down must be at least 1");
  if (n_up != n_down) throw ConfigError("generator: n_up must equal n_down for skip connections to pair up");
  if (n_mid < 0) throw ConfigError("generator: n_mid must be nonnegative");
  if (static_cast<int>(dim_mults.size()) != n_down)
    throw ConfigError("generator: dim_mults has " + std::to_string(dim_mults.size()) + " entries, n_down is " +
                      std::to_string(n_down));
  if (img_size % (Index{1} << n_down) != 0)
    throw ConfigError("generator: img_size " + std::to_string(img_size) + " is not divisible by 2^" +
                      std::to_string(n_down));
  if (spe_dim <= 0 || spe_dim % 2 != 0) throw ConfigError("generator: spe_dim must be a positive even number");
  for (Index d : level_dims())
    if (d <= 0 || d % resnet_groups != 0)
      throw ConfigError("generator: channel width " + std::to_string(d) + " is not divisible by " +
                        std::to_string(resnet_groups) + " groups");
}

std::vector<Index> GeneratorConfig::level_dims() const {
  std::vector<Index> dims{base_dim};
  for (Index m : dim_mults) dims.push_back(base_dim * m);
  return dims;
}

nlohmann::json GeneratorConfig::to_json() const {
  return {{"img_size", img_size},           {"in_ch", in_ch},   {"out_ch", out_ch},
          {"base_dim", base_dim},           {"dim_mults", dim_mults}, {"resnet_groups", resnet_groups},
          {"n_down", n_down},               {"n_up", n_up},     {"n_mid", n_mid},
          {"spe_dim", spe_dim},             {"spe_theta", spe_theta}, {"seed", seed}};
}

GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  c.img_size = j.value("img_size", c.img_size);
  c.in_ch = j.value("in_ch", c.in_ch);
  c.out_ch = j.value("out_ch", c.out_ch);
  c.base_dim = j.value("base_dim", c.base_dim);
  c.dim_mults = j.value("dim_mults", c.dim_mults);
  c.resnet_groups = j.value("resnet_groups", c.resnet_groups);
  c.n_down = j.value("n_down", c.n_down);
  c.n_up = j.value("n_up", c.n_up);
  c.n_mid = j.value("n_mid", c.n_mid);
  c.spe_dim = j.value("spe_dim", c.spe_dim);
  c.spe_theta = j.value("spe_theta", c.spe_theta);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

std::vector<FeatureShape> generator_feature_shapes(const GeneratorConfig& cfg) {
  cfg.validate();
  const auto dims = cfg.level_dims();
  const Index s = cfg.img_size;
  std::vector<FeatureShape> out{{"stem", cfg.base_dim, s}};
  for (int k = 0; k < cfg.n_down; ++k)
    out.push_back({"down" + std::to_string(k), dims[static_cast<size_t>(k) + 1], s >> (k + 1)});
  for (int j = 0; j < cfg.n_mid; ++j) out.push_back({"mid" + std::to_string(j), dims.back(), s >> cfg.n_down});
  for (int k = cfg.n_down - 1; k >= 0; --k)
    out.push_back({"up" + std::to_string(k), dims[static_cast<size_t>(k)], s >> k});
  out.push_back({"final", cfg.base_dim, s});
  out.push_back({"out", cfg.out_ch, s});
  return out;
}

Index generator_parameter_census(const GeneratorConfig& cfg) {
  cfg.validate();
  auto conv = [](Index in, Index out, Index k) { return out * in * k * k + out; };
  auto res = [&](Index in, Index out) {
    return conv(in, out, 3) + conv(out, out, 3) + 4 * out + (in != out ? conv(in, out, 1) : 0);
  };
  const Index s = cfg.spe_dim, e = 4 * s;
  auto head = [&](Index c) { return e * 2 * c + 2 * c; };
  const auto d = cfg.level_dims();
  Index total = (s * e + e) + (e * e + e) + conv(cfg.in_ch, cfg.base_dim, 7);
  for (int k = 0; k < cfg.n_down; ++k) {
    const Index c = d[static_cast<size_t>(k)], next = d[static_cast<size_t>(k) + 1];
    total += 2 * res(c, c) + conv(c, next, 3) + 2 * head(c);
    total += conv(next, c, 3) + res(2 * c, c) + res(c, c) + 2 * head(c);
  }
  total += cfg.n_mid * (res(d.back(), d.back()) + head(d.back()));
  total += res(2 * cfg.base_dim, cfg.base_dim) + conv(cfg.base_dim, cfg.out_ch, 1);
  return total;
}

template <typename Scalar>
ResnetBlock<Scalar>::ResnetBlock(const std::string& name, Index in, Index out, Index groups, std::mt19937_64& rng)
    : conv1(name + ".conv1", in, out, 3, {1, 1}, rng),
      conv2(name + ".conv2", out, out, 3, {1, 1}, rng),
      norm1(name + ".norm1", out, groups),
      norm2(name + ".norm2", out, groups),
      has_skip(in != out) {
  if (has_skip) skip = Conv2d<Scalar>(name + ".skip", in, out, 1, {1, 0}, rng);
}

template <typename Scalar>
Var<Scalar> ResnetBlock<Scalar>::operator()(const Var<Scalar>& x) const {
  Var<Scalar> h = silu(norm1(conv1(x)));
  h = silu(norm2(conv2(h)));
  return h + (has_skip ? skip(x) : x);
}

template <typename Scalar>
GeneratorNet<Scalar>::GeneratorNet(GeneratorConfig cfg, ContextIndex contexts)
    : cfg_(std::move(cfg)), contexts_(std::move(contexts)) {
  cfg_.validate();
  std::mt19937_64 rng(cfg_.seed);
  const auto dims = cfg_.level_dims();
  const Index g = cfg_.resnet_groups;
  embedder_ = ContextEmbedder<Scalar>("context", cfg_.spe_dim, cfg_.spe_theta, rng);
  const Index e = embedder_.embed_dim();

  stem_ = Conv2d<Scalar>("stem", cfg_.in_ch, cfg_.base_dim, 7, {1, 3}, rng);
  for (int k = 0; k < cfg_.n_down; ++k) {
    const std::string id = "down" + std::to_string(k);
    const Index c = dims[static_cast<size_t>(k)];
    DownLevel lvl;
    lvl.res0 = ResnetBlock<Scalar>(id + ".res0", c, c, g, rng);
    lvl.res1 = ResnetBlock<Scalar>(id + ".res1", c, c, g, rng);
    lvl.downsample = Conv2d<Scalar>(id + ".downsample", c, dims[static_cast<size_t>(k) + 1], 3, {2, 1}, rng);
    film_.add(id + ".res0", e, c, rng);
    film_.add(id + ".res1", e, c, rng);
    down_.push_back(std::move(lvl));
  }
  for (int j = 0; j < cfg_.n_mid; ++j) {
    const std::string id = "mid" + std::to_string(j);
    mid_.emplace_back(id, dims.back(), dims.back(), g, rng);
    film_.add(id, e, dims.back(), rng);
  }
  for (int k = cfg_.n_down - 1; k >= 0; --k) {
    const std::string id = "up" + std::to_string(k);
    const Index c = dims[static_cast<size_t>(k)];
    UpLevel lvl;
    lvl.upsample = Conv2d<Scalar>(id + ".upsample", dims[static_cast<size_t>(k) + 1], c, 3, {1, 1}, rng);
    lvl.res0 = ResnetBlock<Scalar>(id + ".res0", 2 * c, c, g, rng);
    lvl.res1 = ResnetBlock<Scalar>(id + ".res1", c, c, g, rng);
    film_.add(id + ".res0", e, c, rng);
    film_.add(id + ".res1", e, c, rng);
    up_.push_back(std::move(lvl));
  }
  final_ = ResnetBlock<Scalar>("final", 2 * cfg_.base_dim, cfg_.base_dim, g, rng);
  out_ = Conv2d<Scalar>("out", cfg_.base_dim, cfg_.out_ch, 1, {1, 0}, rng);
}

template <typename Scalar>
Var<Scalar> GeneratorNet<Scalar>::forward(const Var<Scalar>& x, const std::vector<int>& context_ids,
                                          std::vector<FeatureShape>* trace) const {
  const Shape want{x.shape().rank() == 4 ? x.shape()[0] : 1, cfg_.in_ch, cfg_.img_size, cfg_.img_size};
  require_shape(x.shape(), want, "generator input");
  if (static_cast<Index>(context_ids.size()) != x.shape()[0])
    throw ShapeError("generator: " + std::to_string(context_ids.size()) + " contexts for a batch of " +
                     std::to_string(x.shape()[0]));
  for (int p : context_ids)
    if (p < 0 || p >= contexts_.size())
      throw LookupError("generator: context index " + std::to_string(p) + " is not registered (" +
                        std::to_string(contexts_.size()) + " known)");

  Tape<Scalar>& tape = x.tape();
  const Var<Scalar> e = embedder_(tape, context_ids);
  auto mod = [&](const std::string& id, const Var<Scalar>& z) { return film_.modulate(id, z, e); };
  auto record = [&](const std::string& stage, const Var<Scalar>& v) {
    if (trace) trace->push_back({stage, v.shape()[1], v.shape()[2]});
  };

  const Var<Scalar> stem = stem_(x);
  record("stem", stem);
  Var<Scalar> h = stem;
  std::vector<Var<Scalar>> skips;
  for (size_t k = 0; k < down_.size(); ++k) {
    const std::string id = "down" + std::to_string(k);
    h = mod(id + ".res0", down_[k].res0(h));
    h = mod(id + ".res1", down_[k].res1(h));
    skips.push_back(h);
    h = down_[k].downsample(h);
    record(id, h);
  }
  for (size_t j = 0; j < mid_.size(); ++j) {
    h = mod("mid" + std::to_string(j), mid_[j](h));
    record("mid" + std::to_string(j), h);
  }
  for (size_t i = 0; i < up_.size(); ++i) {
    const size_t k = up_.size() - 1 - i;
    const std::string id = "up" + std::to_string(k);
    h = up_[i].upsample(upsample_nearest2x(h));
    h = concat_channels(h, skips[k]);
    h = mod(id + ".res0", up_[i].res0(h));
    h = mod(id + ".res1", up_[i].res1(h));
    record(id, h);
  }
  h = final_(concat_channels(h, stem));
  record("final", h);
  h = out_(h);
  record("out", h);
  return tanh(h);
}

template <typename Scalar>
void GeneratorNet<Scalar>::randomize_film(std::mt19937_64& rng, Scalar scale) {
  for (const auto& id : film_.layers()) {
    FilmHead<Scalar>& head = film_.head(id);
    init::normal(head.proj.weight.value, Scalar(0), scale, rng);
    init::normal(head.proj.bias.value, Scalar(0), scale, rng);
    head.proj.bias.value.array().head(head.channels) += Scalar(1);
  }
}

template <typename Scalar>
Image generate(const GeneratorNet<Scalar>& g, const Image& raw, const std::string& recipe_id,
               const std::string& state_name) {
  const Index s = g.config().img_size;
  if (raw.height() != s || raw.width() != s)
    throw ShapeError("generate: expected a " + std::to_string(s) + "x" + std::to_string(s) + " image, got " +
                     std::to_string(raw.height()) + "x" + std::to_string(raw.width()));
  const int p = g.contexts().index(recipe_id, state_name);
  Tape<Scalar> tape;
  const Var<Scalar> out = g.forward(tape.constant(to_tensor<Scalar>(raw)), p);
  return from_tensor(out.value(), 0);
}

nlohmann::json DiscriminatorConfig::to_json() const {
  return {{"in_ch", in_ch},
          {"ndf", ndf},
          {"kernel", kernel},
          {"stride2_layers", stride2_layers},
          {"leaky_slope", leaky_slope},
          {"seed", seed}};
}

DiscriminatorConfig DiscriminatorConfig::from_json(const nlohmann::json& j) {
  DiscriminatorConfig c;
  c.in_ch = j.value("in_ch", c.in_ch);
  c.ndf = j.value("ndf", c.ndf);
  c.kernel = j.value("kernel", c.kernel);
  c.stride2_layers = j.value("stride2_layers", c.stride2_layers);
  c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
  c.seed = j.value("seed", c.seed);
  return c;
}

template <typename Scalar>
DiscriminatorNet<Scalar>::DiscriminatorNet(DiscriminatorConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.in_ch <= 0 || cfg_.in_ch % 2 != 0) throw ConfigError("discriminator: in_ch must be positive and even");
  if (cfg_.ndf <= 0 || cfg_.kernel <= 0 || cfg_.stride2_layers < 1)
    throw ConfigError("discriminator: ndf, kernel and stride2_layers must be positive");
  std::mt19937_64 rng(cfg_.seed);
  const Index k = cfg_.kernel;
  auto width = [&](int i) { return cfg_.ndf * std::min<Index>(Index{1} << i, 8); };
  auto add_conv = [&](Index in, Index out, Index stride, bool bias) {
    const std::string name = "conv" + std::to_string(convs_.size());
    Conv2d<Scalar> c(name, in, out, k, {stride, 1}, rng, bias);
    init::normal(c.weight.value, Scalar(0), Scalar(0.02), rng);
    if (bias) c.bias.value.set_zero();
    convs_.push_back(std::move(c));
    if (!bias) norms_.emplace_back("norm" + std::to_string(norms_.size() + 1), out, rng);
  };
  add_conv(cfg_.in_ch, width(0), 2, true);
  for (int i = 1; i < cfg_.stride2_layers; ++i) add_conv(width(i - 1), width(i), 2, false);
  add_conv(width(cfg_.stride2_layers - 1), width(cfg_.stride2_layers), 1, false);
  add_conv(width(cfg_.stride2_layers), 1, 1, true);
}

template <typename Scalar>
Var<Scalar> DiscriminatorNet<Scalar>::forward(const Var<Scalar>& cond, const Var<Scalar>& judged) {
  if (!(cond.shape() == judged.shape()))
    throw ShapeError("discriminator: condition " + cond.shape().str() + " and judged " + judged.shape().str() +
                     " differ");
  if (cond.shape().rank() != 4 || 2 * cond.shape()[1] != cfg_.in_ch)
    throw ShapeError("discriminator: expected two [N," + std::to_string(cfg_.in_ch / 2) + ",H,W] inputs, got " +
                     cond.shape().str());
  const auto slope = static_cast<Scalar>(cfg_.leaky_slope);
  Var<Scalar> h = leaky_relu(convs_.front()(concat_channels(cond, judged)), slope);
  for (size_t i = 1; i + 1 < convs_.size(); ++i) h = leaky_relu(norms_[i - 1](convs_[i](h)), slope);
  return convs_.back()(h);
}

template <typename Scalar>
Tensor<Scalar> discriminate(DiscriminatorNet<Scalar>& d, const Image& cond, const Image& judged) {
  if (cond.height() != judged.height() || cond.width() != judged.width())
    throw ShapeError("discriminate: images are " + std::to_string(cond.height()) + "x" +
                     std::to_string(cond.width()) + " and " + std::to_string(judged.height()) + "x" +
                     std::to_string(judged.width()));
  Tape<Scalar> tape;
  const Var<Scalar> out = d.forward(tape.constant(to_tensor<Scalar>(cond)), tape.constant(to_tensor<Scalar>(judged)));
  return out.value();
}

template struct ResnetBlock<float>;
template struct ResnetBlock<double>;
template class GeneratorNet<float>;
template class GeneratorNet<double>;
template class DiscriminatorNet<float>;
template class DiscriminatorNet<double>;
template Image generate(const GeneratorNet<float>&, const Image&, const std::string&, const std::string&);
template Image generate(const GeneratorNet<double>&, const Image&, const std::string&, const std::string&);
template Tensor<float> discriminate(DiscriminatorNet<float>&, const Image&, const Image&);
template Tensor<double> discriminate(DiscriminatorNet<double>&, const Image&, const Image&);

}  // namespace cookgen

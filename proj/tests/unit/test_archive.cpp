#include "support.hpp"

#include <fstream>

#include <json.hpp>

#include "cookgen/archive.hpp"

using namespace cookgen;

namespace {

GeneratorConfig small_gen() {
  GeneratorConfig c;
  c.img_size = 32;
  c.base_dim = 8;
  c.resnet_groups = 4;
  c.spe_dim = 8;
  c.seed = 2;
  return c;
}

EmbeddingNetConfig tiny_cis() {
  EmbeddingNetConfig c;
  c.img_size = 32;
  c.embed_dim = 16;
  c.proj_dims = {16, 8};
  c.widths = {8, 8, 8, 8};
  c.groups = 4;
  c.seed = 3;
  return c;
}

ContextIndex contexts() {
  ContextIndex idx;
  idx.add("cookie", "basic");
  idx.add("cookie", "standard");
  idx.add("cookie", "extended");
  return idx;
}

template <typename Net>
bool bit_equal(const Net& a, const Net& b) {
  std::vector<const Tensor<float>*> ta, tb;
  a.visit([&](const Parameter<float>& p) { ta.push_back(&p.value); });
  b.visit([&](const Parameter<float>& p) { tb.push_back(&p.value); });
  if (ta.size() != tb.size()) return false;
  for (size_t i = 0; i < ta.size(); ++i)
    if (!(ta[i]->shape() == tb[i]->shape()) ||
        std::memcmp(ta[i]->data(), tb[i]->data(), static_cast<size_t>(ta[i]->size()) * sizeof(float)) != 0)
      return false;
  return true;
}

}  // namespace

TEST_CASE("int8 hand example") {
  const std::vector<float> x{0.5f, -1.0f, 0.25f};
  const auto q = quantize_int8(x);
  CHECK(q.scale == 1.0 / 127.0);
  CHECK(q.codes == std::vector<std::int8_t>{64, -127, 32});
  const auto d = dequantize_int8(q);
  CHECK(d[0] == doctest::Approx(64.0 / 127.0));
  CHECK(d[0] == doctest::Approx(0.5039).epsilon(1e-4));
  CHECK(d[1] == -1.0);
  CHECK(d[2] == doctest::Approx(0.2520).epsilon(1e-3));
}

TEST_CASE("int8 rounding bound on random tensors") {
  std::mt19937_64 rng(60);
  for (int trial = 0; trial < 50; ++trial) {
    const double amp = std::exp(std::uniform_real_distribution<double>(-8, 3)(rng));
    std::normal_distribution<float> n(0.0f, static_cast<float>(amp));
    std::vector<float> x(500);
    for (float& v : x) v = n(rng);
    const auto q = quantize_int8(x);
    const auto d = dequantize_int8(q);
    for (size_t i = 0; i < x.size(); ++i) REQUIRE(std::abs(x[i] - d[i]) <= q.scale / 2 * (1 + 1e-12));
  }
  const auto z = quantize_int8(std::vector<float>(4, 0.0f));
  CHECK(z.scale == 0.0);
  CHECK(dequantize_int8(z) == std::vector<double>(4, 0.0));
}

TEST_CASE("bit-exact round trip of all three networks") {
  testing::TempDir dir("archive");
  std::mt19937_64 rng(61);
  GeneratorNet<float> g(small_gen(), contexts());
  g.randomize_film(rng, 0.1f);
  save_weights(g, dir.path / "g");
  const auto g2 = load_generator(dir.path / "g");
  CHECK(bit_equal(g, g2));
  CHECK(g2.contexts() == g.contexts());
  CHECK(g2.config().to_json() == g.config().to_json());

  DiscriminatorNet<float> d(DiscriminatorConfig{.ndf = 8});
  save_weights(d, dir.path / "d");
  CHECK(bit_equal(d, load_discriminator(dir.path / "d")));

  EmbeddingNet<float> c(tiny_cis());
  save_weights(c, dir.path / "c");
  const auto c2 = load_cis(dir.path / "c");
  CHECK(bit_equal(c, c2));
  const Image img = testing::random_image(32, rng);
  CHECK(embed(c, img) == embed(c2, img));

  CHECK_THROWS_AS(load_cis(dir.path / "g"), FormatError);
}

TEST_CASE("manifest layout") {
  testing::TempDir dir("manifest");
  EmbeddingNet<float> c(tiny_cis());
  save_weights(c, dir.path);
  std::ifstream in(dir.path / kManifestFile);
  const auto m = nlohmann::json::parse(in);
  CHECK(m.at("format") == kArchiveFormat);
  CHECK(m.at("model_kind") == "cis");
  const std::string first = m.at("tensor_order").at(0);
  const auto& t = m.at("tensors").at(first);
  CHECK(t.at("dtype") == "float32");
  CHECK(t.at("file") == kPayloadFile);
  CHECK(t.at("byte_offset") == 0);
  CHECK(std::filesystem::file_size(dir.path / kPayloadFile) ==
        static_cast<std::uintmax_t>(parameter_count(c, true)) * 4);
}

TEST_CASE("tampered byte length names the tensor") {
  testing::TempDir dir("tamper");
  EmbeddingNet<float> c(tiny_cis());
  save_weights(c, dir.path);
  nlohmann::json m;
  {
    std::ifstream in(dir.path / kManifestFile);
    m = nlohmann::json::parse(in);
  }
  const std::string victim = m.at("tensor_order").at(3);
  m["tensors"][victim]["byte_length"] = m["tensors"][victim]["byte_length"].get<std::uint64_t>() - 4;
  std::ofstream(dir.path / kManifestFile) << m.dump();
  try {
    load_archive(dir.path);
    FAIL("tampered archive loaded");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find(victim) != std::string::npos);
  }
}

TEST_CASE("truncated payload is rejected") {
  testing::TempDir dir("trunc");
  EmbeddingNet<float> c(tiny_cis());
  save_weights(c, dir.path);
  std::filesystem::resize_file(dir.path / kPayloadFile, std::filesystem::file_size(dir.path / kPayloadFile) - 8);
  CHECK_THROWS_AS(load_archive(dir.path), FormatError);
}

TEST_CASE("hybrid quantization keeps names and shapes and shrinks 3x") {
  testing::TempDir dir("quant");
  GeneratorConfig cfg;
  cfg.img_size = 64;
  GeneratorNet<float> g(cfg, contexts());
  const WeightArchive a = to_archive(g);
  QuantReport rep;
  const WeightArchive q = quantize_archive(a, QuantScheme::hybrid_default(), &rep);
  REQUIRE(q.tensors.size() == a.tensors.size());
  for (size_t i = 0; i < a.tensors.size(); ++i) {
    CHECK(q.tensors[i].name == a.tensors[i].name);
    CHECK(q.tensors[i].shape == a.tensors[i].shape);
    const auto kind = a.tensors[i].kind;
    const Precision want = (kind == ParamKind::ConvWeight || kind == ParamKind::LinearWeight) ? Precision::Int8
                                                                                               : Precision::Float16;
    CHECK(q.tensors[i].dtype == want);
  }
  save_archive(a, dir.path / "f32");
  save_archive(q, dir.path / "q");
  auto on_disk = [](const std::filesystem::path& p) {
    return std::filesystem::file_size(p / kManifestFile) + std::filesystem::file_size(p / kPayloadFile);
  };
  CHECK(rep.bytes_before == on_disk(dir.path / "f32"));
  CHECK(rep.bytes_after == on_disk(dir.path / "q"));
  CHECK(rep.reduction() >= 3.0);

  // Dequantized int8 values stay within half a step of the originals.
  const WeightArchive back = load_archive(dir.path / "q");
  for (const TensorEntry& e : back.tensors) {
    if (e.dtype != Precision::Int8) continue;
    const auto orig = tensor_values(a, a.entry(e.name)), deq = tensor_values(back, e);
    const double bound = e.quant->scale / 2 * (1 + 1e-6) + 1e-7 * orig.array().abs().maxCoeff();
    CHECK((orig.array() - deq.array()).abs().maxCoeff() <= bound);
  }
  // A quantized archive still loads into a working generator.
  const auto gq = generator_from_archive(back);
  std::mt19937_64 rng(62);
  const Image raw = testing::random_image(64, rng);
  CHECK(max_abs_diff(generate(gq, raw, "cookie", "basic"), generate(g, raw, "cookie", "basic")) < 0.1f);
}

TEST_CASE("quant scheme json") {
  const auto s = QuantScheme::hybrid_default();
  CHECK(s.precision_for(ParamKind::ConvWeight) == Precision::Int8);
  CHECK(s.precision_for(ParamKind::Buffer) == Precision::Float16);
  const auto back = QuantScheme::from_json(s.to_json());
  CHECK(back.policy == s.policy);
  CHECK(bytes_per_element(Precision::Float16) == 2);
  CHECK(precision_from_string("int8") == Precision::Int8);
  CHECK_THROWS_AS(precision_from_string("int4"), FormatError);
}

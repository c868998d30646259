#include "cookgen/archive.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

namespace cookgen {

static_assert(std::endian::native == std::endian::little, "archive payloads are written in host byte order");

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Generator: return "generator";
    case ModelKind::Discriminator: return "discriminator";
    case ModelKind::Cis: return "cis";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& s) {
  for (ModelKind k : {ModelKind::Generator, ModelKind::Discriminator, ModelKind::Cis})
    if (s == to_string(k)) return k;
  throw FormatError("unknown model kind '" + s + "'");
}

std::string to_string(Precision p) {
  switch (p) {
    case Precision::Float32: return "float32";
    case Precision::Float16: return "float16";
    case Precision::Int8: return "int8";
  }
  return "unknown";
}

Precision precision_from_string(const std::string& s) {
  for (Precision p : {Precision::Float32, Precision::Float16, Precision::Int8})
    if (s == to_string(p)) return p;
  if (s == "int8-symmetric-per-tensor") return Precision::Int8;
  throw FormatError("unknown dtype '" + s + "'");
}

Index bytes_per_element(Precision p) {
  switch (p) {
    case Precision::Float32: return 4;
    case Precision::Float16: return 2;
    case Precision::Int8: return 1;
  }
  return 0;
}

Index TensorEntry::numel() const {
  Index n = 1;
  for (Index d : shape) n *= d;
  return n;
}

const TensorEntry& WeightArchive::entry(const std::string& name) const {
  for (const TensorEntry& e : tensors)
    if (e.name == name) return e;
  throw LookupError("archive has no tensor '" + name + "'");
}

nlohmann::json WeightArchive::manifest() const {
  nlohmann::json dir = nlohmann::json::object();
  nlohmann::json order = nlohmann::json::array();
  for (const TensorEntry& e : tensors) {
    nlohmann::json t{{"shape", e.shape},
                     {"dtype", to_string(e.dtype)},
                     {"kind", to_string(e.kind)},
                     {"file", e.file},
                     {"byte_offset", e.byte_offset},
                     {"byte_length", e.byte_length}};
    if (e.quant) t["quant"] = {{"scheme", e.quant->scheme}, {"scale", e.quant->scale}};
    dir[e.name] = std::move(t);
    order.push_back(e.name);
  }
  nlohmann::json m{{"format", kArchiveFormat},
                   {"model_kind", to_string(model_kind)},
                   {"config", config},
                   {"tensor_order", order},
                   {"tensors", dir}};
  if (contexts) m["context_index"] = contexts->to_json();
  return m;
}

std::uint64_t WeightArchive::total_bytes() const { return manifest().dump(2).size() + 1 + payload.size(); }

void save_archive(const WeightArchive& archive, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream m(dir / kManifestFile);
    if (!m) throw FormatError("cannot write " + (dir / kManifestFile).string());
    m << archive.manifest().dump(2) << '\n';
  }
  std::ofstream p(dir / kPayloadFile, std::ios::binary);
  if (!p) throw FormatError("cannot write " + (dir / kPayloadFile).string());
  p.write(reinterpret_cast<const char*>(archive.payload.data()), static_cast<std::streamsize>(archive.payload.size()));
}

WeightArchive load_archive(const std::filesystem::path& dir) {
  std::ifstream mf(dir / kManifestFile);
  if (!mf) throw FormatError("archive '" + dir.string() + "' has no " + kManifestFile);
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(mf);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("archive '" + dir.string() + "': malformed manifest: " + e.what());
  }
  if (m.value("format", std::string()) != kArchiveFormat)
    throw FormatError("archive '" + dir.string() + "': unsupported format '" + m.value("format", std::string()) + "'");

  WeightArchive a;
  a.model_kind = model_kind_from_string(m.at("model_kind").get<std::string>());
  a.config = m.at("config");
  if (m.contains("context_index")) a.contexts = ContextIndex::from_json(m["context_index"]);

  std::ifstream pf(dir / kPayloadFile, std::ios::binary);
  if (!pf) throw FormatError("archive '" + dir.string() + "' has no " + kPayloadFile);
  a.payload.assign(std::istreambuf_iterator<char>(pf), std::istreambuf_iterator<char>());

  const nlohmann::json& dirj = m.at("tensors");
  std::uint64_t end = 0;
  for (const auto& name_j : m.at("tensor_order")) {
    const std::string name = name_j.get<std::string>();
    if (!dirj.contains(name)) throw FormatError("tensor '" + name + "' listed in tensor_order but not described");
    const nlohmann::json& t = dirj[name];
    TensorEntry e;
    e.name = name;
    e.shape = t.at("shape").get<std::vector<Index>>();
    e.dtype = precision_from_string(t.at("dtype").get<std::string>());
    e.kind = param_kind_from_string(t.at("kind").get<std::string>());
    e.file = t.value("file", std::string(kPayloadFile));
    e.byte_offset = t.at("byte_offset").get<std::uint64_t>();
    e.byte_length = t.at("byte_length").get<std::uint64_t>();
    if (t.contains("quant")) e.quant = QuantInfo{t["quant"].at("scheme").get<std::string>(), t["quant"].at("scale").get<double>()};

    if (e.file != kPayloadFile) throw FormatError("tensor '" + name + "': unknown payload file '" + e.file + "'");
    const auto want = static_cast<std::uint64_t>(e.numel() * bytes_per_element(e.dtype));
    if (e.byte_length != want)
      throw FormatError("tensor '" + name + "': byte_length " + std::to_string(e.byte_length) + " does not match " +
                        std::to_string(want) + " bytes for its shape and dtype");
    if (e.byte_offset + e.byte_length > a.payload.size())
      throw FormatError("tensor '" + name + "': bytes [" + std::to_string(e.byte_offset) + ", " +
                        std::to_string(e.byte_offset + e.byte_length) + ") exceed the " +
                        std::to_string(a.payload.size()) + "-byte payload");
    if (e.dtype == Precision::Int8 && !e.quant) throw FormatError("tensor '" + name + "': int8 without a scale");
    end = std::max(end, e.byte_offset + e.byte_length);
    a.tensors.push_back(std::move(e));
  }
  if (a.tensors.size() != dirj.size()) throw FormatError("archive '" + dir.string() + "': tensor_order is incomplete");
  if (end != a.payload.size())
    throw FormatError("archive '" + dir.string() + "': payload holds " + std::to_string(a.payload.size()) +
                      " bytes but tensors cover " + std::to_string(end));
  return a;
}

Tensor<float> tensor_values(const WeightArchive& archive, const TensorEntry& e) {
  Tensor<float> t{Shape(e.shape)};
  const unsigned char* src = archive.payload.data() + e.byte_offset;
  const Index n = e.numel();
  switch (e.dtype) {
    case Precision::Float32:
      std::memcpy(t.data(), src, static_cast<size_t>(n) * sizeof(float));
      break;
    case Precision::Float16:
      for (Index i = 0; i < n; ++i) {
        Eigen::half h;
        std::memcpy(&h, src + 2 * i, 2);
        t.data()[i] = static_cast<float>(h);
      }
      break;
    case Precision::Int8:
      for (Index i = 0; i < n; ++i)
        t.data()[i] = static_cast<float>(static_cast<std::int8_t>(src[i]) * e.quant->scale);
      break;
  }
  return t;
}

namespace {

template <typename Net>
WeightArchive pack(const Net& net, ModelKind kind, nlohmann::json config) {
  WeightArchive a;
  a.model_kind = kind;
  a.config = std::move(config);
  std::set<std::string> seen;
  net.visit([&](const Parameter<float>& p) {
    if (!seen.insert(p.name).second) throw InvalidArgument("parameter name '" + p.name + "' is not unique");
    TensorEntry e;
    e.name = p.name;
    e.shape = p.value.shape().dims();
    e.kind = p.kind;
    e.byte_offset = a.payload.size();
    e.byte_length = static_cast<std::uint64_t>(p.value.size()) * sizeof(float);
    const auto* bytes = reinterpret_cast<const unsigned char*>(p.value.data());
    a.payload.insert(a.payload.end(), bytes, bytes + e.byte_length);
    a.tensors.push_back(std::move(e));
  });
  return a;
}

template <typename Net>
void unpack(Net& net, const WeightArchive& a) {
  std::map<std::string, const TensorEntry*> by_name;
  for (const TensorEntry& e : a.tensors) by_name[e.name] = &e;
  std::set<std::string> used;
  net.visit([&](Parameter<float>& p) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw FormatError("archive is missing tensor '" + p.name + "'");
    if (!(Shape(it->second->shape) == p.value.shape()))
      throw FormatError("tensor '" + p.name + "': archive shape " + Shape(it->second->shape).str() +
                        " does not match the model's " + p.value.shape().str());
    p.value = tensor_values(a, *it->second);
    used.insert(p.name);
  });
  for (const TensorEntry& e : a.tensors)
    if (!used.count(e.name)) throw FormatError("archive tensor '" + e.name + "' does not belong to the model");
}

void require_kind(const WeightArchive& a, ModelKind want) {
  if (a.model_kind != want)
    throw FormatError("archive holds a " + to_string(a.model_kind) + ", expected a " + to_string(want));
}

}  // namespace

WeightArchive to_archive(const GeneratorNet<float>& net) {
  WeightArchive a = pack(net, ModelKind::Generator, net.config().to_json());
  a.contexts = net.contexts();
  return a;
}

WeightArchive to_archive(const DiscriminatorNet<float>& net) {
  return pack(net, ModelKind::Discriminator, net.config().to_json());
}

WeightArchive to_archive(const EmbeddingNet<float>& net) { return pack(net, ModelKind::Cis, net.config().to_json()); }

GeneratorNet<float> generator_from_archive(const WeightArchive& a) {
  require_kind(a, ModelKind::Generator);
  if (!a.contexts) throw FormatError("generator archive has no context_index");
  GeneratorNet<float> net(GeneratorConfig::from_json(a.config), *a.contexts);
  unpack(net, a);
  return net;
}

DiscriminatorNet<float> discriminator_from_archive(const WeightArchive& a) {
  require_kind(a, ModelKind::Discriminator);
  DiscriminatorNet<float> net(DiscriminatorConfig::from_json(a.config));
  unpack(net, a);
  return net;
}

EmbeddingNet<float> cis_from_archive(const WeightArchive& a) {
  require_kind(a, ModelKind::Cis);
  EmbeddingNet<float> net(EmbeddingNetConfig::from_json(a.config));
  unpack(net, a);
  return net;
}

GeneratorNet<float> load_generator(const std::filesystem::path& dir) { return generator_from_archive(load_archive(dir)); }
DiscriminatorNet<float> load_discriminator(const std::filesystem::path& dir) {
  return discriminator_from_archive(load_archive(dir));
}
EmbeddingNet<float> load_cis(const std::filesystem::path& dir) { return cis_from_archive(load_archive(dir)); }

Int8Quantized quantize_int8(std::span<const float> values) {
  Int8Quantized q;
  double max_abs = 0.0;
  for (float v : values) max_abs = std::max(max_abs, std::abs(static_cast<double>(v)));
  q.codes.assign(values.size(), 0);
  if (max_abs == 0.0) return q;
  q.scale = max_abs / 127.0;
  for (size_t i = 0; i < values.size(); ++i) {
    const double c = std::clamp(std::round(static_cast<double>(values[i]) / q.scale), -127.0, 127.0);
    q.codes[i] = static_cast<std::int8_t>(c);
  }
  return q;
}

std::vector<double> dequantize_int8(const Int8Quantized& q) {
  std::vector<double> out(q.codes.size());
  for (size_t i = 0; i < q.codes.size(); ++i) out[i] = q.codes[i] * q.scale;
  return out;
}

namespace {

const std::map<ParamKind, std::string>& kind_keys() {
  static const std::map<ParamKind, std::string> keys{{ParamKind::ConvWeight, "conv_weight"},
                                                     {ParamKind::LinearWeight, "linear_weight"},
                                                     {ParamKind::Bias, "bias"},
                                                     {ParamKind::Norm, "norm"},
                                                     {ParamKind::Film, "film"},
                                                     {ParamKind::Buffer, "buffer"}};
  return keys;
}

}  // namespace

QuantScheme QuantScheme::hybrid_default() {
  return QuantScheme{{{ParamKind::ConvWeight, Precision::Int8},
                      {ParamKind::LinearWeight, Precision::Int8},
                      {ParamKind::Bias, Precision::Float16},
                      {ParamKind::Norm, Precision::Float16},
                      {ParamKind::Film, Precision::Float16},
                      {ParamKind::Buffer, Precision::Float16}}};
}

Precision QuantScheme::precision_for(ParamKind kind) const {
  auto it = policy.find(kind);
  return it == policy.end() ? Precision::Float32 : it->second;
}

nlohmann::json QuantScheme::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [kind, p] : policy) j[kind_keys().at(kind)] = to_string(p);
  return {{"policy", j}};
}

QuantScheme QuantScheme::from_json(const nlohmann::json& j) {
  QuantScheme s;
  const nlohmann::json& p = j.contains("policy") ? j.at("policy") : j;
  for (const auto& [key, value] : p.items()) {
    bool found = false;
    for (const auto& [kind, name] : kind_keys())
      if (name == key) {
        s.policy[kind] = precision_from_string(value.get<std::string>());
        found = true;
      }
    if (!found) throw ConfigError("quant scheme: unknown layer kind '" + key + "'");
  }
  return s;
}

nlohmann::json QuantReport::to_json() const {
  nlohmann::json t = nlohmann::json::array();
  for (const auto& s : tensors)
    t.push_back({{"name", s.name}, {"dtype", to_string(s.dtype)}, {"scale", s.scale}, {"max_error", s.max_error}});
  return {{"bytes_before", bytes_before}, {"bytes_after", bytes_after},     {"payload_before", payload_before},
          {"payload_after", payload_after}, {"reduction", reduction()},     {"tensors", t}};
}

WeightArchive quantize_archive(const WeightArchive& in, const QuantScheme& scheme, QuantReport* report) {
  WeightArchive out;
  out.model_kind = in.model_kind;
  out.config = in.config;
  out.contexts = in.contexts;
  QuantReport rep;
  for (const TensorEntry& e : in.tensors) {
    if (e.dtype != Precision::Float32) throw InvalidArgument("quantize_archive: tensor '" + e.name + "' is not float32");
    const Tensor<float> v = tensor_values(in, e);
    const std::span<const float> vals(v.data(), static_cast<size_t>(v.size()));
    TensorEntry q = e;
    q.dtype = scheme.precision_for(e.kind);
    q.byte_offset = out.payload.size();
    q.byte_length = static_cast<std::uint64_t>(v.size() * bytes_per_element(q.dtype));
    TensorQuantStats st{e.name, q.dtype, 0.0, 0.0};
    switch (q.dtype) {
      case Precision::Float32: {
        const auto* b = reinterpret_cast<const unsigned char*>(v.data());
        out.payload.insert(out.payload.end(), b, b + q.byte_length);
        break;
      }
      case Precision::Float16:
        for (float x : vals) {
          const Eigen::half h(x);
          unsigned char b[2];
          std::memcpy(b, &h, 2);
          out.payload.insert(out.payload.end(), b, b + 2);
          st.max_error = std::max(st.max_error, std::abs(static_cast<double>(x) - static_cast<double>(static_cast<float>(h))));
        }
        break;
      case Precision::Int8: {
        const Int8Quantized iq = quantize_int8(vals);
        const std::vector<double> deq = dequantize_int8(iq);
        for (size_t i = 0; i < vals.size(); ++i) {
          out.payload.push_back(static_cast<unsigned char>(iq.codes[i]));
          st.max_error = std::max(st.max_error, std::abs(static_cast<double>(vals[i]) - deq[i]));
        }
        q.quant = QuantInfo{"int8-symmetric-per-tensor", iq.scale};
        st.scale = iq.scale;
        break;
      }
    }
    rep.tensors.push_back(st);
    out.tensors.push_back(std::move(q));
  }
  rep.bytes_before = in.total_bytes();
  rep.bytes_after = out.total_bytes();
  rep.payload_before = in.payload.size();
  rep.payload_after = out.payload.size();
  if (report) *report = std::move(rep);
  return out;
}

}  // namespace cookgen

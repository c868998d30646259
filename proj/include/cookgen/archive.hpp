#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cookgen/cis.hpp"
#include "cookgen/nets.hpp"

namespace cookgen {

// Archive directory: manifest.json + tensors.bin (little-endian, row-major).
inline constexpr const char* kArchiveFormat = "cookgen-archive-1";
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kPayloadFile = "tensors.bin";

enum class ModelKind { Generator, Discriminator, Cis };
std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

enum class Precision { Float32, Float16, Int8 };
std::string to_string(Precision p);
Precision precision_from_string(const std::string& s);
Index bytes_per_element(Precision p);

struct QuantInfo {
  std::string scheme;  // "int8-symmetric-per-tensor"
  double scale = 0.0;
};

struct TensorEntry {
  std::string name;
  std::vector<Index> shape;
  Precision dtype = Precision::Float32;
  ParamKind kind = ParamKind::ConvWeight;
  std::string file = kPayloadFile;
  std::uint64_t byte_offset = 0;
  std::uint64_t byte_length = 0;
  std::optional<QuantInfo> quant;

  Index numel() const;
};

struct WeightArchive {
  ModelKind model_kind = ModelKind::Generator;
  nlohmann::json config;
  std::optional<ContextIndex> contexts;
  std::vector<TensorEntry> tensors;
  std::vector<unsigned char> payload;

  const TensorEntry& entry(const std::string& name) const;
  nlohmann::json manifest() const;
  // Bytes of manifest.json + tensors.bin as written.
  std::uint64_t total_bytes() const;
};

// Writes `archive` to directory `dir` (created if missing).
void save_archive(const WeightArchive& archive, const std::filesystem::path& dir);
// Validates every entry against the payload; FormatError names the tensor.
WeightArchive load_archive(const std::filesystem::path& dir);

// Float values of one tensor, dequantized when stored as int8/float16.
Tensor<float> tensor_values(const WeightArchive& archive, const TensorEntry& entry);

WeightArchive to_archive(const GeneratorNet<float>& net);
WeightArchive to_archive(const DiscriminatorNet<float>& net);
WeightArchive to_archive(const EmbeddingNet<float>& net);

template <typename Net>
void save_weights(const Net& net, const std::filesystem::path& dir) {
  save_archive(to_archive(net), dir);
}

GeneratorNet<float> generator_from_archive(const WeightArchive& archive);
DiscriminatorNet<float> discriminator_from_archive(const WeightArchive& archive);
EmbeddingNet<float> cis_from_archive(const WeightArchive& archive);

GeneratorNet<float> load_generator(const std::filesystem::path& dir);
DiscriminatorNet<float> load_discriminator(const std::filesystem::path& dir);
EmbeddingNet<float> load_cis(const std::filesystem::path& dir);

// Symmetric per-tensor int8: scale = max|x| / 127, code = round(x / scale).
// An all-zero tensor gets scale 0 and zero codes.
struct Int8Quantized {
  std::vector<std::int8_t> codes;
  double scale = 0.0;
};
Int8Quantized quantize_int8(std::span<const float> values);
std::vector<double> dequantize_int8(const Int8Quantized& q);

struct QuantScheme {
  std::map<ParamKind, Precision> policy;

  // conv/linear weights -> int8; biases, norms, FiLM heads, buffers -> fp16.
  static QuantScheme hybrid_default();
  Precision precision_for(ParamKind kind) const;
  nlohmann::json to_json() const;
  static QuantScheme from_json(const nlohmann::json& j);
};

struct TensorQuantStats {
  std::string name;
  Precision dtype = Precision::Float32;
  double scale = 0.0;
  double max_error = 0.0;
};

struct QuantReport {
  std::uint64_t bytes_before = 0;
  std::uint64_t bytes_after = 0;
  std::uint64_t payload_before = 0;
  std::uint64_t payload_after = 0;
  std::vector<TensorQuantStats> tensors;

  double reduction() const { return static_cast<double>(bytes_before) / static_cast<double>(bytes_after); }
  nlohmann::json to_json() const;
};

// Input tensors must be float32. Names and shapes are preserved.
WeightArchive quantize_archive(const WeightArchive& archive, const QuantScheme& scheme, QuantReport* report = nullptr);

}  // namespace cookgen

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "texsense/features.hpp"
#include "texsense/mlp.hpp"

namespace texsense {

/// Provenance of a trained model. Carried inside the model file.
struct TrainingMetadata {
  int epochs = 0;
  std::size_t batch_size = 0;
  double learning_rate = 0.0;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
  std::string noise_domain = "feature";
  std::string threshold_mode;
  std::string init;  // initialization and input scaling used in training
  std::vector<double> loss_curve;

  bool operator==(const TrainingMetadata&) const = default;
};

/// A deployable classifier: network weights plus the feature layout they expect.
struct ModelParams {
  Mlp<float> network;
  FeatureConfig fingerprint;
  TrainingMetadata metadata;

  ClassScores classify(const FeatureVector& x) const { return network.forward(x.values); }
  ClassScores classify(std::span<const float> x) const { return network.forward(x); }

  bool operator==(const ModelParams&) const = default;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Writes the versioned binary container ("RTM1", little-endian, CRC-32 trailer).
void save_model(const ModelParams& model, const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_model(const ModelParams& model);

/// Reads a model. CorruptFileError on damage or truncation, VersionError on an
/// unknown format version, FingerprintError if `runtime` is given and differs
/// from the stored feature layout.
ModelParams load_model(const std::filesystem::path& path,
                       const std::optional<FeatureConfig>& runtime = std::nullopt);
ModelParams deserialize_model(std::span<const std::uint8_t> bytes,
                              const std::optional<FeatureConfig>& runtime = std::nullopt);

/// Throws FingerprintError if the two layouts differ.
void check_fingerprint(const FeatureConfig& model, const FeatureConfig& runtime);

/// Hex SHA-256 of the serialized model.
std::string model_hash(const ModelParams& model);

}  // namespace texsense

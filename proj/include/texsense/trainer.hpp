#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "texsense/adam.hpp"
#include "texsense/dataset.hpp"
#include "texsense/model.hpp"

namespace texsense {

enum class NoiseDomain : std::uint8_t { Feature = 0, Sample = 1 };

std::string to_string(NoiseDomain d);

struct TrainConfig {
  int epochs = 5;
  std::size_t batch_size = 6000;
  AdamConfig adam{};  // learning rate 1e-4
  /// Gaussian augmentation std. Unset: noise_scale times the mean RMS of
  /// the training inputs in the chosen domain.
  std::optional<double> noise_sigma;
  double noise_scale = 0.01;
  NoiseDomain noise_domain = NoiseDomain::Feature;
  std::uint64_t seed = 0;
  /// Gradient accumulation slice; bounds memory, does not change the update.
  std::size_t micro_batch = 1000;
  MlpArchitecture architecture = MlpArchitecture::reference();
  InitConfig init{0.1, 0.3, 0.0};
  /// Train on inputs standardized per dimension with training-set mean and
  /// std; the map is folded into the first layer of the returned model, so
  /// the model still consumes raw features.
  bool standardize_inputs = true;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Per-dimension affine input map x' = (x - mean) * inv_std.
struct InputScaling {
  std::vector<double> mean;
  std::vector<double> inv_std;

  /// Statistics of the clean features of `set`; constant dimensions get inv_std 1.
  static InputScaling fit(const LabeledChunkSet& set);
  static InputScaling identity(std::size_t dim);
  /// Rewrites the first layer so that net'(x) == net(scaled x).
  void fold_into(Mlp<float>& net) const;
};

std::string describe(const InitConfig& init, bool standardized);

struct TrainResult {
  ModelParams model;
  std::vector<double> epoch_loss;  // mean NLL on the augmented inputs
  double noise_sigma = 0.0;
  std::vector<std::string> warnings;
};

/// Mean over chunks of each chunk's feature-vector RMS.
double mean_feature_rms(const LabeledChunkSet& set);
/// Mean over chunks of the RMS of the concatenated analysis-rate windows.
double mean_sample_rms(const LabeledChunkSet& set);

/// Trains a fresh model with Adam on shuffled batches, redrawing the
/// augmentation noise every epoch. Results depend only on the config, the
/// seed and the chunk contents: chunks are put into (source, position)
/// order before shuffling. Throws NumericError on a non-finite loss.
TrainResult train(const TrainConfig& cfg, const LabeledChunkSet& data,
                  const std::function<void(int epoch, double loss)>& on_epoch = {});

/// Three-class accuracy of `model` on `data` (argmax over all classes).
double accuracy(const ModelParams& model, const LabeledChunkSet& data);

}  // namespace texsense

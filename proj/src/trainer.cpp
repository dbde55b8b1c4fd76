#include "texsense/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace texsense {

std::string to_string(NoiseDomain d) { return d == NoiseDomain::Sample ? "sample" : "feature"; }

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (micro_batch < 1) throw ConfigError("micro batch must be >= 1");
  if (!(adam.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (noise_sigma && !(*noise_sigma >= 0.0)) throw ConfigError("noise sigma must be >= 0");
  if (!(noise_scale >= 0.0)) throw ConfigError("noise scale must be >= 0");
  architecture.validate();
}

double mean_feature_rms(const LabeledChunkSet& set) {
  if (set.chunks.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& c : set.chunks) acc += rms_linear(c.features);
  return acc / static_cast<double>(set.chunks.size());
}

double mean_sample_rms(const LabeledChunkSet& set) {
  if (set.chunks.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& c : set.chunks) {
    const double p = rms_linear(c.piezo);
    const double m = rms_linear(c.mems);
    acc += std::sqrt(0.5 * (p * p + m * m));
  }
  return acc / static_cast<double>(set.chunks.size());
}

InputScaling InputScaling::identity(std::size_t dim) {
  return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

InputScaling InputScaling::fit(const LabeledChunkSet& set) {
  const std::size_t dim = set.features.dim();
  InputScaling s = identity(dim);
  if (set.chunks.empty()) return s;
  const double n = static_cast<double>(set.chunks.size());
  std::vector<double> sq(dim, 0.0);
  for (const auto& c : set.chunks)
    for (std::size_t d = 0; d < dim; ++d) s.mean[d] += c.features[d];
  for (auto& m : s.mean) m /= n;
  for (const auto& c : set.chunks)
    for (std::size_t d = 0; d < dim; ++d) {
      const double e = c.features[d] - s.mean[d];
      sq[d] += e * e;
    }
  for (std::size_t d = 0; d < dim; ++d) {
    const double sd = std::sqrt(sq[d] / n);
    s.inv_std[d] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
  return s;
}

void InputScaling::fold_into(Mlp<float>& net) const {
  auto& first = net.layers().front();
  if (static_cast<std::size_t>(first.weight.cols()) != mean.size())
    throw ShapeError("input scaling has " + std::to_string(mean.size()) + " dimensions, network expects " +
                     std::to_string(first.weight.cols()));
  for (Eigen::Index r = 0; r < first.weight.rows(); ++r) {
    double shift = 0.0;
    for (Eigen::Index c = 0; c < first.weight.cols(); ++c) {
      const auto d = static_cast<std::size_t>(c);
      const double w = static_cast<double>(first.weight(r, c)) * inv_std[d];
      shift += w * mean[d];
      first.weight(r, c) = static_cast<float>(w);
    }
    first.bias(r) = static_cast<float>(static_cast<double>(first.bias(r)) - shift);
  }
}

std::string describe(const InitConfig& init, bool standardized) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "he_uniform residual_gain=%g head_gain=%g hidden_bias=%g standardize=%s",
                init.residual_gain, init.head_gain, init.hidden_bias, standardized ? "on" : "off");
  return buf;
}

namespace {

using Matrix = Mlp<float>::Matrix;

/// Fills column `col` of `x` with the (augmented) input for `chunk`.
void fill_column(const LabeledChunk& chunk, const FeatureConfig& fc, NoiseDomain domain,
                 double sigma, Rng& rng, Matrix& x, Eigen::Index col,
                 std::vector<float>& scratch_p, std::vector<float>& scratch_m,
                 std::vector<float>& scratch_f) {
  const auto dim = static_cast<Eigen::Index>(fc.dim());
  if (sigma == 0.0) {
    for (Eigen::Index i = 0; i < dim; ++i) x(i, col) = chunk.features[static_cast<std::size_t>(i)];
    return;
  }
  if (domain == NoiseDomain::Feature) {
    // Piezo-only models never see MEMS energy, so the zeroed half stays zero.
    const auto noisy = fc.channels == ChannelMode::PiezoOnly
                           ? static_cast<Eigen::Index>(fc.bins_per_channel())
                           : dim;
    for (Eigen::Index i = 0; i < dim; ++i) {
      double v = chunk.features[static_cast<std::size_t>(i)];
      if (i < noisy) v += sigma * rng.normal();
      x(i, col) = static_cast<float>(v);
    }
    return;
  }
  scratch_p = chunk.piezo;
  scratch_m = chunk.mems;
  for (auto& v : scratch_p) v = static_cast<float>(v + sigma * rng.normal());
  for (auto& v : scratch_m) v = static_cast<float>(v + sigma * rng.normal());
  featurize_into(scratch_p, scratch_m, fc, scratch_f);
  for (Eigen::Index i = 0; i < dim; ++i) x(i, col) = scratch_f[static_cast<std::size_t>(i)];
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const LabeledChunkSet& data,
                  const std::function<void(int, double)>& on_epoch) {
  cfg.validate();
  if (data.chunks.empty()) throw ArgumentError("training set is empty");
  if (cfg.architecture.input_dim != data.features.dim())
    throw ShapeError("architecture input " + std::to_string(cfg.architecture.input_dim) +
                     " does not match feature dimension " + std::to_string(data.features.dim()));

  TrainResult result;
  for (const ClassIndex c : {ClassIndex::Rough, ClassIndex::Smooth, ClassIndex::NonValid})
    if (data.count(c) == 0) result.warnings.push_back("class '" + to_string(c) + "' absent from training set");

  const double sigma = cfg.noise_sigma.value_or(
      cfg.noise_scale *
      (cfg.noise_domain == NoiseDomain::Feature ? mean_feature_rms(data) : mean_sample_rms(data)));
  result.noise_sigma = sigma;

  // Canonical order so the outcome does not depend on how the set was assembled.
  std::vector<std::size_t> order(data.chunks.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ca = data.chunks[a];
    const auto& cb = data.chunks[b];
    const auto& sa = data.sources[ca.source];
    const auto& sb = data.sources[cb.source];
    if (sa != sb) return sa < sb;
    return ca.end_sample < cb.end_sample;
  });

  Rng init_rng(cfg.seed);
  Rng train_rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  auto net = Mlp<float>::he_uniform(cfg.architecture, init_rng, cfg.init);
  Adam<float> adam(cfg.architecture, cfg.adam);
  Mlp<float> grad(cfg.architecture);

  const FeatureConfig& fc = data.features;
  const auto dim = static_cast<Eigen::Index>(fc.dim());
  const InputScaling scaling =
      cfg.standardize_inputs ? InputScaling::fit(data) : InputScaling::identity(fc.dim());
  const Eigen::ArrayXf shift = Eigen::Map<const Eigen::ArrayXd>(scaling.mean.data(), dim).cast<float>();
  const Eigen::ArrayXf gain = Eigen::Map<const Eigen::ArrayXd>(scaling.inv_std.data(), dim).cast<float>();
  std::vector<float> sp, sm, sf(fc.dim());
  const std::size_t n = order.size();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    train_rng.shuffle(order.begin(), order.end());
    double epoch_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      grad.set_zero();
      double batch_sum = 0.0;
      for (std::size_t m0 = start; m0 < end; m0 += cfg.micro_batch) {
        const std::size_t m1 = std::min(end, m0 + cfg.micro_batch);
        Matrix x(dim, static_cast<Eigen::Index>(m1 - m0));
        std::vector<int> labels(m1 - m0);
        for (std::size_t i = m0; i < m1; ++i) {
          const auto& chunk = data.chunks[order[i]];
          fill_column(chunk, fc, cfg.noise_domain, sigma, train_rng, x,
                      static_cast<Eigen::Index>(i - m0), sp, sm, sf);
          labels[i - m0] = static_cast<int>(chunk.label);
        }
        x = ((x.array().colwise() - shift).colwise() * gain).matrix();
        try {
          batch_sum += static_cast<double>(net.accumulate_gradient(x, labels, grad));
        } catch (const NumericError& e) {
          throw NumericError("epoch " + std::to_string(epoch + 1) + ", batch " +
                             std::to_string(batch_index + 1) + ": " + e.what());
        }
      }
      if (!std::isfinite(batch_sum))
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                           std::to_string(batch_index + 1));
      grad.scale(1.0f / static_cast<float>(end - start));
      adam.step(net, grad);
      epoch_sum += batch_sum;
    }
    const double epoch_loss = epoch_sum / static_cast<double>(n);
    result.epoch_loss.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch + 1, epoch_loss);
  }

  scaling.fold_into(net);
  if (!net.all_finite()) throw NumericError("non-finite parameters after folding the input scaling");
  result.model.network = std::move(net);
  result.model.fingerprint = fc;
  auto& meta = result.model.metadata;
  meta.epochs = cfg.epochs;
  meta.batch_size = cfg.batch_size;
  meta.learning_rate = cfg.adam.learning_rate;
  meta.seed = cfg.seed;
  meta.noise_sigma = sigma;
  meta.noise_domain = to_string(cfg.noise_domain);
  meta.threshold_mode = data.threshold_mode;
  meta.init = describe(cfg.init, cfg.standardize_inputs);
  meta.loss_curve = result.epoch_loss;
  return result;
}

double accuracy(const ModelParams& model, const LabeledChunkSet& data) {
  if (data.chunks.empty()) return 0.0;
  std::size_t correct = 0;
  constexpr std::size_t kSlice = 1000;
  const auto dim = static_cast<Eigen::Index>(data.features.dim());
  for (std::size_t start = 0; start < data.chunks.size(); start += kSlice) {
    const std::size_t end = std::min(data.chunks.size(), start + kSlice);
    Matrix x(dim, static_cast<Eigen::Index>(end - start));
    for (std::size_t i = start; i < end; ++i)
      for (Eigen::Index d = 0; d < dim; ++d)
        x(d, static_cast<Eigen::Index>(i - start)) = data.chunks[i].features[static_cast<std::size_t>(d)];
    const Matrix logp = model.network.forward_batch(x);
    for (Eigen::Index c = 0; c < logp.cols(); ++c) {
      Eigen::Index best;
      logp.col(c).maxCoeff(&best);
      if (static_cast<int>(best) == static_cast<int>(data.chunks[start + static_cast<std::size_t>(c)].label))
        ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.chunks.size());
}

}  // namespace texsense

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "texsense/error.hpp"
#include "texsense/random.hpp"

namespace texsense {

enum class Activation : std::uint8_t { Relu = 0, Tanh = 1 };

/// Shape of the residual MLP.
///
/// Hidden layers are numbered from 1. Layer 1 maps the input to the hidden
/// width; layers residual_first..residual_last compute h <- act(W h + b) + h;
/// the remaining hidden layers are plain. A linear head maps to output_dim.
struct MlpArchitecture {
  std::size_t input_dim = 514;
  std::size_t hidden_width = 256;
  std::size_t hidden_layers = 15;
  std::size_t residual_first = 3;  // 0 disables residuals
  std::size_t residual_last = 12;
  std::size_t output_dim = 3;
  Activation activation = Activation::Relu;

  static MlpArchitecture reference() { return {}; }

  bool is_residual(std::size_t layer) const {
    return residual_first != 0 && layer >= residual_first && layer <= residual_last;
  }

  std::size_t residual_count() const {
    return residual_first == 0 ? 0 : residual_last - residual_first + 1;
  }

  void validate() const {
    if (input_dim == 0 || hidden_width == 0 || hidden_layers == 0 || output_dim == 0)
      throw ShapeError("architecture dimensions must be positive");
    if (residual_first != 0) {
      if (residual_last < residual_first || residual_last > hidden_layers)
        throw ShapeError("residual layer range out of bounds");
      if (residual_first == 1 && input_dim != hidden_width)
        throw ShapeError("residual connection on layer 1 requires input_dim == hidden_width");
    }
  }

  bool operator==(const MlpArchitecture&) const = default;
};

enum class ClassIndex : std::uint8_t { Rough = 0, Smooth = 1, NonValid = 2 };
inline constexpr std::size_t kNumClasses = 3;

/// Scaling of the He-uniform initialization per layer kind.
struct InitConfig {
  double residual_gain = 1.0;  // weight scale on residual branches
  double head_gain = 1.0;      // weight scale on the output layer
  double hidden_bias = 0.0;    // initial bias of every hidden unit
};

/// Log-probabilities over (Rough, Smooth, NonValid).
struct ClassScores {
  std::array<double, kNumClasses> log_probs{};

  std::array<double, kNumClasses> probabilities() const {
    std::array<double, kNumClasses> p{};
    for (std::size_t i = 0; i < kNumClasses; ++i) p[i] = std::exp(log_probs[i]);
    return p;
  }
  double probability(ClassIndex c) const {
    return std::exp(log_probs[static_cast<std::size_t>(c)]);
  }
  ClassIndex argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < kNumClasses; ++i)
      if (log_probs[i] > log_probs[best]) best = i;
    return static_cast<ClassIndex>(best);
  }
};

/// Residual multilayer perceptron with log-softmax output.
///
/// The same type stores parameters, gradients and optimizer moments, since
/// all share the layer shapes. Scalar is float for deployed models and
/// double for gradient checks.
template <typename Scalar>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Layer {
    Matrix weight;  // out x in
    Vector bias;
    bool residual = false;
  };

  Mlp() = default;

  /// All weights and biases zero.
  explicit Mlp(const MlpArchitecture& arch) : arch_(arch) {
    arch_.validate();
    std::size_t in = arch_.input_dim;
    for (std::size_t l = 1; l <= arch_.hidden_layers; ++l) {
      layers_.push_back({Matrix::Zero(arch_.hidden_width, in), Vector::Zero(arch_.hidden_width),
                         arch_.is_residual(l)});
      in = arch_.hidden_width;
    }
    layers_.push_back({Matrix::Zero(arch_.output_dim, in), Vector::Zero(arch_.output_dim), false});
  }

  /// He-uniform fan-in initialization, zero biases. Draw order is layer by
  /// layer, row-major within each weight matrix.
  /// He-uniform weights (bound sqrt(6 / fan_in)) scaled per layer kind, constant biases.
  /// Draws are row-major per layer, first layer first.
  static Mlp he_uniform(const MlpArchitecture& arch, Rng& rng, const InitConfig& init = {}) {
    Mlp m(arch);
    for (std::size_t l = 0; l < m.layers_.size(); ++l) {
      auto& layer = m.layers_[l];
      const bool head = l + 1 == m.layers_.size();
      const double gain = head ? init.head_gain : layer.residual ? init.residual_gain : 1.0;
      const double bound = gain * std::sqrt(6.0 / static_cast<double>(layer.weight.cols()));
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
          layer.weight(r, c) = static_cast<Scalar>(rng.uniform(-bound, bound));
      if (!head) layer.bias.setConstant(static_cast<Scalar>(init.hidden_bias));
    }
    return m;
  }

  const MlpArchitecture& architecture() const { return arch_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  /// Visits every parameter tensor (weights then bias, layer order) as a flat span.
  template <typename F>
  void for_each_tensor(F&& f) {
    for (auto& l : layers_) {
      f(std::span<Scalar>(l.weight.data(), static_cast<std::size_t>(l.weight.size())));
      f(std::span<Scalar>(l.bias.data(), static_cast<std::size_t>(l.bias.size())));
    }
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    for (const auto& l : layers_) {
      f(std::span<const Scalar>(l.weight.data(), static_cast<std::size_t>(l.weight.size())));
      f(std::span<const Scalar>(l.bias.data(), static_cast<std::size_t>(l.bias.size())));
    }
  }

  bool all_finite() const {
    for (const auto& l : layers_)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }

  /// Log-probabilities for a batch; columns of `x` are samples.
  Matrix forward_batch(const Matrix& x) const {
    check_input_rows(x.rows());
    Matrix h = x;
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
      const Layer& layer = layers_[l];
      Matrix z = layer.weight * h;
      z.colwise() += layer.bias;
      activate(z);
      if (layer.residual)
        h += z;
      else
        h = std::move(z);
      if (!h.allFinite())
        throw NumericError("non-finite activation in hidden layer " + std::to_string(l + 1));
    }
    Matrix logits = layers_.back().weight * h;
    logits.colwise() += layers_.back().bias;
    if (!logits.allFinite()) throw NumericError("non-finite activation in output layer");
    return log_softmax(logits);
  }

  ClassScores forward(std::span<const Scalar> x) const {
    if (x.size() != arch_.input_dim)
      throw ShapeError("feature dimension " + std::to_string(x.size()) +
                       " does not match model input " + std::to_string(arch_.input_dim));
    const Matrix in = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
    const Matrix out = forward_batch(in);
    ClassScores s;
    for (std::size_t i = 0; i < kNumClasses && i < static_cast<std::size_t>(out.rows()); ++i)
      s.log_probs[i] = static_cast<double>(out(static_cast<Eigen::Index>(i), 0));
    return s;
  }

  /// Adds the gradient of the summed NLL over the batch into `grad` and
  /// returns the summed loss. `grad` must share this model's shape.
  Scalar accumulate_gradient(const Matrix& x, std::span<const int> labels, Mlp& grad) const {
    check_input_rows(x.rows());
    if (static_cast<std::size_t>(x.cols()) != labels.size())
      throw ShapeError("batch has " + std::to_string(x.cols()) + " samples but " +
                       std::to_string(labels.size()) + " labels");
    const std::size_t hidden = layers_.size() - 1;

    // inputs[l] is the input to layer l; pre[l] the pre-activation.
    std::vector<Matrix> inputs(layers_.size());
    std::vector<Matrix> pre(hidden);
    inputs[0] = x;
    for (std::size_t l = 0; l < hidden; ++l) {
      const Layer& layer = layers_[l];
      pre[l] = layer.weight * inputs[l];
      pre[l].colwise() += layer.bias;
      Matrix a = pre[l];
      activate(a);
      if (layer.residual) a += inputs[l];
      if (!a.allFinite())
        throw NumericError("non-finite activation in hidden layer " + std::to_string(l + 1));
      inputs[l + 1] = std::move(a);
    }
    Matrix logits = layers_.back().weight * inputs[hidden];
    logits.colwise() += layers_.back().bias;
    if (!logits.allFinite()) throw NumericError("non-finite activation in output layer");
    const Matrix logp = log_softmax(logits);

    Scalar loss = 0;
    Matrix delta = logp.array().exp().matrix();  // softmax - onehot
    for (Eigen::Index c = 0; c < delta.cols(); ++c) {
      const int y = labels[static_cast<std::size_t>(c)];
      if (y < 0 || y >= static_cast<int>(arch_.output_dim))
        throw ArgumentError("label " + std::to_string(y) + " out of range");
      loss -= logp(y, c);
      delta(y, c) -= Scalar(1);
    }

    // Head.
    grad.layers_.back().weight.noalias() += delta * inputs[hidden].transpose();
    grad.layers_.back().bias += delta.rowwise().sum();
    Matrix dh = layers_.back().weight.transpose() * delta;

    for (std::size_t l = hidden; l-- > 0;) {
      const Layer& layer = layers_[l];
      Matrix dz = dh;
      activation_backward(pre[l], dz);
      grad.layers_[l].weight.noalias() += dz * inputs[l].transpose();
      grad.layers_[l].bias += dz.rowwise().sum();
      if (l == 0) break;
      Matrix dx = layer.weight.transpose() * dz;
      if (layer.residual) dx += dh;
      dh = std::move(dx);
    }
    return loss;
  }

  struct LossAndGrad {
    Scalar loss;
    Mlp grad;
  };

  /// Mean NLL over the batch and its gradient. Throws ArgumentError on an empty batch.
  LossAndGrad loss_and_grad(const Matrix& x, std::span<const int> labels) const {
    if (labels.empty() || x.cols() == 0) throw ArgumentError("empty batch");
    Mlp grad(arch_);
    const Scalar sum = accumulate_gradient(x, labels, grad);
    const Scalar inv = Scalar(1) / static_cast<Scalar>(labels.size());
    grad.scale(inv);
    return {sum * inv, std::move(grad)};
  }

  void scale(Scalar s) {
    for (auto& l : layers_) {
      l.weight *= s;
      l.bias *= s;
    }
  }

  void set_zero() {
    for (auto& l : layers_) {
      l.weight.setZero();
      l.bias.setZero();
    }
  }

  template <typename Other>
  Mlp<Other> cast() const {
    Mlp<Other> out(arch_);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      out.layers()[i].weight = layers_[i].weight.template cast<Other>();
      out.layers()[i].bias = layers_[i].bias.template cast<Other>();
    }
    return out;
  }

  bool operator==(const Mlp& o) const {
    if (!(arch_ == o.arch_) || layers_.size() != o.layers_.size()) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (layers_[i].residual != o.layers_[i].residual ||
          layers_[i].weight != o.layers_[i].weight || layers_[i].bias != o.layers_[i].bias)
        return false;
    }
    return true;
  }

 private:
  void check_input_rows(Eigen::Index rows) const {
    if (static_cast<std::size_t>(rows) != arch_.input_dim)
      throw ShapeError("feature dimension " + std::to_string(rows) +
                       " does not match model input " + std::to_string(arch_.input_dim));
  }

  void activate(Matrix& z) const {
    if (arch_.activation == Activation::Relu)
      z = z.cwiseMax(Scalar(0));
    else
      z = z.array().tanh().matrix();
  }

  // dz <- dz * act'(pre)
  void activation_backward(const Matrix& pre, Matrix& dz) const {
    if (arch_.activation == Activation::Relu) {
      dz = (pre.array() > Scalar(0)).select(dz, Scalar(0));
    } else {
      dz = (dz.array() * (Scalar(1) - pre.array().tanh().square())).matrix();
    }
  }

  static Matrix log_softmax(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      const Scalar m = logits.col(c).maxCoeff();
      const Scalar lse = m + std::log((logits.col(c).array() - m).exp().sum());
      out.col(c) = logits.col(c).array() - lse;
    }
    return out;
  }

  MlpArchitecture arch_;
  std::vector<Layer> layers_;
};

}  // namespace texsense

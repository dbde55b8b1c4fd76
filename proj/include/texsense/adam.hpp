#pragma once

#include <cmath>
#include <cstdint>

#include "texsense/mlp.hpp"

namespace texsense {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected moment estimates, one moment pair per parameter.
template <typename Scalar>
class Adam {
 public:
  Adam(const MlpArchitecture& arch, AdamConfig cfg) : cfg_(cfg), m_(arch), v_(arch) {}

  void step(Mlp<Scalar>& params, const Mlp<Scalar>& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const auto b1 = static_cast<Scalar>(cfg_.beta1);
    const auto b2 = static_cast<Scalar>(cfg_.beta2);
    const auto lr = static_cast<Scalar>(cfg_.learning_rate);
    const auto eps = static_cast<Scalar>(cfg_.epsilon);
    const auto inv_c1 = static_cast<Scalar>(1.0 / c1);
    const auto inv_sqrt_c2 = static_cast<Scalar>(1.0 / std::sqrt(c2));

    auto& p_layers = params.layers();
    const auto& g_layers = grad.layers();
    auto& m_layers = m_.layers();
    auto& v_layers = v_.layers();
    for (std::size_t l = 0; l < p_layers.size(); ++l) {
      update(p_layers[l].weight.array(), g_layers[l].weight.array(), m_layers[l].weight.array(),
             v_layers[l].weight.array(), b1, b2, lr, eps, inv_c1, inv_sqrt_c2);
      update(p_layers[l].bias.array(), g_layers[l].bias.array(), m_layers[l].bias.array(),
             v_layers[l].bias.array(), b1, b2, lr, eps, inv_c1, inv_sqrt_c2);
    }
  }

  std::uint64_t steps() const { return t_; }

 private:
  template <typename P, typename G, typename M, typename V>
  static void update(P&& p, const G& g, M&& m, V&& v, Scalar b1, Scalar b2, Scalar lr, Scalar eps,
                     Scalar inv_c1, Scalar inv_sqrt_c2) {
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.square();
    p -= lr * (m * inv_c1) / ((v.sqrt() * inv_sqrt_c2) + eps);
  }

  AdamConfig cfg_;
  Mlp<Scalar> m_;
  Mlp<Scalar> v_;
  std::uint64_t t_ = 0;
};

}  // namespace texsense

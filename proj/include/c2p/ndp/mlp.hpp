#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <vector>

#include "c2p/error.hpp"
#include "c2p/rng.hpp"

namespace c2p::ndp {

/// Dense network: `depth` tanh hidden layers of `width` units and a linear
/// head. Weights and biases are stored as one list of matrices
/// [W0, b0, W1, b1, ...] so optimisers can treat them uniformly.
class Mlp {
 public:
  using Params = std::vector<Eigen::MatrixXd>;

  Mlp() = default;

  Mlp(int inputs, int width, int depth, int outputs) {
    if (inputs < 1 || width < 1 || depth < 1 || outputs < 1)
      throw Error(ErrorCode::InvalidConfig, "MLP dimensions must be >= 1");
    int fan_in = inputs;
    for (int l = 0; l < depth; ++l) {
      params_.push_back(Eigen::MatrixXd::Zero(width, fan_in));
      params_.push_back(Eigen::MatrixXd::Zero(width, 1));
      fan_in = width;
    }
    params_.push_back(Eigen::MatrixXd::Zero(outputs, fan_in));
    params_.push_back(Eigen::MatrixXd::Zero(outputs, 1));
  }

  /// Glorot-uniform hidden weights; the head stays zero so an untrained
  /// network outputs exactly zero.
  void initialize(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x3170));
    for (std::size_t l = 0; l + 2 < params_.size(); l += 2) {
      auto& w = params_[l];
      const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-limit, limit);
      params_[l + 1].setZero();
    }
    params_[params_.size() - 2].setZero();
    params_.back().setZero();
  }

  std::size_t layers() const { return params_.size() / 2; }
  Params& params() { return params_; }
  const Params& params() const { return params_; }

  struct Cache {
    std::vector<Eigen::MatrixXd> activations;  // input, then each hidden output
  };

  /// Outputs for a batch of column inputs.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache* cache = nullptr) const {
    Eigen::MatrixXd h = x;
    if (cache) {
      cache->activations.clear();
      cache->activations.push_back(h);
    }
    for (std::size_t l = 0; l + 1 < layers(); ++l) {
      Eigen::MatrixXd z = params_[2 * l] * h;
      z.colwise() += params_[2 * l + 1].col(0);
      h = z.array().tanh().matrix();
      if (cache) cache->activations.push_back(h);
    }
    Eigen::MatrixXd y = params_[params_.size() - 2] * h;
    y.colwise() += params_.back().col(0);
    return y;
  }

  struct Gradients {
    Params params;
    Eigen::MatrixXd inputs;
  };

  /// Reverse pass for dL/dy = `dy`, using the cache of the matching forward.
  Gradients backward(const Cache& cache, const Eigen::MatrixXd& dy) const {
    Gradients g;
    g.params.resize(params_.size());
    Eigen::MatrixXd delta = dy;
    for (std::size_t l = layers(); l-- > 0;) {
      const Eigen::MatrixXd& h_in = cache.activations[l];
      g.params[2 * l] = delta * h_in.transpose();
      g.params[2 * l + 1] = delta.rowwise().sum();
      Eigen::MatrixXd back = params_[2 * l].transpose() * delta;
      if (l > 0) {
        // h_in = tanh(z): dz = back * (1 - h^2)
        back.array() *= (1.0 - h_in.array().square());
      }
      delta = std::move(back);
    }
    g.inputs = std::move(delta);
    return g;
  }

 private:
  Params params_;
};

struct ForwardBackward {
  Eigen::MatrixXd outputs;
  Mlp::Params weight_gradients;
  Eigen::MatrixXd input_gradients;
};

/// One forward and reverse pass; throws NumericalError on non-finite values.
inline ForwardBackward mlp_forward_backward(const Mlp& net, const Eigen::MatrixXd& inputs,
                                            const Eigen::MatrixXd& output_gradients) {
  Mlp::Cache cache;
  ForwardBackward r;
  r.outputs = net.forward(inputs, &cache);
  if (!r.outputs.allFinite()) throw Error(ErrorCode::NumericalError, "MLP produced non-finite outputs");
  auto g = net.backward(cache, output_gradients);
  for (const auto& p : g.params)
    if (!p.allFinite()) throw Error(ErrorCode::NumericalError, "MLP produced non-finite gradients");
  r.weight_gradients = std::move(g.params);
  r.input_gradients = std::move(g.inputs);
  return r;
}

/// Adam with an exponentially decaying learning rate.
class Adam {
 public:
  Adam(const Mlp::Params& shape, double lr, double decay, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : lr_(lr), decay_(decay), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : shape) {
      m_.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
      v_.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
    }
  }

  void step(Mlp::Params& params, const Mlp::Params& grads) {
    ++t_;
    const double lr = lr_ * std::pow(decay_, static_cast<double>(t_ - 1));
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i].cwiseAbs2();
      params[i].array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
    }
  }

  long steps() const { return t_; }

 private:
  double lr_, decay_, beta1_, beta2_, eps_;
  std::vector<Eigen::MatrixXd> m_, v_;
  long t_ = 0;
};

}  // namespace c2p::ndp

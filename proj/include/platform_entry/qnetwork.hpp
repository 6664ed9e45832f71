#pragma once

// Two-hidden-layer ReLU network mapping an observation encoding to one value
// per action, with the squared TD-error gradient written out by hand.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace platform_entry {

class QNetwork {
 public:
  QNetwork() = default;

  QNetwork(std::size_t n_inputs, std::size_t n_actions, std::uint64_t seed, std::size_t hidden = 64)
      : w1_(Eigen::MatrixXd::Zero(idx(hidden), idx(n_inputs))),
        b1_(Eigen::VectorXd::Zero(idx(hidden))),
        w2_(Eigen::MatrixXd::Zero(idx(hidden), idx(hidden))),
        b2_(Eigen::VectorXd::Zero(idx(hidden))),
        w3_(Eigen::MatrixXd::Zero(idx(n_actions), idx(hidden))),
        b3_(Eigen::VectorXd::Zero(idx(n_actions))) {
    if (n_inputs == 0 || n_actions == 0 || hidden == 0) throw std::invalid_argument("network dimensions must be > 0");
    std::mt19937_64 rng(seed);
    he_uniform(w1_, rng);
    he_uniform(w2_, rng);
    he_uniform(w3_, rng);
  }

  std::size_t n_inputs() const { return static_cast<std::size_t>(w1_.cols()); }
  std::size_t n_actions() const { return static_cast<std::size_t>(w3_.rows()); }
  std::size_t hidden() const { return static_cast<std::size_t>(w1_.rows()); }
  std::size_t n_parameters() const {
    return static_cast<std::size_t>(w1_.size() + b1_.size() + w2_.size() + b2_.size() + w3_.size() + b3_.size());
  }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const {
    Eigen::VectorXd h1 = (w1_ * x + b1_).cwiseMax(0.0);
    Eigen::VectorXd h2 = (w2_ * h1 + b2_).cwiseMax(0.0);
    return w3_ * h2 + b3_;
  }

  /// Columns of x are samples; returns actions x samples.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd h1 = ((w1_ * x).colwise() + b1_).cwiseMax(0.0);
    Eigen::MatrixXd h2 = ((w2_ * h1).colwise() + b2_).cwiseMax(0.0);
    return (w3_ * h2).colwise() + b3_;
  }

  /// Highest value, lowest index on ties.
  int greedy(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd q = forward(x);
    Eigen::Index best = 0;
    for (Eigen::Index a = 1; a < q.size(); ++a)
      if (q[a] > q[best]) best = a;
    return static_cast<int>(best);
  }

  /// Loss 1/(2B) sum_b (Q(x_b, a_b) - y_b)^2 and its gradient in the order of
  /// parameters().
  double td_loss(const Eigen::MatrixXd& x, const std::vector<int>& actions, const Eigen::VectorXd& targets,
                 Eigen::VectorXd* grad) const {
    const Eigen::Index batch = x.cols();
    if (static_cast<Eigen::Index>(actions.size()) != batch || targets.size() != batch)
      throw std::invalid_argument("batch shapes disagree");
    const Eigen::MatrixXd z1 = (w1_ * x).colwise() + b1_;
    const Eigen::MatrixXd h1 = z1.cwiseMax(0.0);
    const Eigen::MatrixXd z2 = (w2_ * h1).colwise() + b2_;
    const Eigen::MatrixXd h2 = z2.cwiseMax(0.0);
    const Eigen::MatrixXd q = (w3_ * h2).colwise() + b3_;

    Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(q.rows(), batch);
    double loss = 0.0;
    for (Eigen::Index b = 0; b < batch; ++b) {
      const double err = q(actions[static_cast<std::size_t>(b)], b) - targets[b];
      loss += err * err;
      dq(actions[static_cast<std::size_t>(b)], b) = err / static_cast<double>(batch);
    }
    loss /= 2.0 * static_cast<double>(batch);
    if (!grad) return loss;

    const Eigen::MatrixXd gw3 = dq * h2.transpose();
    const Eigen::VectorXd gb3 = dq.rowwise().sum();
    const Eigen::MatrixXd dz2 = (w3_.transpose() * dq).cwiseProduct((z2.array() > 0.0).cast<double>().matrix());
    const Eigen::MatrixXd gw2 = dz2 * h1.transpose();
    const Eigen::VectorXd gb2 = dz2.rowwise().sum();
    const Eigen::MatrixXd dz1 = (w2_.transpose() * dz2).cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
    const Eigen::MatrixXd gw1 = dz1 * x.transpose();
    const Eigen::VectorXd gb1 = dz1.rowwise().sum();

    grad->resize(static_cast<Eigen::Index>(n_parameters()));
    Eigen::Index k = 0;
    auto put = [&](const auto& m) {
      grad->segment(k, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
      k += m.size();
    };
    put(gw1);
    put(gb1);
    put(gw2);
    put(gb2);
    put(gw3);
    put(gb3);
    return loss;
  }

  Eigen::VectorXd parameters() const {
    Eigen::VectorXd p(static_cast<Eigen::Index>(n_parameters()));
    Eigen::Index k = 0;
    auto put = [&](const auto& m) {
      p.segment(k, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
      k += m.size();
    };
    put(w1_);
    put(b1_);
    put(w2_);
    put(b2_);
    put(w3_);
    put(b3_);
    return p;
  }

  void set_parameters(const Eigen::VectorXd& p) {
    if (p.size() != static_cast<Eigen::Index>(n_parameters())) throw std::invalid_argument("parameter vector size");
    Eigen::Index k = 0;
    auto take = [&](auto& m) {
      Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = p.segment(k, m.size());
      k += m.size();
    };
    take(w1_);
    take(b1_);
    take(w2_);
    take(b2_);
    take(w3_);
    take(b3_);
  }

  /// Adds delta to the parameters in place.
  void add_to_parameters(const Eigen::VectorXd& delta) { set_parameters(parameters() + delta); }

  friend bool operator==(const QNetwork& a, const QNetwork& b) {
    return a.w1_ == b.w1_ && a.b1_ == b.b1_ && a.w2_ == b.w2_ && a.b2_ == b.b2_ && a.w3_ == b.w3_ && a.b3_ == b.b3_;
  }

 private:
  static Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

  static void he_uniform(Eigen::MatrixXd& w, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.cols()));
    for (Eigen::Index q = 0; q < w.size(); ++q) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      w.data()[q] = (2.0 * u - 1.0) * bound;
    }
  }

  Eigen::MatrixXd w1_;
  Eigen::VectorXd b1_;
  Eigen::MatrixXd w2_;
  Eigen::VectorXd b2_;
  Eigen::MatrixXd w3_;
  Eigen::VectorXd b3_;
};

enum class OptimizerKind { kSgd, kAdam };

/// Gradient step on a QNetwork. Adam keeps its moment estimates here.
class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(OptimizerKind kind, double lr) : kind_(kind), lr_(lr) {
    if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  }

  void step(QNetwork& net, const Eigen::VectorXd& grad) {
    if (kind_ == OptimizerKind::kSgd) {
      net.add_to_parameters(-lr_ * grad);
      return;
    }
    if (m_.size() != grad.size()) {
      m_ = Eigen::VectorXd::Zero(grad.size());
      v_ = Eigen::VectorXd::Zero(grad.size());
    }
    ++t_;
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    m_ = b1 * m_ + (1.0 - b1) * grad;
    v_ = b2 * v_ + (1.0 - b2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    const Eigen::VectorXd denom = (v_ / c2).cwiseSqrt().array() + eps;
    net.add_to_parameters(-lr_ * (m_ / c1).cwiseQuotient(denom));
  }

  OptimizerKind kind() const { return kind_; }
  double learning_rate() const { return lr_; }
  void reset() {
    m_.resize(0);
    v_.resize(0);
    t_ = 0;
  }

 private:
  OptimizerKind kind_ = OptimizerKind::kSgd;
  double lr_ = 1e-4;
  Eigen::VectorXd m_, v_;
  long long t_ = 0;
};

}  // namespace platform_entry

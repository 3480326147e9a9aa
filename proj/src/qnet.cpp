#include "swarmgrid/qnet.hpp"

#include <cmath>

#include "swarmgrid/error.hpp"

namespace swarmgrid::dqn {

namespace {

Matrix hidden_activations(const QNetwork& net, const Matrix& batch) {
  Matrix pre = batch * net.w1.transpose();
  pre.rowwise() += net.b1.transpose();
  return pre.cwiseMax(0.0);
}

void check_batch(const QNetwork& net, const Matrix& batch) {
  if (batch.cols() != net.input_size()) {
    fail(ErrorCode::kContract, "observation width " + std::to_string(batch.cols()) + " does not match network input " +
                                   std::to_string(net.input_size()));
  }
}

}  // namespace

bool QNetwork::all_finite() const { return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite(); }

QNetwork init_network(int64_t input, int64_t actions, int64_t hidden, uint64_t seed) {
  if (input < 1 || actions < 1 || hidden < 1) {
    fail(ErrorCode::kInvalidConfig, "network dimensions must be positive (input " + std::to_string(input) +
                                        ", hidden " + std::to_string(hidden) + ", actions " + std::to_string(actions) +
                                        ")");
  }
  Rng rng(seed);
  auto fill = [&](Matrix& m, double scale) {
    for (int64_t i = 0; i < m.rows(); ++i) {
      for (int64_t j = 0; j < m.cols(); ++j) m(i, j) = (2.0 * rng.uniform() - 1.0) * scale;
    }
  };
  QNetwork net;
  net.w1.resize(hidden, input);
  net.w2.resize(actions, hidden);
  fill(net.w1, 1.0 / std::sqrt(static_cast<double>(input)));
  fill(net.w2, 1.0 / std::sqrt(static_cast<double>(hidden)));
  net.b1 = Vector::Zero(hidden);
  net.b2 = Vector::Zero(actions);
  return net;
}

Matrix q_forward(const QNetwork& net, const Matrix& batch) {
  check_batch(net, batch);
  Matrix q = hidden_activations(net, batch) * net.w2.transpose();
  q.rowwise() += net.b2.transpose();
  return q;
}

std::vector<double> td_targets(const QNetwork& target, const TransitionBatch& batch, double gamma) {
  std::vector<double> y(batch.size());
  Matrix next_q;
  if (gamma != 0.0) next_q = q_forward(target, batch.next_obs);
  for (size_t i = 0; i < batch.size(); ++i) {
    y[i] = batch.rewards[i];
    if (!batch.done[i] && gamma != 0.0) y[i] += gamma * next_q.row(static_cast<int64_t>(i)).maxCoeff();
  }
  return y;
}

double td_loss(const QNetwork& net, const TransitionBatch& batch, std::span<const double> targets) {
  Matrix q = q_forward(net, batch.obs);
  double sum = 0.0;
  for (size_t i = 0; i < batch.size(); ++i) {
    double err = q(static_cast<int64_t>(i), batch.actions[i]) - targets[i];
    sum += err * err;
  }
  return sum / static_cast<double>(batch.size());
}

double td_gradients(const QNetwork& net, const TransitionBatch& batch, std::span<const double> targets,
                    Gradients& g) {
  check_batch(net, batch.obs);
  const auto n = static_cast<int64_t>(batch.size());
  if (n == 0) fail(ErrorCode::kContract, "empty transition batch");
  Matrix h = hidden_activations(net, batch.obs);
  Matrix q = h * net.w2.transpose();
  q.rowwise() += net.b2.transpose();

  // dL/dq is nonzero only at the taken action.
  Matrix dq = Matrix::Zero(n, net.action_count());
  double sum = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    ActionIndex a = batch.actions[static_cast<size_t>(i)];
    double err = q(i, a) - targets[static_cast<size_t>(i)];
    sum += err * err;
    dq(i, a) = 2.0 * err / static_cast<double>(n);
  }
  g.w2 = dq.transpose() * h;
  g.b2 = dq.colwise().sum().transpose();
  Matrix dh = dq * net.w2;
  dh = dh.cwiseProduct((h.array() > 0.0).cast<double>().matrix());
  g.w1 = dh.transpose() * batch.obs;
  g.b1 = dh.colwise().sum().transpose();
  return sum / static_cast<double>(n);
}

TdUpdate td_update(const QNetwork& params, const QNetwork& target, const TransitionBatch& batch, double gamma,
                   double lr) {
  auto y = td_targets(target, batch, gamma);
  Gradients g;
  double loss = td_gradients(params, batch, y, g);
  if (!std::isfinite(loss)) fail(ErrorCode::kDivergence, "non-finite TD loss");
  TdUpdate out{params, loss};
  out.params.w1 -= lr * g.w1;
  out.params.b1 -= lr * g.b1;
  out.params.w2 -= lr * g.w2;
  out.params.b2 -= lr * g.b2;
  return out;
}

Adam::Adam(const QNetwork& like, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (Gradients* s : {&m_, &v_}) {
    s->w1 = Matrix::Zero(like.w1.rows(), like.w1.cols());
    s->b1 = Vector::Zero(like.b1.size());
    s->w2 = Matrix::Zero(like.w2.rows(), like.w2.cols());
    s->b2 = Vector::Zero(like.b2.size());
  }
}

void Adam::apply(QNetwork& net, const Gradients& g) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto step = [&](auto& param, auto& m, auto& v, const auto& grad) {
    m = beta1_ * m + (1.0 - beta1_) * grad;
    v = beta2_ * v + (1.0 - beta2_) * grad.cwiseProduct(grad);
    param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  };
  step(net.w1, m_.w1, v_.w1, g.w1);
  step(net.b1, m_.b1, v_.b1, g.b1);
  step(net.w2, m_.w2, v_.w2, g.w2);
  step(net.b2, m_.b2, v_.b2, g.b2);
}

std::vector<ActionIndex> greedy_actions(const Matrix& q) {
  std::vector<ActionIndex> out(static_cast<size_t>(q.rows()));
  for (int64_t i = 0; i < q.rows(); ++i) {
    int64_t best = 0;
    for (int64_t j = 1; j < q.cols(); ++j) {
      if (q(i, j) > q(i, best)) best = j;
    }
    out[static_cast<size_t>(i)] = static_cast<ActionIndex>(best);
  }
  return out;
}

std::vector<ActionIndex> act_epsilon_greedy(const QNetwork& net, const Matrix& batch, double epsilon, Rng& rng) {
  std::vector<ActionIndex> out = greedy_actions(q_forward(net, batch));
  const auto n_actions = static_cast<uint64_t>(net.action_count());
  for (auto& a : out) {
    if (rng.uniform() < epsilon) a = static_cast<ActionIndex>(rng.below(n_actions));
  }
  return out;
}

}  // namespace swarmgrid::dqn

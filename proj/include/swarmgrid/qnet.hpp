#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "swarmgrid/rng.hpp"
#include "swarmgrid/world.hpp"

namespace swarmgrid::dqn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// One-hidden-layer ReLU network mapping a flattened observation to one
/// Q-value per action. Shared by every agent of a group.
struct QNetwork {
  Matrix w1;  // [hidden, input]
  Vector b1;  // [hidden]
  Matrix w2;  // [actions, hidden]
  Vector b2;  // [actions]

  int64_t input_size() const { return w1.cols(); }
  int64_t hidden_size() const { return w1.rows(); }
  int64_t action_count() const { return w2.rows(); }
  bool all_finite() const;
  bool operator==(const QNetwork& o) const {
    return w1 == o.w1 && b1 == o.b1 && w2 == o.w2 && b2 == o.b2;
  }
};

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
QNetwork init_network(int64_t input, int64_t actions, int64_t hidden, uint64_t seed);

/// Rows of `batch` are observations; returns [N, actions].
Matrix q_forward(const QNetwork& net, const Matrix& batch);

struct TransitionBatch {
  Matrix obs;                        // [N, input]
  std::vector<ActionIndex> actions;  // [N]
  std::vector<double> rewards;       // [N]
  Matrix next_obs;                   // [N, input]; rows ignored where done
  std::vector<uint8_t> done;         // [N]

  size_t size() const { return actions.size(); }
};

struct Gradients {
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;
};

/// Targets r + gamma * max_a' Q_target(s', a'), with no bootstrap on done.
std::vector<double> td_targets(const QNetwork& target, const TransitionBatch& batch, double gamma);

/// Mean squared TD error of `net` against fixed targets.
double td_loss(const QNetwork& net, const TransitionBatch& batch, std::span<const double> targets);

/// Analytic gradient of td_loss. Returns the loss alongside.
double td_gradients(const QNetwork& net, const TransitionBatch& batch, std::span<const double> targets,
                    Gradients& grads);

struct TdUpdate {
  QNetwork params;
  double loss = 0.0;
};

/// One plain gradient-descent step. Throws Error(kDivergence) on a non-finite loss.
TdUpdate td_update(const QNetwork& params, const QNetwork& target, const TransitionBatch& batch, double gamma,
                   double lr);

/// Adam optimiser state for one network.
class Adam {
 public:
  explicit Adam(const QNetwork& like, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void apply(QNetwork& net, const Gradients& g);

 private:
  double lr_, beta1_, beta2_, eps_;
  uint64_t t_ = 0;
  Gradients m_, v_;
};

/// Per row: with probability epsilon a uniform action, else the argmax with
/// the lowest index winning ties.
std::vector<ActionIndex> act_epsilon_greedy(const QNetwork& net, const Matrix& batch, double epsilon, Rng& rng);

/// Lowest-index argmax of each row.
std::vector<ActionIndex> greedy_actions(const Matrix& q);

}  // namespace swarmgrid::dqn

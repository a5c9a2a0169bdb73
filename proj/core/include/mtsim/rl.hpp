#pragma once

#include <span>
#include <vector>

#include "mtsim/qnet.hpp"
#include "mtsim/rng.hpp"
#include "mtsim/vehicle.hpp"

namespace mtsim {

// The navigation action set. Order is fixed: ties in action selection
// resolve to the lowest index.
enum class NavAction : std::uint8_t {
  Left = 0,
  Right = 1,
  Backward = 2,
  SpeedUp = 3,
  SpeedDown = 4,
};
inline constexpr int kNavActionCount = 5;

using StateVector = std::vector<double>;

// Normalisation bounds for the state encoding.
struct EncodingParams {
  int sensor_range = 12;
  int map_diameter = 198;  // width + height of the map
  int qt_cap = 200;        // stopped steps mapped to 1.0
  int ql_cap = 12;         // queue length mapped to 1.0
  bool with_td = false;    // append the destination-direction one-hot

  int dimension() const { return with_td ? 16 : 12; }
};

// [tl, tr, tb, de, df, db, qt, ql, heading one-hot] -> [0,1]^12
// (+4 when the destination direction is appended).
StateVector encode_state(const SensorFrame& frame, const EncodingParams& params);

// Epsilon-greedy over the five actions; greedy ties break to the lowest
// index. The uniform branch draws from the given stream.
NavAction select_action(std::span<const double> qvalues, double epsilon, Rng& rng);

struct RewardWeights {
  double a = 1.0;
  double b = 1.0;
  double c = 1.0;

  double sum() const { return a + b + c; }
};

struct RunningAverages {
  bool initialized = false;
  double v0 = 0.0;
  double qt0 = 0.0;
  double sd = 0.0;
};

// Window progress used as the sd reward input; negative progress counts
// as zero so the ratio term stays well-defined.
inline double progress_sample(const SensorFrame& frame) {
  return frame.d_de > 0 ? static_cast<double>(frame.d_de) : 0.0;
}

// Signed ratio (x - xbar) / max(x, xbar); 0 when both inputs are 0.
// Antisymmetric in its arguments for non-negative inputs.
double normalised_ratio(double x, double xbar);

// r = a*n(v0) - b*n(qt0) + c*n(sd): above-average speed and progress score
// positive, above-average queuing scores negative. |r| <= a+b+c.
double reward(const SensorFrame& frame, const RunningAverages& avg,
              const RewardWeights& w);

// The learner-visible reward rescaled into [-1, 1].
inline double normalised_reward(double r, const RewardWeights& w) {
  return w.sum() > 0.0 ? r / w.sum() : 0.0;
}

struct Transition {
  StateVector state;
  int action = 0;
  double reward = 0.0;
  StateVector next_state;
  bool terminal = false;
};

struct Hyperparams {
  int hidden = 32;
  double gamma = 0.9;
  double learning_rate = 1e-3;
  double epsilon_start = 0.5;
  double epsilon_end = 0.05;
  long long epsilon_decay_decisions = 20000;
  int replay_capacity = 4096;
  int batch_size = 32;
  int target_sync = 500;  // updates between target-network refreshes
};

// One gradient step toward r + gamma * max_a' Q_target(s', a') (just r on
// terminal transitions). Returns the batch loss. Throws RuntimeFault when
// the loss goes non-finite.
double dqn_update(QNetwork& policy, const QNetwork& target,
                  std::span<const Transition> batch, const Hyperparams& h);

class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity) : capacity_(capacity) {}

  void push(Transition t);
  int size() const { return static_cast<int>(items_.size()); }

  // Uniform sample with replacement.
  std::vector<Transition> sample(int n, Rng& rng) const;

 private:
  int capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

// One learner per vehicle: policy and target networks, replay memory and
// the epsilon schedule. A learner is a value; sharing a model across
// vehicles means copying its serialized weights.
class DqnLearner {
 public:
  DqnLearner(QNetwork net, Hyperparams h, std::uint64_t seed);

  NavAction propose(const StateVector& state);
  void observe(Transition t);

  double epsilon() const;
  long long decisions() const { return decisions_; }
  const QNetwork& policy() const { return policy_; }
  QNetwork& policy() { return policy_; }

  // Adopt a shared model; the epsilon schedule resumes from its training age.
  void load_policy(const QNetwork& net);

 private:
  QNetwork policy_;
  QNetwork target_;
  Hyperparams h_;
  ReplayBuffer replay_;
  Rng rng_;
  long long decisions_ = 0;
  long long updates_ = 0;
};

}  // namespace mtsim

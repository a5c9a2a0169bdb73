#include "mtsim/rl.hpp"

#include <algorithm>
#include <cmath>

#include "mtsim/errors.hpp"

namespace mtsim {

namespace {

double unit_clamp(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

StateVector encode_state(const SensorFrame& frame, const EncodingParams& params) {
  StateVector s;
  s.reserve(params.dimension());
  s.push_back(frame.tl ? 1.0 : 0.0);
  s.push_back(frame.tr ? 1.0 : 0.0);
  s.push_back(frame.tb ? 1.0 : 0.0);
  s.push_back(unit_clamp(static_cast<double>(frame.de) / params.map_diameter));
  s.push_back(unit_clamp(static_cast<double>(frame.df0) / params.sensor_range));
  s.push_back(unit_clamp(static_cast<double>(frame.db0) / params.sensor_range));
  s.push_back(unit_clamp(static_cast<double>(frame.qt0) / params.qt_cap));
  s.push_back(unit_clamp(static_cast<double>(frame.ql) / params.ql_cap));
  for (Compass c : kCompassOrder) s.push_back(frame.r0 == c ? 1.0 : 0.0);
  if (params.with_td)
    for (Compass c : kCompassOrder) s.push_back(frame.td0 == c ? 1.0 : 0.0);
  return s;
}

NavAction select_action(std::span<const double> qvalues, double epsilon, Rng& rng) {
  if (static_cast<int>(qvalues.size()) != kNavActionCount)
    throw DomainError("select_action: expected 5 action values");
  if (epsilon > 0.0 && rng.uniform_double() < epsilon)
    return static_cast<NavAction>(rng.uniform_u32(kNavActionCount));
  int best = 0;
  for (int i = 1; i < kNavActionCount; ++i)
    if (qvalues[i] > qvalues[best]) best = i;
  return static_cast<NavAction>(best);
}

double normalised_ratio(double x, double xbar) {
  const double m = std::max(x, xbar);
  return m <= 0.0 ? 0.0 : (x - xbar) / m;
}

double reward(const SensorFrame& frame, const RunningAverages& avg,
              const RewardWeights& w) {
  const double sd = progress_sample(frame);
  return w.a * normalised_ratio(frame.v0, avg.v0) -
         w.b * normalised_ratio(static_cast<double>(frame.qt0), avg.qt0) +
         w.c * normalised_ratio(sd, avg.sd);
}

double dqn_update(QNetwork& policy, const QNetwork& target,
                  std::span<const Transition> batch, const Hyperparams& h) {
  if (batch.empty()) throw DomainError("dqn_update: empty batch");

  std::vector<std::vector<double>> inputs;
  std::vector<int> actions;
  std::vector<double> targets;
  inputs.reserve(batch.size());
  actions.reserve(batch.size());
  targets.reserve(batch.size());
  for (const Transition& t : batch) {
    double y = t.reward;
    if (!t.terminal) {
      std::vector<double> q = target.forward(t.next_state);
      y += h.gamma * *std::max_element(q.begin(), q.end());
    }
    inputs.push_back(t.state);
    actions.push_back(t.action);
    targets.push_back(y);
  }

  QNetwork::Gradients grads;
  const double loss = policy.loss_and_gradients(inputs, actions, targets, grads);
  if (!std::isfinite(loss))
    throw RuntimeFault("dqn_update: non-finite loss (diverged); check reward "
                       "scaling and learning rate");
  policy.apply_gradients(grads, h.learning_rate);
  return loss;
}

void ReplayBuffer::push(Transition t) {
  if (static_cast<int>(items_.size()) < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[next_] = std::move(t);
    next_ = (next_ + 1) % capacity_;
  }
}

std::vector<Transition> ReplayBuffer::sample(int n, Rng& rng) const {
  std::vector<Transition> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i)
    out.push_back(items_[rng.uniform_u32(static_cast<std::uint32_t>(items_.size()))]);
  return out;
}

DqnLearner::DqnLearner(QNetwork net, Hyperparams h, std::uint64_t seed)
    : policy_(std::move(net)),
      target_(policy_),
      h_(h),
      replay_(h.replay_capacity),
      rng_(seed) {
  decisions_ = policy_.step_counter;
}

double DqnLearner::epsilon() const {
  if (decisions_ >= h_.epsilon_decay_decisions) return h_.epsilon_end;
  const double f =
      static_cast<double>(decisions_) / static_cast<double>(h_.epsilon_decay_decisions);
  return h_.epsilon_start + (h_.epsilon_end - h_.epsilon_start) * f;
}

NavAction DqnLearner::propose(const StateVector& state) {
  std::vector<double> q = policy_.forward(state);
  NavAction a = select_action(q, epsilon(), rng_);
  ++decisions_;
  return a;
}

void DqnLearner::observe(Transition t) {
  replay_.push(std::move(t));
  if (replay_.size() < h_.batch_size) return;
  std::vector<Transition> batch = replay_.sample(h_.batch_size, rng_);
  dqn_update(policy_, target_, batch, h_);
  ++updates_;
  if (updates_ % h_.target_sync == 0) target_ = policy_;
}

void DqnLearner::load_policy(const QNetwork& net) {
  policy_ = net;
  target_ = net;
  decisions_ = net.step_counter;
}

}  // namespace mtsim

#pragma once

#include "ttvr/nn/mlp.hpp"
#include "ttvr/rl/env.hpp"

#include <functional>
#include <iosfwd>

namespace ttvr::rl {

struct SacConfig {
  int episodes = 1000;
  double discount = 0.99;
  double tau = 0.005;
  int replay_capacity = 100000;
  int batch_size = 256;
  std::vector<int> hidden_layers{64, 64};
  double learning_rate = 3e-4;
  double target_entropy = -3.0;
  double initial_alpha = 1.0;
  /// Rewards are multiplied by this before entering the Bellman targets.
  double reward_scale = 0.01;
  /// Weight of potential-based shaping w * (discount * phi(s') - phi(s)) added
  /// to stored rewards only; reported episode rewards are unshaped.
  double shaping_weight = 2.0;
  /// Uniform-random actions before the first update.
  int warmup_steps = 1000;
  int updates_per_step = 1;

  void validate() const;
};

/// Stochastic squashed-Gaussian actor over normalized actions in [-1, 1]^3,
/// plus the twin critics it was trained against.
class Policy {
 public:
  static constexpr double kLogStdMin = -20.0;
  static constexpr double kLogStdMax = 2.0;

  Policy() = default;
  Policy(nn::Mlp actor, std::array<nn::Mlp, 2> critics);
  /// Random initialization with the given hidden layer widths.
  static Policy random(const std::vector<int>& hidden, std::mt19937_64& rng);

  /// Network input: joints unchanged, centerline coordinates in units of 100 mm.
  static nn::Vector preprocess(const Observation& obs);

  /// Deterministic mode returns tanh(mean).
  Action act(const Observation& obs, bool deterministic, std::mt19937_64* rng = nullptr) const;

  nn::Mlp& actor() { return actor_; }
  const nn::Mlp& actor() const { return actor_; }
  nn::Mlp& critic(int i) { return critics_[i]; }
  const nn::Mlp& critic(int i) const { return critics_[i]; }

  nlohmann::json metadata;

  nlohmann::json to_json() const;
  static Policy from_json(const nlohmann::json& doc);

 private:
  nn::Mlp actor_;
  std::array<nn::Mlp, 2> critics_;
};

struct Transition {
  Observation obs{};
  Action action{};
  double reward = 0.0;
  Observation next_obs{};
  bool done = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity);
  void add(const Transition& t);
  std::size_t size() const { return size_; }
  const Transition& operator[](std::size_t i) const { return data_[i]; }

 private:
  std::vector<Transition> data_;
  std::size_t next_ = 0, size_ = 0;
};

/// Columns are transitions. Noise columns drive the reparameterized samples so
/// a batch can be frozen for gradient checks.
struct Minibatch {
  nn::Matrix obs, action, reward, next_obs, done;
  nn::Matrix noise_next, noise_actor;
};

struct UpdateStats {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double alpha = 0.0;
};

class SacAgent {
 public:
  SacAgent(const SacConfig& cfg, std::uint64_t seed);

  Minibatch sample(const ReplayBuffer& buffer);
  static Minibatch make_batch(const std::vector<Transition>& transitions, std::mt19937_64& rng);

  /// Bellman targets from the target critics and the current actor.
  nn::Matrix critic_targets(const Minibatch& b) const;
  /// Mean of 0.5 (Q_i - y)^2; accumulates d/dparams into `grad` when given.
  double critic_loss(int which, const Minibatch& b, const nn::Matrix& y, nn::Vector* grad) const;
  /// Mean of alpha log pi - min Q over reparameterized actions; accumulates
  /// d/d(actor params) into `grad` when given. Writes per-sample log pi.
  double actor_loss(const Minibatch& b, nn::Vector* grad, nn::Matrix* log_prob = nullptr) const;

  UpdateStats update(const Minibatch& b);

  double alpha() const { return std::exp(log_alpha_); }
  Policy& policy() { return policy_; }
  const Policy& policy() const { return policy_; }
  const nn::Mlp& target_critic(int i) const { return targets_[i]; }
  std::mt19937_64& rng() { return rng_; }
  const SacConfig& config() const { return cfg_; }

 private:
  SacConfig cfg_;
  std::mt19937_64 rng_;
  Policy policy_;
  std::array<nn::Mlp, 2> targets_;
  nn::Adam actor_opt_;
  std::array<nn::Adam, 2> critic_opt_;
  nn::Adam alpha_opt_;
  double log_alpha_ = 0.0;
};

struct EpisodeRecord {
  int episode = 0;
  double reward = 0.0;
  int length = 0;
  Terminal terminal = Terminal::running;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double alpha = 0.0;
};

struct TrainingCurves {
  std::vector<EpisodeRecord> episodes;
  void write_csv(std::ostream& os) const;
  /// Trailing moving average of episode reward.
  std::vector<double> moving_average(std::size_t window) const;
};

struct TrainingResult {
  Policy policy;
  TrainingCurves curves;
};

/// Seeded and single-threaded: identical inputs give identical curves.
/// Throws Error on a non-finite loss, naming the episode.
TrainingResult train_sac(LocalizationEnv& env, const SacConfig& cfg, std::uint64_t seed,
                         const std::function<void(const EpisodeRecord&)>& on_episode = {});

}  // namespace ttvr::rl

#include "ttvr/rl/sac.hpp"

#include <ostream>

namespace ttvr::rl {

namespace {

constexpr double kSquashEps = 1e-6;
constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr int kCriticInput = kObservationSize + kActionSize;

nn::Matrix critic_input(const nn::Matrix& obs, const nn::Matrix& action) {
  nn::Matrix x(kCriticInput, obs.cols());
  x.topRows(kObservationSize) = obs;
  x.bottomRows(kActionSize) = action;
  return x;
}

// Reparameterized squashed-Gaussian sample from actor output.
struct ActorSample {
  nn::Matrix mean, log_std, clamped, std, action, log_prob;
};

ActorSample squash(const nn::Matrix& out, const nn::Matrix& noise) {
  ActorSample s;
  s.mean = out.topRows(kActionSize);
  const nn::Matrix raw = out.bottomRows(kActionSize);
  s.log_std = raw.cwiseMax(Policy::kLogStdMin).cwiseMin(Policy::kLogStdMax);
  s.clamped = (raw.array() < Policy::kLogStdMin || raw.array() > Policy::kLogStdMax).cast<double>();
  s.std = s.log_std.array().exp();
  const nn::Matrix u = s.mean.array() + s.std.array() * noise.array();
  s.action = u.array().tanh();
  const nn::Matrix per =
      -0.5 * noise.array().square() - s.log_std.array() - kHalfLog2Pi - (1.0 - s.action.array().square() + kSquashEps).log();
  s.log_prob = per.colwise().sum();
  return s;
}

nn::Matrix gaussian(int rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  nn::Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = n(rng);
  return m;
}

}  // namespace

void SacConfig::validate() const {
  if (episodes < 0) throw ConfigError("sac.episodes", "must be >= 0");
  if (!(discount > 0.0 && discount <= 1.0)) throw ConfigError("sac.discount", "must be in (0, 1]");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("sac.tau", "must be in (0, 1]");
  if (batch_size < 1) throw ConfigError("sac.batch_size", "must be >= 1");
  if (replay_capacity < batch_size) throw ConfigError("sac.replay_capacity", "must be >= batch_size");
  if (hidden_layers.empty()) throw ConfigError("sac.hidden_layers", "must not be empty");
  for (int h : hidden_layers)
    if (h < 1) throw ConfigError("sac.hidden_layers", "widths must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("sac.learning_rate", "must be > 0");
  if (!(initial_alpha > 0.0)) throw ConfigError("sac.initial_alpha", "must be > 0");
  if (!(reward_scale > 0.0)) throw ConfigError("sac.reward_scale", "must be > 0");
  if (!(shaping_weight >= 0.0)) throw ConfigError("sac.shaping_weight", "must be >= 0");
  if (warmup_steps < 0) throw ConfigError("sac.warmup_steps", "must be >= 0");
  if (updates_per_step < 1) throw ConfigError("sac.updates_per_step", "must be >= 1");
}

Policy::Policy(nn::Mlp actor, std::array<nn::Mlp, 2> critics) : actor_(std::move(actor)), critics_(std::move(critics)) {
  if (actor_.input_size() != kObservationSize || actor_.output_size() != 2 * kActionSize)
    throw Error("actor network has the wrong shape");
  for (const auto& c : critics_)
    if (c.input_size() != kCriticInput || c.output_size() != 1) throw Error("critic network has the wrong shape");
}

Policy Policy::random(const std::vector<int>& hidden, std::mt19937_64& rng) {
  auto sizes = [&](int in, int out) {
    std::vector<int> s{in};
    s.insert(s.end(), hidden.begin(), hidden.end());
    s.push_back(out);
    return s;
  };
  nn::Mlp actor(sizes(kObservationSize, 2 * kActionSize), nn::Activation::relu, nn::Activation::identity, rng);
  nn::Mlp q1(sizes(kCriticInput, 1), nn::Activation::relu, nn::Activation::identity, rng);
  nn::Mlp q2(sizes(kCriticInput, 1), nn::Activation::relu, nn::Activation::identity, rng);
  return Policy(std::move(actor), {std::move(q1), std::move(q2)});
}

nn::Vector Policy::preprocess(const Observation& obs) {
  nn::Vector x(kObservationSize);
  for (int i = 0; i < kObservationSize; ++i) x[i] = i < kActionSize ? obs[i] : obs[i] / 100.0;
  return x;
}

Action Policy::act(const Observation& obs, bool deterministic, std::mt19937_64* rng) const {
  const nn::Matrix out = actor_.forward(preprocess(obs));
  nn::Matrix noise = nn::Matrix::Zero(kActionSize, 1);
  if (!deterministic) {
    if (!rng) throw Error("stochastic action needs a random source");
    noise = gaussian(kActionSize, 1, *rng);
  }
  const ActorSample s = squash(out, noise);
  return {s.action(0, 0), s.action(1, 0), s.action(2, 0)};
}

nlohmann::json Policy::to_json() const {
  return {{"format", "ttvr.policy"},
          {"version", 1},
          {"actor", actor_.to_json()},
          {"critics", {critics_[0].to_json(), critics_[1].to_json()}},
          {"metadata", metadata}};
}

Policy Policy::from_json(const nlohmann::json& doc) {
  if (doc.value("format", "") != "ttvr.policy") throw Error("not a policy document");
  if (doc.value("version", 0) != 1) throw Error("unsupported policy version");
  Policy p(nn::Mlp::from_json(doc.at("actor")),
           {nn::Mlp::from_json(doc.at("critics").at(0)), nn::Mlp::from_json(doc.at("critics").at(1))});
  p.metadata = doc.value("metadata", nlohmann::json::object());
  return p;
}

ReplayBuffer::ReplayBuffer(int capacity) : data_(static_cast<std::size_t>(capacity)) {
  if (capacity < 1) throw Error("replay capacity must be >= 1");
}

void ReplayBuffer::add(const Transition& t) {
  data_[next_] = t;
  next_ = (next_ + 1) % data_.size();
  size_ = std::min(size_ + 1, data_.size());
}

SacAgent::SacAgent(const SacConfig& cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) {
  cfg_.validate();
  policy_ = Policy::random(cfg_.hidden_layers, rng_);
  targets_ = {policy_.critic(0), policy_.critic(1)};
  actor_opt_ = nn::Adam(policy_.actor().parameter_count(), cfg_.learning_rate);
  for (int i = 0; i < 2; ++i) critic_opt_[i] = nn::Adam(policy_.critic(i).parameter_count(), cfg_.learning_rate);
  alpha_opt_ = nn::Adam(1, cfg_.learning_rate);
  log_alpha_ = std::log(cfg_.initial_alpha);
}

Minibatch SacAgent::make_batch(const std::vector<Transition>& ts, std::mt19937_64& rng) {
  const auto n = static_cast<Eigen::Index>(ts.size());
  Minibatch b;
  b.obs.resize(kObservationSize, n);
  b.next_obs.resize(kObservationSize, n);
  b.action.resize(kActionSize, n);
  b.reward.resize(1, n);
  b.done.resize(1, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const Transition& t = ts[static_cast<std::size_t>(c)];
    b.obs.col(c) = Policy::preprocess(t.obs);
    b.next_obs.col(c) = Policy::preprocess(t.next_obs);
    for (int k = 0; k < kActionSize; ++k) b.action(k, c) = t.action[k];
    b.reward(0, c) = t.reward;
    b.done(0, c) = t.done ? 1.0 : 0.0;
  }
  b.noise_next = gaussian(kActionSize, n, rng);
  b.noise_actor = gaussian(kActionSize, n, rng);
  return b;
}

Minibatch SacAgent::sample(const ReplayBuffer& buffer) {
  std::uniform_int_distribution<std::size_t> pick(0, buffer.size() - 1);
  std::vector<Transition> ts;
  ts.reserve(static_cast<std::size_t>(cfg_.batch_size));
  for (int i = 0; i < cfg_.batch_size; ++i) ts.push_back(buffer[pick(rng_)]);
  return make_batch(ts, rng_);
}

nn::Matrix SacAgent::critic_targets(const Minibatch& b) const {
  const ActorSample next = squash(policy_.actor().forward(b.next_obs), b.noise_next);
  const nn::Matrix x = critic_input(b.next_obs, next.action);
  const nn::Matrix q = targets_[0].forward(x).cwiseMin(targets_[1].forward(x));
  const nn::Matrix soft = q - alpha() * next.log_prob;
  return cfg_.reward_scale * b.reward.array() + cfg_.discount * (1.0 - b.done.array()) * soft.array();
}

double SacAgent::critic_loss(int which, const Minibatch& b, const nn::Matrix& y, nn::Vector* grad) const {
  const nn::Mlp& net = policy_.critic(which);
  nn::Mlp::Tape tape;
  const nn::Matrix q = net.forward(critic_input(b.obs, b.action), tape);
  const nn::Matrix diff = q - y;
  const double n = static_cast<double>(b.obs.cols());
  if (grad) net.backward(tape, diff / n, *grad);
  return 0.5 * diff.squaredNorm() / n;
}

double SacAgent::actor_loss(const Minibatch& b, nn::Vector* grad, nn::Matrix* log_prob) const {
  nn::Mlp::Tape actor_tape;
  const nn::Matrix out = policy_.actor().forward(b.obs, actor_tape);
  const ActorSample s = squash(out, b.noise_actor);
  const nn::Matrix x = critic_input(b.obs, s.action);
  std::array<nn::Mlp::Tape, 2> tapes;
  const nn::Matrix q1 = policy_.critic(0).forward(x, tapes[0]);
  const nn::Matrix q2 = policy_.critic(1).forward(x, tapes[1]);
  const nn::Matrix qmin = q1.cwiseMin(q2);
  const double n = static_cast<double>(b.obs.cols());
  const double a = alpha();
  if (log_prob) *log_prob = s.log_prob;
  const double loss = (a * s.log_prob - qmin).sum() / n;
  if (!grad) return loss;

  // dL/da through whichever critic is smaller per sample.
  nn::Matrix dl_da = nn::Matrix::Zero(kActionSize, b.obs.cols());
  for (int i = 0; i < 2; ++i) {
    nn::Matrix g = nn::Matrix::Zero(1, b.obs.cols());
    for (Eigen::Index c = 0; c < g.cols(); ++c) {
      const bool chosen = i == 0 ? q1(0, c) <= q2(0, c) : q2(0, c) < q1(0, c);
      if (chosen) g(0, c) = -1.0 / n;
    }
    nn::Vector scratch = nn::Vector::Zero(policy_.critic(i).parameter_count());
    dl_da += policy_.critic(i).backward(tapes[i], g, scratch).bottomRows(kActionSize);
  }
  const nn::Matrix one_minus = 1.0 - s.action.array().square();
  const nn::Matrix dl_du = (a / n) * 2.0 * s.action.array() * one_minus.array() / (one_minus.array() + kSquashEps) +
                           dl_da.array() * one_minus.array();
  nn::Matrix grad_out(2 * kActionSize, b.obs.cols());
  grad_out.topRows(kActionSize) = dl_du;
  grad_out.bottomRows(kActionSize) =
      (1.0 - s.clamped.array()) * (-a / n + dl_du.array() * s.std.array() * b.noise_actor.array());
  policy_.actor().backward(actor_tape, grad_out, *grad);
  return loss;
}

UpdateStats SacAgent::update(const Minibatch& b) {
  UpdateStats st;
  const nn::Matrix y = critic_targets(b);
  for (int i = 0; i < 2; ++i) {
    nn::Vector g = nn::Vector::Zero(policy_.critic(i).parameter_count());
    st.critic_loss += 0.5 * critic_loss(i, b, y, &g);
    critic_opt_[i].step(policy_.critic(i).parameters(), g);
  }
  nn::Vector g = nn::Vector::Zero(policy_.actor().parameter_count());
  nn::Matrix log_prob;
  st.actor_loss = actor_loss(b, &g, &log_prob);
  actor_opt_.step(policy_.actor().parameters(), g);

  nn::Vector la(1), lg(1);
  la[0] = log_alpha_;
  lg[0] = -(log_prob.array() + cfg_.target_entropy).mean();
  alpha_opt_.step(la, lg);
  log_alpha_ = la[0];
  for (int i = 0; i < 2; ++i) targets_[i].soft_update(policy_.critic(i), cfg_.tau);
  st.alpha = alpha();
  return st;
}

void TrainingCurves::write_csv(std::ostream& os) const {
  os << "episode,reward,length,terminal,critic_loss,actor_loss,alpha\n";
  os.precision(17);
  for (const auto& e : episodes)
    os << e.episode << ',' << e.reward << ',' << e.length << ',' << to_string(e.terminal) << ',' << e.critic_loss
       << ',' << e.actor_loss << ',' << e.alpha << '\n';
}

std::vector<double> TrainingCurves::moving_average(std::size_t window) const {
  std::vector<double> out;
  double sum = 0.0;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    sum += episodes[i].reward;
    if (i >= window) sum -= episodes[i - window].reward;
    out.push_back(sum / static_cast<double>(std::min(i + 1, window)));
  }
  return out;
}

TrainingResult train_sac(LocalizationEnv& env, const SacConfig& cfg, std::uint64_t seed,
                         const std::function<void(const EpisodeRecord&)>& on_episode) {
  SacAgent agent(cfg, seed);
  env.reseed(seed ^ 0x9e3779b97f4a7c15ULL);
  ReplayBuffer buffer(cfg.replay_capacity);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  TrainingResult result;
  long total_steps = 0;
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    EpisodeRecord rec;
    rec.episode = ep;
    Observation obs = env.reset();
    double phi = cfg.shaping_weight > 0.0 ? env.potential(env.joints()) : 0.0;
    int updates = 0;
    while (true) {
      Action a;
      if (total_steps < cfg.warmup_steps)
        for (auto& v : a) v = uniform(agent.rng());
      else
        a = agent.policy().act(obs, false, &agent.rng());
      const StepOutcome out = env.step(a);
      double shaped = out.reward.total();
      if (cfg.shaping_weight > 0.0) {
        const double next_phi = env.potential(out.joints);
        shaped += cfg.shaping_weight * (cfg.discount * next_phi - phi);
        phi = next_phi;
      }
      buffer.add({obs, a, shaped, out.observation, out.terminal != Terminal::running});
      obs = out.observation;
      rec.reward += out.reward.total();
      ++rec.length;
      ++total_steps;
      if (total_steps >= cfg.warmup_steps && buffer.size() >= static_cast<std::size_t>(cfg.batch_size))
        for (int u = 0; u < cfg.updates_per_step; ++u) {
          const UpdateStats st = agent.update(agent.sample(buffer));
          if (!std::isfinite(st.critic_loss) || !std::isfinite(st.actor_loss) || !std::isfinite(st.alpha))
            throw Error("SAC diverged: non-finite loss at episode " + std::to_string(ep));
          rec.critic_loss += st.critic_loss;
          rec.actor_loss += st.actor_loss;
          ++updates;
        }
      if (out.terminal != Terminal::running) {
        rec.terminal = out.terminal;
        break;
      }
    }
    if (updates > 0) {
      rec.critic_loss /= updates;
      rec.actor_loss /= updates;
    }
    rec.alpha = agent.alpha();
    result.curves.episodes.push_back(rec);
    if (on_episode) on_episode(rec);
  }
  result.policy = agent.policy();
  result.policy.metadata = {{"seed", seed},
                            {"episodes", cfg.episodes},
                            {"total_steps", total_steps},
                            {"hidden_layers", cfg.hidden_layers},
                            {"discount", cfg.discount},
                            {"tau", cfg.tau},
                            {"learning_rate", cfg.learning_rate},
                            {"reward_scale", cfg.reward_scale},
                            {"shaping_weight", cfg.shaping_weight}};
  return result;
}

}  // namespace ttvr::rl

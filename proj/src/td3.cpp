#include "dolly/td3.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "dolly/version.hpp"

namespace dolly {

namespace {

double clip_unit(double v) { return std::min(std::max(v, -1.0), 1.0); }

constexpr std::uint64_t kNetSeedTag = 0x7e11;
constexpr std::uint64_t kStreamSeedTag = 0x51ee;
constexpr std::uint64_t kEnvSeedTag = 0xe5;
constexpr std::uint64_t kEvalSeedTag = 0xe5a1;

}  // namespace

std::string to_string(AgentKind k) {
    switch (k) {
        case AgentKind::throttle: return "throttle";
        case AgentKind::steering: return "steering";
        case AgentKind::combined: return "combined";
        case AgentKind::complex_agent: return "complex";
    }
    return "?";
}

AgentKind agent_kind_from_string(const std::string& s) {
    if (s == "throttle") return AgentKind::throttle;
    if (s == "steering") return AgentKind::steering;
    if (s == "combined") return AgentKind::combined;
    if (s == "complex") return AgentKind::complex_agent;
    throw std::invalid_argument("unknown agent kind: " + s);
}

AgentConfig AgentConfig::make(AgentKind kind) {
    AgentConfig cfg;
    cfg.kind = kind;
    switch (kind) {
        case AgentKind::throttle:
            cfg.state_indices = {0, 1};
            cfg.action_indices = {0};
            break;
        case AgentKind::steering:
            cfg.state_indices = {2, 3};
            cfg.action_indices = {1};
            break;
        case AgentKind::combined:
            cfg.state_indices = {0, 1, 2, 3};
            cfg.action_indices = {0, 1};
            break;
        case AgentKind::complex_agent:
            cfg.state_indices = {0, 1, 2, 3, 4, 5, 6, 7, 8};
            cfg.action_indices = {0, 1, 2, 3};
            break;
    }
    return cfg;
}

std::vector<double> AgentConfig::project_state(const Observation& obs) const {
    std::vector<double> s(state_indices.size());
    for (std::size_t i = 0; i < state_indices.size(); ++i) s[i] = obs[state_indices[i]];
    return s;
}

ActionVector AgentConfig::to_env_action(const std::vector<double>& action) const {
    if (action.size() != action_indices.size())
        throw std::invalid_argument("agent action length mismatch");
    ActionVector v;
    v.active = {false, false, false, false};
    for (std::size_t i = 0; i < action_indices.size(); ++i) {
        v.active[static_cast<std::size_t>(action_indices[i])] = true;
        v.a[static_cast<std::size_t>(action_indices[i])] = action[i];
    }
    return v;
}

void TD3Hyper::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("td3: gamma must lie in [0, 1]");
    if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("td3: tau must lie in (0, 1]");
    if (!(target_noise_clip > 0.0)) throw std::invalid_argument("td3: noise clip must be positive");
    if (policy_delay < 1) throw std::invalid_argument("td3: policy delay must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("td3: batch size must be >= 1");
    if (buffer_capacity < static_cast<std::size_t>(batch_size))
        throw std::invalid_argument("td3: buffer capacity below batch size");
    if (hidden1 < 1 || hidden2 < 1) throw std::invalid_argument("td3: hidden sizes must be >= 1");
    if (episodes < 1) throw std::invalid_argument("td3: episodes must be >= 1");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, int state_dim, int action_dim)
    : capacity_(capacity), sdim_(state_dim), adim_(action_dim) {
    if (capacity_ == 0) throw std::invalid_argument("replay buffer: capacity must be positive");
}

void ReplayBuffer::push(const std::vector<double>& state, const std::vector<double>& action,
                        double reward, const std::vector<double>& next_state, bool done) {
    if (static_cast<int>(state.size()) != sdim_ || static_cast<int>(next_state.size()) != sdim_ ||
        static_cast<int>(action.size()) != adim_)
        throw std::invalid_argument("replay buffer: transition shape mismatch");
    if (!std::isfinite(reward)) throw std::invalid_argument("replay buffer: non-finite reward");

    const std::size_t slot = static_cast<std::size_t>(total_ % capacity_);
    if (slot == size_) {  // still growing
        states_.insert(states_.end(), state.begin(), state.end());
        actions_.insert(actions_.end(), action.begin(), action.end());
        next_states_.insert(next_states_.end(), next_state.begin(), next_state.end());
        rewards_.push_back(reward);
        dones_.push_back(done ? 1 : 0);
        size_ += 1;
    } else {  // overwrite oldest
        std::copy(state.begin(), state.end(), states_.begin() + static_cast<long>(slot) * sdim_);
        std::copy(action.begin(), action.end(), actions_.begin() + static_cast<long>(slot) * adim_);
        std::copy(next_state.begin(), next_state.end(),
                  next_states_.begin() + static_cast<long>(slot) * sdim_);
        rewards_[slot] = reward;
        dones_[slot] = done ? 1 : 0;
    }
    total_ += 1;
}

ReplayBuffer::Batch ReplayBuffer::sample(int n, Rng& rng) const {
    if (static_cast<std::size_t>(n) > size_)
        throw std::logic_error("replay buffer: sampling more than stored");
    Batch b;
    b.count = n;
    b.sdim = sdim_;
    b.adim = adim_;
    b.states.resize(static_cast<std::size_t>(n) * sdim_);
    b.actions.resize(static_cast<std::size_t>(n) * adim_);
    b.next_states.resize(static_cast<std::size_t>(n) * sdim_);
    b.rewards.resize(static_cast<std::size_t>(n));
    b.dones.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const std::size_t idx = rng.uniform_index(size_);
        std::copy_n(states_.begin() + static_cast<long>(idx) * sdim_, sdim_,
                    b.states.begin() + static_cast<long>(i) * sdim_);
        std::copy_n(actions_.begin() + static_cast<long>(idx) * adim_, adim_,
                    b.actions.begin() + static_cast<long>(i) * adim_);
        std::copy_n(next_states_.begin() + static_cast<long>(idx) * sdim_, sdim_,
                    b.next_states.begin() + static_cast<long>(i) * sdim_);
        b.rewards[static_cast<std::size_t>(i)] = rewards_[idx];
        b.dones[static_cast<std::size_t>(i)] = dones_[idx];
    }
    return b;
}

Td3Agent::Td3Agent(AgentConfig cfg, TD3Hyper hyper, std::uint64_t seed)
    : cfg_(std::move(cfg)), hyper_(hyper) {
    hyper_.validate();
    build_networks(seed);
    rng_ = Rng(derive_seed(seed, kStreamSeedTag));
}

void Td3Agent::build_networks(std::uint64_t seed) {
    Rng init(derive_seed(seed, kNetSeedTag));
    const int sdim = cfg_.state_dim();
    const int adim = cfg_.action_dim();
    const std::vector<int> actor_sizes{sdim, hyper_.hidden1, hyper_.hidden2, adim};
    const std::vector<int> critic_sizes{sdim + adim, hyper_.hidden1, hyper_.hidden2, 1};

    actor_ = make_mlp(actor_sizes, Mlp::Output::tanh_scaled, init, 1.0, 3e-3);
    critic1_ = make_mlp(critic_sizes, Mlp::Output::linear, init);
    critic2_ = make_mlp(critic_sizes, Mlp::Output::linear, init);
    actor_target_ = actor_;
    critic1_target_ = critic1_;
    critic2_target_ = critic2_;

    actor_opt_ = Adam(actor_, hyper_.lr);
    critic1_opt_ = Adam(critic1_, hyper_.lr);
    critic2_opt_ = Adam(critic2_, hyper_.lr);
}

std::vector<double> Td3Agent::select_action(const std::vector<double>& state, bool explore) {
    if (static_cast<int>(state.size()) != cfg_.state_dim())
        throw std::invalid_argument("select_action: state length mismatch");

    if (explore) {
        steps_taken_ += 1;
        if (steps_taken_ <= hyper_.warmup_steps) {
            std::vector<double> a(static_cast<std::size_t>(cfg_.action_dim()));
            for (auto& v : a) v = rng_.uniform(-1.0, 1.0);
            return a;
        }
    }
    std::vector<double> a = forward(actor_, state);
    if (explore) {
        for (auto& v : a) v = clip_unit(v + rng_.normal(0.0, hyper_.exploration_noise_std));
    } else {
        for (auto& v : a) v = clip_unit(v);
    }
    return a;
}

double Td3Agent::sample_clipped_target_noise() {
    const double c = hyper_.target_noise_clip;
    return std::min(std::max(rng_.normal(0.0, hyper_.target_noise_std), -c), c);
}

std::vector<double> Td3Agent::target_action(const std::vector<double>& next_state) {
    std::vector<double> a = forward(actor_target_, next_state);
    for (auto& v : a) v = clip_unit(v + sample_clipped_target_noise());
    return a;
}

std::vector<double> Td3Agent::batched_q(const Mlp& critic, const std::vector<double>& states,
                                        const std::vector<double>& actions, int count,
                                        ForwardCache* cache) const {
    const int sdim = cfg_.state_dim();
    const int adim = cfg_.action_dim();
    std::vector<double> input(static_cast<std::size_t>(count) * (sdim + adim));
    for (int i = 0; i < count; ++i) {
        std::copy_n(states.begin() + static_cast<long>(i) * sdim, sdim,
                    input.begin() + static_cast<long>(i) * (sdim + adim));
        std::copy_n(actions.begin() + static_cast<long>(i) * adim, adim,
                    input.begin() + static_cast<long>(i) * (sdim + adim) + sdim);
    }
    std::vector<double> q(static_cast<std::size_t>(count));
    forward(critic, input.data(), count, q.data(), cache);
    return q;
}

std::vector<double> Td3Agent::critic_targets(const ReplayBuffer::Batch& batch) {
    const int n = batch.count;
    const int adim = cfg_.action_dim();

    // Smoothed target actions.
    std::vector<double> next_actions(static_cast<std::size_t>(n) * adim);
    forward(actor_target_, batch.next_states.data(), n, next_actions.data(), nullptr);
    for (auto& v : next_actions) v = clip_unit(v + sample_clipped_target_noise());

    const std::vector<double> q1 = batched_q(critic1_target_, batch.next_states, next_actions, n, nullptr);
    const std::vector<double> q2 = batched_q(critic2_target_, batch.next_states, next_actions, n, nullptr);

    std::vector<double> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        const double bootstrap = (1.0 - batch.dones[ui]) * std::min(q1[ui], q2[ui]);
        y[ui] = batch.rewards[ui] + hyper_.gamma * bootstrap;
    }
    return y;
}

std::pair<double, double> Td3Agent::update_critics(const ReplayBuffer::Batch& batch) {
    if (batch.sdim != cfg_.state_dim() || batch.adim != cfg_.action_dim())
        throw std::invalid_argument("update_critics: batch shape mismatch");
    const int n = batch.count;

    const std::vector<double> y = critic_targets(batch);
    for (double v : y)
        if (!std::isfinite(v)) throw std::runtime_error("update_critics: non-finite target");

    auto regress = [&](Mlp& critic, Adam& opt) {
        ForwardCache cache;
        const std::vector<double> q = batched_q(critic, batch.states, batch.actions, n, &cache);
        double loss = 0.0;
        std::vector<double> dq(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const std::size_t ui = static_cast<std::size_t>(i);
            const double err = q[ui] - y[ui];
            loss += err * err;
            dq[ui] = 2.0 * err / n;
        }
        loss /= n;
        const Gradients g = backward(critic, cache, dq.data());
        if (!opt.step(critic, g)) throw std::runtime_error("update_critics: non-finite gradient");
        return loss;
    };

    const double l1 = regress(critic1_, critic1_opt_);
    const double l2 = regress(critic2_, critic2_opt_);
    critic_updates_ += 1;
    return {l1, l2};
}

bool Td3Agent::actor_update_due() const {
    return critic_updates_ > 0 && critic_updates_ % hyper_.policy_delay == 0 &&
           actor_updates_ < critic_updates_ / hyper_.policy_delay;
}

double Td3Agent::update_actor(const ReplayBuffer::Batch& batch) {
    if (!actor_update_due())
        throw std::logic_error("update_actor: called off the policy-delay schedule");
    const int n = batch.count;
    const int sdim = cfg_.state_dim();
    const int adim = cfg_.action_dim();

    ForwardCache actor_cache;
    std::vector<double> actions(static_cast<std::size_t>(n) * adim);
    forward(actor_, batch.states.data(), n, actions.data(), &actor_cache);

    ForwardCache critic_cache;
    const std::vector<double> q = batched_q(critic1_, batch.states, actions, n, &critic_cache);

    // Ascend mean Q1: loss = -mean(q), so dL/dq = -1/n.
    std::vector<double> dq(static_cast<std::size_t>(n), -1.0 / n);
    const Gradients critic_grads = backward(critic1_, critic_cache, dq.data());

    // Slice the action part of the critic's input gradient.
    std::vector<double> da(static_cast<std::size_t>(n) * adim);
    for (int i = 0; i < n; ++i)
        std::copy_n(critic_grads.input.begin() + static_cast<long>(i) * (sdim + adim) + sdim,
                    adim, da.begin() + static_cast<long>(i) * adim);

    const Gradients actor_grads = backward(actor_, actor_cache, da.data());
    if (!actor_opt_.step(actor_, actor_grads))
        throw std::runtime_error("update_actor: non-finite gradient");
    actor_updates_ += 1;

    double mean_q = 0.0;
    for (double v : q) mean_q += v;
    return -mean_q / n;
}

void Td3Agent::polyak_update() {
    polyak_blend(actor_target_, actor_, hyper_.tau);
    polyak_blend(critic1_target_, critic1_, hyper_.tau);
    polyak_blend(critic2_target_, critic2_, hyper_.tau);
}

LearnStats Td3Agent::learn(ReplayBuffer& buffer) {
    LearnStats stats;
    const ReplayBuffer::Batch batch = buffer.sample(hyper_.batch_size, rng_);
    try {
        std::tie(stats.critic1_loss, stats.critic2_loss) = update_critics(batch);
    } catch (const std::runtime_error&) {
        stats.rejected = true;
        return stats;
    }
    if (actor_update_due()) {
        stats.actor_loss = update_actor(batch);
        stats.actor_updated = true;
    }
    polyak_update();
    return stats;
}

void Td3Agent::save_checkpoint(std::ostream& os, const ReplayBuffer* buffer) const {
    os << "dollyin-agent 1\n";
    os << "kind " << to_string(cfg_.kind) << '\n';
    os << "version " << kVersion << '\n';
    os.precision(17);
    os << "hyper " << hyper_.batch_size << ' ' << hyper_.lr << ' ' << hyper_.gamma << ' '
       << hyper_.tau << ' ' << hyper_.buffer_capacity << ' ' << hyper_.target_noise_std << ' '
       << hyper_.target_noise_clip << ' ' << hyper_.policy_delay << ' '
       << hyper_.exploration_noise_std << ' ' << hyper_.episodes << ' ' << hyper_.warmup_steps
       << ' ' << hyper_.hidden1 << ' ' << hyper_.hidden2 << ' ' << hyper_.checkpoint_every << ' '
       << hyper_.eval_every << ' ' << hyper_.eval_episodes << ' ' << (hyper_.early_stop ? 1 : 0)
       << ' ' << hyper_.early_stop_epsilon << ' ' << hyper_.early_stop_patience << '\n';
    os << "counters " << steps_taken_ << ' ' << critic_updates_ << ' ' << actor_updates_ << '\n';
    os << "buffer_stats " << (buffer ? buffer->capacity() : 0) << ' '
       << (buffer ? buffer->size() : 0) << ' ' << (buffer ? buffer->total_inserted() : 0) << '\n';
    os << "rng " << rng_ << '\n';
    for (const auto* net : {&actor_, &actor_target_, &critic1_, &critic2_, &critic1_target_,
                            &critic2_target_})
        save_mlp(os, *net);
    actor_opt_.save(os);
    critic1_opt_.save(os);
    critic2_opt_.save(os);
    os << "end\n";
}

Td3Agent Td3Agent::load_checkpoint(std::istream& is) {
    std::string tag, kind_str, version;
    int fmt = 0;
    if (!(is >> tag >> fmt) || tag != "dollyin-agent" || fmt != 1)
        throw std::runtime_error("checkpoint: bad header");
    if (!(is >> tag >> kind_str) || tag != "kind") throw std::runtime_error("checkpoint: bad kind");
    if (!(is >> tag >> version) || tag != "version")
        throw std::runtime_error("checkpoint: bad version");

    Td3Agent agent;
    agent.cfg_ = AgentConfig::make(agent_kind_from_string(kind_str));
    TD3Hyper& h = agent.hyper_;
    int early = 0;
    if (!(is >> tag >> h.batch_size >> h.lr >> h.gamma >> h.tau >> h.buffer_capacity >>
          h.target_noise_std >> h.target_noise_clip >> h.policy_delay >>
          h.exploration_noise_std >> h.episodes >> h.warmup_steps >> h.hidden1 >> h.hidden2 >>
          h.checkpoint_every >> h.eval_every >> h.eval_episodes >> early >>
          h.early_stop_epsilon >> h.early_stop_patience) ||
        tag != "hyper")
        throw std::runtime_error("checkpoint: bad hyper block");
    h.early_stop = early != 0;

    if (!(is >> tag >> agent.steps_taken_ >> agent.critic_updates_ >> agent.actor_updates_) ||
        tag != "counters")
        throw std::runtime_error("checkpoint: bad counters");
    std::size_t cap = 0, sz = 0;
    std::uint64_t tot = 0;
    if (!(is >> tag >> cap >> sz >> tot) || tag != "buffer_stats")
        throw std::runtime_error("checkpoint: bad buffer stats");
    if (!(is >> tag) || tag != "rng") throw std::runtime_error("checkpoint: bad rng");
    is >> agent.rng_;

    agent.actor_ = load_mlp(is);
    agent.actor_target_ = load_mlp(is);
    agent.critic1_ = load_mlp(is);
    agent.critic2_ = load_mlp(is);
    agent.critic1_target_ = load_mlp(is);
    agent.critic2_target_ = load_mlp(is);
    agent.actor_opt_ = Adam(agent.actor_, h.lr);
    agent.critic1_opt_ = Adam(agent.critic1_, h.lr);
    agent.critic2_opt_ = Adam(agent.critic2_, h.lr);
    agent.actor_opt_.load(is);
    agent.critic1_opt_.load(is);
    agent.critic2_opt_.load(is);
    if (!(is >> tag) || tag != "end") throw std::runtime_error("checkpoint: missing end marker");
    return agent;
}

double step_reward(AgentKind kind, const ShotMetrics& metrics, const ActionVector& curr,
                   const ActionVector& prev, const RewardWeights& wts,
                   ComplexReward* breakdown) {
    // The simulator can exceed the documented area cap when the robot rams
    // the subject; score such frames as the in-domain worst.
    ShotMetrics m = metrics;
    m.area_frac = std::min(m.area_frac, wts.area_max);
    switch (kind) {
        case AgentKind::throttle:
            return r_area_original(m.area_frac, wts);
        case AgentKind::steering:
            return r_position(m, wts);
        case AgentKind::combined:
            return r_combined(m, wts);
        case AgentKind::complex_agent: {
            const ComplexReward r = r_complex(m, m.subject_offset, curr, prev, wts);
            if (breakdown) *breakdown = r;
            return r.total;
        }
    }
    throw std::logic_error("unknown agent kind");
}

namespace {

struct EpisodeAccumulator {
    double cum_reward = 0.0;
    double sum_area = 0.0;
    double sum_cx = 0.0;
    double sum_cy = 0.0;
    double sum_c1 = 0.0, sum_c2 = 0.0, sum_actor = 0.0;
    long steps = 0;
    long learn_iters = 0;
    long actor_iters = 0;

    void add_step(double reward, const ShotMetrics& m) {
        cum_reward += reward;
        sum_area += m.area_frac;
        sum_cx += m.centroid_x;
        sum_cy += m.centroid_y;
        steps += 1;
    }
    void add_learn(const LearnStats& s) {
        if (s.rejected) return;
        sum_c1 += s.critic1_loss;
        sum_c2 += s.critic2_loss;
        learn_iters += 1;
        if (s.actor_updated) {
            sum_actor += s.actor_loss;
            actor_iters += 1;
        }
    }
    EpisodeLogRow row(int episode) const {
        EpisodeLogRow r;
        r.episode = episode;
        r.cum_reward = cum_reward;
        r.mean_area = steps ? sum_area / steps : 0.0;
        r.mean_centroid_x = steps ? sum_cx / steps : 0.0;
        r.mean_centroid_y = steps ? sum_cy / steps : 0.0;
        r.critic1_loss = learn_iters ? sum_c1 / learn_iters : 0.0;
        r.critic2_loss = learn_iters ? sum_c2 / learn_iters : 0.0;
        r.actor_loss = actor_iters ? sum_actor / actor_iters : 0.0;
        r.learn_iterations = learn_iters;
        return r;
    }
};

// Deterministic evaluation rollouts with the current actor; used for the
// eval log and early stopping.
double eval_mean_reward(Td3Agent& agent, const EnvConfig& env_cfg, const RewardWeights& wts,
                        std::uint64_t seed_base, int episodes) {
    Environment env(env_cfg);
    double total = 0.0;
    for (int e = 0; e < episodes; ++e) {
        Observation obs = env.reset(seed_base + static_cast<std::uint64_t>(e));
        ActionVector prev = agent.agent_config().to_env_action(
            std::vector<double>(static_cast<std::size_t>(agent.agent_config().action_dim()), 0.0));
        while (!env.episode_done()) {
            const std::vector<double> a =
                agent.select_action(agent.agent_config().project_state(obs), false);
            const ActionVector env_action = agent.agent_config().to_env_action(a);
            const auto res = env.step(env_action);
            total += step_reward(agent.agent_config().kind, res.metrics, env_action, prev, wts);
            prev = env_action;
            obs = res.obs;
        }
    }
    return total / episodes;
}

double eval_pair_mean_reward(Td3Agent& throttle, Td3Agent& steering, const EnvConfig& env_cfg,
                             const RewardWeights& wts, std::uint64_t seed_base, int episodes) {
    Environment env(env_cfg);
    double total = 0.0;
    for (int e = 0; e < episodes; ++e) {
        Observation obs = env.reset(seed_base + static_cast<std::uint64_t>(e));
        while (!env.episode_done()) {
            const std::vector<double> at =
                throttle.select_action(throttle.agent_config().project_state(obs), false);
            const std::vector<double> as =
                steering.select_action(steering.agent_config().project_state(obs), false);
            ActionVector merged;
            merged.active = {true, true, false, false};
            merged.a = {at[0], as[0], 0.0, 0.0};
            const auto res = env.step(merged);
            // Pair evaluation uses the combined metric for comparability.
            ShotMetrics m = res.metrics;
            m.area_frac = std::min(m.area_frac, wts.area_max);
            total += r_combined(m, wts);
            obs = res.obs;
        }
    }
    return total / episodes;
}

}  // namespace

TrainResult train(const EnvConfig& env_cfg, AgentKind kind, const TD3Hyper& hyper,
                  const RewardWeights& wts, std::uint64_t seed, const TrainCallbacks& callbacks) {
    env_cfg.validate();
    hyper.validate();
    wts.validate();

    TrainResult result;
    const AgentConfig agent_cfg = AgentConfig::make(kind);
    result.agent = std::make_unique<Td3Agent>(agent_cfg, hyper, seed);
    Td3Agent& agent = *result.agent;
    ReplayBuffer buffer(hyper.buffer_capacity, agent_cfg.state_dim(), agent_cfg.action_dim());
    Environment env(env_cfg);

    const std::uint64_t env_seed_base = derive_seed(seed, kEnvSeedTag);
    const std::uint64_t eval_seed_base = derive_seed(seed, kEvalSeedTag);

    double best_eval = -1e300;
    int evals_without_improvement = 0;
    bool stop = false;

    for (int episode = 0; episode < hyper.episodes && !stop; ++episode) {
        Observation obs = env.reset(env_seed_base + static_cast<std::uint64_t>(episode));
        ActionVector prev = agent_cfg.to_env_action(
            std::vector<double>(static_cast<std::size_t>(agent_cfg.action_dim()), 0.0));
        EpisodeAccumulator acc;

        while (!env.episode_done()) {
            const std::vector<double> state = agent_cfg.project_state(obs);
            const std::vector<double> action = agent.select_action(state, true);
            const ActionVector env_action = agent_cfg.to_env_action(action);
            const auto res = env.step(env_action);
            const double reward = step_reward(kind, res.metrics, env_action, prev, wts);
            buffer.push(state, action, reward, agent_cfg.project_state(res.obs), res.done);
            acc.add_step(reward, res.metrics);

            if (buffer.size() >= static_cast<std::size_t>(hyper.batch_size))
                acc.add_learn(agent.learn(buffer));

            prev = env_action;
            obs = res.obs;
        }

        const EpisodeLogRow row = acc.row(episode);
        result.log.push_back(row);
        if (callbacks.on_episode) callbacks.on_episode(row);

        const int done_episodes = episode + 1;
        if (hyper.eval_every > 0 && done_episodes % hyper.eval_every == 0) {
            EvalLogRow ev;
            ev.episode = episode;
            ev.mean_eval_reward = eval_mean_reward(
                agent, env_cfg, wts,
                eval_seed_base + 1000003ULL * static_cast<std::uint64_t>(episode),
                hyper.eval_episodes);
            result.eval_log.push_back(ev);
            if (callbacks.on_eval) callbacks.on_eval(ev);
            if (hyper.early_stop) {
                if (ev.mean_eval_reward > best_eval + hyper.early_stop_epsilon) {
                    best_eval = ev.mean_eval_reward;
                    evals_without_improvement = 0;
                } else {
                    best_eval = std::max(best_eval, ev.mean_eval_reward);
                    evals_without_improvement += 1;
                    if (evals_without_improvement >= hyper.early_stop_patience) {
                        stop = true;
                        result.early_stopped = true;
                    }
                }
            }
        }
        if (callbacks.on_checkpoint && hyper.checkpoint_every > 0 &&
            done_episodes % hyper.checkpoint_every == 0)
            callbacks.on_checkpoint(episode, agent, nullptr);
    }
    if (callbacks.on_checkpoint) callbacks.on_checkpoint(-1, agent, nullptr);
    return result;
}

TrainResult independent_pair_train(const EnvConfig& env_cfg, const TD3Hyper& hyper,
                                   const RewardWeights& wts, std::uint64_t seed,
                                   const TrainCallbacks& callbacks) {
    env_cfg.validate();
    hyper.validate();
    wts.validate();

    TrainResult result;
    const AgentConfig throttle_cfg = AgentConfig::make(AgentKind::throttle);
    const AgentConfig steering_cfg = AgentConfig::make(AgentKind::steering);
    result.agent = std::make_unique<Td3Agent>(throttle_cfg, hyper, derive_seed(seed, 0x7));
    result.second_agent = std::make_unique<Td3Agent>(steering_cfg, hyper, derive_seed(seed, 0x5));
    Td3Agent& throttle = *result.agent;
    Td3Agent& steering = *result.second_agent;

    ReplayBuffer throttle_buf(hyper.buffer_capacity, 2, 1);
    ReplayBuffer steering_buf(hyper.buffer_capacity, 2, 1);
    Environment env(env_cfg);

    const std::uint64_t env_seed_base = derive_seed(seed, kEnvSeedTag);
    const std::uint64_t eval_seed_base = derive_seed(seed, kEvalSeedTag);

    for (int episode = 0; episode < hyper.episodes; ++episode) {
        Observation obs = env.reset(env_seed_base + static_cast<std::uint64_t>(episode));
        EpisodeAccumulator acc;

        while (!env.episode_done()) {
            const std::vector<double> st = throttle_cfg.project_state(obs);
            const std::vector<double> ss = steering_cfg.project_state(obs);
            const std::vector<double> at = throttle.select_action(st, true);
            const std::vector<double> as = steering.select_action(ss, true);

            ActionVector merged;
            merged.active = {true, true, false, false};
            merged.a = {at[0], as[0], 0.0, 0.0};
            const auto res = env.step(merged);

            ShotMetrics m = res.metrics;
            m.area_frac = std::min(m.area_frac, wts.area_max);
            const double r_throttle = r_area_original(m.area_frac, wts);
            const double r_steering = r_position(m, wts);

            throttle_buf.push(st, at, r_throttle, throttle_cfg.project_state(res.obs), res.done);
            steering_buf.push(ss, as, r_steering, steering_cfg.project_state(res.obs), res.done);
            acc.add_step(r_combined(m, wts), res.metrics);

            if (throttle_buf.size() >= static_cast<std::size_t>(hyper.batch_size)) {
                acc.add_learn(throttle.learn(throttle_buf));
                acc.add_learn(steering.learn(steering_buf));
            }
            obs = res.obs;
        }

        const EpisodeLogRow row = acc.row(episode);
        result.log.push_back(row);
        if (callbacks.on_episode) callbacks.on_episode(row);

        const int done_episodes = episode + 1;
        if (hyper.eval_every > 0 && done_episodes % hyper.eval_every == 0) {
            EvalLogRow ev;
            ev.episode = episode;
            ev.mean_eval_reward = eval_pair_mean_reward(
                throttle, steering, env_cfg, wts,
                eval_seed_base + 1000003ULL * static_cast<std::uint64_t>(episode),
                hyper.eval_episodes);
            result.eval_log.push_back(ev);
            if (callbacks.on_eval) callbacks.on_eval(ev);
        }
        if (callbacks.on_checkpoint && hyper.checkpoint_every > 0 &&
            done_episodes % hyper.checkpoint_every == 0)
            callbacks.on_checkpoint(episode, throttle, &steering);
    }
    if (callbacks.on_checkpoint) callbacks.on_checkpoint(-1, throttle, &steering);
    return result;
}

}  // namespace dolly

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dolly/neural.hpp"
#include "dolly/rewards.hpp"
#include "dolly/simenv.hpp"

namespace dolly {

enum class AgentKind { throttle, steering, combined, complex_agent };

std::string to_string(AgentKind k);
AgentKind agent_kind_from_string(const std::string& s);

/// State/action subsets per agent: throttle ({s1,s2} -> a1), steering
/// ({s3,s4} -> a2), combined ({s1..s4} -> a1,a2), complex (all nine -> all four).
struct AgentConfig {
    AgentKind kind = AgentKind::combined;
    std::vector<int> state_indices;   // 0-based into Observation
    std::vector<int> action_indices;  // 0-based into ActionVector

    static AgentConfig make(AgentKind kind);

    int state_dim() const { return static_cast<int>(state_indices.size()); }
    int action_dim() const { return static_cast<int>(action_indices.size()); }

    std::vector<double> project_state(const Observation& obs) const;
    /// Expands an agent-space action to the full vector; inactive channels
    /// are exactly zero.
    ActionVector to_env_action(const std::vector<double>& action) const;
};

struct TD3Hyper {
    int batch_size = 128;
    double lr = 0.0005;
    double gamma = 0.99;
    double tau = 0.005;
    std::size_t buffer_capacity = 10'000'000;
    double target_noise_std = 0.2;   // sigma
    double target_noise_clip = 0.5;  // c
    int policy_delay = 2;            // d
    double exploration_noise_std = 0.1;
    int episodes = 5000;
    int warmup_steps = 5000;  // uniform random actions at the start of training
    int hidden1 = 400;
    int hidden2 = 300;
    int checkpoint_every = 500;  // episodes
    int eval_every = 50;         // episodes between deterministic evals
    int eval_episodes = 5;
    bool early_stop = false;
    double early_stop_epsilon = 1.0;
    int early_stop_patience = 5;

    void validate() const;
};

/// Uniformly sampled ring store of transitions; overwrites oldest-first.
class ReplayBuffer {
  public:
    ReplayBuffer(std::size_t capacity, int state_dim, int action_dim);

    void push(const std::vector<double>& state, const std::vector<double>& action,
              double reward, const std::vector<double>& next_state, bool done);

    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }
    std::uint64_t total_inserted() const { return total_; }
    int state_dim() const { return sdim_; }
    int action_dim() const { return adim_; }
    double reward_at(std::size_t slot) const { return rewards_[slot]; }

    struct Batch {
        int count = 0;
        int sdim = 0;
        int adim = 0;
        std::vector<double> states;       // count x sdim
        std::vector<double> actions;      // count x adim
        std::vector<double> rewards;      // count
        std::vector<double> next_states;  // count x sdim
        std::vector<double> dones;        // count, 0 or 1
    };
    Batch sample(int n, Rng& rng) const;

  private:
    std::size_t capacity_;
    int sdim_;
    int adim_;
    std::size_t size_ = 0;
    std::uint64_t total_ = 0;
    std::vector<double> states_, actions_, next_states_, rewards_;
    std::vector<std::uint8_t> dones_;
};

struct LearnStats {
    double critic1_loss = 0.0;
    double critic2_loss = 0.0;
    double actor_loss = 0.0;
    bool actor_updated = false;
    bool rejected = false;  // non-finite target or gradient; no update applied
};

/// TD3 learner: twin critics with clipped target-policy smoothing, delayed
/// actor updates, Polyak-averaged target networks.
class Td3Agent {
  public:
    Td3Agent(AgentConfig cfg, TD3Hyper hyper, std::uint64_t seed);

    /// Deterministic actor output, plus exploration noise when explore is
    /// true. The first warmup_steps exploring calls return uniform random
    /// actions. Everything is clipped to [-1, 1].
    std::vector<double> select_action(const std::vector<double>& state, bool explore);

    /// Target-policy smoothing: clip(mu_target(s') + clip(eps, -c, c), -1, 1).
    std::vector<double> target_action(const std::vector<double>& next_state);

    /// One noise draw as used by target_action (exposed for statistics tests).
    double sample_clipped_target_noise();

    /// Regresses both critics to y = r + gamma * (1 - done) * min(Q1', Q2').
    /// Returns both losses; a non-finite target aborts the update.
    std::pair<double, double> update_critics(const ReplayBuffer::Batch& batch);

    /// Gradient-ascends mean Q1(s, mu(s)); critics stay frozen. Throws
    /// std::logic_error when called off the policy-delay schedule.
    double update_actor(const ReplayBuffer::Batch& batch);

    /// Blends every target network toward its online counterpart.
    void polyak_update();

    /// One learning iteration: sample, critic update, delayed actor update,
    /// Polyak update of all targets.
    LearnStats learn(ReplayBuffer& buffer);

    const AgentConfig& agent_config() const { return cfg_; }
    const TD3Hyper& hyper() const { return hyper_; }
    const Mlp& actor() const { return actor_; }
    const Mlp& actor_target() const { return actor_target_; }
    const Mlp& critic1() const { return critic1_; }
    const Mlp& critic2() const { return critic2_; }
    const Mlp& critic1_target() const { return critic1_target_; }
    const Mlp& critic2_target() const { return critic2_target_; }
    Mlp& actor() { return actor_; }
    Mlp& actor_target() { return actor_target_; }
    Mlp& critic1() { return critic1_; }
    Mlp& critic2() { return critic2_; }
    Mlp& critic1_target() { return critic1_target_; }
    Mlp& critic2_target() { return critic2_target_; }
    long steps_taken() const { return steps_taken_; }
    long critic_updates() const { return critic_updates_; }
    long actor_updates() const { return actor_updates_; }
    bool actor_update_due() const;

    void save_checkpoint(std::ostream& os, const ReplayBuffer* buffer = nullptr) const;
    static Td3Agent load_checkpoint(std::istream& is);

    /// Critic targets y for a batch (exposed for the mechanics tests).
    std::vector<double> critic_targets(const ReplayBuffer::Batch& batch);

  private:
    Td3Agent() = default;
    void build_networks(std::uint64_t seed);
    std::vector<double> batched_q(const Mlp& critic, const std::vector<double>& states,
                                  const std::vector<double>& actions, int count,
                                  ForwardCache* cache) const;

    AgentConfig cfg_;
    TD3Hyper hyper_;
    Mlp actor_, actor_target_;
    Mlp critic1_, critic2_, critic1_target_, critic2_target_;
    Adam actor_opt_, critic1_opt_, critic2_opt_;
    Rng rng_;
    long steps_taken_ = 0;
    long critic_updates_ = 0;
    long actor_updates_ = 0;
};

struct EpisodeLogRow {
    int episode = 0;
    double cum_reward = 0.0;
    double mean_area = 0.0;
    double mean_centroid_x = 0.0;
    double mean_centroid_y = 0.0;
    double critic1_loss = 0.0;
    double critic2_loss = 0.0;
    double actor_loss = 0.0;
    long learn_iterations = 0;
};

struct EvalLogRow {
    int episode = 0;
    double mean_eval_reward = 0.0;
};

struct TrainCallbacks {
    std::function<void(const EpisodeLogRow&)> on_episode;
    std::function<void(const EvalLogRow&)> on_eval;
    // For the independent pair the second agent is non-null.
    std::function<void(int episode, const Td3Agent&, const Td3Agent*)> on_checkpoint;
};

struct TrainResult {
    std::vector<EpisodeLogRow> log;
    std::vector<EvalLogRow> eval_log;
    bool early_stopped = false;
    std::unique_ptr<Td3Agent> agent;
    std::unique_ptr<Td3Agent> second_agent;  // steering agent of the pair
};

/// Per-step training reward for an agent kind. Areas at or beyond area_max
/// are scored as area_max (the worst in-domain value); a lost subject earns
/// the position floor.
double step_reward(AgentKind kind, const ShotMetrics& metrics, const ActionVector& curr,
                   const ActionVector& prev, const RewardWeights& wts,
                   ComplexReward* breakdown = nullptr);

/// Single-agent training loop (throttle, steering, combined, or complex).
TrainResult train(const EnvConfig& env_cfg, AgentKind kind, const TD3Hyper& hyper,
                  const RewardWeights& wts, std::uint64_t seed,
                  const TrainCallbacks& callbacks = {});

/// Two decoupled agents (throttle + steering) acting simultaneously, each
/// with its own buffer and reward stream.
TrainResult independent_pair_train(const EnvConfig& env_cfg, const TD3Hyper& hyper,
                                   const RewardWeights& wts, std::uint64_t seed,
                                   const TrainCallbacks& callbacks = {});

}  // namespace dolly

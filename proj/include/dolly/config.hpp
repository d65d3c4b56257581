#pragma once

#include <stdexcept>
#include <string>

#include "dolly/baseline.hpp"
#include "dolly/rewards.hpp"
#include "dolly/simenv.hpp"
#include "dolly/td3.hpp"

namespace dolly {

/// Bad flags, bad config files, unknown keys. The CLI maps this to exit
/// code 2; everything else exits 3.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Everything a run needs, resolved from profile defaults, an optional
/// config file, and flag overrides (in that order).
struct RunConfig {
    std::string profile = "desk";
    EnvConfig env;
    PerturbationConfig perturbation;
    RewardWeights rewards_combined;
    RewardWeights rewards_complex;
    TD3Hyper td3;
    PDGains pd;
};

/// Shipped profiles: "paper" (5000 x 1500 episodes, 400/300 nets, 10M
/// buffer) and "desk" (300 x 200, 64/64 nets, 1e5 buffer) for runs that
/// finish on a workstation.
RunConfig profile_config(const std::string& profile);

/// Parses a JSON config file section-by-section. Unknown keys anywhere are
/// rejected with a ConfigError naming the key.
RunConfig load_config_file(const std::string& path, const RunConfig& base);
RunConfig parse_config_json(const std::string& text, const RunConfig& base);

/// Full resolved snapshot, embeddable in manifests and reloadable.
std::string config_to_json(const RunConfig& cfg);

}  // namespace dolly

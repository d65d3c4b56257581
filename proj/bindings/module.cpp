#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>

#include "dolly/baseline.hpp"
#include "dolly/cli.hpp"
#include "dolly/evalharness.hpp"
#include "dolly/imaging.hpp"
#include "dolly/rewards.hpp"
#include "dolly/simenv.hpp"
#include "dolly/td3.hpp"
#include "dolly/version.hpp"

namespace py = pybind11;
using namespace dolly;

namespace {

Td3Agent load_agent(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
    return Td3Agent::load_checkpoint(f);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Dolly-in shot simulator, TD3 trainer, and evaluation harness";
    m.attr("__version__") = kVersion;

    // ---- imaging ----
    py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
        .def(py::init<int, int, double>(), py::arg("width_px") = 120, py::arg("height_px") = 90,
             py::arg("fov_h") = 1.0)
        .def_readwrite("width_px", &CameraIntrinsics::width_px)
        .def_readwrite("height_px", &CameraIntrinsics::height_px)
        .def_readwrite("fov_h", &CameraIntrinsics::fov_h)
        .def("midpoint_px", &CameraIntrinsics::midpoint_px)
        .def("focal_px", &CameraIntrinsics::focal_px);

    py::class_<BinaryMask>(m, "BinaryMask")
        .def(py::init<int, int>())
        .def_readonly("width", &BinaryMask::width)
        .def_readonly("height", &BinaryMask::height)
        .def("at", &BinaryMask::at)
        .def("set", &BinaryMask::set)
        .def("total_pixels", &BinaryMask::total_pixels)
        .def("to_text", [](const BinaryMask& mask) { return mask_to_text(mask); })
        .def_static("from_text", [](const std::string& text) { return mask_from_text(text); });

    py::class_<Moments>(m, "Moments")
        .def_readonly("m00", &Moments::m00)
        .def_readonly("m10", &Moments::m10)
        .def_readonly("m01", &Moments::m01)
        .def("has_centroid", &Moments::has_centroid)
        .def("centroid_x", &Moments::centroid_x)
        .def("centroid_y", &Moments::centroid_y);

    py::class_<ShotMetrics>(m, "ShotMetrics")
        .def(py::init<>())
        .def_readwrite("area_frac", &ShotMetrics::area_frac)
        .def_readwrite("centroid_x", &ShotMetrics::centroid_x)
        .def_readwrite("centroid_y", &ShotMetrics::centroid_y)
        .def_readwrite("pixel_offset", &ShotMetrics::pixel_offset)
        .def_readwrite("camera_offset", &ShotMetrics::camera_offset)
        .def_readwrite("subject_offset", &ShotMetrics::subject_offset)
        .def_readwrite("subject_visible", &ShotMetrics::subject_visible);

    py::class_<CameraPose>(m, "CameraPose")
        .def(py::init<>())
        .def_readwrite("x", &CameraPose::x)
        .def_readwrite("y", &CameraPose::y)
        .def_readwrite("z", &CameraPose::z)
        .def_readwrite("yaw", &CameraPose::yaw)
        .def_readwrite("pitch", &CameraPose::pitch);

    py::class_<Subject>(m, "Subject")
        .def(py::init<>())
        .def_readwrite("x", &Subject::x)
        .def_readwrite("y", &Subject::y)
        .def_readwrite("z", &Subject::z)
        .def_readwrite("radius", &Subject::radius);

    m.def("render_mask", &render_mask, py::arg("pose"), py::arg("subject"), py::arg("camera"));
    m.def("compute_moments", &compute_moments);
    m.def("area_percentage", &area_percentage);
    m.def("camera_offset_angle", &camera_offset_angle);
    m.def("subject_offset_angle", &subject_offset_angle);
    m.def(
        "delta_metric",
        [](double actual, double expected, double maximum) {
            return delta_metric(actual, DeltaParams{expected, maximum});
        },
        py::arg("actual"), py::arg("expected"), py::arg("maximum"));
    m.def("shot_metrics", &shot_metrics, py::arg("moments"), py::arg("mask"), py::arg("camera"),
          py::arg("pan"));

    // ---- environment ----
    py::enum_<StartPosition>(m, "StartPosition")
        .value("left", StartPosition::left)
        .value("right", StartPosition::right)
        .value("centre", StartPosition::centre)
        .value("mixed", StartPosition::mixed)
        .value("explicit_pose", StartPosition::explicit_pose);

    py::class_<EnvConfig>(m, "EnvConfig")
        .def(py::init<>())
        .def_readwrite("frame_width", &EnvConfig::frame_width)
        .def_readwrite("frame_height", &EnvConfig::frame_height)
        .def_readwrite("fov_h", &EnvConfig::fov_h)
        .def_readwrite("dt", &EnvConfig::dt)
        .def_readwrite("max_speed", &EnvConfig::max_speed)
        .def_readwrite("max_turn_rate", &EnvConfig::max_turn_rate)
        .def_readwrite("max_pan_rate", &EnvConfig::max_pan_rate)
        .def_readwrite("max_tilt_rate", &EnvConfig::max_tilt_rate)
        .def_readwrite("pan_limit", &EnvConfig::pan_limit)
        .def_readwrite("tilt_limit", &EnvConfig::tilt_limit)
        .def_readwrite("episode_len", &EnvConfig::episode_len)
        .def_readwrite("arena_half_extent", &EnvConfig::arena_half_extent)
        .def_readwrite("subject_radius", &EnvConfig::subject_radius)
        .def_readwrite("subject_height", &EnvConfig::subject_height)
        .def_readwrite("camera_height", &EnvConfig::camera_height)
        .def_readwrite("start_standoff", &EnvConfig::start_standoff)
        .def_readwrite("start_lateral", &EnvConfig::start_lateral)
        .def_readwrite("start_jitter_pos", &EnvConfig::start_jitter_pos)
        .def_readwrite("start_jitter_heading", &EnvConfig::start_jitter_heading)
        .def_readwrite("target_area", &EnvConfig::target_area)
        .def_readwrite("area_max", &EnvConfig::area_max)
        .def_readwrite("start_position", &EnvConfig::start_position)
        .def_readwrite("start_x", &EnvConfig::start_x)
        .def_readwrite("start_y", &EnvConfig::start_y)
        .def_readwrite("start_heading", &EnvConfig::start_heading)
        .def_readwrite("rng_seed", &EnvConfig::rng_seed);

    py::class_<PerturbationConfig>(m, "PerturbationConfig")
        .def(py::init<>())
        .def_readwrite("actuation_gain_std", &PerturbationConfig::actuation_gain_std)
        .def_readwrite("observation_noise_std", &PerturbationConfig::observation_noise_std)
        .def_readwrite("actuation_latency", &PerturbationConfig::actuation_latency)
        .def_readwrite("mask_dropout_prob", &PerturbationConfig::mask_dropout_prob)
        .def_readwrite("rng_seed", &PerturbationConfig::rng_seed);

    py::class_<WorldState>(m, "WorldState")
        .def_readonly("robot_x", &WorldState::robot_x)
        .def_readonly("robot_y", &WorldState::robot_y)
        .def_readonly("robot_heading", &WorldState::robot_heading)
        .def_readonly("pan", &WorldState::pan)
        .def_readonly("tilt", &WorldState::tilt)
        .def_readonly("t", &WorldState::t);

    py::class_<Observation>(m, "Observation")
        .def("__getitem__",
             [](const Observation& o, int i) {
                 if (i < 0 || i >= 9) throw py::index_error();
                 return o[i];
             })
        .def("__len__", [](const Observation&) { return 9; })
        .def("to_list",
             [](const Observation& o) { return std::vector<double>(o.s.begin(), o.s.end()); });

    py::class_<ActionVector>(m, "ActionVector")
        .def(py::init<>())
        .def(py::init([](double a1, double a2, double a3, double a4) {
                 ActionVector v;
                 v.a = {a1, a2, a3, a4};
                 return v;
             }),
             py::arg("a1") = 0.0, py::arg("a2") = 0.0, py::arg("a3") = 0.0, py::arg("a4") = 0.0)
        .def("to_list",
             [](const ActionVector& v) { return std::vector<double>(v.a.begin(), v.a.end()); });

    py::class_<Environment>(m, "Environment")
        .def(py::init<EnvConfig>())
        .def("reset", &Environment::reset)
        .def("step",
             [](Environment& env, const ActionVector& a) {
                 const auto res = env.step(a);
                 return py::make_tuple(res.obs, res.metrics, res.done);
             })
        .def("world", &Environment::world, py::return_value_policy::copy)
        .def("last_metrics", &Environment::last_metrics, py::return_value_policy::copy)
        .def("last_mask", &Environment::last_mask, py::return_value_policy::copy)
        .def("episode_done", &Environment::episode_done);

    py::class_<PerturbedEnvironment, Environment>(m, "PerturbedEnvironment")
        .def(py::init<EnvConfig, PerturbationConfig>());

    // ---- rewards ----
    py::class_<RewardWeights>(m, "RewardWeights")
        .def(py::init<>())
        .def_static("combined_defaults", &RewardWeights::combined_defaults)
        .def_static("complex_defaults", &RewardWeights::complex_defaults)
        .def_readwrite("w1", &RewardWeights::w1)
        .def_readwrite("w2", &RewardWeights::w2)
        .def_readwrite("w3", &RewardWeights::w3)
        .def_readwrite("k", &RewardWeights::k)
        .def_readwrite("target_area", &RewardWeights::target_area)
        .def_readwrite("area_max", &RewardWeights::area_max)
        .def_readwrite("target_centroid_x", &RewardWeights::target_centroid_x)
        .def_readwrite("target_centroid_y", &RewardWeights::target_centroid_y)
        .def_readwrite("frame_width", &RewardWeights::frame_width)
        .def_readwrite("theta_max", &RewardWeights::theta_max)
        .def_readwrite("smooth_coeff", &RewardWeights::smooth_coeff)
        .def_readwrite("smooth_threshold", &RewardWeights::smooth_threshold)
        .def_readwrite("signed_upper_branch", &RewardWeights::signed_upper_branch);

    py::class_<ComplexReward>(m, "ComplexReward")
        .def_readonly("total", &ComplexReward::total)
        .def_readonly("area_term", &ComplexReward::area_term)
        .def_readonly("position_term", &ComplexReward::position_term)
        .def_readonly("offset_term", &ComplexReward::offset_term)
        .def_readonly("smoothness_term", &ComplexReward::smoothness_term);

    m.def("r_area_original", &r_area_original);
    m.def("r_position", py::overload_cast<double, const RewardWeights&, double>(&r_position));
    m.def("r_area_scaled", &r_area_scaled);
    m.def("r_combined", &r_combined);
    m.def("r_object_offset", &r_object_offset);
    m.def("smoothness_penalty", &smoothness_penalty);
    m.def("r_complex", &r_complex);

    // ---- baseline ----
    py::class_<PDGains>(m, "PDGains")
        .def(py::init<>())
        .def_readwrite("kp_throttle", &PDGains::kp_throttle)
        .def_readwrite("kd_throttle", &PDGains::kd_throttle)
        .def_readwrite("kp_steer", &PDGains::kp_steer)
        .def_readwrite("kd_steer", &PDGains::kd_steer)
        .def_readwrite("kp_pan", &PDGains::kp_pan)
        .def_readwrite("kd_pan", &PDGains::kd_pan)
        .def_readwrite("kp_tilt", &PDGains::kp_tilt)
        .def_readwrite("kd_tilt", &PDGains::kd_tilt);

    m.def("pd_step", &pd_step, py::arg("error"), py::arg("prev_error"), py::arg("kp"),
          py::arg("kd"), py::arg("dt"), py::arg("first_step") = false);

    py::class_<PdController>(m, "PdController")
        .def(py::init<PDGains, const EnvConfig&>())
        .def("reset", &PdController::reset)
        .def("act", &PdController::act);

    // ---- training ----
    py::enum_<AgentKind>(m, "AgentKind")
        .value("throttle", AgentKind::throttle)
        .value("steering", AgentKind::steering)
        .value("combined", AgentKind::combined)
        .value("complex", AgentKind::complex_agent);

    py::class_<TD3Hyper>(m, "TD3Hyper")
        .def(py::init<>())
        .def_readwrite("batch_size", &TD3Hyper::batch_size)
        .def_readwrite("lr", &TD3Hyper::lr)
        .def_readwrite("gamma", &TD3Hyper::gamma)
        .def_readwrite("tau", &TD3Hyper::tau)
        .def_readwrite("buffer_capacity", &TD3Hyper::buffer_capacity)
        .def_readwrite("target_noise_std", &TD3Hyper::target_noise_std)
        .def_readwrite("target_noise_clip", &TD3Hyper::target_noise_clip)
        .def_readwrite("policy_delay", &TD3Hyper::policy_delay)
        .def_readwrite("exploration_noise_std", &TD3Hyper::exploration_noise_std)
        .def_readwrite("episodes", &TD3Hyper::episodes)
        .def_readwrite("warmup_steps", &TD3Hyper::warmup_steps)
        .def_readwrite("hidden1", &TD3Hyper::hidden1)
        .def_readwrite("hidden2", &TD3Hyper::hidden2)
        .def_readwrite("checkpoint_every", &TD3Hyper::checkpoint_every)
        .def_readwrite("eval_every", &TD3Hyper::eval_every)
        .def_readwrite("eval_episodes", &TD3Hyper::eval_episodes)
        .def_readwrite("early_stop", &TD3Hyper::early_stop)
        .def_readwrite("early_stop_epsilon", &TD3Hyper::early_stop_epsilon)
        .def_readwrite("early_stop_patience", &TD3Hyper::early_stop_patience);

    py::class_<AgentConfig>(m, "AgentConfig")
        .def_static("make", &AgentConfig::make)
        .def_readonly("state_indices", &AgentConfig::state_indices)
        .def_readonly("action_indices", &AgentConfig::action_indices)
        .def("project_state",
             [](const AgentConfig& cfg, const Observation& obs) { return cfg.project_state(obs); })
        .def("to_env_action", &AgentConfig::to_env_action);

    py::class_<Td3Agent>(m, "Td3Agent")
        .def(py::init<AgentConfig, TD3Hyper, std::uint64_t>())
        .def("select_action", &Td3Agent::select_action, py::arg("state"), py::arg("explore"))
        .def("target_action", &Td3Agent::target_action)
        .def("steps_taken", &Td3Agent::steps_taken)
        .def("save",
             [](const Td3Agent& agent, const std::string& path) {
                 std::ofstream f(path);
                 if (!f) throw std::runtime_error("cannot write " + path);
                 agent.save_checkpoint(f);
             })
        .def_static("load", &load_agent);

    py::class_<EpisodeLogRow>(m, "EpisodeLogRow")
        .def_readonly("episode", &EpisodeLogRow::episode)
        .def_readonly("cum_reward", &EpisodeLogRow::cum_reward)
        .def_readonly("mean_area", &EpisodeLogRow::mean_area)
        .def_readonly("mean_centroid_x", &EpisodeLogRow::mean_centroid_x)
        .def_readonly("mean_centroid_y", &EpisodeLogRow::mean_centroid_y);

    m.def(
        "train",
        [](const EnvConfig& env, AgentKind kind, const TD3Hyper& hyper, const RewardWeights& wts,
           std::uint64_t seed) {
            TrainResult r = train(env, kind, hyper, wts, seed);
            return py::make_tuple(r.log, std::move(*r.agent));
        },
        py::arg("env"), py::arg("kind"), py::arg("hyper"), py::arg("weights"), py::arg("seed"),
        "Runs the TD3 training loop; returns (episode_log, agent).");

    // ---- evaluation ----
    py::class_<TrialResult>(m, "TrialResult")
        .def_readonly("policy_id", &TrialResult::policy_id)
        .def_readonly("start", &TrialResult::start)
        .def_readonly("seed", &TrialResult::seed)
        .def_readonly("cum_reward", &TrialResult::cum_reward)
        .def_readonly("final_area_percent", &TrialResult::final_area_percent)
        .def_readonly("final_centroid_x", &TrialResult::final_centroid_x)
        .def_readonly("final_centroid_y", &TrialResult::final_centroid_y);

    py::class_<SummaryStats>(m, "SummaryStats")
        .def_readonly("count", &SummaryStats::count)
        .def_readonly("mean", &SummaryStats::mean)
        .def_readonly("median", &SummaryStats::median)
        .def_readonly("q1", &SummaryStats::q1)
        .def_readonly("q3", &SummaryStats::q3)
        .def_readonly("iqr", &SummaryStats::iqr)
        .def_readonly("min", &SummaryStats::min)
        .def_readonly("max", &SummaryStats::max);

    m.def("summarize", &summarize);

    m.def(
        "pearson",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            const Correlation c = pearson(a, b);
            return py::make_tuple(c.value, c.defined);
        },
        "Pearson correlation; returns (value, defined).");

    m.def(
        "run_cli", [](const std::vector<std::string>& args) { return dolly::cli::run(args); },
        "Invokes the command-line interface in-process.");
}

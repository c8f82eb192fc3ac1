// brainslam command line: simulate, calibrate, slam, report, render.
//
// Every subcommand accepts `--config FILE` with `key = value` lines naming its
// long flags; flags given on the command line win.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "brainslam/decoder.hpp"
#include "brainslam/experience_map.hpp"
#include "brainslam/lfp.hpp"
#include "brainslam/maze.hpp"
#include "brainslam/pipeline.hpp"
#include "brainslam/tensor_io.hpp"
#include "brainslam/trajectory.hpp"
#include "brainslam/wavelet.hpp"

namespace fs = std::filesystem;
using namespace brainslam;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
  if (!out) throw RuntimeAbort("write failed: " + path.string());
}

const std::map<std::string, TurnRule> kTurnRules{{"match", TurnRule::match},
                                                 {"mismatch", TurnRule::mismatch}};

void add_session_options(CLI::App* app, SessionConfig& s) {
  app->add_option("--n-trials", s.n_trials, "Trials per session")->check(CLI::PositiveNumber);
  app->add_option("--mean-speed", s.mean_speed_cm_s, "Mean running speed (cm/s)")->check(CLI::PositiveNumber);
  app->add_option("--max-speed", s.max_speed_cm_s, "Speed cap (cm/s)")->check(CLI::PositiveNumber);
  app->add_option("--reward-pause-ms", s.pause_ms_at_reward)->check(CLI::NonNegativeNumber);
  app->add_option("--inter-trial-pause-ms", s.inter_trial_pause_ms)->check(CLI::NonNegativeNumber);
  app->add_option("--turn-rule", s.turn_rule)->transform(CLI::CheckedTransformer(kTurnRules));
  app->add_option("--session-seed", s.rng_seed, "Trajectory seed");
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string maze_file;
  SessionConfig session;
  fs::path out_dir;
  bool lfp = false;
  std::uint64_t lfp_seed = 1;
  std::size_t image_stride = 25;
  double train_fraction = 0.8;
  std::string center = "median";
};

std::string norm_stats_json(const NormStats& stats, const std::vector<double>& frequencies) {
  nlohmann::ordered_json j;
  j["center_statistic"] = stats.center_statistic == CenterStatistic::median ? "median" : "mean";
  j["scale_floor"] = stats.scale_floor;
  j["n_channels"] = stats.n_channels;
  j["frequencies_hz"] = frequencies;
  j["center"] = stats.center;  // [channel][frequency], row-major
  j["scale"] = stats.scale;
  return j.dump(1) + "\n";
}

void run_simulate(const SimulateArgs& a) {
  if (!(a.train_fraction > 0.0 && a.train_fraction < 1.0)) {
    throw ValidationError("train fraction must be in (0, 1)");
  }
  const MazeSkeleton maze = a.maze_file.empty() ? build_default_maze() : load_maze(a.maze_file);
  const SimulatedSession session = simulate_session(maze, a.session);
  fs::create_directories(a.out_dir);
  {
    std::ofstream out(a.out_dir / "maze.txt", std::ios::binary);
    write_maze(out, maze);
  }
  save_trajectory(a.out_dir / "trajectory.csv", session.samples);
  std::printf("trajectory: %zu samples, %.1f min, %zu reward visits\n", session.samples.size(),
              static_cast<double>(session.duration_ms()) / 60000.0, session.reward_visits);
  if (!a.lfp) return;

  const LfpRecording recording = synthesize_lfp(session.samples, default_lfp_config(maze), a.lfp_seed);
  const MorletFilterBank bank(default_frequencies(), recording.sample_rate_hz);
  const std::size_t split = split_index(session.samples.size(), a.train_fraction);

  auto strided = [&](std::size_t begin, std::size_t end) {
    std::vector<TrajectorySample> labels;
    for (std::size_t i = begin; i < end; i += a.image_stride) labels.push_back(session.samples[i]);
    return labels;
  };
  const auto train_labels = strided(0, split);
  const auto test_labels = strided(split, session.samples.size());
  auto train = transform_windows(recording, bank, train_labels);
  auto test = transform_windows(recording, bank, test_labels);
  if (train.empty()) throw ValidationError("no complete training windows");

  const auto center = a.center == "mean" ? CenterStatistic::mean : CenterStatistic::median;
  const NormStats stats = fit_norm_stats(std::span<const WaveletImage>(train), center);
  normalize_in_place(train, stats);
  normalize_in_place(test, stats);

  // Labels follow the images actually emitted (edge windows are dropped).
  auto emitted = [&](const std::vector<WaveletImage>& images) {
    std::vector<TrajectorySample> rows;
    std::size_t i = 0;
    for (const auto& img : images) {
      while (session.samples[i].t_ms != img.label_t_ms) ++i;
      rows.push_back(session.samples[i]);
    }
    return rows;
  };
  write_tensor_file(a.out_dir / "train_images.bslm", images_to_tensor(train));
  write_tensor_file(a.out_dir / "test_images.bslm", images_to_tensor(test));
  save_trajectory(a.out_dir / "train_labels.csv", emitted(train));
  save_trajectory(a.out_dir / "test_labels.csv", emitted(test));
  write_file(a.out_dir / "norm_stats.json", norm_stats_json(stats, bank.frequencies()));
  std::printf("images: %zu train, %zu test (%zu x %zu x %zu)\n", train.size(), test.size(),
              kLfpChannels, bank.frequencies().size(), kImageTimeBins);
}

// --- calibrate --------------------------------------------------------------

struct CalibrateArgs {
  std::string preset;
  double location_mae = 0.0;
  double direction_mae = 0.0;
  double speed_mae = 0.0;
  CalibrationOptions options;
  std::string out;
};

void run_calibrate(const CalibrateArgs& a) {
  DecodingTargets targets{a.location_mae, a.direction_mae, a.speed_mae};
  if (!a.preset.empty()) targets = rat_targets(a.preset);
  const NoiseProfile p = calibrate(targets, a.options);
  const auto ref = calibration_reference(a.options.draws, a.options.reference_speed_cm_s);
  const DecodingErrors got = decoding_errors(ref, noisy_oracle(ref, p, a.options.seed));

  nlohmann::ordered_json j;
  j["targets"] = {{"location_mae_cm", targets.location_mae_cm},
                  {"direction_mae_deg", targets.direction_mae_deg},
                  {"speed_mae_cm_s", targets.speed_mae_cm_s}};
  j["profile"] = {{"sigma_xy_cm", p.sigma_xy_cm},
                  {"kappa_dir", p.kappa_dir},
                  {"sigma_speed_cm_s", p.sigma_speed_cm_s},
                  {"cardinal_flip_prob", p.cardinal_flip_prob}};
  j["achieved"] = {{"location_mae_cm", got.location_mae_cm},
                   {"direction_mae_deg", got.direction_mae_deg},
                   {"speed_mae_cm_s", got.speed_mae_cm_s}};
  j["draws"] = a.options.draws;
  j["seed"] = a.options.seed;
  const std::string text = j.dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_file(a.out, text);
  }
}

// --- config files -----------------------------------------------------------

// Pulls `--config FILE` out of the subcommand's arguments and splices the
// file's entries in ahead of the remaining flags, so the flags win.
std::vector<std::string> expand_config(CLI::App& app, std::vector<std::string> args) {
  if (args.size() < 2) return args;
  CLI::App* sub = app.get_subcommand_no_throw(args[1]);
  if (sub == nullptr) return args;

  std::string file;
  std::vector<std::string> rest;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      file = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (file.empty()) return args;
  if (!fs::exists(file)) throw ValidationError("config file not found: " + file);

  std::vector<std::string> out{args[0], args[1]};
  for (const CLI::ConfigItem& item : CLI::ConfigINI().from_file(file)) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    if (!item.parents.empty()) throw ValidationError("config sections are not supported: " + item.fullname());
    const CLI::Option* opt = sub->get_option_no_throw("--" + item.name);
    if (opt == nullptr) throw ValidationError("unknown config key '" + item.name + "'");
    if (opt->get_expected_min() == 0) {
      const std::string v = item.inputs.empty() ? "true" : item.inputs.front();
      if (CLI::detail::to_flag_value(v) > 0) out.push_back("--" + item.name);
      continue;
    }
    out.push_back("--" + item.name);
    out.insert(out.end(), item.inputs.begin(), item.inputs.end());
  }
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BrainSLAM workbench"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_file;  // consumed by expand_config; declared so --help lists it

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Trajectory, optional LFP and wavelet tensors");
  simulate->add_option("--maze", sim.maze_file, "Maze file (default: built-in maze)");
  add_session_options(simulate, sim.session);
  simulate->add_option("--out-dir", sim.out_dir)->required();
  simulate->add_flag("--lfp", sim.lfp, "Also synthesize LFP and write wavelet tensors");
  simulate->add_option("--lfp-seed", sim.lfp_seed);
  simulate->add_option("--image-stride", sim.image_stride, "Keep every n-th label as an image")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--train-fraction", sim.train_fraction);
  simulate->add_option("--center", sim.center, "Normalisation centre")->check(CLI::IsMember({"median", "mean"}));

  CalibrateArgs cal;
  auto* calibrate_cmd = app.add_subcommand("calibrate", "Noise profile from MAE targets");
  auto* preset_opt = calibrate_cmd->add_option("--preset", cal.preset)
                         ->check(CLI::IsMember({"rat1", "rat2", "rat3"}));
  auto* loc_opt = calibrate_cmd->add_option("--location-mae", cal.location_mae, "cm")->excludes(preset_opt);
  calibrate_cmd->add_option("--direction-mae", cal.direction_mae, "degrees")->needs(loc_opt);
  calibrate_cmd->add_option("--speed-mae", cal.speed_mae, "cm/s")->needs(loc_opt);
  calibrate_cmd->add_option("--draws", cal.options.draws)->check(CLI::PositiveNumber);
  calibrate_cmd->add_option("--seed", cal.options.seed);
  calibrate_cmd->add_option("--flip-share", cal.options.flip_share);
  calibrate_cmd->add_option("--out", cal.out, "JSON output (default: stdout)");

  RunConfig run;
  std::string run_maze, run_trajectory, run_decodings, run_out;
  bool no_loop_closure = false;
  auto* slam = app.add_subcommand("slam", "Run one session and write its artifacts");
  slam->add_option("--maze", run_maze);
  slam->add_option("--trajectory", run_trajectory, "Trajectory CSV (default: simulate)");
  add_session_options(slam, run.session);
  slam->add_option("--preset", run.decoder_preset, "Oracle noise")
      ->check(CLI::IsMember({"zero", "rat1", "rat2", "rat3"}));
  slam->add_option("--decodings", run_decodings, "Decodings CSV instead of the oracle");
  slam->add_option("--decoder-seed", run.decoder_seed);
  slam->add_option("--train-fraction", run.train_fraction);
  slam->add_flag("--full-trajectory", run.full_trajectory, "Run on every sample, not the test split");
  slam->add_option("--nx", run.slam.pose.nx)->check(CLI::PositiveNumber);
  slam->add_option("--ny", run.slam.pose.ny)->check(CLI::PositiveNumber);
  slam->add_option("--ntheta", run.slam.pose.ntheta)->check(CLI::PositiveNumber);
  slam->add_option("--cell-size", run.slam.pose.cell_size_cm, "cm")->check(CLI::PositiveNumber);
  slam->add_option("--psi", run.slam.pose.psi, "Global inhibition");
  slam->add_option("--inh-amplitude", run.slam.pose.inh_amplitude);
  slam->add_option("--match-threshold", run.slam.match_threshold_cm, "cm")->check(CLI::PositiveNumber);
  slam->add_option("--inject-energy", run.slam.inject_energy);
  slam->add_option("--inject-min-age-ms", run.slam.inject_min_age_ms);
  slam->add_option("--initial-energy", run.slam.initial_energy);
  slam->add_flag("--no-loop-closure", no_loop_closure);
  slam->add_option("--aliasing-slack", run.report.aliasing_slack_cm, "cm");
  slam->add_option("--out-dir", run_out)->required();

  std::string report_dir, report_out;
  ReportParams report_params;
  auto* report = app.add_subcommand("report", "Recompute metrics from a run directory");
  report->add_option("--run-dir", report_dir)->required()->check(CLI::ExistingDirectory);
  report->add_option("--aliasing-slack", report_params.aliasing_slack_cm, "cm");
  report->add_option("--out", report_out, "JSON output (default: stdout)");

  std::string render_map, render_maze, render_out;
  auto* render = app.add_subcommand("render", "SVG from a map file");
  render->add_option("--map", render_map)->required()->check(CLI::ExistingFile);
  render->add_option("--maze", render_maze)->check(CLI::ExistingFile);
  render->add_option("--out", render_out)->required();

  for (auto* sub : {simulate, calibrate_cmd, slam, report, render}) {
    sub->add_option("--config", config_file, "key = value file supplying any flag");
  }

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_config(app, std::move(args));
    std::vector<const char*> cargs;
    for (const auto& s : args) cargs.push_back(s.c_str());
    try {
      app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? 0 : 1;
    }

    if (simulate->parsed()) {
      run_simulate(sim);
    } else if (calibrate_cmd->parsed()) {
      if (cal.preset.empty() && cal.location_mae == 0.0) {
        throw ValidationError("give --preset or the three MAE targets");
      }
      run_calibrate(cal);
    } else if (slam->parsed()) {
      if (!run_maze.empty()) run.maze_file = run_maze;
      if (!run_trajectory.empty()) run.trajectory_file = run_trajectory;
      if (!run_decodings.empty()) run.decodings_file = run_decodings;
      run.slam.loop_closure = !no_loop_closure;
      run.output_dir = run_out;
      run.report.max_speed_cm_s = run.session.max_speed_cm_s;
      const SessionOutcome outcome = run_session(run);
      std::cout << outcome.report.to_json();
    } else if (report->parsed()) {
      const std::string text = report_from_artifacts(report_dir, report_params).to_json();
      if (report_out.empty()) {
        std::cout << text;
      } else {
        write_file(report_out, text);
      }
    } else if (render->parsed()) {
      const ExperienceMap map = load_map(render_map);
      if (render_maze.empty()) {
        write_file(render_out, render_svg(map));
      } else {
        const MazeSkeleton maze = load_maze(render_maze);
        write_file(render_out, render_svg(map, &maze));
      }
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const RuntimeAbort& e) {
    std::cerr << "aborted: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "aborted: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

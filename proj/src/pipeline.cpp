#include "brainslam/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "brainslam/text_io.hpp"

namespace brainslam {

const char* phase_name(Phase phase) {
  switch (phase) {
    case Phase::read_decoding: return "read_decoding";
    case Phase::view_match: return "view_match";
    case Phase::inject: return "inject";
    case Phase::dynamics: return "dynamics";
    case Phase::path_integrate: return "path_integrate";
    case Phase::experience_map: return "experience_map";
    case Phase::record: return "record";
  }
  return "?";
}

namespace {

const TrajectorySample& truth_at(std::span<const TrajectorySample> truth, std::int64_t t_ms) {
  const auto it = std::lower_bound(truth.begin(), truth.end(), t_ms,
                                   [](const TrajectorySample& s, std::int64_t t) { return s.t_ms < t; });
  if (it == truth.end() || it->t_ms != t_ms) {
    throw ValidationError("no ground-truth sample at t_ms=" + std::to_string(t_ms));
  }
  return *it;
}

const PoseRecord& record_at(std::span<const PoseRecord> poses, std::int64_t t_ms) {
  const auto it = std::lower_bound(poses.begin(), poses.end(), t_ms,
                                   [](const PoseRecord& r, std::int64_t t) { return r.t_ms < t; });
  if (it == poses.end() || it->t_ms != t_ms) {
    throw ValidationError("no pose record at t_ms=" + std::to_string(t_ms));
  }
  return *it;
}

}  // namespace

SlamResult run_slam(std::span<const TrajectorySample> truth, std::span<const Decoding> decodings,
                    const SlamParams& params, const PhaseObserver& observer) {
  if (decodings.empty()) throw ValidationError("no decodings to process");
  auto emit = [&](Phase p) {
    if (observer) observer(p);
  };

  PoseCellNetwork network(params.pose);
  SlamResult result{{}, ViewCellRegistry(params.match_threshold_cm, params.inject_energy, params.inject_min_age_ms), {}, 0};
  result.poses.reserve(decodings.size());
  network.inject({decodings.front().position, decodings.front().direction_deg}, params.initial_energy);

  std::int64_t prev_t = decodings.front().t_ms;
  for (std::size_t i = 0; i < decodings.size(); ++i) {
    emit(Phase::read_decoding);
    const Decoding& d = decodings[i];
    if (i > 0 && d.t_ms <= prev_t) throw ValidationError("decoding timestamps must strictly increase");

    emit(Phase::view_match);
    const ViewMatch match = result.registry.match_or_create(d.position, network.center_of_activation(), d.t_ms);

    emit(Phase::inject);
    if (params.loop_closure && result.registry.on_match_inject(network)) ++result.injections;

    emit(Phase::dynamics);
    if (params.abort_snapshot) {
      const TensorFile before = network.snapshot(static_cast<std::uint64_t>(std::max<std::int64_t>(0, d.t_ms)));
      try {
        network.step_dynamics();
      } catch (const RuntimeAbort& e) {
        write_tensor_file(*params.abort_snapshot, before);
        throw RuntimeAbort(std::string(e.what()) + " at t_ms=" + std::to_string(d.t_ms) + "; snapshot in " +
                           params.abort_snapshot->string());
      }
    } else {
      network.step_dynamics();
    }

    emit(Phase::path_integrate);
    // The first decoding is where the packet was placed, so it only turns.
    const double dt_ms = i == 0 ? static_cast<double>(kSampleIntervalMs) : static_cast<double>(d.t_ms - prev_t);
    const double speed = i == 0 ? 0.0 : d.speed_cm_s;
    const double rotation = signed_angle_diff_deg(d.direction_deg, network.center_of_activation().theta_deg);
    network.path_integrate(speed, rotation, dt_ms);

    emit(Phase::experience_map);
    const PoseEstimate pose = network.center_of_activation();
    const double travel = speed * dt_ms / 1000.0;
    const double heading = deg_to_rad(d.direction_deg);
    result.map.on_step(match.cell_id, match.is_new, pose,
                       {travel * std::cos(heading), travel * std::sin(heading), rotation}, d.t_ms);

    emit(Phase::record);
    PoseRecord rec;
    rec.t_ms = d.t_ms;
    rec.estimate = pose;
    rec.truth = truth_at(truth, d.t_ms);
    rec.view_cell = match.cell_id;
    rec.node = *result.map.active_node();
    rec.truncation_events = network.border_truncation_events();
    result.poses.push_back(rec);
    prev_t = d.t_ms;
  }
  return result;
}

SimilarityFit map_fidelity(const ExperienceMap& map, std::span<const PoseRecord> poses) {
  std::vector<Vec2> nodes, truth;
  for (const auto& n : map.nodes()) {
    nodes.push_back(n.position);
    truth.push_back(record_at(poses, n.created_t_ms).truth.position);
  }
  return procrustes_fit(nodes, truth);
}

std::size_t count_aliasing_violations(const ExperienceMap& map, std::span<const PoseRecord> poses,
                                      const ReportParams& params) {
  std::size_t violations = 0;
  for (const auto& link : map.links()) {
    const Vec2 a = record_at(poses, map.nodes()[link.from].created_t_ms).truth.position;
    const Vec2 b = record_at(poses, map.nodes()[link.to].created_t_ms).truth.position;
    const double reach = params.max_speed_cm_s * static_cast<double>(link.min_gap_ms) / 1000.0;
    if (distance(a, b) > reach + params.aliasing_slack_cm) ++violations;
  }
  return violations;
}

SessionReport summarize(std::span<const PoseRecord> poses, std::span<const Decoding> decodings,
                        const ExperienceMap& map, std::size_t n_view_cells, const ReportParams& params) {
  if (poses.size() != decodings.size()) throw ValidationError("poses and decodings differ in length");
  SessionReport r;
  r.n_steps = poses.size();
  if (poses.empty()) return r;

  std::vector<Vec2> est, truth_pos;
  std::vector<TrajectorySample> truth;
  for (const auto& p : poses) {
    est.push_back(p.estimate.position);
    truth_pos.push_back(p.truth.position);
    truth.push_back(p.truth);
  }
  r.online_location_mae_cm = location_mae(est, truth_pos);
  const DecodingErrors de = decoding_errors(truth, decodings);
  r.decoded_location_mae_cm = de.location_mae_cm;
  r.direction_mae_deg = de.direction_mae_deg;
  r.speed_mae_cm_s = de.speed_mae_cm_s;
  try {
    r.map_fit = map_fidelity(map, poses);
  } catch (const ValidationError&) {
    r.map_fit.reset();
  }
  r.endpoint_error_cm = distance(poses.back().estimate.position, poses.back().truth.position);
  r.n_view_cells = n_view_cells;
  r.n_experience_nodes = map.nodes().size();
  r.n_links = map.link_count();
  for (std::size_t i = 1; i < poses.size(); ++i) {
    if (poses[i].node == poses[i - 1].node) continue;
    const auto& node = map.nodes().at(poses[i].node);
    if (node.created_t_ms + params.loop_closure_min_age_ms <= poses[i].t_ms) ++r.loop_closures;
  }
  r.aliasing_violations = count_aliasing_violations(map, poses, params);
  r.border_truncation_events = poses.back().truncation_events;
  return r;
}

std::string SessionReport::to_json() const {
  nlohmann::json j;
  j["n_steps"] = n_steps;
  j["online_location_mae_cm"] = online_location_mae_cm;
  j["decoded_location_mae_cm"] = decoded_location_mae_cm;
  j["direction_mae_deg"] = direction_mae_deg;
  j["speed_mae_cm_s"] = speed_mae_cm_s;
  if (map_fit) {
    j["map_fidelity_rmse_cm"] = map_fit->rmse_cm;
    j["map_scale"] = map_fit->scale;
    j["map_rotation_deg"] = map_fit->rotation_deg;
  } else {
    j["map_fidelity_rmse_cm"] = nullptr;
    j["map_scale"] = nullptr;
    j["map_rotation_deg"] = nullptr;
  }
  j["endpoint_error_cm"] = endpoint_error_cm;
  j["n_view_cells"] = n_view_cells;
  j["n_experience_nodes"] = n_experience_nodes;
  j["n_links"] = n_links;
  j["loop_closures"] = loop_closures;
  j["aliasing_violations"] = aliasing_violations;
  j["border_truncation_events"] = border_truncation_events;
  return j.dump(2) + "\n";
}

namespace {

constexpr std::string_view kPosesHeader =
    "t_ms,est_x_cm,est_y_cm,est_theta_deg,true_x_cm,true_y_cm,true_speed_cm_s,true_direction_deg,"
    "view_cell,node,truncations";

}  // namespace

void write_poses_csv(const std::filesystem::path& path, std::span<const PoseRecord> poses) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeAbort("cannot write " + path.string());
  out << kPosesHeader << '\n';
  for (const auto& p : poses) {
    out << p.t_ms << ',' << format_double(p.estimate.position.x) << ',' << format_double(p.estimate.position.y)
        << ',' << format_double(p.estimate.theta_deg) << ',' << format_double(p.truth.position.x) << ','
        << format_double(p.truth.position.y) << ',' << format_double(p.truth.speed_cm_s) << ','
        << format_double(p.truth.direction_deg) << ',' << p.view_cell << ',' << p.node << ','
        << p.truncation_events << '\n';
  }
}

std::vector<PoseRecord> load_poses_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::vector<PoseRecord> poses;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto content = trim(line);
    if (content.empty()) continue;
    if (!header) {
      if (content != kPosesHeader) throw ParseError("line " + std::to_string(line_no) + ": unexpected header");
      header = true;
      continue;
    }
    const auto f = split_csv(content);
    if (f.size() != 11) throw ParseError("line " + std::to_string(line_no) + ": expected 11 fields");
    PoseRecord p;
    p.t_ms = parse_int64(f[0], line_no);
    p.estimate = {{parse_double(f[1], line_no), parse_double(f[2], line_no)}, parse_double(f[3], line_no)};
    p.truth.t_ms = p.t_ms;
    p.truth.position = {parse_double(f[4], line_no), parse_double(f[5], line_no)};
    p.truth.speed_cm_s = parse_double(f[6], line_no);
    p.truth.direction_deg = parse_double(f[7], line_no);
    const auto vc = parse_int64(f[8], line_no);
    const auto node = parse_int64(f[9], line_no);
    const auto trunc = parse_int64(f[10], line_no);
    if (vc < 0 || node < 0 || trunc < 0) throw ParseError("line " + std::to_string(line_no) + ": negative index");
    p.view_cell = static_cast<std::size_t>(vc);
    p.node = static_cast<std::size_t>(node);
    p.truncation_events = static_cast<std::uint64_t>(trunc);
    if (!poses.empty() && p.t_ms <= poses.back().t_ms) {
      throw ParseError("line " + std::to_string(line_no) + ": timestamps must strictly increase");
    }
    poses.push_back(p);
  }
  return poses;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeAbort("cannot write " + path.string());
  out << text;
}

}  // namespace

SessionOutcome run_session(const RunConfig& config) {
  if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0)) {
    throw ValidationError("train fraction must be in (0, 1)");
  }
  const NoiseProfile profile =
      config.decodings_file ? NoiseProfile{} : preset_profile(config.decoder_preset);
  const MazeSkeleton maze = config.maze_file ? load_maze(*config.maze_file) : build_default_maze();
  const std::vector<TrajectorySample> trajectory =
      config.trajectory_file ? load_trajectory(*config.trajectory_file) : simulate_session(maze, config.session).samples;
  if (trajectory.size() < 2) throw ValidationError("trajectory needs at least 2 samples");

  const std::size_t first = config.full_trajectory ? 0 : split_index(trajectory.size(), config.train_fraction);
  const std::span<const TrajectorySample> test(trajectory.data() + first, trajectory.size() - first);

  SessionOutcome outcome;
  outcome.decodings = config.decodings_file ? load_decodings(*config.decodings_file)
                                            : noisy_oracle(test, profile, config.decoder_seed);
  SlamParams params = config.slam;
  params.pose = centred_on(maze, params.pose);
  if (config.output_dir) {
    std::filesystem::create_directories(*config.output_dir);
    params.abort_snapshot = *config.output_dir / "abort_snapshot.bslm";
  }
  outcome.slam = run_slam(trajectory, outcome.decodings, params);
  outcome.report = summarize(outcome.slam.poses, outcome.decodings, outcome.slam.map,
                             outcome.slam.registry.cells().size(), config.report);

  if (config.output_dir) {
    const auto& dir = *config.output_dir;
    std::filesystem::create_directories(dir);
    write_text(dir / "report.json", outcome.report.to_json());
    save_decodings(dir / "decodings.csv", outcome.decodings);
    save_view_cells(dir / "view_cells.csv", outcome.slam.registry);
    write_poses_csv(dir / "poses.csv", outcome.slam.poses);
    save_map(dir / "map.json", outcome.slam.map);
    write_text(dir / "map.svg", render_svg(outcome.slam.map, &maze));
  }
  return outcome;
}

SessionReport report_from_artifacts(const std::filesystem::path& dir, const ReportParams& params) {
  const auto poses = load_poses_csv(dir / "poses.csv");
  const auto decodings = load_decodings(dir / "decodings.csv");
  const auto map = load_map(dir / "map.json");
  std::ifstream cells(dir / "view_cells.csv", std::ios::binary);
  if (!cells) throw ValidationError("cannot open " + (dir / "view_cells.csv").string());
  std::size_t rows = 0;
  std::string line;
  while (std::getline(cells, line)) {
    if (!trim(line).empty()) ++rows;
  }
  return summarize(poses, decodings, map, rows == 0 ? 0 : rows - 1, params);
}

}  // namespace brainslam

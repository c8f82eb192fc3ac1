#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "brainslam/pipeline.hpp"

using namespace brainslam;
namespace fs = std::filesystem;

namespace {

RunConfig short_run(int trials = 1) {
  RunConfig c;
  c.session.n_trials = trials;
  c.session.inter_trial_pause_ms = 2000.0;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("phases run in order every step") {
  const auto maze = build_default_maze();
  SessionConfig sc;
  sc.n_trials = 1;
  const auto traj = simulate_session(maze, sc).samples;
  const std::span<const TrajectorySample> head(traj.data(), 120);
  const auto dec = noisy_oracle(head, preset_profile("rat1"), 1);
  SlamParams params;
  params.pose = centred_on(maze, params.pose);
  std::vector<Phase> seen;
  const auto result = run_slam(traj, dec, params, [&](Phase p) { seen.push_back(p); });
  REQUIRE(seen.size() == 7 * dec.size());
  const Phase order[] = {Phase::read_decoding, Phase::view_match,     Phase::inject, Phase::dynamics,
                         Phase::path_integrate, Phase::experience_map, Phase::record};
  for (std::size_t i = 0; i < seen.size(); ++i) REQUIRE(seen[i] == order[i % 7]);
  CHECK(std::string(phase_name(Phase::path_integrate)) == "path_integrate");
  CHECK(result.poses.size() == dec.size());
}

TEST_CASE("noise-free decodings track within one pose cell") {
  auto cfg = short_run(2);
  cfg.decoder_preset = "zero";
  cfg.full_trajectory = true;
  const auto out = run_session(cfg);
  CHECK(out.report.online_location_mae_cm < 5.0);
  CHECK(out.report.aliasing_violations == 0);
  // The bump's leading tail can graze the bottom border (35 cm of margin) at
  // the lower corners; the clipped mass is around 1e-5 per event.
  CHECK(out.report.border_truncation_events <= 10);
}

TEST_CASE("one active node per step, matching the view cell") {
  auto cfg = short_run();
  const auto out = run_session(cfg);
  const auto& nodes = out.slam.map.nodes();
  for (const auto& p : out.slam.poses) REQUIRE(nodes.at(p.node).view_cell_id == p.view_cell);
  std::size_t active = 0;
  for (const auto& n : nodes) active += n.active ? 1 : 0;
  CHECK(active == 1);
  CHECK(nodes.at(*out.slam.map.active_node()).view_cell_id == *out.slam.registry.current_active());
}

TEST_CASE("without loop closure, noise-free nodes sit where the agent was") {
  // Over the first straight run of the stem, before drift can build up.
  auto cfg = short_run();
  cfg.decoder_preset = "zero";
  cfg.full_trajectory = true;
  cfg.slam.loop_closure = false;
  const auto out = run_session(cfg);
  const auto& poses = out.slam.poses;
  const Vec2 start = poses.front().truth.position;
  std::size_t checked = 0;
  for (const auto& n : out.slam.map.nodes()) {
    const auto it = std::find_if(poses.begin(), poses.end(), [&](const PoseRecord& r) { return r.t_ms == n.created_t_ms; });
    REQUIRE(it != poses.end());
    if (it->truth.position.y > 100.0 || it->truth.position.x != 65.0) break;
    CHECK(distance(n.position, it->truth.position - start) < cfg.slam.pose.cell_size_cm);
    ++checked;
  }
  CHECK(checked > 10);
}

TEST_CASE("identical configs give byte-identical artifacts") {
  auto cfg = short_run();
  const auto a = fresh_dir("brainslam_det_a");
  const auto b = fresh_dir("brainslam_det_b");
  cfg.output_dir = a;
  run_session(cfg);
  cfg.output_dir = b;
  run_session(cfg);
  for (const char* f : {"report.json", "decodings.csv", "view_cells.csv", "poses.csv", "map.json", "map.svg"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }

  SUBCASE("the report can be rebuilt from the artifacts") {
    CHECK(report_from_artifacts(a).to_json() == slurp(a / "report.json"));
  }
  SUBCASE("a decodings file drives the same run") {
    auto again = short_run();
    again.decodings_file = a / "decodings.csv";
    again.output_dir = fresh_dir("brainslam_det_c");
    run_session(again);
    CHECK(slurp(*again.output_dir / "report.json") == slurp(a / "report.json"));
    CHECK(slurp(*again.output_dir / "map.json") == slurp(a / "map.json"));
  }
}

TEST_CASE("an extinguished network aborts with a snapshot") {
  auto cfg = short_run();
  cfg.slam.pose.psi = 0.5;
  cfg.output_dir = fresh_dir("brainslam_abort");
  CHECK_THROWS_AS(run_session(cfg), RuntimeAbort);
  const auto snap = read_tensor_file(*cfg.output_dir / "abort_snapshot.bslm");
  CHECK(snap.dims[1] == cfg.slam.pose.nx);
}

TEST_CASE("bad configs are rejected") {
  auto cfg = short_run();
  cfg.train_fraction = 1.0;
  CHECK_THROWS_AS(run_session(cfg), ValidationError);
  cfg = short_run();
  cfg.decoder_preset = "rat7";
  CHECK_THROWS_AS(run_session(cfg), ValidationError);
  cfg = short_run();
  cfg.trajectory_file = "/nonexistent/trajectory.csv";
  CHECK_THROWS_AS(run_session(cfg), ValidationError);
}

TEST_CASE("aliasing check flags a link between distant places") {
  ExperienceMap map;
  std::vector<PoseRecord> poses(3);
  const Vec2 where[] = {{0, 0}, {5, 0}, {150, 0}};
  for (std::size_t i = 0; i < 3; ++i) {
    poses[i].t_ms = 40 * static_cast<std::int64_t>(i);
    poses[i].truth.t_ms = poses[i].t_ms;
    poses[i].truth.position = where[i];
    map.on_step(i, true, {where[i], 0.0}, {}, poses[i].t_ms);
  }
  // 0 -> 1 is 5 cm in 40 ms (fine with slack); 1 -> 2 is 145 cm in 40 ms.
  CHECK(count_aliasing_violations(map, poses, ReportParams{}) == 1);
}

TEST_CASE("more decoder noise never helps") {
  // Median over 10 seeds of the online error, sigmas scaled by k.
  const auto maze = build_default_maze();
  SessionConfig sc;
  sc.n_trials = 1;
  sc.inter_trial_pause_ms = 2000.0;
  auto median_mae = [&](double k) {
    std::vector<double> maes;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      sc.rng_seed = seed;
      const auto traj = simulate_session(maze, sc).samples;
      const std::size_t first = split_index(traj.size(), 0.8);
      const std::span<const TrajectorySample> test(traj.data() + first, traj.size() - first);
      NoiseProfile p = preset_profile("rat1");
      p.sigma_xy_cm *= k;
      p.sigma_speed_cm_s *= k;
      p.kappa_dir /= k * k;
      p.cardinal_flip_prob = std::min(1.0, k * p.cardinal_flip_prob);
      const auto dec = noisy_oracle(test, p, 100 + seed);
      SlamParams params;
      params.pose = centred_on(maze, params.pose);
      const auto r = run_slam(traj, dec, params);
      maes.push_back(summarize(r.poses, dec, r.map, r.registry.cells().size()).online_location_mae_cm);
    }
    std::nth_element(maes.begin(), maes.begin() + 5, maes.end());
    return maes[5];
  };
  const double m1 = median_mae(1.0), m2 = median_mae(2.0), m4 = median_mae(4.0);
  MESSAGE("median online MAE k=1,2,4: " << m1 << ", " << m2 << ", " << m4);
  CHECK(m2 >= m1);
  CHECK(m4 >= m2);
}

}  // TEST_SUITE

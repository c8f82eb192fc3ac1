#include <doctest.h>

#include <filesystem>

#include "brainslam/trajectory.hpp"

using namespace brainslam;

namespace {

const SimulatedSession& default_session() {
  static const SimulatedSession s = simulate_session(build_default_maze(), SessionConfig{});
  return s;
}

bool on_segment(const Segment& s, Vec2 p) {
  const double lo_x = std::min(s.a.x, s.b.x), hi_x = std::max(s.a.x, s.b.x);
  const double lo_y = std::min(s.a.y, s.b.y), hi_y = std::max(s.a.y, s.b.y);
  return p.x >= lo_x - 1e-9 && p.x <= hi_x + 1e-9 && p.y >= lo_y - 1e-9 && p.y <= hi_y + 1e-9 &&
         project_to_skeleton(MazeSkeleton({s}, {}), p).distance_cm < 1e-6;
}

}  // namespace

TEST_SUITE("trajectory") {

TEST_CASE("default session stays on the skeleton") {
  const auto maze = build_default_maze();
  for (const auto& s : default_session().samples) {
    REQUIRE(project_to_skeleton(maze, s.position).distance_cm < 1e-6);
  }
}

TEST_CASE("fixed 25 Hz sampling and a 20-30 minute session") {
  const auto& s = default_session();
  CHECK(s.samples.size() == static_cast<std::size_t>(s.duration_ms() / kSampleIntervalMs + 1));
  for (std::size_t i = 1; i < s.samples.size(); ++i) {
    REQUIRE(s.samples[i].t_ms - s.samples[i - 1].t_ms == kSampleIntervalMs);
  }
  CHECK(s.duration_ms() >= 20 * 60000);
  CHECK(s.duration_ms() <= 30 * 60000);
}

TEST_CASE("path continuity and trial accounting") {
  const SessionConfig cfg;
  const auto& s = default_session();
  for (std::size_t i = 1; i < s.samples.size(); ++i) {
    REQUIRE(distance(s.samples[i].position, s.samples[i - 1].position) <=
            cfg.max_speed_cm_s * kSampleIntervalMs / 1000.0 + 1e-9);
  }
  CHECK(s.reward_visits == static_cast<std::size_t>(cfg.n_trials));
  CHECK(s.trials.size() == static_cast<std::size_t>(cfg.n_trials));
}

TEST_CASE("match rule repeats the forced side on the choice run") {
  const auto maze = build_default_maze();
  const auto& right_arm = maze.segments()[2];
  const auto& left_arm = maze.segments()[1];
  const auto& s = default_session();
  bool saw_right = false;
  for (const auto& trial : s.trials) {
    CHECK(trial.choice_reward == trial.forced_reward);
    bool right = false, left = false;
    for (const auto& sample : s.samples) {
      if (sample.t_ms < trial.choice_start_ms || sample.t_ms > trial.reward_arrival_ms) continue;
      // Strictly inside an arm, away from the shared choice point.
      if (sample.position.y == 170.0 && sample.position.x > 70.0 && on_segment(right_arm, sample.position)) right = true;
      if (sample.position.y == 170.0 && sample.position.x < 60.0 && on_segment(left_arm, sample.position)) left = true;
    }
    CHECK(right != left);
    CHECK(right == (trial.choice_reward == 1));
    saw_right = saw_right || right;
  }
  CHECK(saw_right);
}

TEST_CASE("mismatch rule takes the other side") {
  SessionConfig cfg;
  cfg.n_trials = 4;
  cfg.turn_rule = TurnRule::mismatch;
  const auto s = simulate_session(build_default_maze(), cfg);
  for (const auto& trial : s.trials) CHECK(trial.choice_reward != trial.forced_reward);
}

TEST_CASE("same seed, same trajectory; other seed, other trajectory") {
  SessionConfig cfg;
  cfg.n_trials = 3;
  const auto a = simulate_session(build_default_maze(), cfg);
  const auto b = simulate_session(build_default_maze(), cfg);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    REQUIRE(a.samples[i].position == b.samples[i].position);
    REQUIRE(a.samples[i].speed_cm_s == b.samples[i].speed_cm_s);
    REQUIRE(a.samples[i].direction_deg == b.samples[i].direction_deg);
  }
  cfg.rng_seed = 43;
  const auto c = simulate_session(build_default_maze(), cfg);
  bool differs = c.samples.size() != a.samples.size();
  for (std::size_t i = 0; !differs && i < a.samples.size(); ++i) differs = !(a.samples[i].position == c.samples[i].position);
  CHECK(differs);
}

TEST_CASE("kinematics from positions") {
  SUBCASE("4 cm in 40 ms") {
    const std::vector<TimedPosition> p{{0, {0, 0}}, {40, {4, 0}}};
    const auto k = derive_kinematics(p);
    CHECK(k[1].speed_cm_s == doctest::Approx(100.0));
    CHECK(k[1].direction_deg == 0.0);
  }
  SUBCASE("stationary samples keep the previous heading") {
    const std::vector<TimedPosition> p{{0, {0, 0}}, {40, {0, 2}}, {80, {0, 2}}, {120, {0, 2}}};
    const auto k = derive_kinematics(p);
    CHECK(k[2].speed_cm_s == 0.0);
    CHECK(k[2].direction_deg == 90.0);
    CHECK(k[3].direction_deg == 90.0);
  }
  SUBCASE("diagonal step is kept raw") {
    const std::vector<TimedPosition> p{{0, {0, 0}}, {40, {1, 1}}};
    const auto k = derive_kinematics(p);
    CHECK_FALSE(quantize_direction(45.0).has_value());
    CHECK(k[1].direction_deg == doctest::Approx(45.0));
  }
  SUBCASE("near-cardinal step snaps") {
    const std::vector<TimedPosition> p{{0, {0, 0}}, {40, {10, 1}}};
    CHECK(derive_kinematics(p)[1].direction_deg == 0.0);
  }
  SUBCASE("leading stationary samples take the first known heading") {
    const std::vector<TimedPosition> p{{0, {0, 0}}, {40, {0, 0}}, {80, {0, -3}}};
    const auto k = derive_kinematics(p);
    CHECK(k[0].direction_deg == 270.0);
    CHECK(k[1].direction_deg == 270.0);
  }
  SUBCASE("repeated timestamps are rejected") {
    const std::vector<TimedPosition> p{{0, {0, 0}}, {0, {1, 0}}};
    CHECK_THROWS_AS(derive_kinematics(p), ValidationError);
  }
}

TEST_CASE("trajectory CSV round trip is exact") {
  SessionConfig cfg;
  cfg.n_trials = 1;
  const auto s = simulate_session(build_default_maze(), cfg);
  const auto path = std::filesystem::temp_directory_path() / "brainslam_traj_rt.csv";
  save_trajectory(path, s.samples);
  const auto back = load_trajectory(path);
  REQUIRE(back.size() == s.samples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    REQUIRE(back[i].t_ms == s.samples[i].t_ms);
    REQUIRE(back[i].position == s.samples[i].position);
    REQUIRE(back[i].speed_cm_s == s.samples[i].speed_cm_s);
    REQUIRE(back[i].direction_deg == s.samples[i].direction_deg);
  }
  std::filesystem::remove(path);
}

TEST_CASE("split index") {
  CHECK(split_index(100, 0.8) == 80);
  CHECK(split_index(1000, 0.25) == 250);
}

}  // TEST_SUITE

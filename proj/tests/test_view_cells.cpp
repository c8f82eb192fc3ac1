#include <doctest.h>

#include <random>
#include <sstream>

#include "brainslam/view_cells.hpp"

using namespace brainslam;

namespace {

PoseCellConfig grid() {
  PoseCellConfig c;
  c.nx = 30;
  c.ny = 30;
  c.cell_size_cm = 5.0;
  c.origin_cm = {0.0, 0.0};
  return c;
}

}  // namespace

TEST_SUITE("view_cells") {

TEST_CASE("matching by distance") {
  ViewCellRegistry reg(kDefaultMatchThresholdCm, kDefaultInjectEnergy, 0);
  const PoseEstimate pose{{10, 10}, 0.0};
  const auto first = reg.match_or_create({10, 10}, pose, 0);
  CHECK(first.is_new);
  CHECK(first.cell_id == 0);

  const auto near = reg.match_or_create({11, 10}, pose, 40);
  CHECK_FALSE(near.is_new);
  CHECK(near.cell_id == 0);

  const auto far = reg.match_or_create({19, 10}, pose, 80);
  CHECK(far.is_new);
  CHECK(far.cell_id == 1);
  CHECK(reg.cells().size() == 2);
  CHECK(reg.current_active() == 1);
}

TEST_CASE("threshold is strict and ties go to the earliest cell") {
  ViewCellRegistry reg(5.0, kDefaultInjectEnergy, 0);
  reg.match_or_create({0, 0}, {}, 0);
  reg.match_or_create({8, 0}, {}, 40);
  CHECK(reg.match_or_create({4, 0}, {}, 80).cell_id == 0);
  CHECK(reg.match_or_create({-5, 0}, {}, 120).is_new);
}

TEST_CASE("a match injects at the linked pose") {
  PoseCellNetwork net(grid());
  ViewCellRegistry reg(kDefaultMatchThresholdCm, kDefaultInjectEnergy, 0);
  const PoseEstimate linked{net.cell_position(12, 14), 90.0};
  reg.match_or_create({50, 50}, linked, 0);
  CHECK_FALSE(reg.on_match_inject(net));  // fresh cell
  CHECK(net.total() == 0.0);

  reg.match_or_create({51, 50}, {{0, 0}, 0.0}, 40);
  CHECK(reg.on_match_inject(net));
  CHECK(net.total() == doctest::Approx(0.02).epsilon(1e-12));
  const auto c = net.center_of_activation();
  CHECK(distance(c.position, linked.position) < 1e-9);
}

TEST_CASE("young cells do not inject") {
  PoseCellNetwork net(grid());
  ViewCellRegistry reg(kDefaultMatchThresholdCm, kDefaultInjectEnergy, 10000);
  reg.match_or_create({50, 50}, {net.cell_position(10, 10), 0.0}, 0);
  reg.match_or_create({50, 50}, {}, 9960);
  CHECK_FALSE(reg.on_match_inject(net));
  reg.match_or_create({50, 50}, {}, 10000);
  CHECK(reg.on_match_inject(net));
}

TEST_CASE("repeated matches pull the packet to the linked pose") {
  PoseCellNetwork net(grid());
  net.inject({net.cell_position(8, 10), 0.0}, 1.0);
  for (int s = 0; s < 20; ++s) net.step_dynamics();
  ViewCellRegistry reg(kDefaultMatchThresholdCm, kDefaultInjectEnergy, 0);
  const PoseEstimate target{net.cell_position(12, 10), 0.0};
  reg.match_or_create({70, 70}, target, 0);

  SUBCASE("one spurious match barely moves it") {
    reg.match_or_create({70, 70}, {}, 40);
    reg.on_match_inject(net);
    net.step_dynamics();
    for (int s = 0; s < 20; ++s) net.step_dynamics();
    CHECK(distance(net.center_of_activation().position, net.cell_position(8, 10)) < 2.5);
  }
  SUBCASE("sustained matches relocate it") {
    // At 0.02 per match a 4-cell jump takes about 70 matches (under 3 s of
    // decodings); 100 leaves margin.
    for (int s = 1; s <= 100; ++s) {
      reg.match_or_create({70, 70}, {}, 40 * s);
      reg.on_match_inject(net);
      net.step_dynamics();
    }
    CHECK(distance(net.center_of_activation().position, target.position) < 2.5);
  }
}

TEST_CASE("no two cells closer than the threshold, and the registry stays small") {
  const auto maze = build_default_maze();
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> along(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.7);
  std::uniform_int_distribution<std::size_t> seg(0, maze.segments().size() - 1);
  ViewCellRegistry reg;
  for (int t = 0; t < 20000; ++t) {
    const auto& s = maze.segments()[seg(rng)];
    const Vec2 p = s.point_at(along(rng) * s.length()) + Vec2{noise(rng), noise(rng)};
    reg.match_or_create(p, {}, 40 * t);
  }
  const auto& cells = reg.cells();
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (std::size_t j = i + 1; j < cells.size(); ++j)
      REQUIRE(distance(cells[i].stored_position, cells[j].stored_position) >= kDefaultMatchThresholdCm);
  CHECK(static_cast<double>(cells.size()) <= maze.total_length() / kDefaultMatchThresholdCm * 4.0);
}

TEST_CASE("identical streams, identical registries") {
  auto run = [] {
    ViewCellRegistry reg;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    for (int t = 0; t < 500; ++t) reg.match_or_create({u(rng), u(rng)}, {{1, 2}, 3}, 40 * t);
    std::ostringstream out;
    write_view_cells_csv(out, reg);
    return out.str();
  };
  const auto a = run();
  CHECK(a == run());
  CHECK(a.rfind("id,x_cm,y_cm,pose_x_cm,pose_y_cm,pose_theta_deg,created_t_ms\n", 0) == 0);
}

}  // TEST_SUITE

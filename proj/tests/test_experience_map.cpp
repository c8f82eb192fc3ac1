#include <doctest.h>

#include <json.hpp>
#include <random>

#include "brainslam/experience_map.hpp"

using namespace brainslam;

namespace {

std::size_t active_count(const ExperienceMap& m) {
  std::size_t n = 0;
  for (const auto& node : m.nodes()) n += node.active ? 1 : 0;
  return n;
}

// Walks the poses, creating a view cell per pose, with odometry matching the
// pose differences split over `substeps` steps.
ExperienceMap chain(const std::vector<PoseEstimate>& poses, int substeps = 1) {
  ExperienceMap m;
  m.on_step(0, true, poses[0], {}, 0);
  std::int64_t t = 0;
  for (std::size_t i = 1; i < poses.size(); ++i) {
    const Vec2 d = poses[i].position - poses[i - 1].position;
    const double dth = signed_angle_diff_deg(poses[i].theta_deg, poses[i - 1].theta_deg);
    for (int s = 1; s <= substeps; ++s) {
      t += 40;
      const OdometryDelta step{d.x / substeps, d.y / substeps, dth / substeps};
      if (s < substeps) {
        m.on_step(i - 1, false, poses[i - 1], step, t);
      } else {
        m.on_step(i, true, poses[i], step, t);
      }
    }
  }
  return m;
}

}  // namespace

TEST_SUITE("experience_map") {

TEST_CASE("first node sits at the origin of the map frame") {
  ExperienceMap m;
  m.on_step(0, true, {{40, 25}, 90.0}, {}, 0);
  REQUIRE(m.nodes().size() == 1);
  CHECK(m.nodes()[0].position == Vec2{0, 0});
  CHECK(m.nodes()[0].theta_deg == 0.0);
  CHECK(m.nodes()[0].active);
  CHECK(m.frame_origin().position == Vec2{40, 25});
  CHECK(m.to_world({0, 0}) == Vec2{40, 25});
}

TEST_CASE("second node from the accumulated movement") {
  ExperienceMap m;
  m.on_step(0, true, {{40, 25}, 0.0}, {}, 0);
  m.on_step(0, false, {{45, 25}, 0.0}, {5, 0, 0}, 40);
  m.on_step(1, true, {{50, 25}, 0.0}, {5, 0, 0}, 80);
  REQUIRE(m.nodes().size() == 2);
  CHECK(m.nodes()[1].position == Vec2{10, 0});
  CHECK(m.nodes()[1].theta_deg == 0.0);
  const auto links = m.links();
  REQUIRE(links.size() == 1);
  CHECK(links[0].from == 0);
  CHECK(links[0].to == 1);
  CHECK(links[0].delta.dx_cm == 10.0);
  CHECK(links[0].delta.dy_cm == 0.0);
  CHECK(links[0].delta.dtheta_deg == 0.0);
  CHECK(links[0].min_gap_ms == 80);
  CHECK(links[0].traversals == 1);
}

TEST_CASE("revisiting reactivates the old node") {
  ExperienceMap m;
  m.on_step(0, true, {{0, 0}, 0.0}, {}, 0);
  m.on_step(1, true, {{10, 0}, 0.0}, {10, 0, 0}, 40);
  m.on_step(2, true, {{10, 10}, 90.0}, {0, 10, 90}, 80);
  CHECK(active_count(m) == 1);
  m.on_step(0, false, {{0, 0}, 180.0}, {-10, -10, 90}, 200);
  CHECK(m.nodes().size() == 3);
  CHECK(m.active_node() == 0);
  CHECK(m.nodes()[0].active);
  CHECK(active_count(m) == 1);
  CHECK(m.link_count() == 3);

  SUBCASE("a repeated link counts traversals and keeps the latest delta") {
    m.on_step(1, false, {{10, 0}, 0.0}, {11, 1, 0}, 240);
    const auto links = m.links();
    CHECK(links[0].from == 0);
    CHECK(links[0].to == 1);
    CHECK(links[0].traversals == 2);
    CHECK(links[0].delta.dx_cm == 11.0);
    CHECK(links[0].min_gap_ms == 40);
  }
}

TEST_CASE("view cell bookkeeping errors") {
  ExperienceMap m;
  m.on_step(0, true, {{0, 0}, 0.0}, {}, 0);
  CHECK_THROWS_AS(m.on_step(0, true, {{0, 0}, 0.0}, {}, 40), ValidationError);
  CHECK_THROWS_AS(m.on_step(7, false, {{0, 0}, 0.0}, {}, 40), ValidationError);
}

TEST_CASE("three-node chain") {
  const auto m = chain({{{0, 0}, 0}, {{20, 0}, 0}, {{20, 15}, 90}}, 4);
  const auto links = m.links();
  REQUIRE(links.size() == 2);
  CHECK(links[0].delta.dx_cm == doctest::Approx(20.0));
  CHECK(links[0].delta.dy_cm == doctest::Approx(0.0));
  CHECK(links[1].delta.dx_cm == doctest::Approx(0.0));
  CHECK(links[1].delta.dy_cm == doctest::Approx(15.0));
  CHECK(links[1].delta.dtheta_deg == doctest::Approx(90.0));
}

TEST_CASE("link deltas telescope along a path") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> step(-8.0, 8.0), turn(-40.0, 40.0);
  std::vector<PoseEstimate> poses{{{100, 100}, 10.0}};
  for (int i = 0; i < 30; ++i) {
    poses.push_back({poses.back().position + Vec2{step(rng), step(rng)},
                     wrap_deg_360(poses.back().theta_deg + turn(rng))});
  }
  const auto m = chain(poses, 3);
  double sx = 0.0, sy = 0.0, sth = 0.0;
  for (const auto& l : m.links()) {
    sx += l.delta.dx_cm;
    sy += l.delta.dy_cm;
    sth += l.delta.dtheta_deg;
  }
  const auto& last = m.nodes().back();
  CHECK(sx == doctest::Approx(last.position.x).epsilon(1e-9));
  CHECK(sy == doctest::Approx(last.position.y).epsilon(1e-9));
  CHECK(wrap_deg_360(sth) == doctest::Approx(last.theta_deg).epsilon(1e-9));
}

TEST_CASE("JSON") {
  SUBCASE("empty map") {
    const auto j = nlohmann::json::parse(ExperienceMap{}.to_json());
    CHECK(j["nodes"].empty());
    CHECK(j["links"].empty());
    CHECK(ExperienceMap::from_json(ExperienceMap{}.to_json()).to_json() == ExperienceMap{}.to_json());
  }
  SUBCASE("export, import, export is byte-identical") {
    auto m = chain({{{3.1, 4.7}, 12.5}, {{13.3, 4.7}, 12.5}, {{13.3, 19.9}, 101.0}, {{0.25, 19.9}, 190.0}}, 3);
    m.on_step(1, false, {{13.3, 4.7}, 12.5}, {1.0 / 3.0, 0.1, -0.7}, 10000);
    const std::string text = m.to_json();
    const auto back = ExperienceMap::from_json(text);
    CHECK(back.to_json() == text);
    CHECK(back.active_node() == m.active_node());
    CHECK(back.frame_origin().position == m.frame_origin().position);
  }
  SUBCASE("garbage is a parse error") {
    CHECK_THROWS_AS(ExperienceMap::from_json("{not json"), ParseError);
    CHECK_THROWS_AS(ExperienceMap::from_json("{\"nodes\": 3}"), ParseError);
  }
}

TEST_CASE("SVG rendering is deterministic") {
  const auto m = chain({{{0, 0}, 0}, {{20, 0}, 0}, {{20, 15}, 90}});
  const auto maze = build_default_maze();
  const auto a = render_svg(m, &maze);
  CHECK(a == render_svg(m, &maze));
  CHECK(a.rfind("<svg", 0) == 0);
  CHECK(a.find("<circle") != std::string::npos);
  CHECK(render_svg(ExperienceMap{}).rfind("<svg", 0) == 0);
}

}  // TEST_SUITE

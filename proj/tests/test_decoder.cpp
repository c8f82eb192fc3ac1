#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "brainslam/decoder.hpp"

using namespace brainslam;

namespace {

std::vector<TrajectorySample> short_walk() {
  std::vector<TrajectorySample> t;
  for (int i = 0; i < 500; ++i) {
    t.push_back({40 * i, {65.0, 0.8 * i}, 20.0, 90.0});
  }
  return t;
}

std::filesystem::path temp_file(const std::string& name, const std::string& text) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

}  // namespace

TEST_SUITE("decoder") {

TEST_CASE("zero profile returns the truth") {
  const auto truth = short_walk();
  const auto d = noisy_oracle(truth, NoiseProfile{}, 3);
  REQUIRE(d.size() == truth.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(d[i].t_ms == truth[i].t_ms);
    CHECK(d[i].position == truth[i].position);
    CHECK(d[i].speed_cm_s == truth[i].speed_cm_s);
    CHECK(d[i].direction_deg == truth[i].direction_deg);
  }
}

TEST_CASE("position noise gives the Rayleigh mean") {
  const auto ref = calibration_reference(100000, 20.0);
  NoiseProfile p;
  p.sigma_xy_cm = 1.746;
  const auto e = decoding_errors(ref, noisy_oracle(ref, p, 77));
  CHECK(e.location_mae_cm == doctest::Approx(2.188).epsilon(0.02));
}

TEST_CASE("fixed seed, fixed stream") {
  const auto truth = short_walk();
  const auto p = preset_profile("rat3");
  const auto a = noisy_oracle(truth, p, 12);
  const auto b = noisy_oracle(truth, p, 12);
  const auto c = noisy_oracle(truth, p, 13);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].position == b[i].position);
    REQUIRE(a[i].direction_deg == b[i].direction_deg);
    REQUIRE(a[i].speed_cm_s == b[i].speed_cm_s);
    differs = differs || !(a[i].position == c[i].position);
  }
  CHECK(differs);
}

TEST_CASE("oracle output respects the decoding invariants") {
  const auto d = noisy_oracle(short_walk(), preset_profile("rat3"), 5);
  for (const auto& x : d) {
    REQUIRE(x.speed_cm_s >= 0.0);
    REQUIRE(x.direction_deg >= 0.0);
    REQUIRE(x.direction_deg < 360.0);
  }
}

TEST_CASE("von Mises draws concentrate with kappa") {
  std::mt19937_64 rng(1);
  auto mean_abs = [&](double kappa) {
    double s = 0.0;
    for (int i = 0; i < 20000; ++i) s += std::abs(sample_von_mises(kappa, rng));
    return s / 20000.0;
  };
  const double uniform = mean_abs(0.0);
  CHECK(uniform == doctest::Approx(kPi / 2.0).epsilon(0.03));
  // Large kappa: approximately normal with variance 1 / kappa.
  CHECK(mean_abs(400.0) == doctest::Approx(std::sqrt(2.0 / kPi / 400.0)).epsilon(0.03));
  CHECK(mean_abs(2.0) < uniform);
}

TEST_CASE("calibration closed forms") {
  CalibrationOptions opt;
  opt.draws = 20000;
  const auto p = calibrate({2.188, 7.816, 0.486}, opt);
  CHECK(p.sigma_xy_cm == doctest::Approx(1.746).epsilon(0.001));
  CHECK(p.sigma_speed_cm_s == doctest::Approx(0.486 * std::sqrt(kPi / 2.0)));
}

TEST_CASE("calibrated heading error lands in the band") {
  const auto p = calibrate({1.641, 6.997, 0.316});
  // Fresh draws, not the calibration seed.
  const auto ref = calibration_reference(100000, 20.0);
  const auto e = decoding_errors(ref, noisy_oracle(ref, p, 4242));
  CHECK(e.direction_mae_deg >= 6.86);
  CHECK(e.direction_mae_deg <= 7.14);
}

TEST_CASE("presets round trip within 2 percent") {
  const auto ref = calibration_reference(100000, 20.0);
  for (const char* name : {"rat1", "rat2", "rat3"}) {
    const auto target = rat_targets(name);
    const auto e = decoding_errors(ref, noisy_oracle(ref, preset_profile(name), 99));
    CAPTURE(name);
    CHECK(e.location_mae_cm == doctest::Approx(target.location_mae_cm).epsilon(0.02));
    CHECK(e.direction_mae_deg == doctest::Approx(target.direction_mae_deg).epsilon(0.02));
    CHECK(e.speed_mae_cm_s == doctest::Approx(target.speed_mae_cm_s).epsilon(0.02));
  }
}

TEST_CASE("frozen presets equal a fresh calibration") {
  const auto p = calibrate(rat_targets("rat2"));
  const auto q = preset_profile("rat2");
  CHECK(p.sigma_xy_cm == q.sigma_xy_cm);
  CHECK(p.kappa_dir == q.kappa_dir);
  CHECK(p.sigma_speed_cm_s == q.sigma_speed_cm_s);
  CHECK(p.cardinal_flip_prob == q.cardinal_flip_prob);
}

TEST_CASE("invalid inputs") {
  CHECK_THROWS_AS(preset_profile("rat9"), ValidationError);
  CHECK_THROWS_AS(calibrate({0.0, 5.0, 1.0}), ValidationError);
  NoiseProfile bad;
  bad.cardinal_flip_prob = 1.5;
  CHECK_THROWS_AS(noisy_oracle(short_walk(), bad, 1), ValidationError);
}

TEST_CASE("decodings CSV") {
  SUBCASE("round trip is bit-identical") {
    const auto d = noisy_oracle(short_walk(), preset_profile("rat1"), 2);
    const auto p = std::filesystem::temp_directory_path() / "brainslam_dec_rt.csv";
    save_decodings(p, d);
    const auto back = load_decodings(p);
    REQUIRE(back.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      REQUIRE(back[i].position == d[i].position);
      REQUIRE(back[i].speed_cm_s == d[i].speed_cm_s);
      REQUIRE(back[i].direction_deg == d[i].direction_deg);
    }
    std::filesystem::remove(p);
  }
  SUBCASE("negative speed names the line") {
    const auto p = temp_file("brainslam_dec_bad.csv",
                             "t_ms,x_cm,y_cm,speed_cm_s,direction_deg\n0,1,2,3,90\n40,1,2,-1,90\n");
    try {
      load_decodings(p);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
  SUBCASE("empty file is an empty stream") {
    const auto p = temp_file("brainslam_dec_empty.csv", "");
    CHECK(load_decodings(p).empty());
  }
}

TEST_CASE("stream is consumed once, in order") {
  std::vector<Decoding> d{{0, {}, 1.0, 0.0}, {40, {}, 1.0, 0.0}, {80, {}, 1.0, 0.0}};
  DecodingStream s(d);
  std::int64_t last = -1;
  while (auto x = s.next()) {
    CHECK(x->t_ms > last);
    last = x->t_ms;
  }
  CHECK(s.consumed() == 3);
  CHECK_FALSE(s.next().has_value());
  std::vector<Decoding> bad{{40, {}, 1.0, 0.0}, {40, {}, 1.0, 0.0}};
  CHECK_THROWS_AS(DecodingStream{bad}, ValidationError);
}

}  // TEST_SUITE

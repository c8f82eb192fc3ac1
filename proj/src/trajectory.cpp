#include "brainslam/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <random>
#include <set>

#include "brainslam/kinematics_csv.hpp"

namespace brainslam {

namespace {

// Undirected track graph over segment endpoints and reward sites.
class TrackGraph {
 public:
  explicit TrackGraph(const MazeSkeleton& maze) {
    for (const auto& seg : maze.segments()) {
      // Reward sites inside a segment split it.
      std::vector<std::pair<double, Vec2>> stops{{0.0, seg.a}, {seg.length(), seg.b}};
      for (Vec2 r : maze.reward_sites()) {
        const auto p = project_to_skeleton(MazeSkeleton({seg}, {}), r);
        if (p.distance_cm < 1e-9 && p.offset_cm > 1e-9 && p.offset_cm < seg.length() - 1e-9) {
          stops.emplace_back(p.offset_cm, p.position);
        }
      }
      std::sort(stops.begin(), stops.end(),
                [](const auto& l, const auto& r) { return l.first < r.first; });
      for (std::size_t i = 0; i + 1 < stops.size(); ++i) {
        add_edge(vertex(stops[i].second), vertex(stops[i + 1].second));
      }
    }
  }

  std::size_t vertex(Vec2 p) {
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
      if (distance(vertices_[i], p) < 1e-9) return i;
    }
    vertices_.push_back(p);
    adjacency_.emplace_back();
    return vertices_.size() - 1;
  }

  std::size_t find_vertex(Vec2 p) const {
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
      if (distance(vertices_[i], p) < 1e-9) return i;
    }
    throw ValidationError("point is not a vertex of the maze graph");
  }

  Vec2 position(std::size_t v) const { return vertices_[v]; }

  // Dijkstra with a deterministic tie-break on vertex index. Returns the
  // vertex sequence and the ids of traversed edges.
  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> shortest_path(
      std::size_t from, std::size_t to, const std::set<std::size_t>& banned_edges) const {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(vertices_.size(), inf);
    std::vector<std::size_t> prev_vertex(vertices_.size(), SIZE_MAX);
    std::vector<std::size_t> prev_edge(vertices_.size(), SIZE_MAX);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist[from] = 0.0;
    queue.push({0.0, from});
    while (!queue.empty()) {
      const auto [d, u] = queue.top();
      queue.pop();
      if (d > dist[u]) continue;
      for (const auto& [v, edge] : adjacency_[u]) {
        if (banned_edges.contains(edge)) continue;
        const double nd = d + edges_[edge];
        if (nd < dist[v] - 1e-9) {
          dist[v] = nd;
          prev_vertex[v] = u;
          prev_edge[v] = edge;
          queue.push({nd, v});
        }
      }
    }
    if (dist[to] == inf) {
      throw ValidationError("maze graph has no route for the trial structure");
    }
    std::vector<std::size_t> path{to};
    std::vector<std::size_t> used;
    for (std::size_t v = to; v != from; v = prev_vertex[v]) {
      used.push_back(prev_edge[v]);
      path.push_back(prev_vertex[v]);
    }
    std::reverse(path.begin(), path.end());
    return {path, used};
  }

  std::size_t edge_between(std::size_t u, std::size_t v) const {
    for (const auto& [w, edge] : adjacency_[u]) {
      if (w == v) return edge;
    }
    throw ValidationError("vertices are not adjacent");
  }

 private:
  void add_edge(std::size_t u, std::size_t v) {
    const std::size_t id = edges_.size();
    edges_.push_back(distance(vertices_[u], vertices_[v]));
    adjacency_[u].emplace_back(v, id);
    adjacency_[v].emplace_back(u, id);
  }

  std::vector<Vec2> vertices_;
  std::vector<double> edges_;  // lengths
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacency_;
};

struct Loop {
  std::vector<Vec2> outbound;  // start .. reward
  std::vector<Vec2> inbound;   // reward .. start
};

Loop plan_loop(const MazeSkeleton& maze, std::size_t reward) {
  TrackGraph graph(maze);
  const auto& stem = maze.segments().front();
  const std::size_t start = graph.find_vertex(stem.a);
  const std::size_t choice = graph.find_vertex(stem.b);
  const std::size_t goal = graph.find_vertex(maze.reward_sites()[reward]);
  std::set<std::size_t> banned{graph.edge_between(start, choice)};
  auto [out_path, out_edges] = graph.shortest_path(choice, goal, banned);
  banned.insert(out_edges.begin(), out_edges.end());
  auto [in_path, in_edges] = graph.shortest_path(goal, start, banned);

  Loop loop;
  loop.outbound.push_back(graph.position(start));
  for (std::size_t v : out_path) loop.outbound.push_back(graph.position(v));
  for (std::size_t v : in_path) loop.inbound.push_back(graph.position(v));
  return loop;
}

// A stretch of continuous motion ending in a stop.
struct Leg {
  std::vector<Vec2> waypoints;
  double pause_ms = 0.0;
  bool reward_stop = false;
};

void append_path(std::vector<Vec2>& dst, const std::vector<Vec2>& src) {
  for (Vec2 p : src) {
    if (dst.empty() || distance(dst.back(), p) > 1e-12) dst.push_back(p);
  }
}

class Walker {
 public:
  Walker(const SessionConfig& config, std::mt19937_64& rng)
      : config_(config), rng_(rng), target_(config.mean_speed_cm_s) {}

  // Advances one tick along the leg; returns true on arrival.
  bool advance(double total, double& travelled, double& speed) {
    const double dt = kSampleIntervalMs / 1000.0;
    const double tau_target = config_.speed_correlation_s;
    target_ += (config_.mean_speed_cm_s - target_) * dt / tau_target +
               config_.speed_sd_cm_s * std::sqrt(2.0 * dt / tau_target) * normal_(rng_);
    speed += (target_ - speed) * dt / config_.speed_smoothing_s;
    speed = std::clamp(speed, 1.0, config_.max_speed_cm_s);
    const double remaining = total - travelled;
    speed = std::min(speed, std::sqrt(2.0 * config_.braking_cm_s2 * remaining));
    const double step = speed * dt;
    if (step >= remaining) {
      travelled = total;
      return true;
    }
    travelled += step;
    return false;
  }

 private:
  const SessionConfig& config_;
  std::mt19937_64& rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  double target_;
};

Vec2 point_along(const std::vector<Vec2>& waypoints, const std::vector<double>& cumulative,
                 double s) {
  if (s >= cumulative.back()) return waypoints.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - cumulative.begin()) - 1;
  const Segment seg{waypoints[i], waypoints[i + 1]};
  return seg.point_at(s - cumulative[i]);
}

}  // namespace

SimulatedSession simulate_session(const MazeSkeleton& maze, const SessionConfig& config) {
  if (config.n_trials <= 0) throw ValidationError("n_trials must be positive");
  if (!(config.mean_speed_cm_s > 0.0)) throw ValidationError("mean speed must be positive");
  if (!(config.max_speed_cm_s >= config.mean_speed_cm_s)) {
    throw ValidationError("max speed must be at least the mean speed");
  }
  if (maze.reward_sites().empty()) throw ValidationError("maze has no reward sites");

  std::vector<Loop> loops;
  for (std::size_t r = 0; r < maze.reward_sites().size(); ++r) loops.push_back(plan_loop(maze, r));

  std::mt19937_64 rng(config.rng_seed);
  std::uniform_int_distribution<std::size_t> pick_side(0, loops.size() - 1);

  SimulatedSession session;
  std::vector<Leg> legs;
  std::vector<std::pair<std::size_t, std::size_t>> sides;
  for (int trial = 0; trial < config.n_trials; ++trial) {
    const std::size_t forced = pick_side(rng);
    const std::size_t choice = config.turn_rule == TurnRule::match
                                   ? forced
                                   : (forced + 1) % loops.size();
    sides.emplace_back(forced, choice);
    Leg run;
    append_path(run.waypoints, loops[forced].outbound);
    append_path(run.waypoints, loops[forced].inbound);
    append_path(run.waypoints, loops[choice].outbound);
    run.pause_ms = config.pause_ms_at_reward;
    run.reward_stop = true;
    Leg back;
    append_path(back.waypoints, loops[choice].inbound);
    back.pause_ms = trial + 1 < config.n_trials ? config.inter_trial_pause_ms : 0.0;
    legs.push_back(std::move(run));
    legs.push_back(std::move(back));
  }

  std::vector<TimedPosition> positions;
  std::int64_t t = 0;
  positions.push_back({t, legs.front().waypoints.front()});
  Walker walker(config, rng);
  double speed = 0.0;

  for (std::size_t li = 0; li < legs.size(); ++li) {
    const Leg& leg = legs[li];
    std::vector<double> cumulative{0.0};
    for (std::size_t i = 1; i < leg.waypoints.size(); ++i) {
      cumulative.push_back(cumulative.back() + distance(leg.waypoints[i - 1], leg.waypoints[i]));
    }
    if (li % 2 == 0) {
      TrialRecord rec;
      rec.forced_reward = sides[li / 2].first;
      rec.choice_reward = sides[li / 2].second;
      rec.forced_start_ms = t;
      session.trials.push_back(rec);
    }
    // The choice run starts once the forced loop is back at the start point.
    const auto& forced_loop = loops[sides[li / 2].first];
    double forced_loop_length = 0.0;
    if (li % 2 == 0) {
      std::vector<Vec2> tmp;
      append_path(tmp, forced_loop.outbound);
      append_path(tmp, forced_loop.inbound);
      for (std::size_t i = 1; i < tmp.size(); ++i) forced_loop_length += distance(tmp[i - 1], tmp[i]);
    }
    bool choice_marked = li % 2 != 0;

    double travelled = 0.0;
    bool arrived = false;
    while (!arrived) {
      arrived = walker.advance(cumulative.back(), travelled, speed);
      t += kSampleIntervalMs;
      positions.push_back({t, point_along(leg.waypoints, cumulative, travelled)});
      if (!choice_marked && travelled >= forced_loop_length) {
        session.trials.back().choice_start_ms = t;
        choice_marked = true;
      }
    }
    speed = 0.0;
    if (leg.reward_stop) {
      ++session.reward_visits;
      session.trials.back().reward_arrival_ms = t;
    } else {
      session.trials.back().end_ms = t;
    }
    const auto pause_ticks = static_cast<std::int64_t>(std::llround(leg.pause_ms / kSampleIntervalMs));
    for (std::int64_t k = 0; k < pause_ticks; ++k) {
      t += kSampleIntervalMs;
      positions.push_back({t, positions.back().position});
    }
  }

  session.samples = derive_kinematics(positions);
  return session;
}

std::vector<TrajectorySample> derive_kinematics(std::span<const TimedPosition> positions) {
  if (positions.size() < 2) throw ValidationError("derive_kinematics needs at least two samples");
  for (std::size_t i = 1; i < positions.size(); ++i) {
    if (positions[i].t_ms == positions[i - 1].t_ms) {
      throw ValidationError("duplicate timestamp " + std::to_string(positions[i].t_ms));
    }
    if (positions[i].t_ms < positions[i - 1].t_ms) {
      throw ValidationError("timestamps must strictly increase");
    }
  }
  std::vector<TrajectorySample> out(positions.size());
  std::vector<bool> heading_known(positions.size(), false);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    out[i].t_ms = positions[i].t_ms;
    out[i].position = positions[i].position;
  }
  for (std::size_t i = 1; i < positions.size(); ++i) {
    const Vec2 d = positions[i].position - positions[i - 1].position;
    const double dt_s = static_cast<double>(positions[i].t_ms - positions[i - 1].t_ms) / 1000.0;
    const double step = d.norm();
    out[i].speed_cm_s = step / dt_s;
    if (step > 0.0) {
      const double raw = wrap_deg_360(rad_to_deg(std::atan2(d.y, d.x)));
      out[i].direction_deg = quantize_direction(raw).value_or(raw);
      heading_known[i] = true;
    } else if (heading_known[i - 1]) {
      out[i].direction_deg = out[i - 1].direction_deg;
      heading_known[i] = true;
    }
  }
  // Leading stationary samples take the first heading that becomes known.
  const auto first_known = std::find(heading_known.begin() + 1, heading_known.end(), true);
  const double fill = first_known == heading_known.end()
                          ? 0.0
                          : out[static_cast<std::size_t>(first_known - heading_known.begin())].direction_deg;
  for (std::size_t i = 1; i < out.size() && !heading_known[i]; ++i) out[i].direction_deg = fill;
  out[0].speed_cm_s = out[1].speed_cm_s;
  out[0].direction_deg = out[1].direction_deg;
  return out;
}

std::vector<TrajectorySample> load_trajectory(const std::filesystem::path& path) {
  return read_kinematics_csv<TrajectorySample>(path);
}

void save_trajectory(const std::filesystem::path& path, std::span<const TrajectorySample> samples) {
  write_kinematics_csv(path, samples);
}

std::size_t split_index(std::size_t n_samples, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("train fraction must be in (0, 1)");
  }
  return static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n_samples)));
}

}  // namespace brainslam

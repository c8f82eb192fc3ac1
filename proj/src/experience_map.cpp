#include "brainslam/experience_map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "brainslam/text_io.hpp"

namespace brainslam {

using nlohmann::json;

void ExperienceMap::on_step(std::size_t view_cell_id, bool is_new_view_cell, const PoseEstimate& pose,
                            const OdometryDelta& step_odometry, std::int64_t t_ms) {
  if (!std::isfinite(pose.position.x) || !std::isfinite(pose.position.y) || !std::isfinite(pose.theta_deg)) {
    throw ValidationError("experience map needs a finite pose");
  }
  pending_.dx_cm += step_odometry.dx_cm;
  pending_.dy_cm += step_odometry.dy_cm;
  pending_.dtheta_deg += step_odometry.dtheta_deg;

  std::size_t target = 0;
  const auto known = node_of_view_.find(view_cell_id);
  if (is_new_view_cell) {
    if (known != node_of_view_.end()) {
      throw ValidationError("view cell " + std::to_string(view_cell_id) + " already has an experience");
    }
    if (nodes_.empty()) origin_ = pose;
    ExperienceNode node;
    node.id = nodes_.size();
    node.position = pose.position - origin_.position;
    node.theta_deg = wrap_deg_360(pose.theta_deg - origin_.theta_deg);
    node.view_cell_id = view_cell_id;
    node.created_t_ms = t_ms;
    nodes_.push_back(node);
    node_of_view_[view_cell_id] = node.id;
    target = node.id;
  } else {
    if (known == node_of_view_.end()) {
      throw ValidationError("unknown view cell " + std::to_string(view_cell_id));
    }
    target = known->second;
  }

  if (active_ && *active_ == target) return;
  if (active_) {
    auto& link = links_[{*active_, target}];
    link.from = *active_;
    link.to = target;
    link.delta = {pending_.dx_cm, pending_.dy_cm, signed_angle_diff_deg(pending_.dtheta_deg, 0.0)};
    const std::int64_t gap = t_ms - active_since_ms_;
    link.min_gap_ms = link.traversals == 0 ? gap : std::min(link.min_gap_ms, gap);
    ++link.traversals;
    nodes_[*active_].active = false;
  }
  pending_ = {};
  active_since_ms_ = t_ms;
  nodes_[target].active = true;
  active_ = target;
}

std::vector<ExperienceLink> ExperienceMap::links() const {
  std::vector<ExperienceLink> out;
  out.reserve(links_.size());
  for (const auto& [key, link] : links_) out.push_back(link);
  return out;
}

std::optional<std::size_t> ExperienceMap::node_for_view_cell(std::size_t view_cell_id) const {
  const auto it = node_of_view_.find(view_cell_id);
  if (it == node_of_view_.end()) return std::nullopt;
  return it->second;
}

std::string ExperienceMap::to_json() const {
  json doc;
  doc["frame_origin"] = {{"x_cm", origin_.position.x},
                         {"y_cm", origin_.position.y},
                         {"theta_deg", origin_.theta_deg}};
  doc["active_node"] = active_ ? json(*active_) : json(nullptr);
  doc["pending"] = {{"dx_cm", pending_.dx_cm}, {"dy_cm", pending_.dy_cm}, {"dtheta_deg", pending_.dtheta_deg}};
  doc["active_since_ms"] = active_since_ms_;
  json nodes = json::array();
  for (const auto& n : nodes_) {
    nodes.push_back({{"id", n.id},
                     {"x_cm", n.position.x},
                     {"y_cm", n.position.y},
                     {"theta_deg", n.theta_deg},
                     {"view_cell_id", n.view_cell_id},
                     {"created_t_ms", n.created_t_ms}});
  }
  doc["nodes"] = std::move(nodes);
  json links = json::array();
  for (const auto& [key, l] : links_) {
    links.push_back({{"from", l.from},
                     {"to", l.to},
                     {"dx_cm", l.delta.dx_cm},
                     {"dy_cm", l.delta.dy_cm},
                     {"dtheta_deg", l.delta.dtheta_deg},
                     {"traversals", l.traversals},
                     {"min_gap_ms", l.min_gap_ms}});
  }
  doc["links"] = std::move(links);
  return doc.dump(1) + "\n";
}

ExperienceMap ExperienceMap::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("map file: ") + e.what());
  }
  ExperienceMap map;
  try {
    const auto& o = doc.at("frame_origin");
    map.origin_ = {{o.at("x_cm").get<double>(), o.at("y_cm").get<double>()}, o.at("theta_deg").get<double>()};
    if (doc.contains("pending")) {
      const auto& p = doc["pending"];
      map.pending_ = {p.at("dx_cm").get<double>(), p.at("dy_cm").get<double>(), p.at("dtheta_deg").get<double>()};
    }
    map.active_since_ms_ = doc.value("active_since_ms", std::int64_t{0});
    for (const auto& n : doc.at("nodes")) {
      ExperienceNode node;
      node.id = n.at("id").get<std::size_t>();
      if (node.id != map.nodes_.size()) throw ParseError("map file: node ids must be 0..n-1 in order");
      node.position = {n.at("x_cm").get<double>(), n.at("y_cm").get<double>()};
      node.theta_deg = n.at("theta_deg").get<double>();
      node.view_cell_id = n.at("view_cell_id").get<std::size_t>();
      node.created_t_ms = n.value("created_t_ms", std::int64_t{0});
      map.node_of_view_[node.view_cell_id] = node.id;
      map.nodes_.push_back(node);
    }
    for (const auto& l : doc.at("links")) {
      ExperienceLink link;
      link.from = l.at("from").get<std::size_t>();
      link.to = l.at("to").get<std::size_t>();
      if (link.from >= map.nodes_.size() || link.to >= map.nodes_.size() || link.from == link.to) {
        throw ParseError("map file: link references unknown nodes");
      }
      link.delta = {l.at("dx_cm").get<double>(), l.at("dy_cm").get<double>(), l.at("dtheta_deg").get<double>()};
      link.traversals = l.at("traversals").get<std::uint64_t>();
      link.min_gap_ms = l.value("min_gap_ms", std::int64_t{0});
      if (!map.links_.emplace(std::make_pair(link.from, link.to), link).second) {
        throw ParseError("map file: duplicate link");
      }
    }
    if (!doc.at("active_node").is_null()) {
      const auto a = doc["active_node"].get<std::size_t>();
      if (a >= map.nodes_.size()) throw ParseError("map file: active node out of range");
      map.active_ = a;
      map.nodes_[a].active = true;
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("map file: ") + e.what());
  }
  return map;
}

void save_map(const std::filesystem::path& path, const ExperienceMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeAbort("cannot write " + path.string());
  out << map.to_json();
}

ExperienceMap load_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ExperienceMap::from_json(ss.str());
}

std::string render_svg(const ExperienceMap& map, const MazeSkeleton* skeleton) {
  // Everything is drawn in world coordinates, y up.
  double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
  double max_x = -min_x, max_y = -min_x;
  auto grow = [&](Vec2 p) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  };
  for (const auto& n : map.nodes()) grow(map.to_world(n.position));
  if (skeleton) {
    for (const auto& s : skeleton->segments()) {
      grow(s.a);
      grow(s.b);
    }
  }
  if (!std::isfinite(min_x)) min_x = min_y = 0.0, max_x = max_y = 1.0;
  const double margin = 10.0;
  min_x -= margin;
  min_y -= margin;
  max_x += margin;
  max_y += margin;
  const double w = max_x - min_x;
  const double h = max_y - min_y;
  auto px = [&](Vec2 p) { return format_double(std::round((p.x - min_x) * 100.0) / 100.0); };
  auto py = [&](Vec2 p) { return format_double(std::round((max_y - p.y) * 100.0) / 100.0); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_double(std::ceil(w * 4.0)) << "\" height=\""
      << format_double(std::ceil(h * 4.0)) << "\" viewBox=\"0 0 " << format_double(w) << ' ' << format_double(h)
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (skeleton) {
    out << "<g stroke=\"#9ecae1\" stroke-width=\"6\" stroke-linecap=\"round\">\n";
    for (const auto& s : skeleton->segments()) {
      out << "<line x1=\"" << px(s.a) << "\" y1=\"" << py(s.a) << "\" x2=\"" << px(s.b) << "\" y2=\"" << py(s.b)
          << "\"/>\n";
    }
    out << "</g>\n";
  }
  out << "<g stroke=\"#444\" stroke-width=\"0.5\">\n";
  for (const auto& l : map.links()) {
    const Vec2 a = map.to_world(map.nodes()[l.from].position);
    const Vec2 b = map.to_world(map.nodes()[l.to].position);
    out << "<line x1=\"" << px(a) << "\" y1=\"" << py(a) << "\" x2=\"" << px(b) << "\" y2=\"" << py(b) << "\"/>\n";
  }
  out << "</g>\n<g fill=\"#d62728\">\n";
  for (const auto& n : map.nodes()) {
    const Vec2 p = map.to_world(n.position);
    out << "<circle cx=\"" << px(p) << "\" cy=\"" << py(p) << "\" r=\"1\"/>\n";
  }
  out << "</g>\n</svg>\n";
  return out.str();
}

}  // namespace brainslam

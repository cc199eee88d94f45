#include "coroute/scenario_io.hpp"

#include <fstream>
#include <sstream>

#include "coroute/error.hpp"
#include "json_codec.hpp"

namespace coroute {

using nlohmann::json;

namespace codec {

json to_json(const TeamConfig& t) {
  return {{"num_uavs", t.num_uavs},
          {"num_ugvs", t.num_ugvs},
          {"v_a", t.v_a},
          {"v_g", t.v_g},
          {"recharge_time_s", t.recharge_time_s}};
}

TeamConfig team_from_json(const json& j) {
  TeamConfig t;
  t.num_uavs = j.at("num_uavs").get<int>();
  t.num_ugvs = j.at("num_ugvs").get<int>();
  t.v_a = j.at("v_a").get<double>();
  t.v_g = j.at("v_g").get<double>();
  t.recharge_time_s = j.at("recharge_time_s").get<double>();
  return t;
}

json to_json(const TaskPoint& t) {
  return {{"id", t.id}, {"x", t.x}, {"y", t.y}, {"kind", t.kind == TaskKind::ground ? "ground" : "aerial"}};
}

TaskPoint task_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  require(kind == "ground" || kind == "aerial", ErrorKind::invalid_argument, "unknown task kind: " + kind);
  return {j.at("id").get<int>(), j.at("x").get<double>(), j.at("y").get<double>(),
          kind == "ground" ? TaskKind::ground : TaskKind::aerial};
}

}  // namespace codec

std::string scenario_to_json(const Scenario& s) {
  json doc;
  doc["version"] = Scenario::kVersion;
  doc["area_side_m"] = s.area_side_m;
  doc["seed"] = s.seed;
  doc["depot"] = s.depot;
  doc["fuel"] = {{"c3", s.fuel.c3},
                 {"c2", s.fuel.c2},
                 {"c1", s.fuel.c1},
                 {"c0", s.fuel.c0},
                 {"capacity_kj", s.fuel.capacity_kj}};
  doc["team"] = codec::to_json(s.team);
  json nodes = json::array();
  for (const auto& p : s.road.nodes) nodes.push_back({p.x, p.y});
  json edges = json::array();
  for (const auto& e : s.road.edges) {
    // Straight roads are written as [i, j]; longer ones carry their length.
    if (e.length_m == distance(s.road.nodes[e.a], s.road.nodes[e.b])) {
      edges.push_back({e.a, e.b});
    } else {
      edges.push_back({e.a, e.b, e.length_m});
    }
  }
  doc["road"] = {{"nodes", nodes}, {"edges", edges}};
  json tasks = json::array();
  for (const auto& t : s.tasks) tasks.push_back(codec::to_json(t));
  doc["tasks"] = tasks;
  return doc.dump(1);
}

Scenario scenario_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::invalid_argument, std::string("scenario is not valid JSON: ") + e.what());
  }
  try {
    const int version = doc.at("version").get<int>();
    require(version == Scenario::kVersion, ErrorKind::version_mismatch,
            "scenario version " + std::to_string(version) + " is not supported (expected " +
                std::to_string(Scenario::kVersion) + "); re-generate or migrate the file");
    Scenario s;
    s.area_side_m = doc.at("area_side_m").get<double>();
    s.seed = doc.at("seed").get<std::uint64_t>();
    s.depot = doc.at("depot").get<int>();
    const auto& f = doc.at("fuel");
    s.fuel = {f.at("c3").get<double>(), f.at("c2").get<double>(), f.at("c1").get<double>(),
              f.at("c0").get<double>(), f.at("capacity_kj").get<double>()};
    s.team = codec::team_from_json(doc.at("team"));
    for (const auto& p : doc.at("road").at("nodes")) {
      s.road.nodes.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    for (const auto& e : doc.at("road").at("edges")) {
      RoadEdge edge{e.at(0).get<int>(), e.at(1).get<int>(), 0.0};
      require(edge.a >= 0 && edge.b >= 0 &&
                  static_cast<std::size_t>(std::max(edge.a, edge.b)) < s.road.nodes.size(),
              ErrorKind::invalid_argument, "road edge references a missing node");
      edge.length_m = e.size() > 2 ? e.at(2).get<double>()
                                   : distance(s.road.nodes[edge.a], s.road.nodes[edge.b]);
      s.road.edges.push_back(edge);
    }
    for (const auto& t : doc.at("tasks")) s.tasks.push_back(codec::task_from_json(t));
    s.validate();
    return s;
  } catch (const json::exception& e) {
    fail(ErrorKind::invalid_argument, std::string("malformed scenario: ") + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path.string());
  out << text;
  require(static_cast<bool>(out), ErrorKind::io, "write failed for " + path.string());
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  write_text_file(path, scenario_to_json(s));
}

Scenario load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(read_text_file(path));
}

}  // namespace coroute

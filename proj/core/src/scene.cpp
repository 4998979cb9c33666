#include "groundnet/scene.hpp"

#include <fstream>
#include <sstream>

#include "groundnet/errors.hpp"
#include "json.hpp"

namespace groundnet {

namespace {

using nlohmann::json;

json header_record() {
  json h;
  h["format"] = "groundnet-scenes";
  h["version"] = kSceneSchemaVersion;
  return h;
}

}  // namespace

const BoundingBox* Scene::box_by_id(std::int32_t box_id) const {
  for (const BoundingBox& b : boxes) {
    if (b.id == box_id) return &b;
  }
  return nullptr;
}

std::int64_t Scene::feature_length() const {
  return boxes.empty() ? 0 : static_cast<std::int64_t>(boxes.front().visual_features.size());
}

void validate_scene(const Scene& scene, std::size_t record_index) {
  auto fail = [record_index](const std::string& msg) {
    throw InvariantViolation(record_index, msg);
  };
  if (scene.width <= 0 || scene.height <= 0) fail("image dimensions must be positive");
  if (scene.boxes.empty()) fail("scene has no boxes");
  std::set<std::int32_t> ids;
  const std::int64_t feat_len = scene.feature_length();
  for (const BoundingBox& b : scene.boxes) {
    if (!ids.insert(b.id).second) fail("duplicate box id " + std::to_string(b.id));
    if (!(b.xmin < b.xmax) || !(b.ymin < b.ymax)) {
      fail("box " + std::to_string(b.id) + " is degenerate (xmin<xmax, ymin<ymax required)");
    }
    if (b.xmin < 0 || b.ymin < 0 || b.xmax > scene.width || b.ymax > scene.height) {
      fail("box " + std::to_string(b.id) + " extends outside the image");
    }
    if (static_cast<std::int64_t>(b.visual_features.size()) != feat_len) {
      fail("box " + std::to_string(b.id) + " has inconsistent feature length");
    }
  }
  if (!ids.count(scene.target_id)) fail("target_id is not a box in the scene");
  for (std::int32_t s : scene.supporting_ids) {
    if (!ids.count(s)) fail("supporting id " + std::to_string(s) + " is not a box");
    if (s == scene.target_id) fail("supporting ids must exclude the target");
  }
  if (scene.expression.empty()) fail("expression is empty");
  if (scene.parse.empty()) fail("parse string is empty");
}

std::string scene_to_json_line(const Scene& scene) {
  json doc;
  doc["id"] = scene.id;
  doc["width"] = scene.width;
  doc["height"] = scene.height;
  doc["expression"] = scene.expression;
  doc["parse"] = scene.parse;
  doc["target"] = scene.target_id;
  doc["supporting"] = std::vector<std::int32_t>(scene.supporting_ids.begin(),
                                                scene.supporting_ids.end());
  json boxes = json::array();
  for (const BoundingBox& b : scene.boxes) {
    json jb;
    jb["id"] = b.id;
    jb["xmin"] = b.xmin;
    jb["ymin"] = b.ymin;
    jb["xmax"] = b.xmax;
    jb["ymax"] = b.ymax;
    jb["features"] = b.visual_features;
    boxes.push_back(std::move(jb));
  }
  doc["boxes"] = std::move(boxes);
  return doc.dump();
}

Scene scene_from_json_line(const std::string& line, std::size_t record_index) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error& e) {
    throw InvariantViolation(record_index, std::string("malformed JSON: ") + e.what());
  }
  Scene scene;
  try {
    scene.id = doc.at("id").get<std::int64_t>();
    scene.width = doc.at("width").get<double>();
    scene.height = doc.at("height").get<double>();
    scene.expression = doc.at("expression").get<std::vector<std::string>>();
    scene.parse = doc.at("parse").get<std::string>();
    scene.target_id = doc.at("target").get<std::int32_t>();
    for (const json& s : doc.at("supporting")) {
      scene.supporting_ids.insert(s.get<std::int32_t>());
    }
    for (const json& jb : doc.at("boxes")) {
      BoundingBox b;
      b.id = jb.at("id").get<std::int32_t>();
      b.xmin = jb.at("xmin").get<double>();
      b.ymin = jb.at("ymin").get<double>();
      b.xmax = jb.at("xmax").get<double>();
      b.ymax = jb.at("ymax").get<double>();
      b.visual_features = jb.at("features").get<std::vector<double>>();
      scene.boxes.push_back(std::move(b));
    }
  } catch (const json::exception& e) {
    throw InvariantViolation(record_index, std::string("bad scene record: ") + e.what());
  }
  validate_scene(scene, record_index);
  return scene;
}

std::vector<Scene> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file: " + path);
  std::vector<Scene> scenes;
  std::string line;
  bool saw_header = false;
  std::size_t record_index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (!saw_header) {
      json h;
      try {
        h = json::parse(line);
      } catch (const json::parse_error&) {
        throw SchemaVersionMismatch("dataset file lacks a valid header line: " + path);
      }
      if (h.value("format", "") != "groundnet-scenes") {
        throw SchemaVersionMismatch("not a groundnet-scenes file: " + path);
      }
      if (h.value("version", -1) != kSceneSchemaVersion) {
        throw SchemaVersionMismatch("unsupported scene schema version " +
                                    h.value("version", json(-1)).dump() + " in " + path);
      }
      saw_header = true;
      continue;
    }
    scenes.push_back(scene_from_json_line(line, record_index));
    ++record_index;
  }
  return scenes;
}

void save_dataset(const std::vector<Scene>& scenes, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open dataset file for writing: " + path);
  out << header_record().dump() << "\n";
  for (const Scene& scene : scenes) {
    out << scene_to_json_line(scene) << "\n";
  }
  if (!out) throw Error("failed writing dataset file: " + path);
}

}  // namespace groundnet

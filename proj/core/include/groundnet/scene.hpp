#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace groundnet {

struct BoundingBox {
  std::int32_t id = 0;
  double xmin = 0, ymin = 0, xmax = 0, ymax = 0;  // pixels
  std::vector<double> visual_features;

  double center_x() const { return 0.5 * (xmin + xmax); }
  double center_y() const { return 0.5 * (ymin + ymax); }
  double area() const { return (xmax - xmin) * (ymax - ymin); }
};

// One grounding instance: an image reduced to its candidate boxes, the
// referring expression with its parse, and the gold target/supporting
// annotations. Immutable after load; shareable across threads.
struct Scene {
  std::int64_t id = 0;
  double width = 0, height = 0;
  std::vector<BoundingBox> boxes;
  std::vector<std::string> expression;
  std::string parse;  // bracketed tree text
  std::int32_t target_id = -1;
  std::set<std::int32_t> supporting_ids;

  const BoundingBox* box_by_id(std::int32_t box_id) const;
  std::int64_t feature_length() const;
};

// Checks every scene invariant (box geometry, ids, feature lengths,
// bounds); throws InvariantViolation tagged with record_index on the
// first failure.
void validate_scene(const Scene& scene, std::size_t record_index);

// Line-delimited JSON with a version header line. load is strict: any
// invariant violation or version mismatch aborts with the record index.
// save(load(path)) reproduces the file; load(save(scenes)) == scenes.
std::vector<Scene> load_dataset(const std::string& path);
void save_dataset(const std::vector<Scene>& scenes, const std::string& path);

std::string scene_to_json_line(const Scene& scene);
Scene scene_from_json_line(const std::string& line, std::size_t record_index);

inline constexpr int kSceneSchemaVersion = 1;

}  // namespace groundnet

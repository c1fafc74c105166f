#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "segreward/geometry.hpp"
#include "segreward/structured.hpp"

namespace segreward {

struct SceneObject {
  int id = 0;
  std::string class_name;
  std::string color;
  std::vector<std::string> tags;  // extra attribute phrases, e.g. "wagging its tail"
  ObjectAnswer answer;            // ground-truth box and interior point
  BinaryMask mask;                // rasterized box at grid resolution
};

/// Synthetic ground truth standing in for an image: objects with ids, boxes,
/// interior points, attributes and reduced-resolution masks.
struct Scene {
  int image_w = 0;
  int image_h = 0;
  int grid_w = 0;
  int grid_h = 0;
  std::uint64_t seed = 0;
  std::vector<SceneObject> objects;
  int distractor_count = 0;  // objects sharing a class with another object

  const SceneObject& object_by_id(int id) const;
  std::vector<ObjectAnswer> answers_of(const std::vector<int>& ids) const;
  /// Logical OR of the listed objects' masks (all-false mask when empty).
  BinaryMask union_mask(const std::vector<int>& ids) const;
};

struct SceneConfig {
  int image_w = 640;
  int image_h = 480;
  int grid_w = 64;
  int grid_h = 48;
  int min_objects = 2;
  int max_objects = 4;
  double tag_probability = 0.35;
  /// Give the first two objects the same class so hard queries stay
  /// constructible.
  bool force_class_pair = true;
};

enum class Difficulty { kEasy, kHard };

/// A query against a scene. Easy queries name the target class directly;
/// hard queries use attribute or position clues and never the raw class name.
struct QueryCase {
  std::string query;
  std::vector<int> target_ids;
  Difficulty difficulty = Difficulty::kEasy;
};

/// Reproducible scene synthesis. Throws InvalidConfigError on a bad config.
Scene generate_scene(std::uint64_t seed, const SceneConfig& config = {});

/// Builds a query resolvable from scene attributes; throws UnresolvableError
/// when the scene cannot support the requested difficulty.
QueryCase generate_query(const Scene& scene, Difficulty difficulty, std::uint64_t seed);

/// Deterministic grounding of a free-form phrase against scene attributes:
/// recognized class names / class hints, colors, tags and image sides filter
/// conjunctively. Unrecognized phrases resolve to nothing.
std::vector<int> resolve_phrase(const Scene& scene, std::string_view phrase);

/// Vocabulary shared by the scene generator and the phrase resolver.
const std::vector<std::string>& scene_class_names();
const std::vector<std::string>& scene_colors();
/// Indirect description of a class ("thing you drink from") for hard queries.
const std::string& class_hint(const std::string& class_name);
/// Side of the image the object's box center falls on: "left" or "right".
std::string horizontal_side(const Scene& scene, const SceneObject& object);

}  // namespace segreward

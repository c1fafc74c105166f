#include "segreward/scene.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

#include "segreward/errors.hpp"
#include "segreward/rng.hpp"

namespace segreward {

namespace {

const std::vector<std::string> kClasses = {"cup", "dog", "car", "book", "ball", "lamp"};
const std::vector<std::string> kColors = {"red", "blue", "green", "yellow", "black", "white"};

const std::map<std::string, std::string> kHints = {
    {"cup", "thing you drink from"},   {"dog", "animal that barks"},
    {"car", "thing you drive"},        {"book", "thing you read"},
    {"ball", "round thing you play with"}, {"lamp", "thing that lights the room"},
};

const std::map<std::string, std::vector<std::string>> kTagPool = {
    {"cup", {"with a handle", "steaming hot"}},
    {"dog", {"wagging its tail", "lying down"}},
    {"car", {"with open doors", "parked sideways"}},
    {"book", {"lying open", "stacked on top"}},
    {"ball", {"bouncing high", "half deflated"}},
    {"lamp", {"switched on", "tilted over"}},
};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

BinaryMask rasterize_box(const Box& b, int image_w, int image_h, int grid_w, int grid_h) {
  BinaryMask mask(grid_w, grid_h);
  double sx = static_cast<double>(image_w) / grid_w;
  double sy = static_cast<double>(image_h) / grid_h;
  for (int gy = 0; gy < grid_h; ++gy) {
    double cy = (gy + 0.5) * sy;
    if (cy < b.y1 || cy > b.y2) continue;
    for (int gx = 0; gx < grid_w; ++gx) {
      double cx = (gx + 0.5) * sx;
      if (cx >= b.x1 && cx <= b.x2) mask.set(gx, gy, true);
    }
  }
  return mask;
}

}  // namespace

const SceneObject& Scene::object_by_id(int id) const {
  for (const SceneObject& o : objects)
    if (o.id == id) return o;
  throw std::out_of_range("Scene::object_by_id: unknown id " + std::to_string(id));
}

std::vector<ObjectAnswer> Scene::answers_of(const std::vector<int>& ids) const {
  std::vector<ObjectAnswer> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(object_by_id(id).answer);
  return out;
}

BinaryMask Scene::union_mask(const std::vector<int>& ids) const {
  BinaryMask out(grid_w, grid_h);
  for (int id : ids) {
    const BinaryMask& m = object_by_id(id).mask;
    for (int y = 0; y < grid_h; ++y)
      for (int x = 0; x < grid_w; ++x)
        if (m.at(x, y)) out.set(x, y, true);
  }
  return out;
}

Scene generate_scene(std::uint64_t seed, const SceneConfig& config) {
  if (config.min_objects < 1 || config.max_objects < config.min_objects)
    throw InvalidConfigError("generate_scene: bad object count range");
  if (config.image_w < 64 || config.image_h < 64)
    throw InvalidConfigError("generate_scene: image too small");
  if (config.grid_w < 4 || config.grid_h < 4)
    throw InvalidConfigError("generate_scene: grid too small");

  Rng rng(mix_seed(seed, 0xA11CE));
  Scene scene;
  scene.image_w = config.image_w;
  scene.image_h = config.image_h;
  scene.grid_w = config.grid_w;
  scene.grid_h = config.grid_h;
  scene.seed = seed;

  int count = static_cast<int>(rng.uniform_int(config.min_objects, config.max_objects));
  std::map<std::string, std::vector<std::string>> used_colors;

  for (int i = 0; i < count; ++i) {
    SceneObject obj;
    obj.id = i;
    if (config.force_class_pair && i == 1) {
      obj.class_name = scene.objects[0].class_name;
    } else {
      obj.class_name = kClasses[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(kClasses.size()) - 1))];
    }

    // Colors stay unique within a class so attribute clues always resolve.
    std::vector<std::string> available;
    for (const std::string& c : kColors) {
      const auto& used = used_colors[obj.class_name];
      if (std::find(used.begin(), used.end(), c) == used.end()) available.push_back(c);
    }
    if (available.empty()) available = kColors;
    obj.color = available[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(available.size()) - 1))];
    used_colors[obj.class_name].push_back(obj.color);

    if (rng.bernoulli(config.tag_probability)) {
      const auto& pool = kTagPool.at(obj.class_name);
      obj.tags.push_back(pool[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))]);
    }

    // Limited-overlap rejection placement.
    Box box;
    for (int attempt = 0; attempt < 200; ++attempt) {
      double w = rng.uniform(0.12, 0.28) * config.image_w;
      double h = rng.uniform(0.12, 0.28) * config.image_h;
      double x1 = rng.uniform(0.0, config.image_w - w);
      double y1 = rng.uniform(0.0, config.image_h - h);
      box = Box{x1, y1, x1 + w, y1 + h};
      bool clear = true;
      for (const SceneObject& other : scene.objects)
        if (iou(box, Box::of(other.answer)) > 0.15) clear = false;
      if (clear) break;
    }
    obj.answer.x1 = box.x1;
    obj.answer.y1 = box.y1;
    obj.answer.x2 = box.x2;
    obj.answer.y2 = box.y2;
    obj.answer.px = rng.uniform(box.x1 + 0.2 * box.width(), box.x2 - 0.2 * box.width());
    obj.answer.py = rng.uniform(box.y1 + 0.2 * box.height(), box.y2 - 0.2 * box.height());
    obj.mask = rasterize_box(box, config.image_w, config.image_h, config.grid_w, config.grid_h);
    scene.objects.push_back(std::move(obj));
  }

  std::map<std::string, int> class_counts;
  for (const SceneObject& o : scene.objects) ++class_counts[o.class_name];
  for (const SceneObject& o : scene.objects)
    if (class_counts[o.class_name] > 1) ++scene.distractor_count;
  return scene;
}

std::string horizontal_side(const Scene& scene, const SceneObject& object) {
  double cx = (object.answer.x1 + object.answer.x2) / 2.0;
  return cx < scene.image_w / 2.0 ? "left" : "right";
}

QueryCase generate_query(const Scene& scene, Difficulty difficulty, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x9E44));
  QueryCase out;
  out.difficulty = difficulty;

  if (difficulty == Difficulty::kEasy) {
    std::vector<std::string> classes;
    for (const SceneObject& o : scene.objects)
      if (std::find(classes.begin(), classes.end(), o.class_name) == classes.end())
        classes.push_back(o.class_name);
    if (classes.empty()) throw UnresolvableError("generate_query: empty scene");
    const std::string& chosen = classes[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(classes.size()) - 1))];
    out.query = chosen;
    for (const SceneObject& o : scene.objects)
      if (o.class_name == chosen) out.target_ids.push_back(o.id);
    return out;
  }

  // Hard: target must have a same-class distractor, and the clue must single
  // it out without naming the class.
  std::map<std::string, int> class_counts;
  for (const SceneObject& o : scene.objects) ++class_counts[o.class_name];

  std::vector<int> candidates;
  for (const SceneObject& o : scene.objects)
    if (class_counts[o.class_name] > 1) candidates.push_back(o.id);
  if (candidates.empty())
    throw UnresolvableError("generate_query: no class has a distractor for a hard query");

  int target_id = candidates[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(candidates.size()) - 1))];
  const SceneObject& target = scene.object_by_id(target_id);

  struct Clue {
    std::string text;
  };
  std::vector<Clue> clues;

  // Color clue: generator keeps colors unique within a class, but a same-color
  // object of another class could still collide through the hint filter, so
  // re-check uniqueness of (hint, color) via the resolver's own logic.
  {
    bool unique = true;
    for (const SceneObject& o : scene.objects)
      if (o.id != target.id && o.class_name == target.class_name && o.color == target.color)
        unique = false;
    if (unique)
      clues.push_back({"the " + target.color + " " + class_hint(target.class_name)});
  }
  for (const std::string& tag : target.tags) {
    bool unique = true;
    for (const SceneObject& o : scene.objects)
      if (o.id != target.id &&
          std::find(o.tags.begin(), o.tags.end(), tag) != o.tags.end())
        unique = false;
    if (unique) clues.push_back({"the one " + tag});
  }
  {
    std::string side = horizontal_side(scene, target);
    bool unique = true;
    for (const SceneObject& o : scene.objects)
      if (o.id != target.id && o.class_name == target.class_name &&
          horizontal_side(scene, o) == side)
        unique = false;
    if (unique)
      clues.push_back({"the " + class_hint(target.class_name) + " on the " + side});
  }
  if (clues.empty())
    throw UnresolvableError("generate_query: no attribute singles out the target");

  const Clue& clue = clues[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(clues.size()) - 1))];
  out.query = clue.text;
  out.target_ids.push_back(target_id);

  // The clue must ground back to exactly the target.
  std::vector<int> resolved = resolve_phrase(scene, out.query);
  if (resolved != out.target_ids)
    throw UnresolvableError("generate_query: clue did not resolve uniquely");
  return out;
}

std::vector<int> resolve_phrase(const Scene& scene, std::string_view phrase) {
  std::string text = lower(phrase);
  Tokenizer tokenizer;
  std::vector<std::string> tokens = tokenizer.tokenize(text);
  auto has_token = [&tokens](const std::string& word) {
    return std::find(tokens.begin(), tokens.end(), word) != tokens.end();
  };
  auto has_substring = [&text](const std::string& needle) {
    return text.find(needle) != std::string::npos;
  };

  // Class constraint via name or hint phrase.
  std::vector<std::string> classes;
  for (const std::string& c : kClasses)
    if (has_token(c) || has_substring(kHints.at(c))) classes.push_back(c);

  std::vector<std::string> colors;
  for (const std::string& c : kColors)
    if (has_token(c)) colors.push_back(c);

  std::vector<std::string> tags;
  for (const auto& [cls, pool] : kTagPool)
    for (const std::string& tag : pool)
      if (has_substring(tag) &&
          std::find(tags.begin(), tags.end(), tag) == tags.end())
        tags.push_back(tag);

  std::vector<std::string> sides;
  for (const char* side : {"left", "right"})
    if (has_token(side)) sides.push_back(side);

  if (classes.empty() && colors.empty() && tags.empty() && sides.empty()) return {};

  std::vector<int> out;
  for (const SceneObject& o : scene.objects) {
    if (!classes.empty() &&
        std::find(classes.begin(), classes.end(), o.class_name) == classes.end())
      continue;
    if (!colors.empty() && std::find(colors.begin(), colors.end(), o.color) == colors.end())
      continue;
    bool tags_ok = true;
    for (const std::string& tag : tags)
      if (std::find(o.tags.begin(), o.tags.end(), tag) == o.tags.end()) tags_ok = false;
    if (!tags_ok) continue;
    if (!sides.empty() &&
        std::find(sides.begin(), sides.end(), horizontal_side(scene, o)) == sides.end())
      continue;
    out.push_back(o.id);
  }
  return out;
}

const std::vector<std::string>& scene_class_names() { return kClasses; }
const std::vector<std::string>& scene_colors() { return kColors; }

const std::string& class_hint(const std::string& class_name) {
  auto it = kHints.find(class_name);
  if (it == kHints.end())
    throw std::out_of_range("class_hint: unknown class " + class_name);
  return it->second;
}

}  // namespace segreward

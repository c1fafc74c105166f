#include <doctest.h>

#include <algorithm>
#include <map>

#include "segreward/errors.hpp"
#include "segreward/scene.hpp"

using namespace segreward;

namespace {

void check_scene_invariants(const Scene& scene, const SceneConfig& cfg) {
  REQUIRE(!scene.objects.empty());
  CHECK(static_cast<int>(scene.objects.size()) >= cfg.min_objects);
  CHECK(static_cast<int>(scene.objects.size()) <= cfg.max_objects);
  std::map<int, int> id_counts;
  for (const SceneObject& o : scene.objects) {
    ++id_counts[o.id];
    const ObjectAnswer& a = o.answer;
    CHECK(a.x1 < a.x2);
    CHECK(a.y1 < a.y2);
    CHECK(a.x1 >= 0);
    CHECK(a.y1 >= 0);
    CHECK(a.x2 <= scene.image_w);
    CHECK(a.y2 <= scene.image_h);
    CHECK(a.px > a.x1);
    CHECK(a.px < a.x2);
    CHECK(a.py > a.y1);
    CHECK(a.py < a.y2);
    CHECK(o.mask.width() == scene.grid_w);
    CHECK(o.mask.height() == scene.grid_h);
    CHECK(o.mask.count() > 0);  // masks consistent with (non-degenerate) boxes
  }
  for (const auto& [id, count] : id_counts) CHECK(count == 1);
}

}  // namespace

TEST_CASE("generate_scene determinism and invariants") {
  SceneConfig cfg;
  Scene a = generate_scene(42, cfg);
  Scene b = generate_scene(42, cfg);
  REQUIRE(a.objects.size() == b.objects.size());
  for (std::size_t i = 0; i < a.objects.size(); ++i) {
    CHECK(a.objects[i].class_name == b.objects[i].class_name);
    CHECK(a.objects[i].color == b.objects[i].color);
    CHECK(a.objects[i].answer == b.objects[i].answer);
    CHECK(a.objects[i].mask == b.objects[i].mask);
  }
  check_scene_invariants(a, cfg);
}

TEST_CASE("generate_scene single-object boundary config") {
  SceneConfig cfg;
  cfg.min_objects = 1;
  cfg.max_objects = 1;
  cfg.force_class_pair = false;
  Scene s = generate_scene(7, cfg);
  CHECK(s.objects.size() == 1);
  CHECK(s.distractor_count == 0);
}

TEST_CASE("generate_scene invariant sweep") {
  SceneConfig cfg;
  for (std::uint64_t seed = 0; seed < 1000; ++seed)
    check_scene_invariants(generate_scene(seed, cfg), cfg);
}

TEST_CASE("generate_scene rejects bad configs") {
  SceneConfig bad;
  bad.min_objects = 0;
  CHECK_THROWS_AS(generate_scene(1, bad), InvalidConfigError);
  SceneConfig inverted;
  inverted.min_objects = 5;
  inverted.max_objects = 2;
  CHECK_THROWS_AS(generate_scene(1, inverted), InvalidConfigError);
}

TEST_CASE("easy query names a class and targets all instances") {
  Scene s = generate_scene(42, SceneConfig{});
  QueryCase q = generate_query(s, Difficulty::kEasy, 5);
  CHECK(!q.target_ids.empty());
  for (int id : q.target_ids) CHECK(s.object_by_id(id).class_name == q.query);
  // Every object of the named class is a target.
  for (const SceneObject& o : s.objects)
    if (o.class_name == q.query)
      CHECK(std::find(q.target_ids.begin(), q.target_ids.end(), o.id) != q.target_ids.end());
}

TEST_CASE("hard query avoids the class name and resolves uniquely") {
  for (std::uint64_t seed : {1, 2, 3, 4, 5, 6, 7, 8}) {
    Scene s = generate_scene(seed, SceneConfig{});
    QueryCase q;
    try {
      q = generate_query(s, Difficulty::kHard, seed + 100);
    } catch (const UnresolvableError&) {
      continue;
    }
    REQUIRE(q.target_ids.size() == 1);
    const SceneObject& target = s.object_by_id(q.target_ids[0]);
    CHECK(q.query.find(target.class_name) == std::string::npos);
    // A same-class distractor exists.
    int same_class = 0;
    for (const SceneObject& o : s.objects)
      if (o.class_name == target.class_name) ++same_class;
    CHECK(same_class >= 2);
    CHECK(resolve_phrase(s, q.query) == q.target_ids);
  }
}

TEST_CASE("hard query is unresolvable on a single-object scene") {
  SceneConfig cfg;
  cfg.min_objects = 1;
  cfg.max_objects = 1;
  cfg.force_class_pair = false;
  cfg.tag_probability = 0.0;
  Scene s = generate_scene(3, cfg);
  CHECK_THROWS_AS(generate_query(s, Difficulty::kHard, 9), UnresolvableError);
}

TEST_CASE("resolve_phrase filters conjunctively") {
  Scene s = generate_scene(42, SceneConfig{});
  const SceneObject& first = s.objects[0];

  // Class name alone selects the whole class.
  std::vector<int> by_class = resolve_phrase(s, first.class_name);
  for (int id : by_class) CHECK(s.object_by_id(id).class_name == first.class_name);
  CHECK(!by_class.empty());

  // Color narrows it to one (scene colors are unique within a class).
  std::vector<int> by_color = resolve_phrase(s, first.color + " " + first.class_name);
  CHECK(by_color == std::vector<int>{first.id});

  // The functional hint is an alias for the class name.
  CHECK(resolve_phrase(s, "the " + class_hint(first.class_name)) == by_class);

  // Unrecognized phrases ground to nothing.
  CHECK(resolve_phrase(s, "quantum flux manifold").empty());
  CHECK(resolve_phrase(s, "").empty());
}

TEST_CASE("union_mask matches per-object masks") {
  Scene s = generate_scene(42, SceneConfig{});
  std::vector<int> ids;
  for (const SceneObject& o : s.objects) ids.push_back(o.id);
  BinaryMask all = s.union_mask(ids);
  std::size_t max_single = 0;
  for (const SceneObject& o : s.objects) max_single = std::max(max_single, o.mask.count());
  CHECK(all.count() >= max_single);
  CHECK(s.union_mask({}).count() == 0);
}

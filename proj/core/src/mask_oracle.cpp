#include "segreward/mask_oracle.hpp"

#include <algorithm>

#include "segreward/rng.hpp"

namespace segreward {

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

BinaryMask rasterize(const Box& b, const Scene& scene) {
  BinaryMask mask(scene.grid_w, scene.grid_h);
  double sx = static_cast<double>(scene.image_w) / scene.grid_w;
  double sy = static_cast<double>(scene.image_h) / scene.grid_h;
  for (int gy = 0; gy < scene.grid_h; ++gy) {
    double cy = (gy + 0.5) * sy;
    if (cy < b.y1 || cy > b.y2) continue;
    for (int gx = 0; gx < scene.grid_w; ++gx) {
      double cx = (gx + 0.5) * sx;
      if (cx >= b.x1 && cx <= b.x2) mask.set(gx, gy, true);
    }
  }
  return mask;
}

}  // namespace

MaskOracle::MaskOracle(double noise_level) : noise_level_(noise_level) {}

BinaryMask MaskOracle::mask_from(const Scene& scene, const std::vector<CenterBox>& boxes,
                                 std::string_view phrase) const {
  std::vector<int> resolved = resolve_phrase(scene, phrase);
  BinaryMask merged(scene.grid_w, scene.grid_h);

  if (boxes.empty()) {
    // Text-only prompt: segment whatever the phrase grounds to.
    merged = scene.union_mask(resolved);
  } else {
    std::vector<int> candidates = resolved;
    if (candidates.empty())
      for (const SceneObject& o : scene.objects) candidates.push_back(o.id);

    std::vector<BinaryMask> parts;
    for (const CenterBox& cb : boxes) {
      Box pixel_box = from_center_format(cb, scene.image_w, scene.image_h);
      const SceneObject* best = nullptr;
      double best_iou = 0.0;
      for (int id : candidates) {
        const SceneObject& o = scene.object_by_id(id);
        double v = iou(pixel_box, Box::of(o.answer));
        if (v > best_iou) {
          best_iou = v;
          best = &o;
        }
      }
      // Confident grounding snaps to the object; otherwise the box footprint
      // itself is segmented.
      if (best != nullptr && best_iou > 0.25) {
        parts.push_back(best->mask);
      } else {
        parts.push_back(rasterize(pixel_box, scene));
      }
    }
    merged = mask_or(parts);
  }

  if (noise_level_ > 0.0) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv1a(h, &scene.seed, sizeof(scene.seed));
    h = fnv1a(h, phrase.data(), phrase.size());
    for (const CenterBox& cb : boxes) h = fnv1a(h, &cb, sizeof(cb));
    Rng rng(h);
    for (int y = 0; y < merged.height(); ++y)
      for (int x = 0; x < merged.width(); ++x)
        if (rng.bernoulli(noise_level_)) merged.set(x, y, !merged.at(x, y));
  }
  return merged;
}

BinaryMask sam3_adapter_mask(const Scene& scene, const std::vector<ObjectAnswer>& answers,
                             std::string_view phrase, const MaskOracle& oracle) {
  std::vector<CenterBox> boxes;
  for (const ObjectAnswer& a : answers) {
    try {
      boxes.push_back(to_center_format(Box::of(a), scene.image_w, scene.image_h));
    } catch (const EngineError&) {
      // Invalid or out-of-bounds prediction: filtered out, per the API contract.
    }
  }
  return oracle.mask_from(scene, boxes, phrase);
}

}  // namespace segreward

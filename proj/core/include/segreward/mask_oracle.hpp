#pragma once

#include <string_view>
#include <vector>

#include "segreward/geometry.hpp"
#include "segreward/scene.hpp"
#include "segreward/structured.hpp"

namespace segreward {

/// Local stand-in for a text+box promptable segmentation API. Consumes
/// normalized center-format boxes plus a phrase; produces a grid-resolution
/// binary mask. With noise 0 and correct inputs it returns the exact union
/// of the referenced objects' ground-truth masks.
class MaskOracle {
 public:
  explicit MaskOracle(double noise_level = 0.0);

  /// Dual-prompt behavior: with no boxes, the phrase alone is grounded via
  /// resolve_phrase; otherwise each box is grounded independently (phrase
  /// narrowing the candidates) and the per-box masks are merged with a
  /// logical OR.
  BinaryMask mask_from(const Scene& scene, const std::vector<CenterBox>& boxes,
                       std::string_view phrase) const;

  double noise_level() const { return noise_level_; }

 private:
  double noise_level_ = 0.0;
};

/// Converts predicted pixel boxes to the oracle's center format, dropping
/// degenerate or out-of-bounds boxes, and queries the oracle with the given
/// phrase.
BinaryMask sam3_adapter_mask(const Scene& scene, const std::vector<ObjectAnswer>& answers,
                             std::string_view phrase, const MaskOracle& oracle);

}  // namespace segreward

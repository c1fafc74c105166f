#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "segreward/errors.hpp"
#include "segreward/structured.hpp"

namespace segreward {

/// Axis-aligned box over continuous pixel coordinates; valid iff x1 < x2 and
/// y1 < y2 (positive area).
struct Box {
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool valid() const { return x1 < x2 && y1 < y2; }

  static Box of(const ObjectAnswer& a) { return Box{a.x1, a.y1, a.x2, a.y2}; }

  friend bool operator==(const Box&, const Box&) = default;
};

/// Normalized center-based box [cx, cy, w, h], all fractions of the image.
struct CenterBox {
  double cx = 0.0, cy = 0.0, w = 0.0, h = 0.0;
  friend bool operator==(const CenterBox&, const CenterBox&) = default;
};

/// Continuous-area intersection over union; 0 for disjoint boxes.
double iou(const Box& a, const Box& b);

/// Sum of absolute differences over the four box coordinates.
double box_l1(const Box& a, const Box& b);

/// Mean of absolute differences over the four box coordinates.
double box_l1_mean(const Box& a, const Box& b);

/// Manhattan distance between two points.
double point_l1(double px, double py, double qx, double qy);

/// Converts a pixel box to the normalized center format. Throws
/// InvalidBoxError on a degenerate box and OutOfBoundsError when the box
/// exceeds [0, image_w] x [0, image_h].
CenterBox to_center_format(const Box& b, double image_w, double image_h);

/// Inverse of to_center_format.
Box from_center_format(const CenterBox& c, double image_w, double image_h);

/// Row-major boolean grid.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height) : width_(width), height_(height) {
    if (width <= 0 || height <= 0)
      throw DimensionMismatchError("BinaryMask: dimensions must be positive");
    bits_.assign(static_cast<std::size_t>(width) * height, 0);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return bits_.size(); }

  bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool v = true) { bits_[index(x, y)] = v ? 1 : 0; }

  std::size_t count() const;
  bool empty_mask() const { return count() == 0; }

  const std::vector<std::uint8_t>& bits() const { return bits_; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;  // one byte per pixel in memory
};

/// Elementwise OR; throws DimensionMismatchError on shape disagreement or an
/// empty input list.
BinaryMask mask_or(const std::vector<BinaryMask>& masks);

/// |a AND b| / |a OR b|; 1.0 when both masks are empty.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

std::pair<std::size_t, std::size_t> mask_intersection_union(const BinaryMask& a,
                                                            const BinaryMask& b);

struct SegMetrics {
  double giou = 0.0;  // mean of per-image I/U
  double ciou = 0.0;  // sum(I) / sum(U)
};

/// Per-image (intersection, union) pixel counts -> (gIoU, cIoU). A pair with
/// union 0 contributes IoU 1 to gIoU and nothing to either cIoU sum. Throws
/// EmptyInputError on an empty list.
SegMetrics seg_metrics(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& per_image);

// Mask wire format: little-endian uint32 width, uint32 height, then
// ceil(w*h/8) bytes of row-major bits, LSB first within each byte. The Base64
// form wraps the same bytes for JSON transport.
std::vector<std::uint8_t> serialize_mask(const BinaryMask& mask);
BinaryMask deserialize_mask(const std::vector<std::uint8_t>& bytes);
std::string mask_to_base64(const BinaryMask& mask);
BinaryMask mask_from_base64(const std::string& encoded);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& encoded);

}  // namespace segreward

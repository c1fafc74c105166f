#include "segreward/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace segreward {

double iou(const Box& a, const Box& b) {
  double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  double inter = ix * iy;
  if (inter <= 0.0) return 0.0;
  double uni = a.area() + b.area() - inter;
  return inter / uni;
}

double box_l1(const Box& a, const Box& b) {
  return std::abs(a.x1 - b.x1) + std::abs(a.y1 - b.y1) + std::abs(a.x2 - b.x2) +
         std::abs(a.y2 - b.y2);
}

double box_l1_mean(const Box& a, const Box& b) { return box_l1(a, b) / 4.0; }

double point_l1(double px, double py, double qx, double qy) {
  return std::abs(px - qx) + std::abs(py - qy);
}

CenterBox to_center_format(const Box& b, double image_w, double image_h) {
  if (!(image_w > 0.0) || !(image_h > 0.0))
    throw OutOfBoundsError("to_center_format: image dimensions must be positive");
  if (!b.valid()) throw InvalidBoxError("to_center_format: degenerate box");
  if (b.x1 < 0.0 || b.y1 < 0.0 || b.x2 > image_w || b.y2 > image_h)
    throw OutOfBoundsError("to_center_format: box exceeds image bounds");
  return CenterBox{(b.x1 + b.x2) / (2.0 * image_w), (b.y1 + b.y2) / (2.0 * image_h),
                   (b.x2 - b.x1) / image_w, (b.y2 - b.y1) / image_h};
}

Box from_center_format(const CenterBox& c, double image_w, double image_h) {
  double x1 = (c.cx - c.w / 2.0) * image_w;
  double y1 = (c.cy - c.h / 2.0) * image_h;
  return Box{x1, y1, x1 + c.w * image_w, y1 + c.h * image_h};
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(
      std::count_if(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; }));
}

BinaryMask mask_or(const std::vector<BinaryMask>& masks) {
  if (masks.empty()) throw DimensionMismatchError("mask_or: empty mask list");
  BinaryMask out = masks.front();
  for (std::size_t i = 1; i < masks.size(); ++i) {
    const BinaryMask& m = masks[i];
    if (m.width() != out.width() || m.height() != out.height())
      throw DimensionMismatchError("mask_or: mask dimensions disagree");
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x)
        if (m.at(x, y)) out.set(x, y, true);
  }
  return out;
}

std::pair<std::size_t, std::size_t> mask_intersection_union(const BinaryMask& a,
                                                            const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw DimensionMismatchError("mask_iou: mask dimensions disagree");
  std::size_t inter = 0, uni = 0;
  const auto& ab = a.bits();
  const auto& bb = b.bits();
  for (std::size_t i = 0; i < ab.size(); ++i) {
    bool va = ab[i] != 0, vb = bb[i] != 0;
    inter += (va && vb) ? 1 : 0;
    uni += (va || vb) ? 1 : 0;
  }
  return {inter, uni};
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  auto [inter, uni] = mask_intersection_union(a, b);
  if (uni == 0) return 1.0;  // both empty: correct "no target" prediction
  return static_cast<double>(inter) / static_cast<double>(uni);
}

SegMetrics seg_metrics(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& per_image) {
  if (per_image.empty()) throw EmptyInputError("seg_metrics: no images");
  double iou_sum = 0.0;
  std::uint64_t inter_sum = 0, union_sum = 0;
  for (auto [inter, uni] : per_image) {
    iou_sum += (uni == 0) ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    inter_sum += inter;
    union_sum += uni;
  }
  SegMetrics m;
  m.giou = iou_sum / static_cast<double>(per_image.size());
  m.ciou = (union_sum == 0) ? 1.0
                            : static_cast<double>(inter_sum) / static_cast<double>(union_sum);
  return m;
}

std::vector<std::uint8_t> serialize_mask(const BinaryMask& mask) {
  std::vector<std::uint8_t> out;
  auto push_u32 = [&out](std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
  };
  push_u32(static_cast<std::uint32_t>(mask.width()));
  push_u32(static_cast<std::uint32_t>(mask.height()));
  const auto& bits = mask.bits();
  out.resize(8 + (bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) out[8 + i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  return out;
}

BinaryMask deserialize_mask(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8) throw DimensionMismatchError("deserialize_mask: truncated header");
  auto read_u32 = [&bytes](std::size_t at) {
    return static_cast<std::uint32_t>(bytes[at]) |
           (static_cast<std::uint32_t>(bytes[at + 1]) << 8) |
           (static_cast<std::uint32_t>(bytes[at + 2]) << 16) |
           (static_cast<std::uint32_t>(bytes[at + 3]) << 24);
  };
  std::uint32_t w = read_u32(0), h = read_u32(4);
  if (w == 0 || h == 0 || w > 1u << 20 || h > 1u << 20)
    throw DimensionMismatchError("deserialize_mask: implausible dimensions");
  std::size_t pixels = static_cast<std::size_t>(w) * h;
  if (bytes.size() < 8 + (pixels + 7) / 8)
    throw DimensionMismatchError("deserialize_mask: truncated payload");
  BinaryMask mask(static_cast<int>(w), static_cast<int>(h));
  for (std::size_t i = 0; i < pixels; ++i) {
    bool v = (bytes[8 + i / 8] >> (i % 8)) & 1u;
    if (v) mask.set(static_cast<int>(i % w), static_cast<int>(i / w), true);
  }
  return mask;
}

namespace {
constexpr char kB64Alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}
}  // namespace

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out.push_back(kB64Alphabet[(n >> 18) & 63]);
    out.push_back(kB64Alphabet[(n >> 12) & 63]);
    out.push_back(kB64Alphabet[(n >> 6) & 63]);
    out.push_back(kB64Alphabet[n & 63]);
  }
  std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    std::uint32_t n = bytes[i] << 16;
    out.push_back(kB64Alphabet[(n >> 18) & 63]);
    out.push_back(kB64Alphabet[(n >> 12) & 63]);
    out += "==";
  } else if (rest == 2) {
    std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out.push_back(kB64Alphabet[(n >> 18) & 63]);
    out.push_back(kB64Alphabet[(n >> 12) & 63]);
    out.push_back(kB64Alphabet[(n >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& encoded) {
  std::vector<std::uint8_t> out;
  std::uint32_t buffer = 0;
  int bits = 0;
  for (char c : encoded) {
    if (c == '=' || c == '\n' || c == '\r') continue;
    int v = b64_value(c);
    if (v < 0) throw EngineError("base64_decode: invalid character");
    buffer = (buffer << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((buffer >> bits) & 0xff));
    }
  }
  return out;
}

std::string mask_to_base64(const BinaryMask& mask) { return base64_encode(serialize_mask(mask)); }

BinaryMask mask_from_base64(const std::string& encoded) {
  return deserialize_mask(base64_decode(encoded));
}

}  // namespace segreward

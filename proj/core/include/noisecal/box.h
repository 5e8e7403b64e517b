#ifndef NOISECAL_BOX_H_
#define NOISECAL_BOX_H_

#include <cstddef>
#include <optional>
#include <span>

namespace noisecal {

// Axis-aligned box in continuous image coordinates (pixels). Valid boxes have
// x1 < x2 and y1 < y2; area has no +1 pixel correction.
struct BoundingBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool valid() const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Throws UsageError unless the corners describe a valid box.
BoundingBox make_box(double x1, double y1, double x2, double y2);

// Intersection over union in [0, 1]; 0 for disjoint boxes.
double iou(const BoundingBox& a, const BoundingBox& b);

inline constexpr double kMatchIou = 0.5;

struct MatchResult {
  std::optional<std::size_t> index;  // set iff iou >= the match threshold
  double iou = 0.0;                  // best overlap seen, even without a match
};

/// Finds the previous-epoch box that coincides with box: the candidate with
/// the largest IoU, lowest index on ties, accepted only if IoU >= threshold.
MatchResult match_previous(const BoundingBox& box,
                           std::span<const BoundingBox> previous,
                           double threshold = kMatchIou);

}  // namespace noisecal

#endif  // NOISECAL_BOX_H_

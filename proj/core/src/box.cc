#include "noisecal/box.h"

#include <algorithm>
#include <cmath>

#include "noisecal/error.h"

namespace noisecal {

bool BoundingBox::valid() const {
  return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
         std::isfinite(y2) && x1 < x2 && y1 < y2;
}

BoundingBox make_box(double x1, double y1, double x2, double y2) {
  BoundingBox box{x1, y1, x2, y2};
  if (!box.valid()) throw UsageError("invalid bounding box");
  return box;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

MatchResult match_previous(const BoundingBox& box,
                           std::span<const BoundingBox> previous,
                           double threshold) {
  MatchResult result;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < previous.size(); ++i) {
    const double overlap = iou(box, previous[i]);
    if (!best || overlap > result.iou) {
      best = i;
      result.iou = overlap;
    }
  }
  if (best && result.iou >= threshold) result.index = best;
  return result;
}

}  // namespace noisecal

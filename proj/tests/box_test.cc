#include <gtest/gtest.h>

#include <vector>

#include "noisecal/box.h"
#include "noisecal/error.h"

namespace noisecal {
namespace {

TEST(BoxTest, IouOfHalfOverlappingBoxesIsOneThird) {
  const BoundingBox a = make_box(0, 0, 2, 1);
  const BoundingBox b = make_box(1, 0, 3, 1);
  EXPECT_DOUBLE_EQ(iou(a, b), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(iou(b, a), 1.0 / 3.0);
}

TEST(BoxTest, IouEdgeCases) {
  const BoundingBox a = make_box(0, 0, 4, 4);
  EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
  EXPECT_EQ(iou(a, make_box(4, 0, 6, 4)), 0.0);  // touching edge
  EXPECT_EQ(iou(a, make_box(10, 10, 11, 11)), 0.0);
  EXPECT_DOUBLE_EQ(iou(a, make_box(1, 1, 3, 3)), 4.0 / 16.0);
}

TEST(BoxTest, MakeBoxRejectsDegenerateCorners) {
  EXPECT_THROW(make_box(1, 0, 1, 2), UsageError);
  EXPECT_THROW(make_box(0, 3, 2, 1), UsageError);
  EXPECT_FALSE((BoundingBox{0, 0, 0, 0}.valid()));
}

TEST(MatchTest, PicksLargestOverlapAboveThreshold) {
  const BoundingBox box = make_box(0, 0, 10, 10);
  const std::vector<BoundingBox> prev = {make_box(5, 5, 15, 15), make_box(1, 0, 10, 10),
                                         make_box(0, 0, 10, 9)};
  const MatchResult m = match_previous(box, prev);
  ASSERT_TRUE(m.index.has_value());
  EXPECT_EQ(*m.index, 1u);  // 0.9, tied with index 2; lowest index wins
  EXPECT_DOUBLE_EQ(m.iou, 0.9);
}

TEST(MatchTest, ReportsBestOverlapWithoutMatch) {
  const BoundingBox box = make_box(0, 0, 2, 1);
  const std::vector<BoundingBox> prev = {make_box(1, 0, 3, 1)};
  const MatchResult m = match_previous(box, prev);
  EXPECT_FALSE(m.index.has_value());
  EXPECT_DOUBLE_EQ(m.iou, 1.0 / 3.0);
  EXPECT_TRUE(match_previous(box, prev, 0.3).index.has_value());
  EXPECT_FALSE(match_previous(box, {}).index.has_value());
}

TEST(MatchTest, ThresholdIsInclusive) {
  const BoundingBox box = make_box(0, 0, 3, 1);
  const std::vector<BoundingBox> prev = {make_box(1, 0, 4, 1)};  // IoU exactly 0.5
  EXPECT_DOUBLE_EQ(iou(box, prev[0]), 0.5);
  EXPECT_TRUE(match_previous(box, prev).index.has_value());
}

}  // namespace
}  // namespace noisecal

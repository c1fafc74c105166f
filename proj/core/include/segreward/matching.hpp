#pragma once

#include <vector>

#include "segreward/geometry.hpp"
#include "segreward/structured.hpp"

namespace segreward {

/// One-to-one assignment between ground-truth and predicted objects.
/// |pairs| = min(N, K); every index appears at most once; pairs and the
/// unmatched lists partition both index sets. Zero-IoU pairs are legal here;
/// thresholding is the reward layer's job.
struct Matching {
  std::vector<std::pair<int, int>> pairs;  // (gt_index, pred_index), gt ascending
  std::vector<int> unmatched_gt;
  std::vector<int> unmatched_pred;
  double total_iou = 0.0;
};

/// Optimal assignment maximizing total box IoU (Hungarian on a zero-padded
/// square cost matrix). Among equally optimal assignments, returns the
/// lexicographically smallest pair list, so results are deterministic and
/// comparable against brute_force_match pair-for-pair.
Matching match_objects(const std::vector<ObjectAnswer>& gt,
                       const std::vector<ObjectAnswer>& pred);

/// Exhaustive oracle over all injective assignments with the same
/// lexicographic tie-breaking. Throws TooLargeError when max(N, K) > 8.
Matching brute_force_match(const std::vector<ObjectAnswer>& gt,
                           const std::vector<ObjectAnswer>& pred);

/// Same entry points on a precomputed score matrix (rows = gt, cols = pred);
/// used by tests that construct synthetic IoU tables.
Matching match_matrix(const std::vector<std::vector<double>>& score);
Matching brute_force_matrix(const std::vector<std::vector<double>>& score);

}  // namespace segreward

#include "segreward/matching.hpp"

#include <algorithm>
#include <limits>

#include "segreward/errors.hpp"

namespace segreward {

namespace {

constexpr double kTieTolerance = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Assignment problem on an n x n cost matrix (minimization), classic
// potentials formulation, O(n^3). Returns row -> column.
std::vector<int> solve_square_min(const std::vector<std::vector<double>>& cost) {
  int n = static_cast<int>(cost.size());
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

// Max total score achievable on the given row/column subsets with the forced
// cardinality min(|rows|, |cols|); scores outside real entries pad as zero.
double best_total(const std::vector<std::vector<double>>& score, const std::vector<int>& rows,
                  const std::vector<int>& cols) {
  int n = static_cast<int>(std::max(rows.size(), cols.size()));
  if (n == 0) return 0.0;
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) cost[r][c] = -score[rows[r]][cols[c]];
  std::vector<int> assign = solve_square_min(cost);
  double total = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    int c = assign[r];
    if (c >= 0 && c < static_cast<int>(cols.size())) total += score[rows[r]][cols[c]];
  }
  return total;
}

Matching finalize(std::vector<std::pair<int, int>> pairs, int n_gt, int n_pred,
                  const std::vector<std::vector<double>>& score) {
  Matching m;
  m.pairs = std::move(pairs);
  std::vector<char> gt_used(n_gt, 0), pred_used(n_pred, 0);
  for (auto [g, p] : m.pairs) {
    gt_used[g] = 1;
    pred_used[p] = 1;
    m.total_iou += score[g][p];
  }
  for (int g = 0; g < n_gt; ++g)
    if (!gt_used[g]) m.unmatched_gt.push_back(g);
  for (int p = 0; p < n_pred; ++p)
    if (!pred_used[p]) m.unmatched_pred.push_back(p);
  return m;
}

}  // namespace

Matching match_matrix(const std::vector<std::vector<double>>& score) {
  int n_gt = static_cast<int>(score.size());
  int n_pred = n_gt == 0 ? 0 : static_cast<int>(score[0].size());
  if (n_gt == 0 || n_pred == 0)
    return finalize({}, n_gt, n_pred, score);

  std::vector<int> all_gt(n_gt), all_pred(n_pred);
  for (int i = 0; i < n_gt; ++i) all_gt[i] = i;
  for (int j = 0; j < n_pred; ++j) all_pred[j] = j;
  const double optimum = best_total(score, all_gt, all_pred);

  // Fix pairs greedily in (gt, pred) order, keeping only choices that still
  // admit an optimal completion; this lands on the lexicographically smallest
  // optimal pair list.
  std::vector<std::pair<int, int>> pairs;
  std::vector<int> remaining_pred = all_pred;
  int need = std::min(n_gt, n_pred);
  double fixed_total = 0.0;
  for (int g = 0; g < n_gt && static_cast<int>(pairs.size()) < need; ++g) {
    std::vector<int> later_gt;
    for (int h = g + 1; h < n_gt; ++h) later_gt.push_back(h);

    bool placed = false;
    for (std::size_t idx = 0; idx < remaining_pred.size() && !placed; ++idx) {
      int p = remaining_pred[idx];
      std::vector<int> rest_pred;
      for (int q : remaining_pred)
        if (q != p) rest_pred.push_back(q);
      double candidate =
          fixed_total + score[g][p] + best_total(score, later_gt, rest_pred);
      if (candidate >= optimum - kTieTolerance) {
        pairs.emplace_back(g, p);
        fixed_total += score[g][p];
        remaining_pred = std::move(rest_pred);
        placed = true;
      }
    }
    // Leaving g unmatched is only admissible when more gts than preds remain.
    if (!placed && static_cast<int>(later_gt.size()) <
                       need - static_cast<int>(pairs.size())) {
      throw EngineError("match_matrix: internal refinement failure");
    }
  }
  return finalize(std::move(pairs), n_gt, n_pred, score);
}

Matching brute_force_matrix(const std::vector<std::vector<double>>& score) {
  int n_gt = static_cast<int>(score.size());
  int n_pred = n_gt == 0 ? 0 : static_cast<int>(score[0].size());
  if (std::max(n_gt, n_pred) > 8)
    throw TooLargeError("brute_force_match: max(N, K) > 8");
  if (n_gt == 0 || n_pred == 0) return finalize({}, n_gt, n_pred, score);

  const int need = std::min(n_gt, n_pred);
  std::vector<std::pair<int, int>> best_pairs;
  double best_score = -kInf;
  bool have_best = false;

  std::vector<std::pair<int, int>> current;
  std::vector<char> pred_used(n_pred, 0);

  auto consider = [&](double total) {
    if (!have_best || total > best_score + kTieTolerance) {
      best_score = total;
      best_pairs = current;
      have_best = true;
    } else if (total >= best_score - kTieTolerance && current < best_pairs) {
      best_pairs = current;
      best_score = std::max(best_score, total);
    }
  };

  auto recurse = [&](auto&& self, int g, double total) -> void {
    if (static_cast<int>(current.size()) == need) {
      consider(total);
      return;
    }
    if (g == n_gt) return;
    int still_needed = need - static_cast<int>(current.size());
    // Skip g only if enough gts remain to reach the forced cardinality.
    if (n_gt - g - 1 >= still_needed) self(self, g + 1, total);
    for (int p = 0; p < n_pred; ++p) {
      if (pred_used[p]) continue;
      pred_used[p] = 1;
      current.emplace_back(g, p);
      self(self, g + 1, total + score[g][p]);
      current.pop_back();
      pred_used[p] = 0;
    }
  };
  recurse(recurse, 0, 0.0);
  return finalize(std::move(best_pairs), n_gt, n_pred, score);
}

namespace {
std::vector<std::vector<double>> iou_matrix(const std::vector<ObjectAnswer>& gt,
                                            const std::vector<ObjectAnswer>& pred) {
  std::vector<std::vector<double>> score(gt.size(), std::vector<double>(pred.size(), 0.0));
  for (std::size_t i = 0; i < gt.size(); ++i)
    for (std::size_t j = 0; j < pred.size(); ++j)
      score[i][j] = iou(Box::of(gt[i]), Box::of(pred[j]));
  return score;
}
}  // namespace

Matching match_objects(const std::vector<ObjectAnswer>& gt,
                       const std::vector<ObjectAnswer>& pred) {
  if (gt.empty() || pred.empty()) {
    std::vector<std::vector<double>> empty_score(gt.size(),
                                                 std::vector<double>(pred.size(), 0.0));
    return finalize({}, static_cast<int>(gt.size()), static_cast<int>(pred.size()),
                    empty_score);
  }
  return match_matrix(iou_matrix(gt, pred));
}

Matching brute_force_match(const std::vector<ObjectAnswer>& gt,
                           const std::vector<ObjectAnswer>& pred) {
  if (std::max(gt.size(), pred.size()) > 8)
    throw TooLargeError("brute_force_match: max(N, K) > 8");
  if (gt.empty() || pred.empty()) {
    std::vector<std::vector<double>> empty_score(gt.size(),
                                                 std::vector<double>(pred.size(), 0.0));
    return finalize({}, static_cast<int>(gt.size()), static_cast<int>(pred.size()),
                    empty_score);
  }
  return brute_force_matrix(iou_matrix(gt, pred));
}

}  // namespace segreward

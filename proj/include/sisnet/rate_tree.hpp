#pragma once

#include <cstddef>
#include <vector>

namespace sisnet {

/// Fenwick tree over non-negative weights supporting O(log n) update and
/// selection proportional to weight.
class RateTree {
 public:
  RateTree() = default;
  explicit RateTree(std::size_t n) : weight_(n, 0.0), tree_(n + 1, 0.0) {
    top_ = 1;
    while (top_ * 2 <= n) top_ *= 2;
  }

  std::size_t size() const { return weight_.size(); }
  double weight(std::size_t i) const { return weight_[i]; }
  double total() const { return total_; }

  void set(std::size_t i, double w) {
    const double delta = w - weight_[i];
    if (delta == 0.0) return;
    weight_[i] = w;
    total_ += delta;
    for (std::size_t k = i + 1; k < tree_.size(); k += k & (~k + 1)) tree_[k] += delta;
  }

  /// Index i with prefix(i) <= target < prefix(i+1); target in [0, total).
  /// May return an index of zero weight only through rounding; callers
  /// check and redraw.
  std::size_t select(double target) const {
    std::size_t pos = 0;
    for (std::size_t step = top_; step > 0; step >>= 1) {
      const std::size_t next = pos + step;
      if (next < tree_.size() && tree_[next] <= target) {
        pos = next;
        target -= tree_[next];
      }
    }
    return pos < weight_.size() ? pos : weight_.size() - 1;
  }

  /// Recomputes the tree and the total from the stored weights.
  void rebuild() {
    std::fill(tree_.begin(), tree_.end(), 0.0);
    total_ = 0.0;
    for (std::size_t i = 0; i < weight_.size(); ++i) {
      total_ += weight_[i];
      tree_[i + 1] += weight_[i];
      const std::size_t parent = (i + 1) + ((i + 1) & (~(i + 1) + 1));
      if (parent < tree_.size()) tree_[parent] += tree_[i + 1];
    }
  }

  /// Exact sum of the stored weights.
  double exact_total() const {
    double s = 0.0;
    for (double w : weight_) s += w;
    return s;
  }

 private:
  std::vector<double> weight_;
  std::vector<double> tree_;
  std::size_t top_ = 0;
  double total_ = 0.0;
};

}  // namespace sisnet

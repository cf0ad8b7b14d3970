// Hash-grid point lookup with an absolute tolerance, plus an accumulator that
// merges masses of points closer than that tolerance.
#pragma once

#include "fqc/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace fqc::detail {

class PointIndex {
 public:
  /// `cell` must be at least as large as any tolerance later passed to find().
  PointIndex(int dim, double cell) : dim_(dim), cell_(cell) {
    check_supported_dim(dim, "PointIndex");
    if (!(cell > 0.0) || !std::isfinite(cell)) {
      throw PreconditionError("PointIndex: cell size must be positive and finite");
    }
  }

  int dim() const { return dim_; }
  double cell() const { return cell_; }
  std::size_t size() const { return points_.size(); }
  const Vec& point(std::size_t i) const { return points_[i]; }

  /// Sizes the cell table for about n points.
  void reserve(std::size_t n) {
    heads_.reserve(n);
    points_.reserve(n);
    next_.reserve(n);
  }

  std::size_t insert(const Vec& p) {
    const std::size_t id = points_.size();
    points_.push_back(p);
    std::size_t& head = heads_.slot(key_of(p));
    next_.push_back(head);
    head = id;
    return id;
  }

  /// Index of the earliest inserted point within `tol` of `p`, or npos.
  std::size_t find(const Vec& p, double tol) const {
    std::size_t best = npos;
    const double tol2 = tol * tol;
    visit_cells(p, tol, [&](std::size_t id) {
      if (id < best && (points_[id] - p).squaredNorm() <= tol2) best = id;
    });
    return best;
  }

  /// Calls fn(id) for every point with |q - p| <= radius, in no fixed order.
  template <class F>
  void for_each_within(const Vec& p, double radius, F&& fn) const {
    const double r2 = radius * radius;
    visit_cells(p, radius, [&](std::size_t id) {
      if ((points_[id] - p).squaredNorm() <= r2) fn(id);
    });
  }

  /// All point ids with |q - p| <= radius, ascending.
  std::vector<std::size_t> within(const Vec& p, double radius) const {
    std::vector<std::size_t> out;
    for_each_within(p, radius, [&](std::size_t id) { out.push_back(id); });
    std::sort(out.begin(), out.end());
    return out;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  using Key = std::array<std::int64_t, kMaxDim>;

  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      std::uint64_t h = 1469598103934665603ull;
      for (auto v : k) {
        h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      }
      return static_cast<std::size_t>(h);
    }
  };

  /// Open-addressing map from cell key to the newest point id in that cell.
  /// A head of npos marks an empty slot, so callers of slot() must store a
  /// real id before the next lookup.
  class CellTable {
   public:
    void reserve(std::size_t n) {
      std::size_t cap = 16;
      while (cap < 2 * n + 2) cap *= 2;
      if (cap > keys_.size()) rehash(cap);
    }

    std::size_t get(const Key& k) const {
      if (keys_.empty()) return npos;
      for (std::size_t i = KeyHash{}(k) & mask_;; i = (i + 1) & mask_) {
        if (heads_[i] == npos) return npos;
        if (keys_[i] == k) return heads_[i];
      }
    }

    /// Reference to the head for k, inserted as npos when absent.
    std::size_t& slot(const Key& k) {
      if (2 * (used_ + 1) > keys_.size()) grow();
      for (std::size_t i = KeyHash{}(k) & mask_;; i = (i + 1) & mask_) {
        if (heads_[i] == npos) {
          keys_[i] = k;
          ++used_;
          return heads_[i];
        }
        if (keys_[i] == k) return heads_[i];
      }
    }

   private:
    void grow() { rehash(std::max<std::size_t>(16, 2 * keys_.size())); }

    void rehash(std::size_t cap) {
      std::vector<Key> old_keys = std::move(keys_);
      std::vector<std::size_t> old_heads = std::move(heads_);
      keys_.assign(cap, Key{});
      heads_.assign(cap, npos);
      mask_ = cap - 1;
      used_ = 0;
      for (std::size_t i = 0; i < old_keys.size(); ++i) {
        if (old_heads[i] != npos) slot(old_keys[i]) = old_heads[i];
      }
    }

    std::vector<Key> keys_;
    std::vector<std::size_t> heads_;
    std::size_t mask_ = 0;
    std::size_t used_ = 0;
  };

  Key key_of(const Vec& p) const {
    Key k{0, 0, 0};
    for (int i = 0; i < dim_; ++i) {
      k[i] = static_cast<std::int64_t>(std::floor(p[i] / cell_));
    }
    return k;
  }

  /// Calls f(id) for the points of every cell meeting the box of half width r
  /// about p.
  template <class F>
  void visit_cells(const Vec& p, double r, F&& f) const {
    Key lo{0, 0, 0};
    Key hi{0, 0, 0};
    for (int i = 0; i < dim_; ++i) {
      lo[i] = static_cast<std::int64_t>(std::floor((p[i] - r) / cell_));
      hi[i] = static_cast<std::int64_t>(std::floor((p[i] + r) / cell_));
    }
    Key k = lo;
    while (true) {
      for (std::size_t id = heads_.get(k); id != npos; id = next_[id]) f(id);
      int axis = 0;
      while (axis < dim_ && ++k[axis] > hi[axis]) {
        k[axis] = lo[axis];
        ++axis;
      }
      if (axis == dim_) break;
    }
  }

  int dim_;
  double cell_;
  std::vector<Vec> points_;
  CellTable heads_;
  std::vector<std::size_t> next_;
};

/// Sums complex masses attached to points, identifying points within `tol`.
/// The first inserted point of a cluster is its representative.
class PointAccumulator {
 public:
  PointAccumulator(int dim, double tol, std::size_t expected = 0)
      : tol_(tol), index_(dim, tol > 0.0 ? tol * (tol < 1e-6 ? 64.0 : 4.0) : 1e-12) {
    index_.reserve(expected);
    masses_.reserve(expected);
  }

  void add(const Vec& p, Complex mass) {
    const std::size_t id = index_.find(p, tol_);
    if (id != PointIndex::npos) {
      masses_[id] += mass;
    } else {
      index_.insert(p);
      masses_.push_back(mass);
    }
  }

  std::size_t size() const { return masses_.size(); }
  const Vec& point(std::size_t i) const { return index_.point(i); }
  Complex mass(std::size_t i) const { return masses_[i]; }

 private:
  double tol_;
  PointIndex index_;
  std::vector<Complex> masses_;
};

}  // namespace fqc::detail

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lfpp {

/// Cubic box of lattice sites {0, ..., side-1}^dim with physical spacing.
/// Sites are stored row-major with axis 0 most significant, so the linear
/// index order coincides with lexicographic order of coordinates.
class Lattice {
 public:
  Lattice() = default;
  Lattice(int dim, int side, double spacing);

  /// The grid covering [0,1]^d at spacing 2^-k.
  static Lattice dyadic(int dim, int scale_index);

  int dim() const noexcept { return dim_; }
  int side() const noexcept { return side_; }
  double spacing() const noexcept { return spacing_; }
  std::size_t size() const noexcept { return size_; }
  std::size_t stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }

  std::size_t index(std::span<const int> coords) const;
  std::vector<int> coords(std::size_t index) const;
  int coord(std::size_t index, int axis) const {
    return static_cast<int>((index / strides_[static_cast<std::size_t>(axis)]) %
                            static_cast<std::size_t>(side_));
  }
  bool contains(std::span<const int> coords) const;

  /// True when the two sites differ by one step along exactly one axis.
  bool adjacent(std::size_t a, std::size_t b) const;

  friend bool operator==(const Lattice& a, const Lattice& b) {
    return a.dim_ == b.dim_ && a.side_ == b.side_ && a.spacing_ == b.spacing_;
  }

 private:
  int dim_ = 0;
  int side_ = 0;
  double spacing_ = 0.0;
  std::size_t size_ = 0;
  std::vector<std::size_t> strides_;
};

}  // namespace lfpp

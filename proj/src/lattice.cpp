#include "lfpp/lattice.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "lfpp/error.hpp"

namespace lfpp {

Lattice::Lattice(int dim, int side, double spacing) : dim_(dim), side_(side), spacing_(spacing) {
  require(dim >= 1, ErrorKind::domain, "lattice dimension must be >= 1");
  require(side >= 1, ErrorKind::domain, "lattice side must be >= 1");
  require(spacing > 0.0, ErrorKind::domain, "lattice spacing must be positive");
  strides_.assign(static_cast<std::size_t>(dim), 1);
  for (int axis = dim - 2; axis >= 0; --axis) {
    strides_[static_cast<std::size_t>(axis)] =
        strides_[static_cast<std::size_t>(axis + 1)] * static_cast<std::size_t>(side);
  }
  size_ = strides_[0] * static_cast<std::size_t>(side);
}

Lattice Lattice::dyadic(int dim, int scale_index) {
  require(scale_index >= 0 && scale_index < 31, ErrorKind::domain,
          "scale index out of range: " + std::to_string(scale_index));
  return Lattice(dim, (1 << scale_index) + 1, std::ldexp(1.0, -scale_index));
}

std::size_t Lattice::index(std::span<const int> coords) const {
  require(static_cast<int>(coords.size()) == dim_, ErrorKind::domain, "coordinate rank mismatch");
  std::size_t idx = 0;
  for (int axis = 0; axis < dim_; ++axis) {
    const int c = coords[static_cast<std::size_t>(axis)];
    require(c >= 0 && c < side_, ErrorKind::domain, "coordinate outside lattice");
    idx += static_cast<std::size_t>(c) * strides_[static_cast<std::size_t>(axis)];
  }
  return idx;
}

std::vector<int> Lattice::coords(std::size_t index) const {
  std::vector<int> out(static_cast<std::size_t>(dim_));
  for (int axis = 0; axis < dim_; ++axis) out[static_cast<std::size_t>(axis)] = coord(index, axis);
  return out;
}

bool Lattice::contains(std::span<const int> coords) const {
  if (static_cast<int>(coords.size()) != dim_) return false;
  for (int c : coords) {
    if (c < 0 || c >= side_) return false;
  }
  return true;
}

bool Lattice::adjacent(std::size_t a, std::size_t b) const {
  if (a >= size_ || b >= size_) return false;
  int moved = 0;
  for (int axis = 0; axis < dim_; ++axis) {
    const int diff = std::abs(coord(a, axis) - coord(b, axis));
    if (diff > 1) return false;
    moved += diff;
  }
  return moved == 1;
}

}  // namespace lfpp

#include "spingas/geometry.hpp"

#include <cstdlib>

namespace spingas {

namespace {

int wrap_coordinate(int value, int extent) {
  const int r = value % extent;
  return r < 0 ? r + extent : r;
}

int periodic_separation(int a, int b, int extent) {
  const int d = std::abs(a - b) % extent;
  return d < extent - d ? d : extent - d;
}

}  // namespace

Site LatticeDims::wrap(Site s) const {
  return {wrap_coordinate(s.x, width), wrap_coordinate(s.y, height)};
}

int lattice_distance(Site a, Site b, LatticeDims dims) {
  return periodic_separation(a.x, b.x, dims.width) +
         periodic_separation(a.y, b.y, dims.height);
}

int lattice_diameter(LatticeDims dims) { return dims.width / 2 + dims.height / 2; }

}  // namespace spingas

#pragma once

namespace spingas {

struct Site {
  int x = 0;
  int y = 0;

  friend bool operator==(const Site&, const Site&) = default;
};

/// Periodic rectangular lattice, `width` sites along x and `height` along y.
struct LatticeDims {
  int width = 0;
  int height = 0;

  int site_count() const { return width * height; }
  int index(Site s) const { return s.y * width + s.x; }
  Site site(int index) const { return {index % width, index / width}; }
  Site wrap(Site s) const;
};

/// Manhattan distance with periodic wrap-around on both axes.
int lattice_distance(Site a, Site b, LatticeDims dims);

/// Largest possible lattice_distance on `dims`.
int lattice_diameter(LatticeDims dims);

}  // namespace spingas

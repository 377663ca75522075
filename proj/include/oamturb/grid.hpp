#pragma once

namespace oamturb {

/// Square sampling grid shared by fields and phase screens.
///
/// Samples sit at pixel centers. The optical axis lies between the four
/// central pixels, so no sample lands on r = 0 where the azimuth is undefined.
/// Lengths are in meters.
struct GridSpec {
  int resolution = 512;
  double physical_width = 2.0;
  double aperture_radius = 0.5;

  /// Throws std::invalid_argument unless resolution is a power of two >= 64
  /// and the aperture fits inside the grid.
  void validate() const;

  double pixel_size() const { return physical_width / resolution; }
  double pixel_area() const { return pixel_size() * pixel_size(); }
  double aperture_diameter() const { return 2.0 * aperture_radius; }

  /// Physical coordinate of sample index i along either axis.
  double coordinate(int i) const { return (i + 0.5 - 0.5 * resolution) * pixel_size(); }

  bool operator==(const GridSpec&) const = default;
};

} // namespace oamturb

#include "oamturb/grid.hpp"

#include <bit>
#include <stdexcept>
#include <string>

namespace oamturb {

void GridSpec::validate() const {
  if (resolution < 64 || !std::has_single_bit(static_cast<unsigned>(resolution)))
    throw std::invalid_argument("grid resolution must be a power of two >= 64, got " + std::to_string(resolution));
  if (!(physical_width > 0.0)) throw std::invalid_argument("grid physical_width must be positive");
  if (!(aperture_radius > 0.0) || 2.0 * aperture_radius > physical_width)
    throw std::invalid_argument("aperture must satisfy 0 < 2R <= physical_width");
}

} // namespace oamturb

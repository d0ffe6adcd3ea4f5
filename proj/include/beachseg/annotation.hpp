#pragma once

#include <cstdint>
#include <string>

#include "beachseg/geometry.hpp"

namespace beachseg {

/// A labeled polygon in source-image coordinates.
struct AnnotatedRegion {
  std::uint64_t region_id = 0;
  std::string image_ref;
  std::string class_label;
  Polygon polygon;

  friend bool operator==(const AnnotatedRegion&, const AnnotatedRegion&) = default;
};

}  // namespace beachseg

#pragma once

#include "cgfd/fiducial.hpp"
#include "cgfd/geometry.hpp"

#include <memory>

namespace cgfd {

/// A fiducial model paired with the level set its parameter lives on.
struct ConstrainedModel {
  std::shared_ptr<const FiducialModel> model;
  std::shared_ptr<const ImplicitManifold> manifold;
};

}  // namespace cgfd

#pragma once

#include <stdexcept>
#include <string>

namespace boxmap {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define BOXMAP_DEFINE_ERROR(Name)          \
  class Name : public Error {              \
   public:                                 \
    explicit Name(const std::string& what) \
        : Error(#Name ": " + what) {}      \
  }

// gridworld
BOXMAP_DEFINE_ERROR(PoseInObstacle);
BOXMAP_DEFINE_ERROR(PoseOutOfBounds);
BOXMAP_DEFINE_ERROR(NoWalls);
BOXMAP_DEFINE_ERROR(GeometryMismatch);
BOXMAP_DEFINE_ERROR(MalformedHeader);
BOXMAP_DEFINE_ERROR(UnknownEncoding);
// boxcalc
BOXMAP_DEFINE_ERROR(InvalidBoxSet);
// predictor
BOXMAP_DEFINE_ERROR(MissingAnnotations);
BOXMAP_DEFINE_ERROR(Diverged);
// topograph / explore
BOXMAP_DEFINE_ERROR(RobotOutsideGraph);
BOXMAP_DEFINE_ERROR(TooManyRooms);
BOXMAP_DEFINE_ERROR(NoPath);
// floorgen
BOXMAP_DEFINE_ERROR(GenerationFailed);

#undef BOXMAP_DEFINE_ERROR

}  // namespace boxmap

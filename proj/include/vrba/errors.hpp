#pragma once

#include <stdexcept>
#include <string>

namespace vrba {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define VRBA_DEFINE_ERROR(Name)          \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  };

VRBA_DEFINE_ERROR(NonFiniteError)
VRBA_DEFINE_ERROR(UnsupportedOrderError)
VRBA_DEFINE_ERROR(ShapeError)
VRBA_DEFINE_ERROR(DegenerateResiduals)
VRBA_DEFINE_ERROR(QuadratureError)
VRBA_DEFINE_ERROR(KernelError)
VRBA_DEFINE_ERROR(PartitionError)
VRBA_DEFINE_ERROR(DegenerateReference)
VRBA_DEFINE_ERROR(NuSearchError)
VRBA_DEFINE_ERROR(DomainError)
VRBA_DEFINE_ERROR(ConfigError)
VRBA_DEFINE_ERROR(RangeError)
VRBA_DEFINE_ERROR(TrainingAborted)

#undef VRBA_DEFINE_ERROR

}  // namespace vrba

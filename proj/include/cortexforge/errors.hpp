#pragma once

#include <stdexcept>
#include <string>

namespace cortexforge {

/// Base of every error raised by the library. `category()` names the failure
/// class so front ends can map it onto exit codes without RTTI chains.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* category() const noexcept { return "error"; }
};

#define CORTEXFORGE_DEFINE_ERROR(Name, tag)                      \
  class Name : public Error {                                    \
   public:                                                       \
    explicit Name(const std::string& what) : Error(what) {}      \
    const char* category() const noexcept override { return tag; } \
  };

CORTEXFORGE_DEFINE_ERROR(FormatError, "format")
CORTEXFORGE_DEFINE_ERROR(UnsupportedError, "unsupported")
CORTEXFORGE_DEFINE_ERROR(DimensionalityError, "dimensionality")
CORTEXFORGE_DEFINE_ERROR(IoError, "io")
CORTEXFORGE_DEFINE_ERROR(GeometryError, "geometry")
CORTEXFORGE_DEFINE_ERROR(KindError, "kind")
CORTEXFORGE_DEFINE_ERROR(EmptySurfaceError, "empty-surface")
CORTEXFORGE_DEFINE_ERROR(DegenerateVertexError, "degenerate-vertex")
CORTEXFORGE_DEFINE_ERROR(PreconditionError, "precondition")
CORTEXFORGE_DEFINE_ERROR(TopologyError, "topology")
CORTEXFORGE_DEFINE_ERROR(ConfigurationError, "configuration")
CORTEXFORGE_DEFINE_ERROR(ContractError, "contract")

#undef CORTEXFORGE_DEFINE_ERROR

}  // namespace cortexforge

#pragma once

#include <stdexcept>
#include <string>

namespace wiggle {

/// Base class for every error raised by the library. `category()` is a
/// stable machine-readable tag that the CLI reports alongside its exit code.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* category() const noexcept { return "Error"; }
};

#define WIGGLE_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(what) {}        \
    const char* category() const noexcept override { return #Name; } \
  };

WIGGLE_DEFINE_ERROR(InvalidSpec)
WIGGLE_DEFINE_ERROR(ConfigError)
WIGGLE_DEFINE_ERROR(IoError)
WIGGLE_DEFINE_ERROR(NotConfined)
WIGGLE_DEFINE_ERROR(DegenerateGrid)
WIGGLE_DEFINE_ERROR(GridTooCoarse)
WIGGLE_DEFINE_ERROR(InvalidTable)
WIGGLE_DEFINE_ERROR(ExtentTooSmall)
WIGGLE_DEFINE_ERROR(NoTransitionFound)
WIGGLE_DEFINE_ERROR(NonConvergence)
WIGGLE_DEFINE_ERROR(IllConditioned)

#undef WIGGLE_DEFINE_ERROR

}  // namespace wiggle

#pragma once

#include <stdexcept>
#include <string>

namespace mvc3d {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents disagree with what an operation requires.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A viewing ray is (numerically) parallel to the requested height plane.
class DegenerateRayError : public Error {
 public:
  using Error::Error;
};

class MissingAnnotationError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration values (weights, voxel specs, generator ranges...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input files: scene JSON, T3DC payloads, checkpoints.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values detected during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace mvc3d

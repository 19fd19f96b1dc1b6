#pragma once

#include <stdexcept>
#include <string>

namespace hopqa {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input file does not match the expected schema.
struct ParseError : Error {
  using Error::Error;
};

// Well-formed input that breaks a data invariant.
struct ValidationError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

// Attempt to update the parameters of a frozen model.
struct FrozenModelError : Error {
  using Error::Error;
};

// A pipeline stage was run before the artifact it consumes exists.
struct MissingArtifactError : Error {
  explicit MissingArtifactError(const std::string& path)
      : Error("missing input artifact: " + path), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace hopqa

#pragma once

#include <stdexcept>
#include <string>

namespace windmil {

// Every failure raised by the library derives from Error. The category
// decides the CLI exit code (see exit_code()).
class Error : public std::runtime_error {
 public:
  enum class Category { kConfig, kData, kNumeric };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

// Invalid arguments or configuration: domain violations, bad splits, etc.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(Category::kConfig, what) {}
};

class DomainError : public ConfigError {
 public:
  explicit DomainError(const std::string& what) : ConfigError("domain error: " + what) {}
};

class ShapeError : public ConfigError {
 public:
  explicit ShapeError(const std::string& what) : ConfigError("shape error: " + what) {}
};

class ConfigMismatchError : public ConfigError {
 public:
  explicit ConfigMismatchError(const std::string& what)
      : ConfigError("config mismatch: " + what) {}
};

// Bad input data: broken meshes, files that fail to parse, missing cases.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(Category::kData, what) {}
};

class GeometryError : public DataError {
 public:
  explicit GeometryError(const std::string& what) : DataError("geometry error: " + what) {}
};

class BoundsError : public DataError {
 public:
  explicit BoundsError(const std::string& what) : DataError("bounds error: " + what) {}
};

class FormatError : public DataError {
 public:
  explicit FormatError(const std::string& what) : DataError("format error: " + what) {}
};

class IoError : public DataError {
 public:
  explicit IoError(const std::string& what) : DataError("i/o error: " + what) {}
};

// Non-finite values, empty surfaces, divergence during training.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(Category::kNumeric, what) {}
};

class DegenerateFieldError : public NumericError {
 public:
  explicit DegenerateFieldError(const std::string& what)
      : NumericError("degenerate field: " + what) {}
};

class EmptySurfaceError : public NumericError {
 public:
  explicit EmptySurfaceError(const std::string& what)
      : NumericError("empty surface: " + what) {}
};

class TrainingError : public NumericError {
 public:
  TrainingError(const std::string& what, int epoch)
      : NumericError("training error at epoch " + std::to_string(epoch) + ": " + what),
        epoch_(epoch) {}

  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

inline int exit_code(const Error& e) {
  switch (e.category()) {
    case Error::Category::kConfig:
      return 2;
    case Error::Category::kData:
      return 3;
    case Error::Category::kNumeric:
      return 4;
  }
  return 1;
}

}  // namespace windmil

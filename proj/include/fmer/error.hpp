#pragma once

#include <stdexcept>
#include <string>

namespace fmer {

/// Base of every error the library raises. `category()` is a stable,
/// machine-parseable token (e.g. "ParseError") used by the CLI on failure.
class Error : public std::runtime_error {
public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

private:
  std::string category_;
};

#define FMER_DEFINE_ERROR(Name)                                               \
  class Name : public Error {                                                 \
  public:                                                                     \
    explicit Name(const std::string& message) : Error(#Name, message) {}      \
  }

FMER_DEFINE_ERROR(ParseError);
FMER_DEFINE_ERROR(ValidationError);
FMER_DEFINE_ERROR(DimensionMismatch);
FMER_DEFINE_ERROR(OutOfBounds);
FMER_DEFINE_ERROR(DegenerateRoi);
FMER_DEFINE_ERROR(TooSmall);
FMER_DEFINE_ERROR(ClassTooSmall);
FMER_DEFINE_ERROR(DegenerateData);
FMER_DEFINE_ERROR(EmptyInput);
FMER_DEFINE_ERROR(IoError);
FMER_DEFINE_ERROR(UsageError);

#undef FMER_DEFINE_ERROR

class MissingFrame : public Error {
public:
  MissingFrame(long index, const std::string& path)
      : Error("MissingFrame",
              "frame " + std::to_string(index) + " not found at " + path),
        index_(index) {}

  long index() const noexcept { return index_; }

private:
  long index_;
};

}  // namespace fmer

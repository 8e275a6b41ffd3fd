#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace keywatch {

// Root of every error the library throws. The category drives the CLI exit
// code; the message is for humans.
class Error : public std::runtime_error {
 public:
  enum class Category { usage, io, format };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(Category::usage, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(Category::io, what) {}
};

/// Malformed line in one of the text formats (event script, key file,
/// signatures, rules, allowlist). `line` is 1-based; 0 means "whole document".
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(Category::format, "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class KeyError : public Error {
 public:
  explicit KeyError(const std::string& what) : Error(Category::format, what) {}
};

class DimensionError : public KeyError {
 public:
  using KeyError::KeyError;
};

class ArithmeticError : public Error {
 public:
  explicit ArithmeticError(const std::string& what) : Error(Category::format, what) {}
};

/// Letters-mode input outside A-Z/a-z.
class CodecError : public Error {
 public:
  CodecError(std::size_t offset, const std::string& what)
      : Error(Category::format, what), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class DecryptError : public Error {
 public:
  explicit DecryptError(const std::string& what) : Error(Category::format, what) {}
};

class FrameError : public Error {
 public:
  enum class Kind { format, version, truncation, too_large };

  FrameError(Kind kind, const std::string& what) : Error(Category::format, what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Decrypted log content does not parse as an event script (usually a wrong key).
class ContentError : public Error {
 public:
  explicit ContentError(const std::string& what) : Error(Category::format, what) {}
};

/// Could not reach or talk to the server at all.
class TransportError : public Error {
 public:
  explicit TransportError(const std::string& what) : Error(Category::format, what) {}
};

/// Server refused a frame or stopped answering. `acked` frames were delivered.
class DeliveryError : public Error {
 public:
  DeliveryError(std::size_t acked, const std::string& what)
      : Error(Category::format, what + " (" + std::to_string(acked) + " frame(s) acked)"),
        acked_(acked) {}

  std::size_t acked() const noexcept { return acked_; }

 private:
  std::size_t acked_;
};

}  // namespace keywatch

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace coinf {

// Base for everything this library throws on bad input or bad data.
// `kind()` is a stable machine-readable tag, reused by the CLI error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(msg), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, size_t byte_pos = 0)
      : Error("parse", msg), byte_pos_(byte_pos) {}
  size_t byte_pos() const { return byte_pos_; }

 private:
  size_t byte_pos_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg, std::string kind = "validation")
      : Error(std::move(kind), msg) {}
};

class CycleError : public ValidationError {
 public:
  explicit CycleError(const std::string& msg) : ValidationError(msg, "cycle") {}
};

class DanglingEdgeError : public ValidationError {
 public:
  explicit DanglingEdgeError(const std::string& msg) : ValidationError(msg, "dangling_edge") {}
};

class DuplicateIdError : public ValidationError {
 public:
  explicit DuplicateIdError(const std::string& msg) : ValidationError(msg, "duplicate_id") {}
};

class MissingEndpointError : public ValidationError {
 public:
  explicit MissingEndpointError(const std::string& msg)
      : ValidationError(msg, "missing_endpoint") {}
};

class UnmodeledLayerError : public Error {
 public:
  explicit UnmodeledLayerError(const std::string& msg) : Error("unmodeled_layer", msg) {}
};

class UnknownKeyError : public Error {
 public:
  explicit UnknownKeyError(const std::string& msg) : Error("unknown_key", msg) {}
};

class InsufficientSamplesError : public Error {
 public:
  InsufficientSamplesError(const std::string& layer_key, size_t got, size_t need)
      : Error("insufficient_samples",
              "layer key '" + layer_key + "' has " + std::to_string(got) +
                  " samples, needs at least " + std::to_string(need)),
        layer_key_(layer_key) {}
  const std::string& layer_key() const { return layer_key_; }

 private:
  std::string layer_key_;
};

class DegenerateDesignError : public Error {
 public:
  explicit DegenerateDesignError(const std::string& layer_key)
      : Error("degenerate_design",
              "singular design matrix for layer key '" + layer_key + "'"),
        layer_key_(layer_key) {}
  const std::string& layer_key() const { return layer_key_; }

 private:
  std::string layer_key_;
};

class CutExplosionError : public Error {
 public:
  CutExplosionError(uint64_t limit)
      : Error("cut_explosion",
              "cut enumeration exceeded limit of " + std::to_string(limit) + " candidates"),
        limit_(limit) {}
  uint64_t limit() const { return limit_; }

 private:
  uint64_t limit_;
};

}  // namespace coinf

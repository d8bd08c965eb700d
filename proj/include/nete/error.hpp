#pragma once

#include <stdexcept>
#include <string>

namespace nete {

enum class ErrorKind {
  domain,
  index,
  insufficient_sample,
  infinite_moment,
  degenerate_treatment,
  degenerate_regressor,
  insufficient_data,
  empty_tail,
  degenerate_column,
  io,
  parse,
  schema,
};

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::index: return "index";
    case ErrorKind::insufficient_sample: return "insufficient_sample";
    case ErrorKind::infinite_moment: return "infinite_moment";
    case ErrorKind::degenerate_treatment: return "degenerate_treatment";
    case ErrorKind::degenerate_regressor: return "degenerate_regressor";
    case ErrorKind::insufficient_data: return "insufficient_data";
    case ErrorKind::empty_tail: return "empty_tail";
    case ErrorKind::degenerate_column: return "degenerate_column";
    case ErrorKind::io: return "io";
    case ErrorKind::parse: return "parse";
    case ErrorKind::schema: return "schema";
  }
  return "unknown";
}

/// Base of every exception thrown by the library. The kind lets callers
/// (the benchmark harness in particular) classify failures without RTTI.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Numerical failures that a Monte Carlo repetition may legitimately hit.
  bool is_estimation_failure() const noexcept {
    return kind_ == ErrorKind::empty_tail ||
           kind_ == ErrorKind::infinite_moment ||
           kind_ == ErrorKind::insufficient_sample ||
           kind_ == ErrorKind::degenerate_treatment ||
           kind_ == ErrorKind::degenerate_regressor ||
           kind_ == ErrorKind::insufficient_data;
  }

 private:
  ErrorKind kind_;
};

#define NETE_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

NETE_DEFINE_ERROR(DomainError, domain)
NETE_DEFINE_ERROR(IndexError, index)
NETE_DEFINE_ERROR(InsufficientSampleError, insufficient_sample)
NETE_DEFINE_ERROR(InfiniteMomentError, infinite_moment)
NETE_DEFINE_ERROR(DegenerateTreatmentError, degenerate_treatment)
NETE_DEFINE_ERROR(DegenerateRegressorError, degenerate_regressor)
NETE_DEFINE_ERROR(InsufficientDataError, insufficient_data)
NETE_DEFINE_ERROR(EmptyTailError, empty_tail)
NETE_DEFINE_ERROR(DegenerateColumnError, degenerate_column)
NETE_DEFINE_ERROR(IoError, io)
NETE_DEFINE_ERROR(ParseError, parse)
NETE_DEFINE_ERROR(SchemaError, schema)

#undef NETE_DEFINE_ERROR

}  // namespace nete

#include "hmp/errors.hpp"

namespace hmp {

BudgetExceededError::BudgetExceededError(unsigned long long cardinality,
                                         unsigned long long budget)
    : Error("database sweep cardinality " + std::to_string(cardinality) +
            " exceeds budget " + std::to_string(budget)),
      cardinality_(cardinality) {}

const char* to_string(LoadErrorKind kind) {
  switch (kind) {
    case LoadErrorKind::kIo:
      return "io";
    case LoadErrorKind::kBadMagic:
      return "bad-magic";
    case LoadErrorKind::kUnsupportedVersion:
      return "unsupported-version";
    case LoadErrorKind::kTruncated:
      return "truncated";
    case LoadErrorKind::kChecksumMismatch:
      return "checksum-mismatch";
    case LoadErrorKind::kMalformed:
      return "malformed";
  }
  return "unknown";
}

LoadError::LoadError(LoadErrorKind kind, const std::string& what)
    : Error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

}  // namespace hmp

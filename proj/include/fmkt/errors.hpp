#pragma once

#include <stdexcept>
#include <string>

namespace fmkt {

// Raised when an input document or a domain object violates a structural
// invariant. The offending node (if any) is carried separately so callers can
// report it without parsing the message.
class ValidationError : public std::runtime_error {
 public:
  enum class Kind {
    Malformed,
    DuplicateNode,
    MissingRoot,
    MultipleRoots,
    OrphanNode,
    TimeGap,
    ProbabilitySum,
    NonPositiveProbability,
    MissingQuote,
    UnexpectedDividend,
    BidAboveAsk,
    DividendAskAboveBid,
    NegativeRate,
    ShapeMismatch,
    NonAbsorbingDefault,
    SpreadOrder,
  };

  ValidationError(Kind kind, std::string node, const std::string& what)
      : std::runtime_error(what), kind_(kind), node_(std::move(node)) {}

  Kind kind() const noexcept { return kind_; }
  const std::string& node() const noexcept { return node_; }

 private:
  Kind kind_;
  std::string node_;
};

// A documented precondition of an analysis routine does not hold
// (e.g. efficient-friction search on a market that admits arbitrage).
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The linear-programming backend returned something the caller cannot
// interpret (unexpected status, failed certificate re-verification).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fmkt

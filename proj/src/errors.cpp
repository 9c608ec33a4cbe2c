#include "lowrank_sdp/errors.hpp"

#include <sstream>

namespace lowrank_sdp {

void Error::set_provenance(long rank_p, long iteration) {
  if (rank_p_) return;  // keep the innermost provenance
  rank_p_ = rank_p;
  iteration_ = iteration;
  std::ostringstream os;
  os << std::runtime_error::what() << " (rank p=" << rank_p << ", iteration " << iteration
     << ")";
  message_ = os.str();
}

static std::string assumption_message(std::size_t i, std::size_t j, double norm) {
  std::ostringstream os;
  os << "constraint matrices " << i << " and " << j
     << " are not mutually orthogonal: ||A_i A_j||_F = " << norm;
  return os.str();
}

AssumptionViolation::AssumptionViolation(std::size_t i, std::size_t j, double product_norm)
    : Error(assumption_message(i, j, product_norm)), i_(i), j_(j), product_norm_(product_norm) {}

ParseError::ParseError(std::size_t line, const std::string& reason)
    : Error("line " + std::to_string(line) + ": " + reason), line_(line) {}

SelfLoop::SelfLoop(std::size_t line) : ParseError(line, "self-loop edges are not allowed") {}

RaggedRows::RaggedRows(std::size_t line, std::size_t expected, std::size_t found)
    : ParseError(line, "expected " + std::to_string(expected) + " columns, found " +
                           std::to_string(found)) {}

NonFinite::NonFinite(std::size_t row, std::size_t col)
    : ParseError(row, "non-finite entry in column " + std::to_string(col)), col_(col) {}

}  // namespace lowrank_sdp

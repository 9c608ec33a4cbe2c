#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace lowrank_sdp {

/// Base class of every error raised by the library.
///
/// Errors raised deep inside a solve can be tagged afterwards with the rank
/// and outer iteration at which they happened; `what()` then includes that
/// provenance.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message)
      : std::runtime_error(message), message_(message) {}

  const char* what() const noexcept override { return message_.c_str(); }

  void set_provenance(long rank_p, long iteration);
  std::optional<long> rank_p() const { return rank_p_; }
  std::optional<long> iteration() const { return iteration_; }

  /// Iterate the failing computation was working on, when known.
  const std::optional<Eigen::MatrixXd>& last_iterate() const { return last_iterate_; }
  void set_last_iterate(Eigen::MatrixXd y) { last_iterate_ = std::move(y); }

 private:
  std::string message_;
  std::optional<long> rank_p_;
  std::optional<long> iteration_;
  std::optional<Eigen::MatrixXd> last_iterate_;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class AssumptionViolation : public Error {
 public:
  AssumptionViolation(std::size_t i, std::size_t j, double product_norm);
  std::size_t first() const { return i_; }
  std::size_t second() const { return j_; }
  double product_norm() const { return product_norm_; }

 private:
  std::size_t i_;
  std::size_t j_;
  double product_norm_;
};

class InfeasibleStart : public Error {
 public:
  using Error::Error;
};

class SingularGram : public Error {
 public:
  using Error::Error;
};

class DegenerateConstraint : public Error {
 public:
  using Error::Error;
};

class RetractionFailure : public Error {
 public:
  using Error::Error;
};

class BasePointMismatch : public Error {
 public:
  using Error::Error;
};

class EigSolverNoConvergence : public Error {
 public:
  EigSolverNoConvergence(const std::string& message, double best_value,
                         Eigen::VectorXd best_vector)
      : Error(message), best_value_(best_value), best_vector_(std::move(best_vector)) {}
  double best_value() const { return best_value_; }
  const Eigen::VectorXd& best_vector() const { return best_vector_; }

 private:
  double best_value_;
  Eigen::VectorXd best_vector_;
};

class HomotopyStalled : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& reason);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SelfLoop : public ParseError {
 public:
  explicit SelfLoop(std::size_t line);
};

class RaggedRows : public ParseError {
 public:
  RaggedRows(std::size_t line, std::size_t expected, std::size_t found);
};

class NonFinite : public ParseError {
 public:
  NonFinite(std::size_t row, std::size_t col);
  std::size_t row() const { return line(); }
  std::size_t col() const { return col_; }

 private:
  std::size_t col_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace lowrank_sdp

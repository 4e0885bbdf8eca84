// Exception hierarchy for the library. Every failure carries the process
// exit status the CLI should report: 2 for bad configuration or input,
// 3 for numerical breakdown, 4 for an unreachable target marginal.
#pragma once

#include <stdexcept>
#include <string>

namespace gsot {

class error : public std::runtime_error {
public:
  error(int exit_code, const std::string& what)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const { return exit_code_; }

private:
  int exit_code_;
};

class config_error : public error {
public:
  explicit config_error(const std::string& what) : error(2, what) {}
};

class numerical_error : public error {
public:
  explicit numerical_error(const std::string& what) : error(3, what) {}
};

class reachability_error : public error {
public:
  explicit reachability_error(const std::string& what) : error(4, what) {}
};

struct InvalidEpsilon : config_error {
  explicit InvalidEpsilon(const std::string& what) : config_error(what) {}
};

struct InvalidOrder : config_error {
  explicit InvalidOrder(const std::string& what) : config_error(what) {}
};

struct AlphaOutOfRange : config_error {
  explicit AlphaOutOfRange(const std::string& what) : config_error(what) {}
};

struct NonSymmetric : numerical_error {
  explicit NonSymmetric(const std::string& what) : numerical_error(what) {}
};

struct EigenFailure : numerical_error {
  explicit EigenFailure(const std::string& what) : numerical_error(what) {}
};

struct NegativeEigenvalue : numerical_error {
  explicit NegativeEigenvalue(const std::string& what) : numerical_error(what) {}
};

struct NotPSD : numerical_error {
  explicit NotPSD(const std::string& what) : numerical_error(what) {}
};

struct AlignmentResidual : numerical_error {
  explicit AlignmentResidual(const std::string& what) : numerical_error(what) {}
};

struct MongeConstructionFailure : numerical_error {
  explicit MongeConstructionFailure(const std::string& what)
      : numerical_error(what) {}
};

struct SchurNotZero : numerical_error {
  explicit SchurNotZero(const std::string& what) : numerical_error(what) {}
};

struct SingularCoupling : numerical_error {
  explicit SingularCoupling(const std::string& what) : numerical_error(what) {}
};

struct IndefiniteQ : numerical_error {
  explicit IndefiniteQ(const std::string& what) : numerical_error(what) {}
};

struct SingularRegime : numerical_error {
  explicit SingularRegime(const std::string& what) : numerical_error(what) {}
};

struct NotReachable : reachability_error {
  explicit NotReachable(const std::string& what) : reachability_error(what) {}
};

}  // namespace gsot

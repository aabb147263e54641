#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pmelab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error {
  using Error::Error;
};

// psi left the double range; r_safe is the largest radius where it did not
struct OverflowAtRadius : Error {
  double r_safe;
  explicit OverflowAtRadius(double r)
      : Error("psi overflows beyond r = " + std::to_string(r)), r_safe(r) {}
};

struct WindowOutsideDomain : Error {
  using Error::Error;
};

struct WindowTooNarrow : Error {
  using Error::Error;
};

struct GridMismatch : Error {
  using Error::Error;
};

struct NewtonDiverged : Error {
  double t;
  explicit NewtonDiverged(const std::string& what, double t_ = 0.0)
      : Error(what), t(t_) {}
};

struct NonPositiveIterate : Error {
  using Error::Error;
};

// ball schedule ran out before successive iterates settled
struct NotConverged : Error {
  std::vector<double> previous;
  std::vector<double> last;
  NotConverged(const std::string& what, std::vector<double> prev,
               std::vector<double> cur)
      : Error(what), previous(std::move(prev)), last(std::move(cur)) {}
};

struct IterationStalled : Error {
  using Error::Error;
};

struct NoFeasibleParams : Error {
  using Error::Error;
};

struct StepUnderflow : Error {
  double t;
  StepUnderflow(const std::string& what, double t_) : Error(what), t(t_) {}
};

struct TimeOutsideRange : Error {
  using Error::Error;
};

struct DimensionTooLow : Error {
  using Error::Error;
};

struct ConfigInvalid : Error {
  std::string field;
  ConfigInvalid(const std::string& f, const std::string& why)
      : Error("invalid config field '" + f + "': " + why), field(f) {}
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace pmelab

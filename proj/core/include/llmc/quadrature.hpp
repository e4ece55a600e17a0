#ifndef LLMC_QUADRATURE_HPP
#define LLMC_QUADRATURE_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>

namespace llmc::quad {

using Integrand = std::function<double(double)>;

struct Options {
  double abs_tol = 1e-10;
  double rel_tol = 0.0;
  std::size_t max_intervals = 2000;
  // Upper bound on the width of any panel in the initial partition. Zero
  // disables it. Used for oscillatory integrands.
  double max_panel_width = 0.0;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  std::size_t intervals = 0;
};

/// Raised when the interval budget is exhausted before the tolerance is met.
/// Carries the best estimate reached so callers can report it.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double estimate, double error)
      : std::runtime_error(what), estimate_(estimate), error_(error) {}

  double estimate() const noexcept { return estimate_; }
  double error() const noexcept { return error_; }

 private:
  double estimate_;
  double error_;
};

/// Single 15-point Kronrod panel with the QUADPACK error heuristic.
Result gauss_kronrod15(const Integrand& f, double a, double b);

/// Globally adaptive Gauss-Kronrod (7,15) integration of f over [a, b].
///
/// The initial partition is split at every point of `breaks` that lies
/// strictly inside (a, b), so discontinuities of f never sit inside a panel.
/// Refinement bisects the panel with the largest error estimate until the
/// summed error is below max(abs_tol, rel_tol * |value|).
Result integrate(const Integrand& f, double a, double b, const Options& opts = {},
                 std::span<const double> breaks = {});

/// Integral of f over [a, inf). For a > 0 uses x = a / (1 - u); for a == 0
/// uses x = u / (1 - u). Either map sends the half line onto [0, 1).
Result integrate_to_infinity(const Integrand& f, double a, const Options& opts = {});

}  // namespace llmc::quad

#endif  // LLMC_QUADRATURE_HPP

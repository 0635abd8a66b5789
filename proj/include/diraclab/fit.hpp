#pragma once

#include <span>

namespace diraclab {

/// Least-squares line y = intercept + slope * x.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    /// Root mean square of the residuals.
    double residual = 0.0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Fit of log y against log x. Every x and y must be positive.
LineFit fit_loglog(std::span<const double> x, std::span<const double> y);

}  // namespace diraclab

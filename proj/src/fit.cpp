#include "diraclab/fit.hpp"

#include <cmath>
#include <vector>

#include "diraclab/errors.hpp"

namespace diraclab {

LineFit fit_line(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) throw ShapeError("fit_line: x and y differ in length");
    if (x.size() < 2) throw InvalidParameter("fit_line: need at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw InvalidParameter("fit_line: all x values coincide");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - fit.intercept - fit.slope * x[i];
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

LineFit fit_loglog(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) throw ShapeError("fit_loglog: x and y differ in length");
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidParameter("fit_loglog: values must be positive");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    return fit_line(lx, ly);
}

}  // namespace diraclab

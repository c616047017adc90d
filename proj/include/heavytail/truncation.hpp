#ifndef HEAVYTAIL_TRUNCATION_HPP
#define HEAVYTAIL_TRUNCATION_HPP

#include <cmath>
#include <stdexcept>

namespace heavytail {

// Soft truncation for heavy-tailed mean estimation.  The influence curve is
//
//          u - u^3/6             on [-sqrt(2), sqrt(2)]
//   psi(u) =
//          +- 2*sqrt(2)/3        outside,
//
// i.e. the cubic is frozen at the points where its derivative vanishes, so
// psi is odd, non-decreasing, continuous and bounded by 2*sqrt(2)/3.  Its
// defining property (with b = 2) is
//
//   -log(1 - u + u^2/2) <= psi(u) <= log(1 + u + u^2/2),
//
// which is what turns exponential moment bookkeeping into polynomial moment
// bookkeeping in every proof downstream.

inline constexpr double kPsiKnot = 1.4142135623730951;      // sqrt(2)
inline constexpr double kPsiBound = 0.9428090415820634;     // 2*sqrt(2)/3

// Piecewise closed form; the production evaluation path.
inline double psi(double u) {
    if (!std::isfinite(u))
        throw std::domain_error("psi: input must be finite");
    if (u > kPsiKnot) return kPsiBound;
    if (u < -kPsiKnot) return -kPsiBound;
    return u - u * u * u / 6.0;
}

// Same map written without branches, as a sum weighted by indicators.
// Kept as an independent evaluation route for cross-checking only.  The
// cubic sees a masked argument: with a live argument, huge |u| would cube
// to infinity and turn the dead branch into 0 * inf = NaN.
inline double psi_nonpiecewise(double u) {
    if (!std::isfinite(u))
        throw std::domain_error("psi_nonpiecewise: input must be finite");
    const double lo = (u < -kPsiKnot) ? 1.0 : 0.0;  // I{u < -sqrt(2)}
    const double hi = (u <= kPsiKnot) ? 1.0 : 0.0;  // I{u <= sqrt(2)}
    const double v = u * (hi - lo);                 // u inside, 0 outside
    return (v - v * v * v / 6.0) * (hi - lo) + kPsiBound * (1.0 - hi - lo);
}

// Verifies the two-sided logarithmic envelope at a single point, with a
// small floating-point slack.  Both arguments of the logs are quadratics
// with negative discriminant, hence strictly positive for every real u.
inline bool check_key_property(double u, double slack = 1e-12) {
    const double p = psi(u);
    const double lower = -std::log1p(-u + u * u / 2.0);
    const double upper = std::log1p(u + u * u / 2.0);
    return lower - slack <= p && p <= upper + slack;
}

enum class TruncationKind { CatoniGiulini };

// Dispatch point for the truncation family.  Only one member exists today;
// estimators take this struct so adding another curve stays a local change.
struct TruncationFn {
    TruncationKind kind = TruncationKind::CatoniGiulini;

    double operator()(double u) const { return psi(u); }

    // sup |psi|, attained for all |u| >= sqrt(2).
    double bound() const { return kPsiBound; }
};

} // namespace heavytail

#endif

#pragma once

#include <Eigen/Core>
#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <limits>

namespace curvmesh::predicates {

// Orientation and in-circle signs for points with double coordinates. A
// floating-point evaluation is accepted when it clears a forward error
// bound; otherwise the determinant is recomputed exactly in rational
// arithmetic (doubles convert to rationals without rounding).

namespace detail {

using Rational = boost::multiprecision::cpp_rational;

inline constexpr double kEpsilon = std::numeric_limits<double>::epsilon() * 0.5;
inline constexpr double kOrientBound = (3.0 + 16.0 * kEpsilon) * kEpsilon;
inline constexpr double kIncircleBound = (10.0 + 96.0 * kEpsilon) * kEpsilon;

template <typename T>
int sign(const T& v)
{
    return v > 0 ? 1 : (v < 0 ? -1 : 0);
}

inline int orient_exact(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c)
{
    const Rational acx = Rational(a.x()) - Rational(c.x());
    const Rational bcx = Rational(b.x()) - Rational(c.x());
    const Rational acy = Rational(a.y()) - Rational(c.y());
    const Rational bcy = Rational(b.y()) - Rational(c.y());
    return sign(Rational(acx * bcy - acy * bcx));
}

inline int incircle_exact(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                          const Eigen::Vector2d& d)
{
    const Rational adx = Rational(a.x()) - Rational(d.x()), ady = Rational(a.y()) - Rational(d.y());
    const Rational bdx = Rational(b.x()) - Rational(d.x()), bdy = Rational(b.y()) - Rational(d.y());
    const Rational cdx = Rational(c.x()) - Rational(d.x()), cdy = Rational(c.y()) - Rational(d.y());
    const Rational alift = adx * adx + ady * ady;
    const Rational blift = bdx * bdx + bdy * bdy;
    const Rational clift = cdx * cdx + cdy * cdy;
    const Rational det = alift * (bdx * cdy - bdy * cdx) + blift * (cdx * ady - cdy * adx) +
                         clift * (adx * bdy - ady * bdx);
    return sign(det);
}

} // namespace detail

/// +1 if a, b, c turn counterclockwise, -1 if clockwise, 0 if collinear.
inline int orient2d(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c)
{
    const double detleft = (a.x() - c.x()) * (b.y() - c.y());
    const double detright = (a.y() - c.y()) * (b.x() - c.x());
    const double det = detleft - detright;
    const double detsum = std::abs(detleft) + std::abs(detright);
    if (std::abs(det) > detail::kOrientBound * detsum) return detail::sign(det);
    return detail::orient_exact(a, b, c);
}

/// For counterclockwise a, b, c: +1 if d lies strictly inside their
/// circumcircle, -1 if strictly outside, 0 if cocircular.
inline int incircle(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                    const Eigen::Vector2d& d)
{
    const double adx = a.x() - d.x(), ady = a.y() - d.y();
    const double bdx = b.x() - d.x(), bdy = b.y() - d.y();
    const double cdx = c.x() - d.x(), cdy = c.y() - d.y();
    const double bdxcdy = bdx * cdy, cdxbdy = cdx * bdy;
    const double cdxady = cdx * ady, adxcdy = adx * cdy;
    const double adxbdy = adx * bdy, bdxady = bdx * ady;
    const double alift = adx * adx + ady * ady;
    const double blift = bdx * bdx + bdy * bdy;
    const double clift = cdx * cdx + cdy * cdy;
    const double det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady);
    const double permanent = (std::abs(bdxcdy) + std::abs(cdxbdy)) * alift +
                             (std::abs(cdxady) + std::abs(adxcdy)) * blift +
                             (std::abs(adxbdy) + std::abs(bdxady)) * clift;
    if (std::abs(det) > detail::kIncircleBound * permanent) return detail::sign(det);
    return detail::incircle_exact(a, b, c, d);
}

} // namespace curvmesh::predicates

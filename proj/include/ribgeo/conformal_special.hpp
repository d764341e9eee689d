#pragma once

// Conformal models of sphere and hyperbolic products, constant angle maps
// over parallel hypersurface families, and the Joachimsthal construction.
//
// Conventions. Lorentzian ambients carry the time coordinate first, with
// signature (-1, +1, ..., +1). The hyperbolic space H^n is the upper sheet
// of the quadric of square norm -1 in R^{n+1}_1.

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ribgeo/curves.hpp"
#include "ribgeo/grid.hpp"

namespace ribgeo {

/// Lorentzian cross product on R^3_1 (time first): the unique vector with
/// <u ^ v, w> = det(u, v, w) for all w, where <,> is the Lorentzian product.
Eigen::Vector3d lorentz_cross(const Eigen::Vector3d& u, const Eigen::Vector3d& v);

/// Pseudo-orthonormal basis e_0, ..., e_n of R^{n+1}_1 with two null
/// directions: <e_0,e_0> = <e_n,e_n> = 0, <e_0,e_n> = -1/2, and e_1, ...,
/// e_{n-1} orthonormal spacelike orthogonal to both.
struct MinkowskiModel {
    int n = 0;                   // H^n lives in R^{n+1}_1
    Eigen::MatrixXd basis;       // column j = e_j in standard Lorentz coordinates
    Eigen::MatrixXd gram;        // numerically realized Gram matrix of the basis
    double gram_residual = 0.0;  // max deviation from the target Gram table

    /// Standard Lorentz coordinates of sum_j coeffs[j] e_j.
    Eigen::VectorXd to_standard(const Eigen::VectorXd& coeffs) const;

    /// Coefficients of v in the basis e_0, ..., e_n.
    Eigen::VectorXd from_standard(const Eigen::VectorXd& v) const;

    /// Lorentzian inner product of two coefficient vectors, evaluated
    /// through the Gram matrix.
    double inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
};

MinkowskiModel make_minkowski_model(int n);

/// A hypersurface g of the space form Q_eps (unit sphere, flat space, or
/// hyperbolic space for eps = 1, 0, -1) with a chosen unit normal inside
/// Q_eps, plus a strictly increasing height profile a(s).
struct ConstantAngleSpec {
    int eps = 0;
    ImmersedGrid g;          // values in R^{n+|eps|}, Lorentzian iff eps = -1
    Eigen::MatrixXd normal;  // unit normal per node, same ambient as g
    ScalarAlongCurve a;
};

/// Validates the quadric constraint on g, unit length and tangency of the
/// normal, and strict monotonicity of a. Throws std::runtime_error on
/// violation.
ConstantAngleSpec make_constant_angle_spec(int eps, ImmersedGrid g,
                                           Eigen::MatrixXd normal,
                                           ScalarAlongCurve a);

/// Parallel hypersurface of g at signed distance s inside Q_eps:
/// g_s = C_eps(s) g + S_eps(s) N with (C, S) = (cos, sin), (1, s),
/// (cosh, sinh) for eps = 1, 0, -1.
Eigen::MatrixXd parallel_family(const ConstantAngleSpec& spec, double s);

/// Constant angle hypersurface F(x, s) = (g_s(x), a(s)) of Q_eps x R,
/// immersed in R^{n+1+|eps|}. The product grid appends the s axis (metric
/// factor 1) after the axes of g (factor 0).
ImmersedGrid constant_angle_map(const ConstantAngleSpec& spec);

/// Conformal diffeomorphism of S^n x R onto punctured Euclidean space:
/// (x, t) -> e^t x. Requires |x| = 1 within 1e-10.
Eigen::VectorXd conformal_map_sphere(const Eigen::VectorXd& x, double t);

/// Conformal covering map of H^n x R onto Euclidean space minus a
/// codimension two subspace. For p = sum_j x_j e_j on H^n (so <p,p> = -1
/// and x_0 > 0),
///   (p, t) -> (1 / x_0) (x_1, ..., x_{n-1}, cos t, sin t).
/// The conformal factor is 1 / x_0.
Eigen::VectorXd conformal_map_hyperbolic(const MinkowskiModel& model,
                                         const Eigen::VectorXd& coeffs, double t);

/// Joachimsthal surface built from a unit speed curve gamma in H^2 (sampled
/// over t_grid, one axis) and a strictly increasing profile a(s). The
/// parallel curves gamma_s = cosh(s) gamma + sinh(s) gamma ^ gamma' sweep
/// H^2, the constant angle map lifts them to H^2 x R, and the conformal
/// covering map projects to R^3. Fixed-s leaves land in planes through a
/// common axis, fixed-t leaves on spheres centered on it.
///
/// dgamma, when given, supplies exact derivative samples; otherwise a
/// central difference is used and the unit speed check is relaxed to the
/// difference order.
ImmersedGrid joachimsthal_surface(const Eigen::MatrixXd& gamma,
                                  const ParamGrid& t_grid,
                                  const ScalarAlongCurve& a,
                                  const Eigen::MatrixXd* dgamma = nullptr);

}  // namespace ribgeo

#pragma once

#include "ribgeo/curves.hpp"
#include "ribgeo/geometry.hpp"
#include "ribgeo/grid.hpp"

#include <Eigen/Dense>

#include <vector>

namespace ribgeo {

/// Sphere-valued net over a product grid (fiber axes first, the s axis last)
/// whose induced metric splits as g_s + rho^2 ds^2 with no cross terms. The
/// polar data v0 (fiber warping), rho (s coefficient) and the structure scalar
/// phi_sph = -(1/rho) d_s log v0 are extracted from the FD metric; phi_sph
/// depending on s alone is what makes the fiber leaves spherical.
struct GaussTube {
    ImmersedGrid N;
    Eigen::VectorXd v0;       // per node, (det fiber metric block)^(1/(2 dim0))
    Eigen::VectorXd rho;      // per node, sqrt of the ds^2 coefficient
    Eigen::VectorXd phi_sph;  // per node
    std::vector<Eigen::MatrixXd> metric;  // FD induced metric per node

    double unit_residual = 0.0;        // max | |N| - 1 |
    double cross_residual = 0.0;       // max off-block metric entry
    double phi_slice_variation = 0.0;  // max fiber-wise spread of phi_sph

    int s_axis() const { return N.grid().dim() - 1; }
    int num_s() const { return N.grid().axis(s_axis()).count; }
    std::int64_t fiber_count() const { return N.grid().size() / num_s(); }
    std::int64_t node(std::int64_t fiber, int j) const { return fiber * num_s() + j; }
};

/// Center curve gamma with the two radial scalars: the fiber leaf at s sits on
/// the sphere around gamma(s) with radius sqrt(alpha^2 + beta^2), met at the
/// constant angle with cosine alpha / sqrt(alpha^2 + beta^2).
struct EnneperTriple {
    Eigen::MatrixXd gamma;  // ambient x nodes of the s grid
    ScalarAlongCurve alpha;
    ScalarAlongCurve beta;

    Eigen::VectorXd leaf_radius() const;     // sqrt(alpha^2 + beta^2) per s node
    Eigen::VectorXd leaf_cos_angle() const;  // alpha / radius per s node
};

/// Support function on a GaussTube built from a fiber profile U and an s
/// profile V, together with the operator P = Hess + id scaled by the support,
/// whose inverse (negated) is the predicted shape operator.
struct SupportData {
    Eigen::VectorXd U;  // one sample per fiber node
    ScalarAlongCurve V;
    Eigen::VectorXd gamma_supp;         // per node of the product grid
    std::vector<Eigen::MatrixXd> P;     // operator per node, coordinate basis
    double mixed_hessian_residual = 0.0;
};

/// Extract the polar data of a sphere-valued net and verify the GaussTube
/// invariants. tol <= 0 picks 10 h^2 from the grid step. Throws when the net
/// leaves the sphere, the metric has cross terms, or phi_sph varies along the
/// fiber slices beyond tolerance.
GaussTube gauss_tube_from_net(const ImmersedGrid& N, double tol = 0.0);

/// Sphere-valued Ribaucour partial tube over a unit-speed curve on the sphere
/// (frame from integrate_frame_sphere). beta holds the normal-frame
/// coefficients, f0 the fiber immersion in frame coordinates (one column per
/// fiber node of fiber_grid). The quadric term is folded into the tube
/// formula so the result stays on the sphere exactly.
GaussTube build_gauss_tube(const SampledCurveFrame& curve, const ScalarAlongCurve& phi,
                           const std::vector<ScalarAlongCurve>& beta, const ParamGrid& fiber_grid,
                           const Eigen::MatrixXd& f0, double tol = 0.0);

/// Support function gamma = v0 (U + int_0^s V rho / v0) by cumulative
/// quadrature along s, with P assembled from the intrinsic Hessian of the
/// tube metric. The mixed Hessian block must vanish within tolerance.
SupportData support_function(const GaussTube& tube, const Eigen::VectorXd& U,
                             const ScalarAlongCurve& V, double tol = 0.0);

/// f = gamma N + N_* grad gamma on the regular nodes (P invertible). Nodes
/// with singular P are masked; throws if every node is masked or a leaf
/// fails the plane fit (the construction must produce planar fiber leaves).
ImmersedGrid gauss_parametrization(const GaussTube& tube, const SupportData& supp,
                                   double tol = 0.0);

/// Residual of the compatibility constraint <gamma', N> + alpha' - beta rho
/// over the product grid.
double triple_constraint_residual(const GaussTube& tube, const EnneperTriple& triple);

/// f = gamma + alpha N + beta rho^-1 d_s N. Rejects triples violating the
/// compatibility constraint; verifies the leaf radius and leaf angle are
/// constant along each fiber leaf within tolerance.
ImmersedGrid enneper_parametrization(const GaussTube& tube, const EnneperTriple& triple,
                                     double tol = 0.0);

/// Gauge family on a fixed Gauss map: beta -> lambda beta while alpha' and
/// gamma' scale by lambda, integrated by quadrature from the input's values
/// at the first node. lambda must not vanish.
EnneperTriple deform_family(const EnneperTriple& triple, const ScalarAlongCurve& lambda);

/// Pick the family member whose leaf spheres all pass through the origin:
/// solve G' = lambda gamma', a' = lambda alpha',
/// lambda' = (<G, gamma'> - a alpha' - lambda beta beta') / beta^2
/// with G(s0) = beta(s0) e, a(s0) = 0, lambda(s0) = 1, so that
/// |G|^2 = a^2 + (lambda beta)^2 holds identically. Requires beta bounded
/// away from zero; throws if lambda crosses zero.
std::pair<EnneperTriple, ScalarAlongCurve> normalize_through_point(
    const EnneperTriple& triple, const Eigen::VectorXd& e = Eigen::VectorXd());

/// Unit inversion centered at p, run as the classical sphere-inversion
/// Ribaucour transform. Requires every fiber leaf of f to lie on a sphere
/// through p (checked by augmenting the leaf with p in the sphere fit);
/// verifies the image leaves are planar.
ImmersedGrid planarize_by_inversion(const ImmersedGrid& f, const Eigen::VectorXd& p,
                                    double tol = 0.0);

}  // namespace ribgeo

#pragma once

#include "ribgeo/curves.hpp"
#include "ribgeo/geometry.hpp"
#include "ribgeo/grid.hpp"

#include <Eigen/Dense>

#include <vector>

namespace ribgeo {

/// Data of a partial tube over a curve: the base curve f1 with a parallel
/// orthonormal normal frame xi_1..xi_k (the fiber isometry is
/// y -> sum y_a xi_a), the fiber immersion f0 into R^k, and the pair
/// (phi, beta) along the base. beta is stored as an ambient normal field.
struct PartialTubeSpec {
    ParamGrid s_grid;                 // 1-D base grid
    Eigen::MatrixXd f1;               // ambient x ns
    Eigen::VectorXd phi;              // ns
    Eigen::MatrixXd beta;             // ambient x ns, normal to f1
    std::vector<Eigen::MatrixXd> xi;  // k fields, each ambient x ns
    ParamGrid fiber_grid;             // dim m0 (1 or 2)
    Eigen::MatrixXd f0;               // k x fiber nodes
    std::vector<std::uint8_t> fiber_mask;  // empty = all usable
    bool fiber_substantial = true;

    int ambient_dim() const { return int(f1.rows()); }
    int frame_dim() const { return int(xi.size()); }
};

/// Assemble a spec from an integrated curve frame: the first f0.rows() frame
/// normals carry the fiber, beta coefficients are given in the full frame.
PartialTubeSpec make_tube_spec(const SampledCurveFrame& curve, const ScalarAlongCurve& phi,
                               const std::vector<ScalarAlongCurve>& beta_coeff,
                               const ParamGrid& fiber_grid, const Eigen::MatrixXd& f0);

/// A partial tube evaluated on the product grid (fiber axes first, factor 0;
/// the base s axis last, factor 1). All per-node tensors are stored; since
/// the base is a curve, Phi and D reduce to scalars on the base block.
struct TubeEvaluation {
    PartialTubeSpec spec;  // after fiber normalization
    ImmersedGrid f;
    Eigen::MatrixXd F;          // ambient x nodes
    Eigen::VectorXd nu;         // |F|^-2
    Eigen::VectorXd phi;        // broadcast over fiber
    Eigen::VectorXd Phi_op;     // scalar operator on the base tangent
    Eigen::VectorXd D_op;       // 1 - 2 nu phi Phi_op
    std::vector<std::uint8_t> regular_mask;

    // base-slice caches (per base node)
    Eigen::MatrixXd f1_d, f1_dd;    // ambient x ns
    Eigen::VectorXd g11, dphi;      // ns
    std::vector<Eigen::MatrixXd> fiber_metric;  // per fiber node, m0 x m0
    double frame_residual = 0.0;    // orthonormality + parallelism of xi
    double beta_residual = 0.0;     // normality of beta to f1

    std::int64_t node(std::int64_t fiber_k, int j) const {
        return fiber_k * spec.s_grid.axis(0).count + j;
    }
    /// Reflection through the hyperplane orthogonal to F at a node.
    Eigen::VectorXd apply_P(std::int64_t k, const Eigen::VectorXd& v) const {
        return v - 2.0 * nu[k] * F.col(k).dot(v) * F.col(k);
    }
};

/// Evaluate f(x0, s) = f1 - 2 nu phi F with F = f1_* grad phi + beta +
/// sum f0_a(x0) xi_a on the product grid. Non-substantial fibers are
/// normalized first by absorbing the affine offset into beta and dropping
/// the unused frame directions. Throws if every node is irregular.
TubeEvaluation build_partial_tube(const PartialTubeSpec& spec);

/// Closed-form induced metric per node: block-diagonal with fiber block
/// 4 nu^2 phi^2 g0 and base entry D^2 g11.
std::vector<Eigen::MatrixXd> predicted_metric(const TubeEvaluation& eval);

struct ShapeOperatorBlocks {
    std::vector<Eigen::MatrixXd> delta_op;  // per node, empty if no delta given
    std::vector<Eigen::MatrixXd> zeta_op;   // per node, empty if no zeta given
};

/// Closed-form shape operators of the tube with respect to the rotated
/// normals P delta (delta a base normal orthogonal to the xi frame) and
/// P Psi(zeta) (zeta a fiber normal field in R^k). Coordinate-basis d x d
/// matrices, one per product node; irregular nodes hold zeros.
ShapeOperatorBlocks predicted_shape_operators(const TubeEvaluation& eval,
                                              const Eigen::MatrixXd& delta,
                                              const Eigen::MatrixXd& zeta);

/// Surface built from a curve and a unit-speed fiber curve alpha in R^k:
/// f(s,t) = gamma - 2 phi (phi' gamma' + sum (beta_i + alpha_i) xi_i)
///          / ((phi')^2 + sum (beta_i + alpha_i)^2).
/// beta must solve beta_i' + phi' k_i = 0 along the curve.
TubeEvaluation surface_family(const SampledCurveFrame& curve, const ScalarAlongCurve& phi,
                              const std::vector<ScalarAlongCurve>& beta_coeff,
                              const ParamGrid& fiber_grid, const Eigen::MatrixXd& alpha);

/// Same construction with a hypersurface fiber g (a 2-D grid in R^k);
/// the result is a hypersurface foliated by spherical leaves.
TubeEvaluation hypersurface_foliation(const SampledCurveFrame& curve, const ScalarAlongCurve& phi,
                                      const std::vector<ScalarAlongCurve>& beta_coeff,
                                      const ParamGrid& fiber_grid, const Eigen::MatrixXd& g);

/// Recover the tube data of a sampled immersion over a product grid whose
/// fiber leaves are spherical: slice at base_slice gives f1, each leaf's
/// sphere center gives the mean-curvature direction mu, and with
/// rho = 2(f - f1)/|f - f1|^2, h = rho - mu, xi^{x0} = h(x0) - h(z0) one gets
/// tau = log|xi|, phi = -e^-tau, beta = e^-tau h(z0) and the parallel frame
/// from the sections e^-tau xi^{x0}. The slice x0 = base_slice itself drops
/// out of the recovered fiber (it is the inversion's point at infinity) and
/// is masked. Rebuilding with build_partial_tube reproduces the input.
/// tol = admissible leaf sphere-fit rms and residuals (caller pins C*h^2).
PartialTubeSpec reconstruct_tube(const ImmersedGrid& f, std::int64_t base_slice,
                                 std::int64_t reference_fiber_point, double tol);

}  // namespace ribgeo

#pragma once

#include "ribgeo/geometry.hpp"
#include "ribgeo/grid.hpp"

#include <Eigen/Dense>

#include <vector>

namespace ribgeo {

/// A Combescure pair (phi, beta) on a sampled immersion, together with the
/// derived vector field F = f_* grad phi + beta, nu = |F|^-2 and the
/// symmetric tangent tensor Phi = Hess phi - A_beta expressed in the
/// Gram-Schmidt orthonormal tangent frame. The pair is checked, not assumed:
/// the residual is the largest normal component of dF.
struct CombescureData {
    ImmersedGrid base;
    Eigen::VectorXd phi;                   // per node
    Eigen::MatrixXd beta;                  // ambient x nodes
    Eigen::MatrixXd F;                     // ambient x nodes
    Eigen::VectorXd nu;                    // per node, |F|^-2
    std::vector<Eigen::MatrixXd> Phi;      // per node, in orthonormal tangent frame
    std::vector<Eigen::MatrixXd> Phi_op;   // per node, coordinate-basis operator g^{-1} Phi_cov
    TangentFrames frames;
    std::vector<Eigen::MatrixXd> df;       // FD partials of the base
    std::vector<Eigen::MatrixXd> metric;   // induced metric per node
    std::vector<std::uint8_t> node_mask;   // 1 = usable (tangent full rank, F finite)
    double combescure_residual = 0.0;
    double beta_normality_residual = 0.0;
};

struct RibaucourResult {
    ImmersedGrid f_tilde;
    Eigen::MatrixXd F;                     // the Combescure field used
    Eigen::VectorXd nu;
    Eigen::VectorXd phi;
    std::vector<Eigen::MatrixXd> D;        // per node, orthonormal-frame matrix
    std::vector<Eigen::MatrixXd> D_op;     // per node, coordinate-basis operator
    Eigen::MatrixXd delta;                 // ambient x nodes, -phi^-1 F
    std::vector<std::uint8_t> regular_mask;
    double condition_i_residual = 0.0;     // P Z - Z = <Z, delta>(f - f~)
    double condition_ii_residual = 0.0;    // f~_* = P f_* D, checked by FD

    /// Reflection P v = v - 2 nu <F, v> F at node k (Euclidean ambient).
    Eigen::VectorXd apply_P(std::int64_t k, const Eigen::VectorXd& v) const {
        return v - 2.0 * nu[k] * F.col(k).dot(v) * F.col(k);
    }
};

/// Assemble Combescure data from a scalar and a normal field on a sampled
/// immersion. grad phi uses the FD induced metric; Hess phi is intrinsic
/// (FD Christoffel symbols). Rank-deficient nodes are masked.
CombescureData build_combescure(const ImmersedGrid& f, const Eigen::VectorXd& phi,
                                const Eigen::MatrixXd& beta);

/// The Ribaucour transform f~ = f - 2 nu phi F with data
/// P = I - 2 nu F F^*, D = I - 2 nu phi Phi, delta = -phi^-1 F.
/// Regular nodes: phi != 0, F != 0, cond(D) < 1e8. Conditions (i) and (ii)
/// are verified by FD on regular nodes and the residuals stored.
RibaucourResult ribaucour_transform(const CombescureData& data,
                                    double combescure_tolerance = 1e30);

/// Space-form version: base samples lie on the quadric <f, f> = 1/c in
/// R^{m+1} (Euclidean for c > 0, Lorentzian for c < 0); the transform uses
/// G = F_* grad phi + beta + c phi F and D picks up the c phi^2 I term.
/// c = 0 reduces exactly to ribaucour_transform.
RibaucourResult ribaucour_transform_spaceform(const CombescureData& data, double c);

}  // namespace ribgeo

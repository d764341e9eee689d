#pragma once

#include "ribgeo/grid.hpp"
#include "ribgeo/numerics.hpp"

#include <Eigen/Dense>

#include <vector>

namespace ribgeo {

/// First FD partials of an immersed grid, one matrix (ambient x nodes) per axis.
std::vector<Eigen::MatrixXd> partials(const ImmersedGrid& f);

/// Second FD partials d_i d_j of the values (i <= j stored; symmetric access).
class SecondPartials {
public:
    explicit SecondPartials(const ImmersedGrid& f);
    const Eigen::MatrixXd& at(int i, int j) const { return blocks_[size_t(index(i, j))]; }

private:
    int index(int i, int j) const { return i <= j ? i * dim_ - i * (i - 1) / 2 + (j - i) : index(j, i); }
    int dim_;
    std::vector<Eigen::MatrixXd> blocks_;
};

/// FD induced metric g_ij = <d_i f, d_j f> (signature-aware), one d x d matrix
/// per node.
std::vector<Eigen::MatrixXd> induced_metric(const ImmersedGrid& f);
std::vector<Eigen::MatrixXd> induced_metric(const ImmersedGrid& f,
                                            const std::vector<Eigen::MatrixXd>& df);

/// Christoffel symbols of a sampled metric field: gamma[k](i,j) per node.
/// Computed from FD derivatives of the metric entries.
std::vector<std::vector<Eigen::MatrixXd>> christoffels(const std::vector<Eigen::MatrixXd>& metric,
                                                       const ParamGrid& grid);

/// Intrinsic Hessian of a scalar field on the grid with respect to a sampled
/// metric: Hess_ij = d_i d_j phi - Gamma^k_ij d_k phi.
std::vector<Eigen::MatrixXd> intrinsic_hessian(const Eigen::VectorXd& phi, const ParamGrid& grid,
                                               const std::vector<std::vector<Eigen::MatrixXd>>& gamma);

/// Orthonormal tangent frame per node by Gram-Schmidt on the FD partials in
/// fixed axis order. frame[k] is ambient_dim x grid_dim; coeff[k] maps frame
/// coordinates to coordinate-basis coordinates (t_i = sum_a coeff(a,i) e_a).
struct TangentFrames {
    std::vector<Eigen::MatrixXd> frame;  // columns: orthonormal e_a
    std::vector<Eigen::MatrixXd> coeff;  // coeff(a,i) = <t_i, e_a>
    std::vector<std::uint8_t> full_rank;
};
TangentFrames tangent_frames(const ImmersedGrid& f, const std::vector<Eigen::MatrixXd>& df,
                             double rank_tol = 1e-10);

/// Projection of an ambient vector onto the normal space of the tangent span
/// at node k (Euclidean ambient).
Eigen::VectorXd normal_project(const TangentFrames& frames, std::int64_t k, const Eigen::VectorXd& v);

}  // namespace ribgeo

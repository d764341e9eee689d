#pragma once

#include "ribgeo/grid.hpp"

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <vector>

namespace ribgeo {

/// Second-order finite differences of a sampled field along one grid axis.
/// Central stencils in the interior, one-sided second-order at the
/// boundaries. `values` holds one column per grid node.
Eigen::MatrixXd central_diff(const Eigen::MatrixXd& values, const ParamGrid& grid, int axis);

ImmersedGrid central_diff(const ImmersedGrid& f, int axis);

/// Thrown by rk4_integrate when the state stops being finite.
struct IntegrationDiverged : std::runtime_error {
    int last_valid_index;
    explicit IntegrationDiverged(int idx)
        : std::runtime_error("rk4_integrate: non-finite state at step " + std::to_string(idx + 1)),
          last_valid_index(idx) {}
};

using OdeRhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

/// Classical RK4 with fixed step; returns the state at every node of the
/// uniform partition of [s0, s1] into `steps` intervals (endpoints included).
std::vector<Eigen::VectorXd> rk4_integrate(const OdeRhs& rhs, const Eigen::VectorXd& y0,
                                           double s0, double s1, int steps);

/// Cumulative trapezoid integral on a uniform grid; first entry 0.
std::vector<double> quadrature(std::span<const double> samples, double h);

struct FitResult {
    enum class Model { Sphere, Plane };
    Model model = Model::Sphere;
    Eigen::VectorXd center_or_normal;  // sphere center, or unit plane normal
    double radius_or_offset = 0.0;     // sphere radius, or <n, x> = offset
    double rms = 0.0;
    bool degenerate = false;  // sphere: plane-like; plane: rank-deficient points
};

/// Algebraic least-squares sphere fit, linearized in (c, R^2 - |c|^2).
/// Points affinely flat make the normal equations rank deficient; the fit is
/// then flagged degenerate ("plane-like") and the minimum-norm center
/// (relative to the centroid) is returned. For point sets spanning a proper
/// affine subspace the minimum-norm solution is the circumcenter inside
/// that subspace.
FitResult fit_sphere(const std::vector<Eigen::VectorXd>& points);

/// Total-least-squares hyperplane through the points (smallest singular
/// direction of the centered cloud). Collinear/rank-deficient clouds are
/// flagged degenerate but still return the lowest-variance direction.
FitResult fit_plane(const std::vector<Eigen::VectorXd>& points);

/// Sum s_i u_i v_i with s_i in {+-1}.
double pseudo_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                    const std::vector<int>& signature);

}  // namespace ribgeo

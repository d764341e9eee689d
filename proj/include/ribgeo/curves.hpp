#pragma once

#include "ribgeo/grid.hpp"
#include "ribgeo/numerics.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

namespace ribgeo {

/// A real function sampled along the s-grid, optionally with its derivative.
struct ScalarAlongCurve {
    ParamGrid s_grid;  // 1-D
    Eigen::VectorXd values;
    std::optional<Eigen::VectorXd> derivative;

    /// Derivative samples: stored ones if present, FD of the values otherwise.
    Eigen::VectorXd deriv_or_fd() const;

    static ScalarAlongCurve from_function(const ParamGrid& s_grid,
                                          const std::function<double(double)>& f,
                                          const std::function<double(double)>& df = nullptr);
};

/// Unit-speed curve with parallel orthonormal normal frame and curvature
/// functions, sampled on a 1-D grid. The frame satisfies gamma' = T,
/// T' = sum k_i xi_i, xi_i' = -k_i T.
struct SampledCurveFrame {
    ParamGrid s_grid;  // 1-D
    int ambient_dim = 0;
    Eigen::MatrixXd gamma;               // ambient x nodes
    Eigen::MatrixXd tangent;             // ambient x nodes
    std::vector<Eigen::MatrixXd> xi;     // (m-1) normal fields, ambient x nodes
    std::vector<Eigen::VectorXd> k;      // (m-1) curvature samples
    double max_frame_correction = 0.0;   // largest Gram-Schmidt drift fix applied

    int num_normals() const { return int(xi.size()); }
    std::int64_t nodes() const { return s_grid.size(); }
};

/// Integrate the parallel-frame ODE system from curvature functions and an
/// orthonormal initial frame. Orthonormality drift is corrected by
/// Gram-Schmidt once every 50 steps; the largest correction is recorded.
SampledCurveFrame integrate_frame(const std::vector<ScalarAlongCurve>& k,
                                  const Eigen::VectorXd& init_point,
                                  const Eigen::MatrixXd& init_frame);  // columns: T, xi_1..xi_{m-1}

/// Same system on the unit sphere: the curve stays on S^{m-1} and the frame
/// is parallel in the sphere's normal connection (T' picks up the -gamma
/// curvature term). init_point must be unit, T and xi tangent to the sphere.
SampledCurveFrame integrate_frame_sphere(const std::vector<ScalarAlongCurve>& k,
                                         const Eigen::VectorXd& init_point,
                                         const Eigen::MatrixXd& init_frame);

/// Solve beta_i' + phi' k_i = 0 along the curve by quadrature. Returns one
/// ScalarAlongCurve per normal direction, with the residual of the ODE
/// reported through the derivative samples.
std::vector<ScalarAlongCurve> solve_combescure_along_curve(const SampledCurveFrame& curve,
                                                           const ScalarAlongCurve& phi,
                                                           const Eigen::VectorXd& beta_init);

}  // namespace ribgeo

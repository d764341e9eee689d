#pragma once

// Invariant engine: numerical residual checks for the geometric conditions
// the constructions are supposed to satisfy (orthogonal nets, adapted second
// fundamental forms, spherical leaves, constant angles, curvature lines,
// principal structure, polar metrics, conformality).
//
// Every check returns an InvariantReport with residuals normalized by local
// geometric scale, so tolerances are unit free. A tolerance argument <= 0
// selects the default C * h^2 with C = 10 and h the largest grid step.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ribgeo/enneper.hpp"
#include "ribgeo/geometry.hpp"
#include "ribgeo/grid.hpp"

namespace ribgeo {

struct InvariantReport {
    std::string name;
    double max_residual = 0.0;
    double rms_residual = 0.0;
    double tolerance = 0.0;
    double grid_h = 0.0;
    std::int64_t samples_used = 0;
    std::int64_t samples_excluded = 0;
    std::vector<std::string> notes;

    bool pass() const { return max_residual <= tolerance; }
};

/// A sampled metric field with a factor partition, for intrinsic checks.
struct SampledMetric {
    ParamGrid grid;
    std::vector<Eigen::MatrixXd> g;            // one symmetric SPD matrix per node
    std::optional<Eigen::VectorXd> conformal;  // optional conformal factor samples
};

/// Validates symmetry (1e-12) and positive definiteness of every node matrix.
SampledMetric make_sampled_metric(ParamGrid grid, std::vector<Eigen::MatrixXd> g,
                                  std::optional<Eigen::VectorXd> conformal = std::nullopt);

/// Node lists of the leaves of one factor block: indices outside the block
/// are frozen, indices inside it sweep their full range.
std::vector<std::vector<std::int64_t>> leaves_of_factor(const ParamGrid& grid, int fblock);

/// Cross-block entries of the FD induced metric, normalized by the diagonal.
InvariantReport check_orthogonal_net(const ImmersedGrid& f, double tol = 0.0);

/// Normal component of the mixed (cross-block) second derivatives, normalized
/// by the tangent scale sqrt(g_ii g_jj).
InvariantReport check_adapted_second_fundamental_form(const ImmersedGrid& f, double tol = 0.0);

/// Per-leaf sphere fits for the leaves of one factor block, plus constancy of
/// the extrinsic center estimate f + Z/|Z|^2 (Z the FD mean curvature vector
/// of the leaf) and orthogonality of f - center to the leaf tangents.
/// Plane-like leaves are flagged in the notes, not failed.
struct LeafSphereFits {
    std::vector<Eigen::VectorXd> center;  // per leaf
    std::vector<double> radius;
    std::vector<std::uint8_t> plane_like;
};
InvariantReport check_spherical_leaves(const ImmersedGrid& f, int which_factor, double tol = 0.0,
                                       LeafSphereFits* fits = nullptr);

/// Per-leaf spread of the angle cosine <(f - c)/|f - c|, N>. Sphere centers c
/// come from `centers` (one column per leaf) when given; for one dimensional
/// leaves the containing sphere is not unique and the caller should supply
/// the intended one. Otherwise per-leaf fits are used. When a leaf family
/// triple is attached (one leaf per s node), the mean cosine is also compared
/// with alpha / sqrt(alpha^2 + beta^2); its centers are the default.
InvariantReport check_constant_angle(const ImmersedGrid& f, int which_factor,
                                     const Eigen::MatrixXd& normals, double tol = 0.0,
                                     const Eigen::MatrixXd* centers = nullptr,
                                     const EnneperTriple* triple = nullptr);

/// Off-diagonal first and second fundamental form coefficients of a surface
/// grid in R^3, normalized. Umbilic nodes are excluded and counted.
InvariantReport check_curvature_lines(const ImmersedGrid& f, double tol = 0.0);

/// Variation of the intrinsic geodesic curvature along each coordinate curve
/// of the given axis of a surface grid.
InvariantReport check_geodesic_curvature_constancy(const ImmersedGrid& f, int axis,
                                                   double tol = 0.0);

/// Principal structure of a hypersurface grid: eigenvalue clustering of the
/// shape operator (relative gap 1e-3), alignment of the repeated eigenspace
/// with the factor-0 coordinate block, and constancy of the repeated
/// curvature along that block (Dupin condition).
InvariantReport check_principal_structure(const ImmersedGrid& f, double tol = 0.0);

/// Polar structure of a sampled metric: cross-block entries vanish, the
/// complement of each block a >= 1 is totally umbilical, and (when a
/// conformal factor is supplied and block 0 is one dimensional) the mixed
/// block of its intrinsic Hessian vanishes.
InvariantReport check_polar_conformal(const SampledMetric& metric, double tol = 0.0);

/// Conformality of a sampled map: J^T G J = lambda^2 g with J the FD
/// Jacobian, G the ambient bilinear form and g the domain metric (identity
/// when absent). lambda^2 is estimated per node by the trace and compared
/// with expected factor samples when given.
InvariantReport check_conformality(const ImmersedGrid& f, const SampledMetric* domain = nullptr,
                                   const Eigen::VectorXd* expected_lambda = nullptr,
                                   double tol = 0.0);

/// The conjunction used as the precondition of tube reconstruction:
/// orthogonal net, adapted second fundamental form, spherical leaves.
std::vector<InvariantReport> adapted_spherical_net_suite(const ImmersedGrid& f, int which_factor,
                                                         double tol = 0.0);

}  // namespace ribgeo

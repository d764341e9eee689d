#include "ribgeo/verify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "ribgeo/numerics.hpp"

namespace ribgeo {

namespace {

constexpr double kDefaultC = 10.0;

double auto_tol(const ParamGrid& grid, double tol) {
    if (tol > 0.0) return tol;
    double h = grid.max_step();
    return kDefaultC * h * h;
}

void finalize(InvariantReport& rep, const ParamGrid& grid, double tol,
              const std::vector<double>& residuals) {
    rep.grid_h = grid.max_step();
    rep.tolerance = auto_tol(grid, tol);
    rep.samples_used = std::int64_t(residuals.size());
    double mx = 0.0, s2 = 0.0;
    for (double r : residuals) {
        mx = std::max(mx, r);
        s2 += r * r;
    }
    rep.max_residual = mx;
    rep.rms_residual = residuals.empty() ? 0.0 : std::sqrt(s2 / double(residuals.size()));
}

Eigen::MatrixXd ambient_form(const ImmersedGrid& f) {
    Eigen::VectorXd d(f.ambient_dim());
    for (int i = 0; i < f.ambient_dim(); ++i) d[i] = double(f.signature()[i]);
    return d.asDiagonal();
}

/// Restriction of f to one leaf of a factor block, as its own ImmersedGrid.
ImmersedGrid restrict_to_leaf(const ImmersedGrid& f, const std::vector<int>& leaf_axes,
                              const std::vector<std::int64_t>& nodes) {
    std::vector<GridAxis> axes;
    std::vector<int> factor;
    for (int a : leaf_axes) {
        axes.push_back(f.grid().axis(a));
        factor.push_back(0);
    }
    ParamGrid leaf_grid(std::move(axes), std::move(factor));
    if (leaf_grid.size() != std::int64_t(nodes.size()))
        throw std::logic_error("restrict_to_leaf: node count mismatch");
    ImmersedGrid out(leaf_grid, f.ambient_dim(), f.signature());
    for (std::int64_t k = 0; k < leaf_grid.size(); ++k) {
        out.set_value(k, f.value(nodes[size_t(k)]));
        if (!f.node_ok(nodes[size_t(k)])) out.mask_node(k);
    }
    return out;
}

}  // namespace

SampledMetric make_sampled_metric(ParamGrid grid, std::vector<Eigen::MatrixXd> g,
                                  std::optional<Eigen::VectorXd> conformal) {
    if (std::int64_t(g.size()) != grid.size())
        throw std::invalid_argument("make_sampled_metric: one matrix per node required");
    for (const auto& m : g) {
        if (m.rows() != grid.dim() || m.cols() != grid.dim())
            throw std::invalid_argument("make_sampled_metric: matrix dimension mismatch");
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            throw std::runtime_error("make_sampled_metric: metric not symmetric");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() <= 0.0)
            throw std::runtime_error("make_sampled_metric: metric not positive definite");
    }
    if (conformal && conformal->size() != grid.size())
        throw std::invalid_argument("make_sampled_metric: conformal factor size mismatch");
    return SampledMetric{std::move(grid), std::move(g), std::move(conformal)};
}

std::vector<std::vector<std::int64_t>> leaves_of_factor(const ParamGrid& grid, int fblock) {
    std::map<std::int64_t, std::vector<std::int64_t>> buckets;
    for (std::int64_t k = 0; k < grid.size(); ++k) {
        auto idx = grid.unflat(k);
        std::int64_t key = 0;
        for (int i = 0; i < grid.dim(); ++i)
            if (grid.factor_of(i) != fblock) key += grid.stride(i) * idx[i];
        buckets[key].push_back(k);
    }
    std::vector<std::vector<std::int64_t>> out;
    out.reserve(buckets.size());
    for (auto& [key, nodes] : buckets) out.push_back(std::move(nodes));
    return out;
}

InvariantReport check_orthogonal_net(const ImmersedGrid& f, double tol) {
    InvariantReport rep;
    rep.name = "orthogonal_net";
    if (f.grid().num_factors() < 2)
        throw std::invalid_argument("check_orthogonal_net: factor partition required");
    std::vector<Eigen::MatrixXd> metric = induced_metric(f);
    std::vector<double> res;
    for (std::int64_t k = 0; k < f.grid().size(); ++k) {
        if (!f.node_ok(k)) {
            ++rep.samples_excluded;
            continue;
        }
        const Eigen::MatrixXd& g = metric[size_t(k)];
        for (int i = 0; i < f.grid().dim(); ++i)
            for (int j = i + 1; j < f.grid().dim(); ++j) {
                if (f.grid().factor_of(i) == f.grid().factor_of(j)) continue;
                res.push_back(std::abs(g(i, j)) / std::sqrt(std::abs(g(i, i) * g(j, j)) + 1e-300));
            }
    }
    finalize(rep, f.grid(), tol, res);
    return rep;
}

InvariantReport check_adapted_second_fundamental_form(const ImmersedGrid& f, double tol) {
    InvariantReport rep;
    rep.name = "adapted_second_fundamental_form";
    if (f.grid().num_factors() < 2)
        throw std::invalid_argument("check_adapted_second_fundamental_form: factor partition required");
    std::vector<Eigen::MatrixXd> df = partials(f);
    std::vector<Eigen::MatrixXd> metric = induced_metric(f, df);
    SecondPartials d2(f);
    TangentFrames frames = tangent_frames(f, df);
    std::vector<double> res;
    for (std::int64_t k = 0; k < f.grid().size(); ++k) {
        if (!f.node_ok(k) || !frames.full_rank[size_t(k)]) {
            ++rep.samples_excluded;
            continue;
        }
        const Eigen::MatrixXd& g = metric[size_t(k)];
        for (int i = 0; i < f.grid().dim(); ++i)
            for (int j = i + 1; j < f.grid().dim(); ++j) {
                if (f.grid().factor_of(i) == f.grid().factor_of(j)) continue;
                Eigen::VectorXd nor = normal_project(frames, k, d2.at(i, j).col(k));
                res.push_back(nor.norm() / std::sqrt(std::abs(g(i, i) * g(j, j)) + 1e-300));
            }
    }
    finalize(rep, f.grid(), tol, res);
    return rep;
}

InvariantReport check_spherical_leaves(const ImmersedGrid& f, int which_factor, double tol,
                                       LeafSphereFits* fits) {
    InvariantReport rep;
    rep.name = "spherical_leaves";
    std::vector<int> leaf_axes = f.grid().axes_of_factor(which_factor);
    if (leaf_axes.empty())
        throw std::invalid_argument("check_spherical_leaves: empty factor block");
    auto leaves = leaves_of_factor(f.grid(), which_factor);
    std::vector<double> res;
    int plane_like_count = 0, skipped = 0;
    for (const auto& nodes : leaves) {
        std::vector<Eigen::VectorXd> pts;
        bool any_mask = false;
        for (std::int64_t k : nodes) {
            if (f.node_ok(k))
                pts.push_back(f.value(k));
            else
                any_mask = true;
        }
        if (std::int64_t(pts.size()) < f.ambient_dim() + 2) {
            ++skipped;
            if (fits) {
                fits->center.emplace_back();
                fits->radius.push_back(0.0);
                fits->plane_like.push_back(0);
            }
            continue;
        }
        // a leaf whose affine span has the leaf's own dimension is a piece of
        // an affine subspace: "sphere of infinite radius", flagged not failed
        Eigen::MatrixXd cloud(f.ambient_dim(), std::int64_t(pts.size()));
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(f.ambient_dim());
        for (const auto& p : pts) centroid += p;
        centroid /= double(pts.size());
        for (size_t i = 0; i < pts.size(); ++i) cloud.col(std::int64_t(i)) = pts[i] - centroid;
        Eigen::JacobiSVD<Eigen::MatrixXd> span(cloud);
        const int leaf_dim = int(leaf_axes.size());
        bool plane_like = leaf_dim < span.singularValues().size() &&
                          span.singularValues()[leaf_dim] < 1e-8 * span.singularValues()[0];

        FitResult sphere = fit_sphere(pts);
        if (fits) {
            fits->center.push_back(sphere.center_or_normal);
            fits->radius.push_back(sphere.radius_or_offset);
            fits->plane_like.push_back(plane_like ? 1 : 0);
        }
        if (plane_like) {
            ++plane_like_count;
            continue;
        }
        double r = sphere.radius_or_offset;
        if (!(r > 1e-14)) {
            ++skipped;
            continue;
        }
        res.push_back(sphere.rms / r);

        // orthogonality of f - center to the leaf tangents
        ImmersedGrid leaf = restrict_to_leaf(f, leaf_axes, nodes);
        std::vector<Eigen::MatrixXd> dleaf = partials(leaf);
        for (std::int64_t k = 0; k < leaf.grid().size(); ++k) {
            if (!leaf.node_ok(k)) continue;
            Eigen::VectorXd rad = leaf.value(k) - sphere.center_or_normal;
            for (const auto& d : dleaf) {
                double dn = d.col(k).norm();
                if (dn < 1e-14) continue;
                res.push_back(std::abs(rad.dot(d.col(k))) / (r * dn));
            }
        }

        // constancy of the extrinsic center estimate f + Z/|Z|^2
        if (!any_mask) {
            std::vector<Eigen::MatrixXd> gl = induced_metric(leaf, dleaf);
            SecondPartials d2(leaf);
            TangentFrames frames = tangent_frames(leaf, dleaf);
            int d = leaf.grid().dim();
            Eigen::MatrixXd centers(f.ambient_dim(), leaf.grid().size());
            std::int64_t used = 0;
            for (std::int64_t k = 0; k < leaf.grid().size(); ++k) {
                if (!frames.full_rank[size_t(k)]) continue;
                Eigen::MatrixXd ginv = gl[size_t(k)].inverse();
                Eigen::VectorXd Z = Eigen::VectorXd::Zero(f.ambient_dim());
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j)
                        Z += ginv(i, j) * normal_project(frames, k, d2.at(i, j).col(k));
                Z /= double(d);
                double z2 = Z.squaredNorm();
                if (z2 < 1e-14) continue;
                centers.col(used++) = leaf.value(k) + Z / z2;
            }
            if (used > 1) {
                Eigen::VectorXd mean = centers.leftCols(used).rowwise().mean();
                for (std::int64_t k = 0; k < used; ++k)
                    res.push_back((centers.col(k) - mean).norm() / r);
            }
        }
    }
    if (plane_like_count > 0)
        rep.notes.push_back("plane-like leaves: " + std::to_string(plane_like_count));
    if (skipped > 0) rep.notes.push_back("leaves skipped (too few samples): " + std::to_string(skipped));
    rep.samples_excluded = skipped;
    finalize(rep, f.grid(), tol, res);
    return rep;
}

InvariantReport check_constant_angle(const ImmersedGrid& f, int which_factor,
                                     const Eigen::MatrixXd& normals, double tol,
                                     const Eigen::MatrixXd* centers,
                                     const EnneperTriple* triple) {
    InvariantReport rep;
    rep.name = "constant_angle";
    if (normals.rows() != f.ambient_dim() || normals.cols() != f.grid().size())
        throw std::invalid_argument("check_constant_angle: normal samples size mismatch");
    if (!centers && triple) centers = &triple->gamma;
    auto leaves = leaves_of_factor(f.grid(), which_factor);
    LeafSphereFits fits;
    if (!centers) check_spherical_leaves(f, which_factor, tol, &fits);
    if (centers && centers->cols() != std::int64_t(leaves.size()))
        throw std::invalid_argument("check_constant_angle: one center per leaf required");
    std::vector<double> res;
    int degenerate = 0;
    for (size_t li = 0; li < leaves.size(); ++li) {
        if (!centers && (fits.center[li].size() == 0 || fits.plane_like[li])) {
            ++degenerate;
            continue;
        }
        Eigen::VectorXd center = centers ? Eigen::VectorXd(centers->col(std::int64_t(li)))
                                         : fits.center[li];
        std::vector<double> cosines;
        for (std::int64_t k : leaves[li]) {
            if (!f.node_ok(k)) continue;
            Eigen::VectorXd rad = f.value(k) - center;
            double rn = rad.norm();
            if (rn < 1e-14) continue;
            cosines.push_back(rad.dot(normals.col(k)) / (rn * normals.col(k).norm()));
        }
        if (cosines.size() < 2) {
            ++degenerate;
            continue;
        }
        double mean = 0.0;
        for (double c : cosines) mean += c;
        mean /= double(cosines.size());
        double var = 0.0;
        for (double c : cosines) var += (c - mean) * (c - mean);
        res.push_back(std::sqrt(var / double(cosines.size())));
        if (triple) {
            double al = triple->alpha.values[std::int64_t(li)];
            double be = triple->beta.values[std::int64_t(li)];
            double expect = al / std::sqrt(al * al + be * be);
            res.push_back(std::abs(std::abs(mean) - std::abs(expect)));
        }
    }
    if (degenerate > 0)
        rep.notes.push_back("degenerate leaves: " + std::to_string(degenerate));
    finalize(rep, f.grid(), tol, res);
    return rep;
}

InvariantReport check_curvature_lines(const ImmersedGrid& f, double tol) {
    InvariantReport rep;
    rep.name = "curvature_lines";
    if (f.grid().dim() != 2 || f.ambient_dim() != 3)
        throw std::invalid_argument("check_curvature_lines: surface grid in R^3 required");
    std::vector<Eigen::MatrixXd> df = partials(f);
    std::vector<Eigen::MatrixXd> metric = induced_metric(f, df);
    SecondPartials d2(f);
    std::vector<double> res;
    for (std::int64_t k = 0; k < f.grid().size(); ++k) {
        if (!f.node_ok(k)) {
            ++rep.samples_excluded;
            continue;
        }
        Eigen::Vector3d fu = df[0].col(k), fv = df[1].col(k);
        Eigen::Vector3d N = fu.cross(fv);
        if (N.norm() < 1e-14) {
            ++rep.samples_excluded;
            continue;
        }
        N.normalize();
        const Eigen::MatrixXd& g = metric[size_t(k)];
        Eigen::Matrix2d II;
        II << d2.at(0, 0).col(k).dot(N), d2.at(0, 1).col(k).dot(N),
              d2.at(0, 1).col(k).dot(N), d2.at(1, 1).col(k).dot(N);
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix2d> eig(II, g);
        double k1 = eig.eigenvalues()[0], k2 = eig.eigenvalues()[1];
        double kscale = std::max(std::abs(k1), std::abs(k2));
        if (std::abs(k1 - k2) <= 1e-3 * std::max(kscale, 1e-12)) {
            ++rep.samples_excluded;  // umbilic: lines of curvature undefined
            continue;
        }
        res.push_back(std::abs(g(0, 1)) / std::sqrt(std::abs(g(0, 0) * g(1, 1)) + 1e-300));
        double iiscale = std::max({std::abs(II(0, 0)), std::abs(II(0, 1)), std::abs(II(1, 1))});
        res.push_back(std::abs(II(0, 1)) / (iiscale + 1e-300));
    }
    if (rep.samples_excluded > 0)
        rep.notes.push_back("umbilic or degenerate nodes excluded: " +
                            std::to_string(rep.samples_excluded));
    finalize(rep, f.grid(), tol, res);
    return rep;
}

InvariantReport check_geodesic_curvature_constancy(const ImmersedGrid& f, int axis, double tol) {
    InvariantReport rep;
    rep.name = "geodesic_curvature_constancy";
    if (f.grid().dim() != 2)
        throw std::invalid_argument("check_geodesic_curvature_constancy: surface grid required");
    std::vector<Eigen::MatrixXd> metric = induced_metric(f);
    auto gamma = christoffels(metric, f.grid());

    // geodesic curvature of the coordinate curve through each node
    Eigen::VectorXd kg(f.grid().size());
    for (std::int64_t k = 0; k < f.grid().size(); ++k) {
        const Eigen::MatrixXd& g = metric[size_t(k)];
        Eigen::Vector2d A(gamma[size_t(k)][0](axis, axis), gamma[size_t(k)][1](axis, axis));
        double vv = g(axis, axis);
        double av = (g * A)[axis];
        double perp2 = std::max(0.0, A.dot(g * A) - av * av / vv);
        kg[k] = std::sqrt(perp2) / vv;
    }

    // curves of the axis = leaves of a one-axis partition along `axis`
    const int other = 1 - axis;
    std::vector<double> res;
    double scale = std::max(1.0, kg.cwiseAbs().maxCoeff());
    for (int io = 0; io < f.grid().axis(other).count; ++io) {
        double lo = 1e300, hi = -1e300;
        bool any = false;
        for (int ia = 0; ia < f.grid().axis(axis).count; ++ia) {
            std::vector<int> idx(2);
            idx[axis] = ia;
            idx[other] = io;
            std::int64_t k = f.grid().flat(idx);
            if (!f.node_ok(k)) continue;
            lo = std::min(lo, kg[k]);
            hi = std::max(hi, kg[k]);
            any = true;
        }
        if (any) res.push_back((hi - lo) / scale);
    }
    finalize(rep, f.grid(), tol, res);
    return rep;
}

InvariantReport check_principal_structure(const ImmersedGrid& f, double tol) {
    InvariantReport rep;
    rep.name = "principal_structure";
    const int d = f.grid().dim();
    if (f.ambient_dim() != d + 1)
        throw std::invalid_argument("check_principal_structure: hypersurface grid required");
    std::vector<Eigen::MatrixXd> df = partials(f);
    std::vector<Eigen::MatrixXd> metric = induced_metric(f, df);
    SecondPartials d2(f);
    std::vector<int> f0 = f.grid().axes_of_factor(0);

    const double gap = 1e-3;
    Eigen::VectorXd lam_rep(f.grid().size());
    std::vector<std::uint8_t> ok(size_t(f.grid().size()), 0);
    std::vector<double> res;
    std::map<int, std::int64_t> multiplicity_hist;
    Eigen::VectorXd prevN;
    std::int64_t umbilic = 0;

    for (std::int64_t k = 0; k < f.grid().size(); ++k) {
        if (!f.node_ok(k)) {
            ++rep.samples_excluded;
            continue;
        }
        Eigen::MatrixXd J(f.ambient_dim(), d);
        for (int i = 0; i < d; ++i) J.col(i) = df[size_t(i)].col(k);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeFullU);
        if (svd.singularValues()[d - 1] < 1e-10 * svd.singularValues()[0]) {
            ++rep.samples_excluded;
            continue;
        }
        Eigen::VectorXd N = svd.matrixU().col(d);
        if (prevN.size() && prevN.dot(N) < 0.0) N = -N;  // keep the field continuous
        prevN = N;

        Eigen::MatrixXd II(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) II(i, j) = II(j, i) = d2.at(i, j).col(k).dot(N);
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(II, metric[size_t(k)]);
        Eigen::VectorXd lam = eig.eigenvalues();
        double scale = std::max(lam.cwiseAbs().maxCoeff(), 1e-12);

        // split at the largest eigenvalue gap; below the cluster threshold the
        // node is umbilic and excluded
        int cut = 0;
        double best = -1.0;
        for (int i = 0; i + 1 < d; ++i)
            if (lam[i + 1] - lam[i] > best) {
                best = lam[i + 1] - lam[i];
                cut = i + 1;
            }
        if (best <= gap * scale) {
            ++umbilic;
            ++rep.samples_excluded;
            continue;
        }
        // candidate clusters [0, cut) and [cut, d); the repeated one is the
        // cluster whose eigenspace aligns with the factor-0 coordinate block
        // (eigenvectors are g-orthonormal, so V V^T g projects)
        auto alignment = [&](int begin, int size) {
            Eigen::MatrixXd V = eig.eigenvectors().middleCols(begin, size);
            Eigen::MatrixXd P = V * V.transpose() * metric[size_t(k)];
            double worst = 0.0;
            for (int i : f0) {
                Eigen::VectorXd e = Eigen::VectorXd::Unit(d, i);
                Eigen::VectorXd out = e - P * e;
                worst = std::max(worst, std::sqrt(std::abs(out.dot(metric[size_t(k)] * out) /
                                                           metric[size_t(k)](i, i))));
            }
            return worst;
        };
        bool lo_match = cut == int(f0.size());
        bool hi_match = d - cut == int(f0.size());
        int rep_begin, rep_size;
        if (lo_match && (!hi_match || alignment(0, cut) <= alignment(cut, d - cut))) {
            rep_begin = 0;
            rep_size = cut;
        } else if (hi_match) {
            rep_begin = cut;
            rep_size = d - cut;
        } else {  // no cluster matches the factor block: report the larger one
            rep_begin = cut >= d - cut ? 0 : cut;
            rep_size = std::max(cut, d - cut);
        }
        ++multiplicity_hist[rep_size];
        if (lo_match || hi_match) res.push_back(alignment(rep_begin, rep_size));

        double mean = 0.0;
        for (int i = 0; i < rep_size; ++i) mean += lam[rep_begin + i];
        lam_rep[k] = mean / double(rep_size);
        ok[size_t(k)] = 1;
    }

    // Dupin condition: the repeated curvature is constant along the factor-0
    // directions
    if (!f0.empty()) {
        Eigen::MatrixXd field = lam_rep.transpose();
        double lscale = std::max(1.0, lam_rep.cwiseAbs().maxCoeff());
        for (int axis : f0) {
            Eigen::MatrixXd dl = central_diff(field, f.grid(), axis);
            for (std::int64_t k = 0; k < f.grid().size(); ++k) {
                if (!ok[size_t(k)]) continue;
                // the eigenvalue field is itself FD-derived, so one-sided
                // boundary stencils lose an order; skip the boundary layer
                // and stencils that touch excluded nodes
                auto idx = f.grid().unflat(k);
                if (idx[axis] < 3 || idx[axis] > f.grid().axis(axis).count - 4) continue;
                bool clean = true;
                for (int off = -2; off <= 2; ++off) {
                    int ii = idx[axis] + off;
                    if (ii < 0 || ii >= f.grid().axis(axis).count) continue;
                    auto jdx = idx;
                    jdx[axis] = ii;
                    if (!ok[size_t(f.grid().flat(jdx))]) clean = false;
                }
                if (clean) res.push_back(std::abs(dl(0, k)) / lscale);
            }
        }
    }

    for (const auto& [m, count] : multiplicity_hist)
        rep.notes.push_back("multiplicity " + std::to_string(m) + " at " +
                            std::to_string(count) + " nodes");
    if (umbilic > 0) rep.notes.push_back("umbilic nodes: " + std::to_string(umbilic));
    if (umbilic == f.grid().size()) rep.notes.push_back("umbilic everywhere");
    finalize(rep, f.grid(), tol, res);
    return rep;
}

InvariantReport check_polar_conformal(const SampledMetric& metric, double tol) {
    InvariantReport rep;
    rep.name = "polar_conformal";
    const ParamGrid& grid = metric.grid;
    const int d = grid.dim();
    if (grid.num_factors() < 2)
        throw std::invalid_argument("check_polar_conformal: factor partition required");
    std::vector<double> res;

    // (a) cross-block metric entries
    for (std::int64_t k = 0; k < grid.size(); ++k) {
        const Eigen::MatrixXd& g = metric.g[size_t(k)];
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j)
                if (grid.factor_of(i) != grid.factor_of(j))
                    res.push_back(std::abs(g(i, j)) /
                                  std::sqrt(std::abs(g(i, i) * g(j, j)) + 1e-300));
    }

    // (b) umbilicity of the complement of each block a >= 1: the second
    // fundamental form Gamma^c_{ij} (i, j outside block a, c inside) must be
    // proportional to the restricted metric
    auto gamma = christoffels(metric.g, grid);
    for (int a = 1; a < grid.num_factors(); ++a) {
        std::vector<int> inside = grid.axes_of_factor(a);
        std::vector<int> outside;
        for (int i = 0; i < d; ++i)
            if (grid.factor_of(i) != a) outside.push_back(i);
        const int m = int(outside.size());
        if (m < 2) continue;  // one dimensional distributions are always umbilical
        for (std::int64_t k = 0; k < grid.size(); ++k) {
            const Eigen::MatrixXd& g = metric.g[size_t(k)];
            Eigen::MatrixXd gr(m, m);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) gr(i, j) = g(outside[i], outside[j]);
            Eigen::MatrixXd grinv = gr.inverse();
            double gscale = gr.cwiseAbs().maxCoeff();
            for (int c : inside) {
                Eigen::MatrixXd B(m, m);
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < m; ++j)
                        B(i, j) = gamma[size_t(k)][size_t(c)](outside[i], outside[j]);
                double omega = (grinv * B).trace() / double(m);
                res.push_back((B - omega * gr).cwiseAbs().maxCoeff() / gscale);
            }
        }
    }

    // (c) mixed Hessian block of the conformal factor when block 0 is a curve
    if (metric.conformal && int(grid.axes_of_factor(0).size()) == 1) {
        auto hess = intrinsic_hessian(*metric.conformal, grid, gamma);
        int i0 = grid.axes_of_factor(0)[0];
        double lscale = std::max(1.0, metric.conformal->cwiseAbs().maxCoeff());
        for (std::int64_t k = 0; k < grid.size(); ++k)
            for (int j = 0; j < d; ++j)
                if (j != i0) res.push_back(std::abs(hess[size_t(k)](i0, j)) / lscale);
        rep.notes.push_back("conformal factor mixed Hessian included");
    }

    finalize(rep, grid, tol, res);
    return rep;
}

InvariantReport check_conformality(const ImmersedGrid& f, const SampledMetric* domain,
                                   const Eigen::VectorXd* expected_lambda, double tol) {
    InvariantReport rep;
    rep.name = "conformality";
    const int d = f.grid().dim();
    if (domain && !domain->grid.same_shape(f.grid()))
        throw std::invalid_argument("check_conformality: domain metric grid mismatch");
    std::vector<Eigen::MatrixXd> df = partials(f);
    Eigen::MatrixXd G = ambient_form(f);
    std::vector<double> res;
    for (std::int64_t k = 0; k < f.grid().size(); ++k) {
        if (!f.node_ok(k)) {
            ++rep.samples_excluded;
            continue;
        }
        Eigen::MatrixXd J(f.ambient_dim(), d);
        for (int i = 0; i < d; ++i) J.col(i) = df[size_t(i)].col(k);
        Eigen::MatrixXd pull = J.transpose() * G * J;
        Eigen::MatrixXd g = domain ? domain->g[size_t(k)]
                                   : Eigen::MatrixXd(Eigen::MatrixXd::Identity(d, d));
        Eigen::MatrixXd ginv = g.inverse();
        double lam2 = (ginv * pull).trace() / double(d);
        if (lam2 <= 0.0) {
            ++rep.samples_excluded;
            continue;
        }
        double gscale = g.cwiseAbs().maxCoeff();
        res.push_back((pull - lam2 * g).cwiseAbs().maxCoeff() / (lam2 * gscale));
        if (expected_lambda) {
            double le = (*expected_lambda)[k];
            res.push_back(std::abs(std::sqrt(lam2) - le) / std::abs(le));
        }
    }
    finalize(rep, f.grid(), tol, res);
    return rep;
}

std::vector<InvariantReport> adapted_spherical_net_suite(const ImmersedGrid& f, int which_factor,
                                                         double tol) {
    std::vector<InvariantReport> out;
    out.push_back(check_orthogonal_net(f, tol));
    out.push_back(check_adapted_second_fundamental_form(f, tol));
    out.push_back(check_spherical_leaves(f, which_factor, tol));
    return out;
}

}  // namespace ribgeo

#include "ribgeo/partial_tube.hpp"

#include "ribgeo/numerics.hpp"

#include <cmath>

namespace ribgeo {

namespace {

Eigen::MatrixXd diff_along(const Eigen::MatrixXd& vals, const ParamGrid& g) {
    return central_diff(vals, g, 0);
}

/// Drop the affine offset of a non-substantial fiber into beta and restrict
/// the frame to the directions actually spanned.
void normalize_fiber(PartialTubeSpec& spec) {
    const int k = spec.frame_dim();
    const std::int64_t n0 = spec.fiber_grid.size();
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(k);
    std::int64_t used = 0;
    for (std::int64_t i = 0; i < n0; ++i) {
        if (!spec.fiber_mask.empty() && !spec.fiber_mask[size_t(i)]) continue;
        centroid += spec.f0.col(i);
        ++used;
    }
    if (used == 0) throw std::invalid_argument("build_partial_tube: empty fiber");
    centroid /= double(used);
    Eigen::MatrixXd centered(k, used);
    std::int64_t c = 0;
    for (std::int64_t i = 0; i < n0; ++i) {
        if (!spec.fiber_mask.empty() && !spec.fiber_mask[size_t(i)]) continue;
        centered.col(c++) = spec.f0.col(i) - centroid;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
    double s0 = svd.singularValues()[0];
    int rank = 0;
    for (int a = 0; a < svd.singularValues().size(); ++a)
        if (svd.singularValues()[a] > 1e-8 * s0) ++rank;
    if (rank == k) return;

    spec.fiber_substantial = false;
    Eigen::MatrixXd W = svd.matrixU().leftCols(rank);  // k x rank
    for (int a = 0; a < k; ++a) spec.beta += centroid[a] * spec.xi[size_t(a)];
    std::vector<Eigen::MatrixXd> xi_new;
    xi_new.reserve(size_t(rank));
    for (int b = 0; b < rank; ++b) {
        Eigen::MatrixXd x = Eigen::MatrixXd::Zero(spec.f1.rows(), spec.f1.cols());
        for (int a = 0; a < k; ++a) x += W(a, b) * spec.xi[size_t(a)];
        xi_new.push_back(std::move(x));
    }
    spec.xi = std::move(xi_new);
    spec.f0 = (W.transpose() * (spec.f0.colwise() - centroid)).eval();
}

}  // namespace

PartialTubeSpec make_tube_spec(const SampledCurveFrame& curve, const ScalarAlongCurve& phi,
                               const std::vector<ScalarAlongCurve>& beta_coeff,
                               const ParamGrid& fiber_grid, const Eigen::MatrixXd& f0) {
    const int k = int(f0.rows());
    if (k > curve.num_normals())
        throw std::invalid_argument("make_tube_spec: fiber dimension exceeds the normal frame");
    if (int(beta_coeff.size()) != curve.num_normals())
        throw std::invalid_argument("make_tube_spec: one beta coefficient per frame normal required");
    if (f0.cols() != fiber_grid.size())
        throw std::invalid_argument("make_tube_spec: fiber sample count mismatch");
    if (phi.values.size() != curve.nodes())
        throw std::invalid_argument("make_tube_spec: phi sample count mismatch");

    PartialTubeSpec spec;
    spec.s_grid = curve.s_grid;
    spec.f1 = curve.gamma;
    spec.phi = phi.values;
    spec.beta = Eigen::MatrixXd::Zero(curve.ambient_dim, curve.nodes());
    for (int i = 0; i < curve.num_normals(); ++i)
        for (std::int64_t j = 0; j < curve.nodes(); ++j)
            spec.beta.col(j) += beta_coeff[size_t(i)].values[j] * curve.xi[size_t(i)].col(j);
    spec.xi.assign(curve.xi.begin(), curve.xi.begin() + k);
    spec.fiber_grid = fiber_grid;
    spec.f0 = f0;
    return spec;
}

TubeEvaluation build_partial_tube(const PartialTubeSpec& spec_in) {
    TubeEvaluation ev;
    ev.spec = spec_in;
    normalize_fiber(ev.spec);
    const PartialTubeSpec& spec = ev.spec;

    const int m = spec.ambient_dim();
    const int k = spec.frame_dim();
    const int ns = spec.s_grid.axis(0).count;
    const int m0 = spec.fiber_grid.dim();
    const std::int64_t n0 = spec.fiber_grid.size();
    if (spec.phi.size() != ns || spec.beta.cols() != ns)
        throw std::invalid_argument("build_partial_tube: base sample count mismatch");
    for (const auto& x : spec.xi)
        if (x.rows() != m || x.cols() != ns)
            throw std::invalid_argument("build_partial_tube: frame shape mismatch");

    // base-slice caches
    ev.f1_d = diff_along(spec.f1, spec.s_grid);
    ev.f1_dd = diff_along(ev.f1_d, spec.s_grid);
    ev.dphi = diff_along(spec.phi.transpose(), spec.s_grid).transpose();
    Eigen::VectorXd ddphi = diff_along(ev.dphi.transpose(), spec.s_grid).transpose();
    ev.g11.resize(ns);
    for (int j = 0; j < ns; ++j) ev.g11[j] = ev.f1_d.col(j).squaredNorm();

    // frame orthonormality and parallelism in the normal connection
    double fres = 0.0;
    std::vector<Eigen::MatrixXd> dxi;
    dxi.reserve(size_t(k));
    for (const auto& x : spec.xi) dxi.push_back(diff_along(x, spec.s_grid));
    for (int j = 0; j < ns; ++j) {
        for (int a = 0; a < k; ++a) {
            for (int b = a; b < k; ++b) {
                double want = a == b ? 1.0 : 0.0;
                fres = std::max(fres, std::abs(spec.xi[size_t(a)].col(j).dot(spec.xi[size_t(b)].col(j)) - want));
            }
            Eigen::VectorXd d = dxi[size_t(a)].col(j);
            Eigen::VectorXd nrm = d - (d.dot(ev.f1_d.col(j)) / ev.g11[j]) * ev.f1_d.col(j);
            fres = std::max(fres, nrm.norm() / std::max(1.0, std::sqrt(ev.g11[j])));
        }
        double bn = spec.beta.col(j).norm();
        if (bn > 0.0)
            ev.beta_residual = std::max(ev.beta_residual,
                                        std::abs(spec.beta.col(j).dot(ev.f1_d.col(j))) /
                                            (bn * std::sqrt(ev.g11[j])));
    }
    ev.frame_residual = fres;

    // product grid: fiber axes (factor 0) then the base axis (factor 1)
    std::vector<GridAxis> axes;
    std::vector<int> factor;
    for (int i = 0; i < m0; ++i) {
        axes.push_back(spec.fiber_grid.axis(i));
        factor.push_back(0);
    }
    axes.push_back(spec.s_grid.axis(0));
    factor.push_back(1);
    ParamGrid pg(axes, factor);
    ev.f = ImmersedGrid(pg, m);

    const std::int64_t n = pg.size();
    ev.F.resize(m, n);
    ev.nu.resize(n);
    ev.phi.resize(n);
    ev.Phi_op.resize(n);
    ev.D_op.resize(n);
    ev.regular_mask.assign(size_t(n), 0);

    double phi_scale = spec.phi.cwiseAbs().maxCoeff();
    std::int64_t regular = 0;
    for (std::int64_t i = 0; i < n0; ++i) {
        bool fiber_ok = spec.fiber_mask.empty() || spec.fiber_mask[size_t(i)];
        for (int j = 0; j < ns; ++j) {
            std::int64_t kk = ev.node(i, j);
            Eigen::VectorXd S = spec.beta.col(j);
            for (int a = 0; a < k; ++a) S += spec.f0(a, i) * spec.xi[size_t(a)].col(j);
            Eigen::VectorXd F = (ev.dphi[j] / ev.g11[j]) * ev.f1_d.col(j) + S;
            double F2 = F.squaredNorm();
            double nu = F2 > 0.0 ? 1.0 / F2 : 0.0;
            double gamma1 = ev.f1_dd.col(j).dot(ev.f1_d.col(j)) / ev.g11[j];
            double phi_cov = ddphi[j] - gamma1 * ev.dphi[j] - ev.f1_dd.col(j).dot(S);
            double phi_op = phi_cov / ev.g11[j];
            double D = 1.0 - 2.0 * nu * spec.phi[j] * phi_op;

            ev.F.col(kk) = F;
            ev.nu[kk] = nu;
            ev.phi[kk] = spec.phi[j];
            ev.Phi_op[kk] = phi_op;
            ev.D_op[kk] = D;
            ev.f.set_value(kk, spec.f1.col(j) - 2.0 * nu * spec.phi[j] * F);

            bool ok = fiber_ok && std::abs(spec.phi[j]) > 1e-12 * std::max(phi_scale, 1.0) &&
                      F2 > 1e-24 && std::abs(D) > 1e-8;
            if (ok) {
                ev.regular_mask[size_t(kk)] = 1;
                ++regular;
            } else {
                ev.f.mask_node(kk);
            }
        }
    }
    if (regular == 0) throw std::runtime_error("build_partial_tube: every node is irregular");

    // fiber metric (flat metric of f0 in R^k)
    ImmersedGrid fib(spec.fiber_grid, k);
    fib.values() = spec.f0;
    ev.fiber_metric = induced_metric(fib);
    return ev;
}

std::vector<Eigen::MatrixXd> predicted_metric(const TubeEvaluation& ev) {
    const int m0 = ev.spec.fiber_grid.dim();
    const int d = m0 + 1;
    const int ns = ev.spec.s_grid.axis(0).count;
    const std::int64_t n = ev.f.grid().size();
    std::vector<Eigen::MatrixXd> out(size_t(n), Eigen::MatrixXd::Zero(d, d));
    for (std::int64_t kk = 0; kk < n; ++kk) {
        if (!ev.regular_mask[size_t(kk)]) continue;
        std::int64_t i = kk / ns;
        int j = int(kk % ns);
        double c = 4.0 * ev.nu[kk] * ev.nu[kk] * ev.phi[kk] * ev.phi[kk];
        out[size_t(kk)].topLeftCorner(m0, m0) = c * ev.fiber_metric[size_t(i)];
        out[size_t(kk)](m0, m0) = ev.D_op[kk] * ev.D_op[kk] * ev.g11[j];
    }
    return out;
}

ShapeOperatorBlocks predicted_shape_operators(const TubeEvaluation& ev,
                                              const Eigen::MatrixXd& delta,
                                              const Eigen::MatrixXd& zeta) {
    const int m0 = ev.spec.fiber_grid.dim();
    const int d = m0 + 1;
    const int k = ev.spec.frame_dim();
    const int ns = ev.spec.s_grid.axis(0).count;
    const std::int64_t n0 = ev.spec.fiber_grid.size();
    const std::int64_t n = ev.f.grid().size();
    ShapeOperatorBlocks out;

    if (delta.cols() > 0) {
        if (delta.cols() != ns || delta.rows() != ev.spec.f1.rows())
            throw std::invalid_argument("predicted_shape_operators: delta shape mismatch");
        out.delta_op.assign(size_t(n), Eigen::MatrixXd::Zero(d, d));
        for (std::int64_t kk = 0; kk < n; ++kk) {
            if (!ev.regular_mask[size_t(kk)]) continue;
            int j = int(kk % ns);
            double a1 = ev.f1_dd.col(j).dot(delta.col(j)) / ev.g11[j];
            double bd = ev.spec.beta.col(j).dot(delta.col(j));
            auto& M = out.delta_op[size_t(kk)];
            M.topLeftCorner(m0, m0) =
                (-bd / ev.phi[kk]) * Eigen::MatrixXd::Identity(m0, m0);
            M(m0, m0) = (a1 + 2.0 * ev.nu[kk] * bd * ev.Phi_op[kk]) / ev.D_op[kk];
        }
    }

    if (zeta.cols() > 0) {
        if (zeta.cols() != n0 || zeta.rows() != k)
            throw std::invalid_argument("predicted_shape_operators: zeta shape mismatch");
        ImmersedGrid fib(ev.spec.fiber_grid, k);
        fib.values() = ev.spec.f0;
        SecondPartials d2(fib);
        out.zeta_op.assign(size_t(n), Eigen::MatrixXd::Zero(d, d));
        for (std::int64_t i = 0; i < n0; ++i) {
            // fiber shape operator of f0 with respect to zeta(i)
            Eigen::MatrixXd II(m0, m0);
            for (int a = 0; a < m0; ++a)
                for (int b = a; b < m0; ++b) {
                    double v = d2.at(a, b).col(i).dot(zeta.col(i));
                    II(a, b) = v;
                    II(b, a) = v;
                }
            Eigen::MatrixXd A0 = ev.fiber_metric[size_t(i)].inverse() * II;
            for (int j = 0; j < ns; ++j) {
                std::int64_t kk = ev.node(i, j);
                if (!ev.regular_mask[size_t(kk)]) continue;
                Eigen::VectorXd psi_z = Eigen::VectorXd::Zero(ev.spec.f1.rows());
                for (int a = 0; a < k; ++a) psi_z += zeta(a, i) * ev.spec.xi[size_t(a)].col(j);
                double zf = psi_z.dot(ev.F.col(kk));
                auto& M = out.zeta_op[size_t(kk)];
                M.topLeftCorner(m0, m0) =
                    (-1.0 / ev.phi[kk]) *
                    (A0 / (2.0 * ev.nu[kk]) + zf * Eigen::MatrixXd::Identity(m0, m0));
                double a1 = ev.f1_dd.col(j).dot(psi_z) / ev.g11[j];
                M(m0, m0) = (a1 + 2.0 * ev.nu[kk] * zf * ev.Phi_op[kk]) / ev.D_op[kk];
            }
        }
    }
    return out;
}

namespace {

TubeEvaluation family_impl(const SampledCurveFrame& curve, const ScalarAlongCurve& phi,
                           const std::vector<ScalarAlongCurve>& beta_coeff,
                           const ParamGrid& fiber_grid, const Eigen::MatrixXd& fiber,
                           const char* what) {
    double h = std::max(curve.s_grid.max_step(), fiber_grid.max_step());
    Eigen::VectorXd dphi = phi.deriv_or_fd();
    for (int i = 0; i < curve.num_normals(); ++i) {
        Eigen::VectorXd db = beta_coeff[size_t(i)].deriv_or_fd();
        for (std::int64_t j = 0; j < curve.nodes(); ++j)
            if (std::abs(db[j] + dphi[j] * curve.k[size_t(i)][j]) > 100.0 * h * h)
                throw std::invalid_argument(std::string(what) +
                                            ": beta' + phi' k residual above tolerance");
    }
    return build_partial_tube(make_tube_spec(curve, phi, beta_coeff, fiber_grid, fiber));
}

}  // namespace

TubeEvaluation surface_family(const SampledCurveFrame& curve, const ScalarAlongCurve& phi,
                              const std::vector<ScalarAlongCurve>& beta_coeff,
                              const ParamGrid& fiber_grid, const Eigen::MatrixXd& alpha) {
    if (fiber_grid.dim() != 1)
        throw std::invalid_argument("surface_family: fiber must be a curve");
    // unit-speed fiber check
    Eigen::MatrixXd da = central_diff(alpha, fiber_grid, 0);
    double h = fiber_grid.max_step();
    for (std::int64_t i = 0; i < fiber_grid.size(); ++i)
        if (std::abs(da.col(i).norm() - 1.0) > 100.0 * h * h)
            throw std::invalid_argument("surface_family: fiber curve must be unit speed");
    return family_impl(curve, phi, beta_coeff, fiber_grid, alpha, "surface_family");
}

TubeEvaluation hypersurface_foliation(const SampledCurveFrame& curve, const ScalarAlongCurve& phi,
                                      const std::vector<ScalarAlongCurve>& beta_coeff,
                                      const ParamGrid& fiber_grid, const Eigen::MatrixXd& g) {
    if (fiber_grid.dim() != 2)
        throw std::invalid_argument("hypersurface_foliation: fiber must be a surface grid");
    if (curve.ambient_dim != fiber_grid.dim() + 2 && int(g.rows()) + 1 != curve.ambient_dim)
        throw std::invalid_argument("hypersurface_foliation: dimensions give no hypersurface");
    return family_impl(curve, phi, beta_coeff, fiber_grid, g, "hypersurface_foliation");
}

PartialTubeSpec reconstruct_tube(const ImmersedGrid& f, std::int64_t base_slice,
                                 std::int64_t reference_fiber_point, double tol) {
    const ParamGrid& pg = f.grid();
    auto base_axes = pg.axes_of_factor(1);
    if (base_axes.size() != 1 || base_axes[0] != pg.dim() - 1)
        throw std::invalid_argument("reconstruct_tube: grid needs one base axis, placed last");
    const int m = f.ambient_dim();
    const int ns = pg.axis(pg.dim() - 1).count;
    const std::int64_t n0 = pg.size() / ns;
    if (base_slice < 0 || base_slice >= n0 || reference_fiber_point < 0 ||
        reference_fiber_point >= n0 || base_slice == reference_fiber_point)
        throw std::invalid_argument("reconstruct_tube: fiber reference points invalid");

    auto node = [&](std::int64_t i, int j) { return i * ns + j; };

    // f1 = slice; inverting a leaf about its base point must give a point set
    // whose component along the base tangent is a constant mu (possibly zero,
    // then the leaf sits in the normal plane through f1)
    Eigen::MatrixXd f1(m, ns);
    for (int j = 0; j < ns; ++j) f1.col(j) = f.value(node(base_slice, j));
    ParamGrid s_grid = ParamGrid::uniform({pg.axis(pg.dim() - 1)});
    Eigen::MatrixXd f1_d = central_diff(f1, s_grid, 0);
    Eigen::MatrixXd mu(m, ns);
    for (int j = 0; j < ns; ++j) {
        Eigen::VectorXd w = f1_d.col(j).normalized();
        double tsum = 0.0, t2sum = 0.0, scale = 0.0;
        std::int64_t cnt = 0;
        for (std::int64_t i = 0; i < n0; ++i) {
            if (i == base_slice) continue;
            Eigen::VectorXd d = f.value(node(i, j)) - f1.col(j);
            double d2 = d.squaredNorm();
            if (d2 < 1e-20)
                throw std::runtime_error("reconstruct_tube: immersion touches the base slice");
            Eigen::VectorXd rho = 2.0 / d2 * d;
            double t = w.dot(rho);
            tsum += t;
            t2sum += t * t;
            scale = std::max(scale, rho.norm());
            ++cnt;
        }
        double tbar = tsum / double(cnt);
        double rms = std::sqrt(std::max(0.0, t2sum / double(cnt) - tbar * tbar));
        if (rms > tol * std::max(1.0, scale))
            throw std::runtime_error("reconstruct_tube: fiber leaves are not spherical");
        mu.col(j) = tbar * w;
    }

    // rho, h and the normalized sections e^-tau xi^{x0}
    const std::int64_t z0 = reference_fiber_point;
    std::vector<Eigen::MatrixXd> h_field;  // m x ns per fiber node, skip base_slice
    h_field.resize(size_t(n0));
    for (std::int64_t i = 0; i < n0; ++i) {
        if (i == base_slice) continue;
        h_field[size_t(i)].resize(m, ns);
        for (int j = 0; j < ns; ++j) {
            Eigen::VectorXd diff = f.value(node(i, j)) - f1.col(j);
            double d2 = diff.squaredNorm();
            if (d2 < 1e-20)
                throw std::runtime_error("reconstruct_tube: immersion touches the base slice");
            h_field[size_t(i)].col(j) = 2.0 / d2 * diff - mu.col(j);
        }
    }
    std::int64_t i_ref = -1;
    for (std::int64_t i = 0; i < n0; ++i)
        if (i != base_slice && i != z0) {
            i_ref = i;
            break;
        }
    if (i_ref < 0) throw std::invalid_argument("reconstruct_tube: need at least 3 fiber samples");

    Eigen::VectorXd tau(ns), phi(ns);
    Eigen::MatrixXd beta(m, ns);
    for (int j = 0; j < ns; ++j) {
        double len = (h_field[size_t(i_ref)].col(j) - h_field[size_t(z0)].col(j)).norm();
        if (len < 1e-20) throw std::runtime_error("reconstruct_tube: degenerate fiber section");
        tau[j] = std::log(len);
        phi[j] = -std::exp(-tau[j]);
        beta.col(j) = std::exp(-tau[j]) * h_field[size_t(z0)].col(j);
    }

    // parallel sections sigma_i = e^-tau (h(x0) - h(z0)); an orthonormal basis
    // of their span at one base node extends with constant weights
    const int j_ref = ns / 2;
    std::vector<std::int64_t> live;
    for (std::int64_t i = 0; i < n0; ++i)
        if (i != base_slice) live.push_back(i);
    Eigen::MatrixXd S(m, std::int64_t(live.size()));
    for (size_t c = 0; c < live.size(); ++c)
        S.col(std::int64_t(c)) = std::exp(-tau[j_ref]) *
                                 (h_field[size_t(live[c])].col(j_ref) - h_field[size_t(z0)].col(j_ref));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(S, Eigen::ComputeThinU | Eigen::ComputeThinV);
    double s0 = svd.singularValues()[0];
    int k = 0;
    for (int a = 0; a < svd.singularValues().size(); ++a)
        if (svd.singularValues()[a] > 1e-6 * s0) ++k;

    PartialTubeSpec spec;
    spec.s_grid = ParamGrid::uniform({pg.axis(pg.dim() - 1)});
    spec.f1 = f1;
    spec.phi = phi;
    spec.beta = beta;
    spec.xi.assign(size_t(k), Eigen::MatrixXd::Zero(m, ns));
    for (int a = 0; a < k; ++a) {
        double sa = svd.singularValues()[a];
        for (size_t c = 0; c < live.size(); ++c) {
            double w = svd.matrixV()(std::int64_t(c), a) / sa;
            std::int64_t i = live[c];
            for (int j = 0; j < ns; ++j)
                spec.xi[size_t(a)].col(j) += w * std::exp(-tau[j]) *
                                             (h_field[size_t(i)].col(j) - h_field[size_t(z0)].col(j));
        }
    }

    // fiber grid = the factor-0 axes; the base slice itself is masked
    std::vector<GridAxis> fax;
    for (int i = 0; i < pg.dim() - 1; ++i) fax.push_back(pg.axis(i));
    spec.fiber_grid = ParamGrid::uniform(fax);
    spec.f0 = Eigen::MatrixXd::Zero(k, n0);
    spec.fiber_mask.assign(size_t(n0), 1);
    spec.fiber_mask[size_t(base_slice)] = 0;
    for (std::int64_t i = 0; i < n0; ++i) {
        if (i == base_slice) continue;
        Eigen::VectorXd sig = std::exp(-tau[j_ref]) *
                              (h_field[size_t(i)].col(j_ref) - h_field[size_t(z0)].col(j_ref));
        for (int a = 0; a < k; ++a) spec.f0(a, i) = spec.xi[size_t(a)].col(j_ref).dot(sig);
    }
    return spec;
}

}  // namespace ribgeo

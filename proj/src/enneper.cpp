#include "ribgeo/enneper.hpp"

#include "ribgeo/numerics.hpp"
#include "ribgeo/ribaucour.hpp"

#include <cmath>
#include <stdexcept>

namespace ribgeo {

namespace {

double auto_tol(const ParamGrid& grid, double tol) {
    if (tol > 0.0) return tol;
    double h = grid.max_step();
    return 10.0 * h * h;
}

// leaf-wise access for a product grid with the s axis last (s index fastest)
struct LeafView {
    const ParamGrid& grid;
    int ns;
    std::int64_t n_fiber;
    explicit LeafView(const ParamGrid& g)
        : grid(g), ns(g.axis(g.dim() - 1).count), n_fiber(g.size() / ns) {}
    std::int64_t node(std::int64_t fiber, int j) const { return fiber * ns + j; }
};

}  // namespace

Eigen::VectorXd EnneperTriple::leaf_radius() const {
    return (alpha.values.array().square() + beta.values.array().square()).sqrt();
}

Eigen::VectorXd EnneperTriple::leaf_cos_angle() const {
    return alpha.values.array() / leaf_radius().array();
}

GaussTube gauss_tube_from_net(const ImmersedGrid& N, double tol) {
    const ParamGrid& pg = N.grid();
    const int d = pg.dim();
    if (d < 2) throw std::invalid_argument("gauss_tube_from_net: need a product grid");
    tol = auto_tol(pg, tol);

    GaussTube tube{N, {}, {}, {}, {}, 0.0, 0.0, 0.0};
    const std::int64_t n = pg.size();
    for (std::int64_t k = 0; k < n; ++k)
        tube.unit_residual = std::max(tube.unit_residual, std::abs(N.value(k).norm() - 1.0));
    if (tube.unit_residual > 1e-10)
        throw std::invalid_argument("gauss_tube_from_net: net is not sphere-valued");

    tube.metric = induced_metric(N);
    tube.v0.resize(n);
    tube.rho.resize(n);
    for (std::int64_t k = 0; k < n; ++k) {
        const Eigen::MatrixXd& g = tube.metric[size_t(k)];
        for (int a = 0; a + 1 < d; ++a)
            tube.cross_residual = std::max(tube.cross_residual, std::abs(g(a, d - 1)));
        double det0 = g.topLeftCorner(d - 1, d - 1).determinant();
        if (det0 <= 0.0 || g(d - 1, d - 1) <= 0.0)
            throw std::invalid_argument("gauss_tube_from_net: degenerate induced metric");
        tube.v0[k] = std::pow(det0, 1.0 / (2.0 * (d - 1)));
        tube.rho[k] = std::sqrt(g(d - 1, d - 1));
    }
    if (tube.cross_residual > tol)
        throw std::invalid_argument("gauss_tube_from_net: metric cross block exceeds tolerance");

    Eigen::MatrixXd logv(1, n);
    for (std::int64_t k = 0; k < n; ++k) logv(0, k) = std::log(tube.v0[k]);
    Eigen::MatrixXd dlogv = central_diff(logv, pg, d - 1);
    tube.phi_sph.resize(n);
    for (std::int64_t k = 0; k < n; ++k) tube.phi_sph[k] = -dlogv(0, k) / tube.rho[k];

    LeafView lv(pg);
    for (int j = 0; j < lv.ns; ++j) {
        double lo = tube.phi_sph[lv.node(0, j)], hi = lo;
        for (std::int64_t i = 1; i < lv.n_fiber; ++i) {
            double v = tube.phi_sph[lv.node(i, j)];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        tube.phi_slice_variation = std::max(tube.phi_slice_variation, hi - lo);
    }
    if (tube.phi_slice_variation > tol)
        throw std::invalid_argument("gauss_tube_from_net: phi is not constant on fiber slices");
    return tube;
}

GaussTube build_gauss_tube(const SampledCurveFrame& curve, const ScalarAlongCurve& phi,
                           const std::vector<ScalarAlongCurve>& beta, const ParamGrid& fiber_grid,
                           const Eigen::MatrixXd& f0, double tol) {
    const int m = curve.ambient_dim;
    const int ns = int(curve.nodes());
    const int kdim = int(f0.rows());
    const std::int64_t n0 = fiber_grid.size();
    if (f0.cols() != n0)
        throw std::invalid_argument("build_gauss_tube: fiber samples do not match the fiber grid");
    if (kdim > curve.num_normals() || int(beta.size()) != curve.num_normals())
        throw std::invalid_argument("build_gauss_tube: frame size mismatch");
    for (int j = 0; j < ns; ++j)
        if (std::abs(curve.gamma.col(j).norm() - 1.0) > 1e-8)
            throw std::invalid_argument("build_gauss_tube: curve is not on the unit sphere");

    Eigen::MatrixXd f1_d = central_diff(curve.gamma, curve.s_grid, 0);
    Eigen::VectorXd dphi = phi.deriv_or_fd();

    std::vector<GridAxis> axes;
    std::vector<int> factor;
    for (int a = 0; a < fiber_grid.dim(); ++a) {
        axes.push_back(fiber_grid.axis(a));
        factor.push_back(0);
    }
    axes.push_back(curve.s_grid.axis(0));
    factor.push_back(1);
    ParamGrid pg(axes, factor);

    ImmersedGrid N(pg, m);
    for (std::int64_t i = 0; i < n0; ++i)
        for (int j = 0; j < ns; ++j) {
            Eigen::VectorXd S = Eigen::VectorXd::Zero(m);
            for (int a = 0; a < curve.num_normals(); ++a)
                S += beta[size_t(a)].values[j] * curve.xi[size_t(a)].col(j);
            for (int a = 0; a < kdim; ++a) S += f0(a, i) * curve.xi[size_t(a)].col(j);
            double g11 = f1_d.col(j).squaredNorm();
            Eigen::VectorXd F =
                (dphi[j] / g11) * f1_d.col(j) + S + phi.values[j] * curve.gamma.col(j);
            double nu = 1.0 / F.squaredNorm();
            Eigen::VectorXd val = curve.gamma.col(j) - 2.0 * nu * phi.values[j] * F;
            // exact tubes are sphere-valued; strip the curve integrator drift
            N.set_value(i * ns + j, val.normalized());
        }
    return gauss_tube_from_net(N, tol);
}

SupportData support_function(const GaussTube& tube, const Eigen::VectorXd& U,
                             const ScalarAlongCurve& V, double tol) {
    const ParamGrid& pg = tube.N.grid();
    const int d = pg.dim();
    LeafView lv(pg);
    if (U.size() != lv.n_fiber || V.values.size() != lv.ns)
        throw std::invalid_argument("support_function: profile sizes do not match the grid");
    tol = auto_tol(pg, tol);

    SupportData out;
    out.U = U;
    out.V = V;
    out.gamma_supp.resize(pg.size());
    double hs = pg.axis(d - 1).step();
    std::vector<double> integrand;
    integrand.resize(size_t(lv.ns));
    for (std::int64_t i = 0; i < lv.n_fiber; ++i) {
        for (int j = 0; j < lv.ns; ++j) {
            std::int64_t k = lv.node(i, j);
            integrand[size_t(j)] = V.values[j] * tube.rho[k] / tube.v0[k];
        }
        std::vector<double> cum = quadrature(integrand, hs);
        for (int j = 0; j < lv.ns; ++j) {
            std::int64_t k = lv.node(i, j);
            out.gamma_supp[k] = tube.v0[k] * (U[i] + cum[size_t(j)]);
        }
    }

    auto chr = christoffels(tube.metric, pg);
    auto hess = intrinsic_hessian(out.gamma_supp, pg, chr);
    out.P.resize(size_t(pg.size()));
    for (std::int64_t k = 0; k < pg.size(); ++k) {
        for (int a = 0; a + 1 < d; ++a)
            out.mixed_hessian_residual =
                std::max(out.mixed_hessian_residual, std::abs(hess[size_t(k)](a, d - 1)));
        out.P[size_t(k)] = tube.metric[size_t(k)].inverse() * hess[size_t(k)] +
                           out.gamma_supp[k] * Eigen::MatrixXd::Identity(d, d);
    }
    return out;
}

ImmersedGrid gauss_parametrization(const GaussTube& tube, const SupportData& supp, double tol) {
    const ParamGrid& pg = tube.N.grid();
    const int d = pg.dim();
    tol = auto_tol(pg, tol);

    Eigen::MatrixXd gam(1, pg.size());
    gam.row(0) = supp.gamma_supp.transpose();
    std::vector<Eigen::MatrixXd> dgam;
    for (int a = 0; a < d; ++a) dgam.push_back(central_diff(gam, pg, a));
    auto dN = partials(tube.N);

    ImmersedGrid f(pg, tube.N.ambient_dim());
    std::int64_t regular = 0;
    for (std::int64_t k = 0; k < pg.size(); ++k) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(supp.P[size_t(k)]);
        if (svd.singularValues()(d - 1) <= 1e-10 * std::max(1.0, svd.singularValues()(0))) {
            f.mask_node(k);
            f.set_value(k, Eigen::VectorXd::Zero(tube.N.ambient_dim()));
            continue;
        }
        ++regular;
        Eigen::VectorXd dg(d);
        for (int a = 0; a < d; ++a) dg[a] = dgam[size_t(a)](0, k);
        Eigen::VectorXd grad = tube.metric[size_t(k)].ldlt().solve(dg);
        Eigen::VectorXd val = supp.gamma_supp[k] * tube.N.value(k);
        for (int a = 0; a < d; ++a) val += grad[a] * dN[size_t(a)].col(k);
        f.set_value(k, val);
    }
    if (regular == 0)
        throw std::runtime_error("gauss_parametrization: support operator singular everywhere");

    // the construction must have planar fiber leaves
    LeafView lv(pg);
    for (int j = 0; j < lv.ns; ++j) {
        std::vector<Eigen::VectorXd> pts;
        double scale = 1.0;
        for (std::int64_t i = 0; i < lv.n_fiber; ++i) {
            std::int64_t k = lv.node(i, j);
            if (!f.node_ok(k)) continue;
            pts.push_back(f.value(k));
            scale = std::max(scale, pts.back().norm());
        }
        if (pts.size() < size_t(d + 1)) continue;
        FitResult fit = fit_plane(pts);
        if (fit.rms > tol * scale)
            throw std::runtime_error("gauss_parametrization: fiber leaves are not planar");
    }
    return f;
}

double triple_constraint_residual(const GaussTube& tube, const EnneperTriple& triple) {
    const ParamGrid& pg = tube.N.grid();
    LeafView lv(pg);
    ParamGrid s_grid = triple.alpha.s_grid;
    if (int(s_grid.size()) != lv.ns)
        throw std::invalid_argument("triple_constraint_residual: grid mismatch");
    Eigen::MatrixXd dgamma = central_diff(triple.gamma, s_grid, 0);
    Eigen::VectorXd dalpha = triple.alpha.deriv_or_fd();
    double worst = 0.0;
    for (std::int64_t i = 0; i < lv.n_fiber; ++i)
        for (int j = 0; j < lv.ns; ++j) {
            std::int64_t k = lv.node(i, j);
            double r = dgamma.col(j).dot(tube.N.value(k)) + dalpha[j] -
                       triple.beta.values[j] * tube.rho[k];
            worst = std::max(worst, std::abs(r));
        }
    return worst;
}

ImmersedGrid enneper_parametrization(const GaussTube& tube, const EnneperTriple& triple,
                                     double tol) {
    const ParamGrid& pg = tube.N.grid();
    const int d = pg.dim();
    tol = auto_tol(pg, tol);
    double res = triple_constraint_residual(tube, triple);
    if (res > tol)
        throw std::runtime_error("enneper_parametrization: constraint residual " +
                                 std::to_string(res) + " exceeds tolerance " + std::to_string(tol));

    auto dN = partials(tube.N);
    LeafView lv(pg);
    ImmersedGrid f(pg, tube.N.ambient_dim());
    for (std::int64_t i = 0; i < lv.n_fiber; ++i)
        for (int j = 0; j < lv.ns; ++j) {
            std::int64_t k = lv.node(i, j);
            Eigen::VectorXd val = triple.gamma.col(j) + triple.alpha.values[j] * tube.N.value(k) +
                                  (triple.beta.values[j] / tube.rho[k]) * dN[size_t(d - 1)].col(k);
            f.set_value(k, val);
        }

    // leaves stay at constant distance and constant angle from the center curve
    Eigen::VectorXd radius = triple.leaf_radius();
    Eigen::VectorXd cosang = triple.leaf_cos_angle();
    for (int j = 0; j < lv.ns; ++j) {
        for (std::int64_t i = 0; i < lv.n_fiber; ++i) {
            std::int64_t k = lv.node(i, j);
            Eigen::VectorXd zeta = f.value(k) - triple.gamma.col(j);
            double r = zeta.norm();
            if (std::abs(r - radius[j]) > tol)
                throw std::runtime_error("enneper_parametrization: leaf radius drift");
            if (r > 1e-12 && std::abs(zeta.dot(tube.N.value(k)) / r - cosang[j]) > tol)
                throw std::runtime_error("enneper_parametrization: leaf angle drift");
        }
    }
    return f;
}

EnneperTriple deform_family(const EnneperTriple& triple, const ScalarAlongCurve& lambda) {
    const ParamGrid& sg = triple.alpha.s_grid;
    const int ns = int(sg.size());
    if (int(lambda.values.size()) != ns)
        throw std::invalid_argument("deform_family: lambda grid mismatch");
    for (int j = 0; j < ns; ++j)
        if (std::abs(lambda.values[j]) < 1e-12)
            throw std::invalid_argument("deform_family: lambda vanishes");

    double h = sg.axis(0).step();
    Eigen::VectorXd dalpha = triple.alpha.deriv_or_fd();
    Eigen::MatrixXd dgamma = central_diff(triple.gamma, sg, 0);

    EnneperTriple out;
    out.alpha.s_grid = sg;
    out.beta.s_grid = sg;
    out.beta.values = lambda.values.array() * triple.beta.values.array();

    std::vector<double> integrand;
    integrand.resize(size_t(ns));
    for (int j = 0; j < ns; ++j) integrand[size_t(j)] = lambda.values[j] * dalpha[j];
    std::vector<double> cum = quadrature(integrand, h);
    out.alpha.values.resize(ns);
    for (int j = 0; j < ns; ++j) out.alpha.values[j] = triple.alpha.values[0] + cum[size_t(j)];

    out.gamma.resize(triple.gamma.rows(), ns);
    for (int r = 0; r < triple.gamma.rows(); ++r) {
        for (int j = 0; j < ns; ++j) integrand[size_t(j)] = lambda.values[j] * dgamma(r, j);
        cum = quadrature(integrand, h);
        for (int j = 0; j < ns; ++j) out.gamma(r, j) = triple.gamma(r, 0) + cum[size_t(j)];
    }
    return out;
}

std::pair<EnneperTriple, ScalarAlongCurve> normalize_through_point(const EnneperTriple& triple,
                                                                   const Eigen::VectorXd& e_in) {
    const ParamGrid& sg = triple.alpha.s_grid;
    const int ns = int(sg.size());
    const int m = int(triple.gamma.rows());
    const double s0 = sg.axis(0).lo, s1 = sg.axis(0).hi, h = sg.axis(0).step();

    Eigen::VectorXd e = e_in.size() == 0 ? Eigen::VectorXd::Unit(m, 0) : e_in.normalized();
    if (e.size() != m) throw std::invalid_argument("normalize_through_point: bad direction size");

    Eigen::VectorXd b = triple.beta.values;
    for (int j = 0; j < ns; ++j)
        if (std::abs(b[j]) < 1e-10)
            throw std::invalid_argument("normalize_through_point: beta vanishes");
    Eigen::VectorXd bp = triple.beta.deriv_or_fd();
    Eigen::VectorXd ap = triple.alpha.deriv_or_fd();
    Eigen::MatrixXd gp = central_diff(triple.gamma, sg, 0);

    // sampled coefficients interpolate linearly between nodes (RK4 midpoints)
    auto sample = [&](const Eigen::VectorXd& v, double s) {
        double t = (s - s0) / h;
        int j = std::clamp(int(std::floor(t)), 0, ns - 2);
        double w = t - j;
        return (1.0 - w) * v[j] + w * v[j + 1];
    };
    auto sample_col = [&](const Eigen::MatrixXd& v, double s) -> Eigen::VectorXd {
        double t = (s - s0) / h;
        int j = std::clamp(int(std::floor(t)), 0, ns - 2);
        double w = t - j;
        return (1.0 - w) * v.col(j) + w * v.col(j + 1);
    };

    OdeRhs rhs = [&](double s, const Eigen::VectorXd& y) {
        Eigen::VectorXd G = y.head(m);
        double a = y[m], lam = y[m + 1];
        Eigen::VectorXd gps = sample_col(gp, s);
        double aps = sample(ap, s), bs = sample(b, s), bps = sample(bp, s);
        Eigen::VectorXd dy(m + 2);
        dy.head(m) = lam * gps;
        dy[m] = lam * aps;
        dy[m + 1] = (G.dot(gps) - a * aps - lam * bs * bps) / (bs * bs);
        return dy;
    };

    Eigen::VectorXd y0(m + 2);
    double gap0 = triple.gamma.col(0).squaredNorm() -
                  triple.alpha.values[0] * triple.alpha.values[0] - b[0] * b[0];
    if (std::abs(gap0) < 1e-10 * std::max(1.0, triple.gamma.col(0).squaredNorm())) {
        // already consistent at s0: keep the input's initial data (fixed point)
        y0.head(m) = triple.gamma.col(0);
        y0[m] = triple.alpha.values[0];
    } else {
        y0.head(m) = b[0] * e;
        y0[m] = 0.0;
    }
    y0[m + 1] = 1.0;
    std::vector<Eigen::VectorXd> states = rk4_integrate(rhs, y0, s0, s1, ns - 1);

    EnneperTriple out;
    out.gamma.resize(m, ns);
    out.alpha.s_grid = sg;
    out.alpha.values.resize(ns);
    out.beta.s_grid = sg;
    out.beta.values.resize(ns);
    ScalarAlongCurve lambda;
    lambda.s_grid = sg;
    lambda.values.resize(ns);
    for (int j = 0; j < ns; ++j) {
        const Eigen::VectorXd& y = states[size_t(j)];
        double lam = y[m + 1];
        if (lam <= 1e-12)
            throw std::runtime_error("normalize_through_point: lambda crossed zero");
        out.gamma.col(j) = y.head(m);
        out.alpha.values[j] = y[m];
        out.beta.values[j] = lam * b[j];
        lambda.values[j] = lam;
    }
    return {out, lambda};
}

ImmersedGrid planarize_by_inversion(const ImmersedGrid& f, const Eigen::VectorXd& p, double tol) {
    const ParamGrid& pg = f.grid();
    const int m = f.ambient_dim();
    if (p.size() != m) throw std::invalid_argument("planarize_by_inversion: bad center size");
    tol = auto_tol(pg, tol);
    LeafView lv(pg);

    // every fiber leaf must lie on a common sphere with p, and f must avoid p
    for (int j = 0; j < lv.ns; ++j) {
        std::vector<Eigen::VectorXd> pts;
        double scale = 1.0;
        for (std::int64_t i = 0; i < lv.n_fiber; ++i) {
            std::int64_t k = lv.node(i, j);
            if (!f.node_ok(k)) continue;
            if ((f.value(k) - p).norm() < 1e-8)
                throw std::invalid_argument("planarize_by_inversion: immersion touches the center");
            pts.push_back(f.value(k));
            scale = std::max(scale, (pts.back() - p).norm());
        }
        if (pts.size() < 3) continue;
        pts.push_back(p);
        FitResult fit = fit_sphere(pts);
        if (fit.rms > tol * scale)
            throw std::invalid_argument(
                "planarize_by_inversion: a fiber leaf misses the inversion center");
    }

    Eigen::VectorXd phi(pg.size());
    Eigen::MatrixXd beta(m, pg.size());
    auto df = partials(f);
    TangentFrames frames = tangent_frames(f, df);
    for (std::int64_t k = 0; k < pg.size(); ++k) {
        Eigen::VectorXd F = f.value(k) - p;
        phi[k] = 0.5 * (F.squaredNorm() - 1.0);
        beta.col(k) = normal_project(frames, k, F);
    }
    RibaucourResult res = ribaucour_transform(build_combescure(f, phi, beta));

    for (int j = 0; j < lv.ns; ++j) {
        std::vector<Eigen::VectorXd> pts;
        double scale = 1.0;
        for (std::int64_t i = 0; i < lv.n_fiber; ++i) {
            std::int64_t k = lv.node(i, j);
            if (!res.f_tilde.node_ok(k)) continue;
            pts.push_back(res.f_tilde.value(k));
            scale = std::max(scale, pts.back().norm());
        }
        if (pts.size() < size_t(m + 1)) continue;
        FitResult fit = fit_plane(pts);
        if (fit.rms > tol * scale)
            throw std::runtime_error("planarize_by_inversion: image leaves are not planar");
    }
    return res.f_tilde;
}

}  // namespace ribgeo

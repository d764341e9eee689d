#include "ribgeo/conformal_special.hpp"

#include <cmath>
#include <stdexcept>

#include "ribgeo/numerics.hpp"

namespace ribgeo {

namespace {

Eigen::MatrixXd lorentz_metric(int dim) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(dim, dim);
    g(0, 0) = -1.0;
    return g;
}

std::vector<int> lorentz_signature(int dim) {
    std::vector<int> sig(dim, 1);
    sig[0] = -1;
    return sig;
}

}  // namespace

Eigen::Vector3d lorentz_cross(const Eigen::Vector3d& u, const Eigen::Vector3d& v) {
    // With d = u x v (Euclidean), d . w = det(u, v, w); lowering by the
    // inverse metric turns the dot into the Lorentzian product.
    Eigen::Vector3d d = u.cross(v);
    d[0] = -d[0];
    return d;
}

Eigen::VectorXd MinkowskiModel::to_standard(const Eigen::VectorXd& coeffs) const {
    if (coeffs.size() != n + 1)
        throw std::invalid_argument("MinkowskiModel: coefficient size mismatch");
    return basis * coeffs;
}

Eigen::VectorXd MinkowskiModel::from_standard(const Eigen::VectorXd& v) const {
    if (v.size() != n + 1)
        throw std::invalid_argument("MinkowskiModel: vector size mismatch");
    return basis.colPivHouseholderQr().solve(v);
}

double MinkowskiModel::inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    return a.dot(gram * b);
}

MinkowskiModel make_minkowski_model(int n) {
    if (n < 2) throw std::invalid_argument("make_minkowski_model: need n >= 2");
    const int dim = n + 1;
    Eigen::MatrixXd G = lorentz_metric(dim);

    // e_i = standard spacelike directions for 1 <= i <= n-1. The two null
    // vectors live in the span of the time direction u and the last spatial
    // direction w: e_0 = (u + w) / 2 is null, and e_n = p u + q w must
    // satisfy the linear conditions <e_0, e_n> = -1/2 and the null
    // condition, which together force q = p - 1 with p solving the linear
    // equation (p - 1)^2 = p^2.
    Eigen::VectorXd u = Eigen::VectorXd::Zero(dim);
    u[0] = 1.0;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
    w[dim - 1] = 1.0;

    double p = 0.5;  // root of (p - 1)^2 = p^2, i.e. -2p + 1 = 0
    double q = p - 1.0;

    MinkowskiModel model;
    model.n = n;
    model.basis = Eigen::MatrixXd::Zero(dim, dim);
    model.basis.col(0) = 0.5 * (u + w);
    for (int i = 1; i < n; ++i) model.basis(i, i) = 1.0;
    model.basis.col(n) = p * u + q * w;

    model.gram = model.basis.transpose() * G * model.basis;

    Eigen::MatrixXd target = Eigen::MatrixXd::Identity(dim, dim);
    target(0, 0) = 0.0;
    target(n, n) = 0.0;
    target(0, n) = -0.5;
    target(n, 0) = -0.5;
    model.gram_residual = (model.gram - target).cwiseAbs().maxCoeff();
    if (model.gram_residual > 1e-12)
        throw std::runtime_error("make_minkowski_model: Gram table not realized");
    return model;
}

ConstantAngleSpec make_constant_angle_spec(int eps, ImmersedGrid g,
                                           Eigen::MatrixXd normal,
                                           ScalarAlongCurve a) {
    if (eps != -1 && eps != 0 && eps != 1)
        throw std::invalid_argument("make_constant_angle_spec: eps must be -1, 0 or 1");
    if (normal.rows() != g.ambient_dim() || normal.cols() != g.grid().size())
        throw std::invalid_argument("make_constant_angle_spec: normal size mismatch");
    if (eps == -1 && !g.lorentzian())
        throw std::invalid_argument("make_constant_angle_spec: eps = -1 needs a Lorentzian ambient");
    if (eps != -1 && g.lorentzian())
        throw std::invalid_argument("make_constant_angle_spec: Euclidean ambient expected");

    const double tol = 1e-10;
    for (std::int64_t k = 0; k < g.grid().size(); ++k) {
        Eigen::VectorXd gv = g.value(k);
        Eigen::VectorXd nv = normal.col(k);
        if (eps != 0 && std::abs(g.inner(gv, gv) - eps) > tol)
            throw std::runtime_error("make_constant_angle_spec: base point off the quadric");
        if (eps != 0 && std::abs(g.inner(nv, gv)) > tol)
            throw std::runtime_error("make_constant_angle_spec: normal not tangent to the quadric");
        if (std::abs(g.inner(nv, nv) - 1.0) > tol)
            throw std::runtime_error("make_constant_angle_spec: normal not unit");
    }

    Eigen::VectorXd da = a.deriv_or_fd();
    if ((da.array() <= 0.0).any())
        throw std::runtime_error("make_constant_angle_spec: height profile must be strictly increasing");

    ConstantAngleSpec spec{eps, std::move(g), std::move(normal), std::move(a)};
    return spec;
}

Eigen::MatrixXd parallel_family(const ConstantAngleSpec& spec, double s) {
    double C = 1.0, S = s;
    if (spec.eps == 1) {
        C = std::cos(s);
        S = std::sin(s);
    } else if (spec.eps == -1) {
        C = std::cosh(s);
        S = std::sinh(s);
    }
    return C * spec.g.values() + S * spec.normal;
}

ImmersedGrid constant_angle_map(const ConstantAngleSpec& spec) {
    const ParamGrid& base = spec.g.grid();
    std::vector<GridAxis> axes;
    std::vector<int> factor;
    for (int i = 0; i < base.dim(); ++i) {
        axes.push_back(base.axis(i));
        factor.push_back(0);
    }
    axes.push_back(spec.a.s_grid.axis(0));
    factor.push_back(1);
    ParamGrid grid(std::move(axes), std::move(factor));

    int ambient = spec.g.ambient_dim() + 1;
    std::vector<int> sig(ambient, 1);
    if (spec.eps == -1) sig[0] = -1;
    ImmersedGrid F(grid, ambient, sig);

    const std::int64_t nb = base.size();
    const std::int64_t ns = spec.a.s_grid.size();
    for (std::int64_t j = 0; j < ns; ++j) {
        Eigen::MatrixXd slice = parallel_family(spec, spec.a.s_grid.axis(0).coord(j));
        for (std::int64_t i = 0; i < nb; ++i) {
            Eigen::VectorXd val(ambient);
            val.head(ambient - 1) = slice.col(i);
            val[ambient - 1] = spec.a.values[j];
            F.set_value(i * ns + j, val);
        }
    }
    return F;
}

Eigen::VectorXd conformal_map_sphere(const Eigen::VectorXd& x, double t) {
    if (std::abs(x.norm() - 1.0) > 1e-10)
        throw std::runtime_error("conformal_map_sphere: point not on the unit sphere");
    return std::exp(t) * x;
}

Eigen::VectorXd conformal_map_hyperbolic(const MinkowskiModel& model,
                                         const Eigen::VectorXd& coeffs, double t) {
    if (coeffs.size() != model.n + 1)
        throw std::invalid_argument("conformal_map_hyperbolic: coefficient size mismatch");
    if (std::abs(model.inner(coeffs, coeffs) + 1.0) > 1e-8)
        throw std::runtime_error("conformal_map_hyperbolic: point not on the hyperboloid");
    double x0 = coeffs[0];
    if (x0 <= 0.0)
        throw std::runtime_error("conformal_map_hyperbolic: first null coordinate must be positive");

    Eigen::VectorXd out(model.n + 1);
    out.head(model.n - 1) = coeffs.segment(1, model.n - 1);
    out[model.n - 1] = std::cos(t);
    out[model.n] = std::sin(t);
    return out / x0;
}

ImmersedGrid joachimsthal_surface(const Eigen::MatrixXd& gamma,
                                  const ParamGrid& t_grid,
                                  const ScalarAlongCurve& a,
                                  const Eigen::MatrixXd* dgamma) {
    if (t_grid.dim() != 1)
        throw std::invalid_argument("joachimsthal_surface: curve grid must be one dimensional");
    if (gamma.rows() != 3 || gamma.cols() != t_grid.size())
        throw std::invalid_argument("joachimsthal_surface: curve samples must be 3 x nodes");

    std::vector<int> sig = lorentz_signature(3);
    const std::int64_t nt = t_grid.size();
    Eigen::MatrixXd dg = dgamma ? *dgamma : central_diff(gamma, t_grid, 0);
    double h = t_grid.axis(0).step();
    double speed_tol = dgamma ? 1e-8 : 100.0 * h * h;
    for (std::int64_t i = 0; i < nt; ++i) {
        if (std::abs(pseudo_inner(gamma.col(i), gamma.col(i), sig) + 1.0) > 1e-8)
            throw std::runtime_error("joachimsthal_surface: curve off the hyperboloid");
        if (std::abs(pseudo_inner(dg.col(i), dg.col(i), sig) - 1.0) > speed_tol)
            throw std::runtime_error("joachimsthal_surface: curve is not unit speed");
    }
    Eigen::VectorXd da = a.deriv_or_fd();
    if ((da.array() <= 0.0).any())
        throw std::runtime_error("joachimsthal_surface: height profile must be strictly increasing");

    MinkowskiModel model = make_minkowski_model(2);

    std::vector<GridAxis> axes{t_grid.axis(0), a.s_grid.axis(0)};
    ParamGrid grid(std::move(axes), {0, 1});
    const std::int64_t ns = a.s_grid.size();
    ImmersedGrid f(grid, 3);

    for (std::int64_t i = 0; i < nt; ++i) {
        Eigen::Vector3d binormal = lorentz_cross(gamma.col(i), dg.col(i));
        // <binormal, gamma> = det(gamma, gamma', gamma) = 0 exactly, but an FD
        // derivative leaves an O(h^2) defect in the length; renormalize so the
        // parallel curves stay on the hyperboloid
        binormal /= std::sqrt(pseudo_inner(binormal, binormal, sig));
        for (std::int64_t j = 0; j < ns; ++j) {
            double s = a.s_grid.axis(0).coord(j);
            Eigen::Vector3d gs = std::cosh(s) * gamma.col(i) + std::sinh(s) * binormal;
            Eigen::VectorXd coeffs = model.from_standard(gs);
            if (coeffs[0] <= 1e-8) {
                f.mask_node(i * ns + j);
                continue;
            }
            f.set_value(i * ns + j, conformal_map_hyperbolic(model, coeffs, a.values[j]));
        }
    }
    return f;
}

}  // namespace ribgeo

#include "ribgeo/curves.hpp"

#include <cmath>

namespace ribgeo {

Eigen::VectorXd ScalarAlongCurve::deriv_or_fd() const {
    if (derivative) return *derivative;
    return central_diff(values.transpose(), s_grid, 0).transpose();
}

ScalarAlongCurve ScalarAlongCurve::from_function(const ParamGrid& s_grid,
                                                 const std::function<double(double)>& f,
                                                 const std::function<double(double)>& df) {
    ScalarAlongCurve out;
    out.s_grid = s_grid;
    out.values.resize(s_grid.size());
    for (std::int64_t i = 0; i < s_grid.size(); ++i) out.values[i] = f(s_grid.axis(0).coord(int(i)));
    if (df) {
        Eigen::VectorXd d(s_grid.size());
        for (std::int64_t i = 0; i < s_grid.size(); ++i) d[i] = df(s_grid.axis(0).coord(int(i)));
        out.derivative = d;
    }
    return out;
}

namespace {

// Linear interpolation of curvature samples at off-node RK4 stages.
double interp(const ScalarAlongCurve& f, double s) {
    const auto& ax = f.s_grid.axis(0);
    double u = (s - ax.lo) / ax.step();
    int i = int(std::floor(u));
    if (i < 0) i = 0;
    if (i > ax.count - 2) i = ax.count - 2;
    double t = u - double(i);
    return (1.0 - t) * f.values[i] + t * f.values[i + 1];
}

void check_orthonormal(const Eigen::MatrixXd& frame, double tol) {
    Eigen::MatrixXd gram = frame.transpose() * frame;
    double err = (gram - Eigen::MatrixXd::Identity(frame.cols(), frame.cols())).cwiseAbs().maxCoeff();
    if (err > tol) throw std::invalid_argument("integrate_frame: initial frame not orthonormal");
}

// Shared frame-system integrator; `spherical` adds the -gamma term to T'.
SampledCurveFrame integrate_frame_impl(const std::vector<ScalarAlongCurve>& k,
                                       const Eigen::VectorXd& init_point,
                                       const Eigen::MatrixXd& init_frame, bool spherical) {
    const int m = int(init_point.size());
    const int nk = int(k.size());
    if (init_frame.rows() != m || init_frame.cols() != nk + 1)
        throw std::invalid_argument("integrate_frame: frame shape must be m x (num_curvatures + 1)");
    check_orthonormal(init_frame, 1e-10);
    if (spherical && std::abs(init_point.norm() - 1.0) > 1e-10)
        throw std::invalid_argument("integrate_frame_sphere: init point must be unit");
    for (const auto& f : k)
        if (!f.values.allFinite()) throw std::invalid_argument("integrate_frame: non-finite curvature samples");

    const ParamGrid& grid = k.at(0).s_grid;
    const auto& ax = grid.axis(0);
    const int steps = ax.count - 1;

    auto rhs = [&](double s, const Eigen::VectorXd& y) {
        Eigen::VectorXd dy(y.size());
        auto gamma = y.segment(0, m);
        auto T = y.segment(m, m);
        dy.segment(0, m) = T;
        Eigen::VectorXd dT = Eigen::VectorXd::Zero(m);
        if (spherical) dT -= gamma;
        for (int i = 0; i < nk; ++i) {
            double ki = interp(k[size_t(i)], s);
            dT += ki * y.segment(m * (2 + i), m);
            dy.segment(m * (2 + i), m) = -ki * T;
        }
        dy.segment(m, m) = dT;
        return dy;
    };

    SampledCurveFrame out;
    out.s_grid = grid;
    out.ambient_dim = m;
    out.gamma.resize(m, steps + 1);
    out.tangent.resize(m, steps + 1);
    out.xi.assign(size_t(nk), Eigen::MatrixXd(m, steps + 1));
    out.k.resize(size_t(nk));
    for (int i = 0; i < nk; ++i) out.k[size_t(i)] = k[size_t(i)].values;

    Eigen::VectorXd y(m * (nk + 2));
    y.segment(0, m) = init_point;
    for (int c = 0; c <= nk; ++c) y.segment(m * (1 + c), m) = init_frame.col(c);

    const double h = ax.step();
    for (int step = 0; step <= steps; ++step) {
        out.gamma.col(step) = y.segment(0, m);
        out.tangent.col(step) = y.segment(m, m);
        for (int i = 0; i < nk; ++i) out.xi[size_t(i)].col(step) = y.segment(m * (2 + i), m);
        if (step == steps) break;

        const double s = ax.lo + double(step) * h;
        Eigen::VectorXd k1 = rhs(s, y);
        Eigen::VectorXd k2 = rhs(s + 0.5 * h, y + 0.5 * h * k1);
        Eigen::VectorXd k3 = rhs(s + 0.5 * h, y + 0.5 * h * k2);
        Eigen::VectorXd k4 = rhs(s + h, y + h * k3);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!y.allFinite()) throw IntegrationDiverged(step);

        if ((step + 1) % 50 == 0) {
            // Drift correction: re-orthonormalize (T, xi_1..xi_nk), and for the
            // spherical system also renormalize gamma and keep the frame
            // tangent to the sphere.
            Eigen::VectorXd before = y;
            if (spherical) y.segment(0, m).normalize();
            Eigen::VectorXd gamma = y.segment(0, m);
            for (int c = 0; c <= nk; ++c) {
                Eigen::VectorXd v = y.segment(m * (1 + c), m);
                if (spherical) v -= gamma.dot(v) * gamma;
                for (int b = 0; b < c; ++b) {
                    const auto w = y.segment(m * (1 + b), m);
                    v -= w.dot(v) * w;
                }
                y.segment(m * (1 + c), m) = v.normalized();
            }
            out.max_frame_correction = std::max(out.max_frame_correction, (y - before).norm());
        }
    }
    return out;
}

}  // namespace

SampledCurveFrame integrate_frame(const std::vector<ScalarAlongCurve>& k,
                                  const Eigen::VectorXd& init_point,
                                  const Eigen::MatrixXd& init_frame) {
    return integrate_frame_impl(k, init_point, init_frame, false);
}

SampledCurveFrame integrate_frame_sphere(const std::vector<ScalarAlongCurve>& k,
                                         const Eigen::VectorXd& init_point,
                                         const Eigen::MatrixXd& init_frame) {
    return integrate_frame_impl(k, init_point, init_frame, true);
}

std::vector<ScalarAlongCurve> solve_combescure_along_curve(const SampledCurveFrame& curve,
                                                           const ScalarAlongCurve& phi,
                                                           const Eigen::VectorXd& beta_init) {
    const int nk = curve.num_normals();
    if (beta_init.size() != nk)
        throw std::invalid_argument("solve_combescure_along_curve: beta_init size mismatch");
    const double h = curve.s_grid.axis(0).step();
    Eigen::VectorXd dphi = phi.deriv_or_fd();

    std::vector<ScalarAlongCurve> out;
    out.resize(size_t(nk));
    for (int i = 0; i < nk; ++i) {
        Eigen::VectorXd integrand = dphi.cwiseProduct(curve.k[size_t(i)]);
        std::vector<double> samples(integrand.data(), integrand.data() + integrand.size());
        auto integral = quadrature(samples, h);
        ScalarAlongCurve b;
        b.s_grid = curve.s_grid;
        b.values.resize(curve.nodes());
        Eigen::VectorXd d(curve.nodes());
        for (std::int64_t j = 0; j < curve.nodes(); ++j) {
            b.values[j] = beta_init[i] - integral[size_t(j)];
            d[j] = -integrand[j];  // beta_i' = -phi' k_i by construction
        }
        b.derivative = d;
        out[size_t(i)] = b;
    }
    return out;
}

}  // namespace ribgeo

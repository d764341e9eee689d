#include "ribgeo/numerics.hpp"

#include <cmath>

namespace ribgeo {

Eigen::MatrixXd central_diff(const Eigen::MatrixXd& values, const ParamGrid& grid, int axis) {
    if (axis < 0 || axis >= grid.dim()) throw std::out_of_range("central_diff: axis out of range");
    const int n = grid.axis(axis).count;
    if (n < 3) throw std::invalid_argument("central_diff: fewer than 3 samples along axis");
    if (values.cols() != grid.size()) throw std::invalid_argument("central_diff: shape mismatch");

    const double h = grid.axis(axis).step();
    const std::int64_t stride = grid.stride(axis);
    Eigen::MatrixXd out(values.rows(), values.cols());

    // Iterate over all 1-D lines along `axis`.
    const std::int64_t total = grid.size();
    const std::int64_t line_len = n;
    for (std::int64_t base = 0; base < total; ++base) {
        auto idx = grid.unflat(base);
        if (idx[axis] != 0) continue;
        auto at = [&](std::int64_t i) { return base + i * stride; };
        out.col(at(0)) = (-3.0 * values.col(at(0)) + 4.0 * values.col(at(1)) - values.col(at(2))) / (2.0 * h);
        for (std::int64_t i = 1; i < line_len - 1; ++i)
            out.col(at(i)) = (values.col(at(i + 1)) - values.col(at(i - 1))) / (2.0 * h);
        out.col(at(line_len - 1)) =
            (3.0 * values.col(at(line_len - 1)) - 4.0 * values.col(at(line_len - 2)) + values.col(at(line_len - 3))) /
            (2.0 * h);
    }
    return out;
}

ImmersedGrid central_diff(const ImmersedGrid& f, int axis) {
    ImmersedGrid out(f.grid(), f.ambient_dim(), f.signature());
    out.values() = central_diff(f.values(), f.grid(), axis);
    out.mask() = f.mask();
    return out;
}

std::vector<Eigen::VectorXd> rk4_integrate(const OdeRhs& rhs, const Eigen::VectorXd& y0,
                                           double s0, double s1, int steps) {
    if (steps < 1) throw std::invalid_argument("rk4_integrate: steps >= 1 required");
    const double h = (s1 - s0) / double(steps);
    std::vector<Eigen::VectorXd> out;
    out.reserve(size_t(steps) + 1);
    out.push_back(y0);
    Eigen::VectorXd y = y0;
    for (int i = 0; i < steps; ++i) {
        const double s = s0 + double(i) * h;
        Eigen::VectorXd k1 = rhs(s, y);
        Eigen::VectorXd k2 = rhs(s + 0.5 * h, y + 0.5 * h * k1);
        Eigen::VectorXd k3 = rhs(s + 0.5 * h, y + 0.5 * h * k2);
        Eigen::VectorXd k4 = rhs(s + h, y + h * k3);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!y.allFinite()) throw IntegrationDiverged(i);
        out.push_back(y);
    }
    return out;
}

std::vector<double> quadrature(std::span<const double> samples, double h) {
    if (samples.size() < 2) throw std::invalid_argument("quadrature: need >= 2 samples");
    std::vector<double> out(samples.size(), 0.0);
    for (size_t i = 1; i < samples.size(); ++i)
        out[i] = out[i - 1] + 0.5 * h * (samples[i - 1] + samples[i]);
    return out;
}

FitResult fit_sphere(const std::vector<Eigen::VectorXd>& points) {
    const int n = int(points.size());
    if (n == 0) throw std::invalid_argument("fit_sphere: no points");
    const int m = int(points[0].size());
    if (n < m + 2) throw std::invalid_argument("fit_sphere: need >= m + 2 points");

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(m);
    for (const auto& p : points) centroid += p;
    centroid /= double(n);

    // |q - c|^2 = R^2  with q = p - centroid, linearized: 2 c.q + e = |q|^2,
    // e = R^2 - |c|^2.
    Eigen::MatrixXd A(n, m + 1);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd q = points[i] - centroid;
        A.row(i).head(m) = 2.0 * q.transpose();
        A(i, m) = 1.0;
        b(i) = q.squaredNorm();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues()(0);
    const double cutoff = smax * 1e-10;
    bool degenerate = svd.singularValues().minCoeff() < cutoff || smax == 0.0;
    svd.setThreshold(1e-10);
    Eigen::VectorXd sol = svd.solve(b);  // min-norm solution when rank deficient

    FitResult r;
    r.model = FitResult::Model::Sphere;
    Eigen::VectorXd c = sol.head(m);
    double r2 = sol(m) + c.squaredNorm();
    r.center_or_normal = c + centroid;
    r.radius_or_offset = r2 > 0.0 ? std::sqrt(r2) : 0.0;
    r.degenerate = degenerate || r2 <= 0.0;
    double ss = 0.0;
    for (const auto& p : points) {
        double res = (p - r.center_or_normal).squaredNorm() - r2;
        ss += res * res;
    }
    r.rms = std::sqrt(ss / double(n));
    return r;
}

FitResult fit_plane(const std::vector<Eigen::VectorXd>& points) {
    const int n = int(points.size());
    if (n == 0) throw std::invalid_argument("fit_plane: no points");
    const int m = int(points[0].size());
    if (n < m + 1) throw std::invalid_argument("fit_plane: need >= m + 1 points");

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(m);
    for (const auto& p : points) centroid += p;
    centroid /= double(n);

    Eigen::MatrixXd X(n, m);
    for (int i = 0; i < n; ++i) X.row(i) = (points[i] - centroid).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();

    FitResult r;
    r.model = FitResult::Model::Plane;
    Eigen::VectorXd normal = svd.matrixV().col(m - 1);
    // Fix the sign deterministically: first nonzero entry positive.
    for (int i = 0; i < m; ++i) {
        if (std::abs(normal[i]) > 1e-14) {
            if (normal[i] < 0.0) normal = -normal;
            break;
        }
    }
    r.center_or_normal = normal;
    r.radius_or_offset = normal.dot(centroid);
    // Rank-deficient cloud: more than one vanishing variance direction.
    const double scale = std::max(sv(0), 1e-300);
    r.degenerate = (m >= 2 && sv(m - 2) < 1e-10 * scale);
    double ss = 0.0;
    for (const auto& p : points) {
        double res = normal.dot(p) - r.radius_or_offset;
        ss += res * res;
    }
    r.rms = std::sqrt(ss / double(n));
    return r;
}

double pseudo_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                    const std::vector<int>& signature) {
    if (u.size() != v.size() || size_t(u.size()) != signature.size())
        throw std::invalid_argument("pseudo_inner: dimension mismatch");
    double s = 0.0;
    for (int i = 0; i < u.size(); ++i) s += signature[size_t(i)] * u[i] * v[i];
    return s;
}

}  // namespace ribgeo

#include "ribgeo/ribaucour.hpp"

#include <cmath>

namespace ribgeo {

namespace {

double cond2(const Eigen::MatrixXd& A) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    double smin = svd.singularValues().minCoeff();
    if (smin <= 0.0) return std::numeric_limits<double>::infinity();
    return svd.singularValues().maxCoeff() / smin;
}

}  // namespace

CombescureData build_combescure(const ImmersedGrid& f, const Eigen::VectorXd& phi,
                                const Eigen::MatrixXd& beta) {
    const int d = f.grid().dim();
    const int m = f.ambient_dim();
    const std::int64_t n = f.grid().size();
    if (phi.size() != n || beta.rows() != m || beta.cols() != n)
        throw std::invalid_argument("build_combescure: shape mismatch");

    CombescureData out;
    out.base = f;
    out.phi = phi;
    out.beta = beta;
    out.df = partials(f);
    out.metric = induced_metric(f, out.df);
    out.frames = tangent_frames(f, out.df);
    out.node_mask.assign(size_t(n), 1);

    // beta must be pointwise normal to the tangent space.
    double beta_res = 0.0;
    for (std::int64_t k = 0; k < n; ++k) {
        double bnorm = beta.col(k).norm();
        if (bnorm == 0.0) continue;
        for (int i = 0; i < d; ++i) {
            double ti = out.df[size_t(i)].col(k).norm();
            if (ti == 0.0) continue;
            double ip = f.inner(beta.col(k), out.df[size_t(i)].col(k));
            beta_res = std::max(beta_res, std::abs(ip) / (bnorm * ti));
        }
    }
    out.beta_normality_residual = beta_res;

    // grad phi via the FD induced metric, then F = f_* grad phi + beta.
    Eigen::MatrixXd dphi(d, n);
    {
        Eigen::MatrixXd phi_row = phi.transpose();
        for (int i = 0; i < d; ++i) dphi.row(i) = central_diff(phi_row, f.grid(), i);
    }
    out.F.resize(m, n);
    out.nu.resize(n);
    auto gamma = christoffels(out.metric, f.grid());
    auto hess = intrinsic_hessian(phi, f.grid(), gamma);
    SecondPartials d2f(f);

    out.Phi.assign(size_t(n), Eigen::MatrixXd(d, d));
    out.Phi_op.assign(size_t(n), Eigen::MatrixXd(d, d));
    for (std::int64_t k = 0; k < n; ++k) {
        if (!out.frames.full_rank[size_t(k)]) {
            out.node_mask[size_t(k)] = 0;
            out.F.col(k).setZero();
            out.nu[k] = 0.0;
            out.Phi[size_t(k)].setZero();
            out.Phi_op[size_t(k)].setZero();
            continue;
        }
        Eigen::MatrixXd ginv = out.metric[size_t(k)].inverse();
        Eigen::VectorXd a = ginv * dphi.col(k);
        Eigen::VectorXd F = beta.col(k);
        for (int i = 0; i < d; ++i) F += a[i] * out.df[size_t(i)].col(k);
        out.F.col(k) = F;
        double f2 = f.inner(F, F);
        out.nu[k] = f2 != 0.0 ? 1.0 / f2 : 0.0;

        Eigen::MatrixXd Abeta(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                double v = f.inner(d2f.at(i, j).col(k), beta.col(k));
                Abeta(i, j) = v;
                Abeta(j, i) = v;
            }
        Eigen::MatrixXd phi_cov = hess[size_t(k)] - Abeta;
        out.Phi_op[size_t(k)] = ginv * phi_cov;
        Eigen::MatrixXd Cinv = out.frames.coeff[size_t(k)].inverse();
        out.Phi[size_t(k)] = Cinv.transpose() * phi_cov * Cinv;
    }

    // Combescure condition residual: dF must be tangent everywhere.
    double res = 0.0;
    for (int j = 0; j < d; ++j) {
        Eigen::MatrixXd dFj = central_diff(out.F, f.grid(), j);
        for (std::int64_t k = 0; k < n; ++k) {
            if (!out.node_mask[size_t(k)]) continue;
            Eigen::VectorXd nrm = normal_project(out.frames, k, dFj.col(k));
            double scale = std::max(out.df[size_t(j)].col(k).norm(), 1e-12);
            res = std::max(res, nrm.norm() / scale);
        }
    }
    out.combescure_residual = res;
    return out;
}

namespace {

RibaucourResult transform_impl(const CombescureData& data, double c) {
    const ImmersedGrid& f = data.base;
    const int d = f.grid().dim();
    const int m = f.ambient_dim();
    const std::int64_t n = f.grid().size();

    RibaucourResult out;
    out.f_tilde = ImmersedGrid(f.grid(), m, f.signature());
    out.phi = data.phi;
    out.F.resize(m, n);
    out.nu.resize(n);
    out.delta.setZero(m, n);
    out.D.assign(size_t(n), Eigen::MatrixXd::Identity(d, d));
    out.D_op.assign(size_t(n), Eigen::MatrixXd::Identity(d, d));
    out.regular_mask.assign(size_t(n), 0);

    const double phi_scale = data.phi.cwiseAbs().maxCoeff();
    double F_scale = 0.0;
    for (std::int64_t k = 0; k < n; ++k) F_scale = std::max(F_scale, data.F.col(k).norm());

    std::int64_t regular = 0;
    for (std::int64_t k = 0; k < n; ++k) {
        Eigen::VectorXd G = data.F.col(k);
        if (c != 0.0) G += c * data.phi[k] * f.value(k);
        out.F.col(k) = G;
        double g2 = f.inner(G, G);
        double nu = g2 != 0.0 ? 1.0 / g2 : 0.0;
        out.nu[k] = nu;

        Eigen::MatrixXd Phi = data.Phi[size_t(k)];
        Eigen::MatrixXd Phi_op = data.Phi_op[size_t(k)];
        if (c != 0.0) {
            Phi += c * data.phi[k] * Eigen::MatrixXd::Identity(d, d);
            Phi_op += c * data.phi[k] * Eigen::MatrixXd::Identity(d, d);
        }
        out.D[size_t(k)] = Eigen::MatrixXd::Identity(d, d) - 2.0 * nu * data.phi[k] * Phi;
        out.D_op[size_t(k)] = Eigen::MatrixXd::Identity(d, d) - 2.0 * nu * data.phi[k] * Phi_op;

        bool ok = data.node_mask[size_t(k)] && std::abs(data.phi[k]) > 1e-12 * std::max(phi_scale, 1.0) &&
                  std::abs(g2) > 1e-24 * std::max(F_scale * F_scale, 1.0) &&
                  cond2(out.D[size_t(k)]) < 1e8;
        if (ok) {
            out.regular_mask[size_t(k)] = 1;
            ++regular;
        }

        out.f_tilde.set_value(k, f.value(k) - 2.0 * nu * data.phi[k] * G);
        if (std::abs(data.phi[k]) > 1e-300) out.delta.col(k) = -G / data.phi[k];
        if (!out.regular_mask[size_t(k)]) out.f_tilde.mask_node(k);
    }
    if (regular == 0) throw std::runtime_error("ribaucour_transform: all nodes irregular");

    // Condition (i): P Z - Z = <Z, delta>(f - f~) for the ambient basis.
    // Condition (ii): f~_* = P f_* D, checked against FD partials of f~.
    double res_i = 0.0, res_ii = 0.0;
    std::vector<Eigen::MatrixXd> dft;
    dft.reserve(size_t(d));
    for (int j = 0; j < d; ++j) dft.push_back(central_diff(out.f_tilde.values(), f.grid(), j));
    for (std::int64_t k = 0; k < n; ++k) {
        if (!out.regular_mask[size_t(k)]) continue;
        // Skip FD checks on nodes whose stencil touches irregular nodes.
        bool stencil_ok = true;
        auto idx = f.grid().unflat(k);
        for (int j = 0; j < d && stencil_ok; ++j)
            for (int off = -2; off <= 2 && stencil_ok; ++off) {
                int ii = idx[j] + off;
                if (ii < 0 || ii >= f.grid().axis(j).count) continue;
                auto idx2 = idx;
                idx2[j] = ii;
                if (!out.regular_mask[size_t(f.grid().flat(idx2))]) stencil_ok = false;
            }
        Eigen::VectorXd diff = f.value(k) - out.f_tilde.value(k);
        for (int e = 0; e < m; ++e) {
            Eigen::VectorXd Z = Eigen::VectorXd::Unit(m, e);
            Eigen::VectorXd lhs = Z - 2.0 * out.nu[k] * f.inner(out.F.col(k), Z) * out.F.col(k) - Z;
            Eigen::VectorXd rhs = f.inner(Z, out.delta.col(k)) * diff;
            res_i = std::max(res_i, (lhs - rhs).norm() / std::max(diff.norm(), 1e-12));
        }
        if (!stencil_ok) continue;
        for (int j = 0; j < d; ++j) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
            for (int i = 0; i < d; ++i) v += out.D_op[size_t(k)](i, j) * data.df[size_t(i)].col(k);
            Eigen::VectorXd Pv = v - 2.0 * out.nu[k] * f.inner(out.F.col(k), v) * out.F.col(k);
            double scale = std::max(dft[size_t(j)].col(k).norm(), 1e-12);
            res_ii = std::max(res_ii, (dft[size_t(j)].col(k) - Pv).norm() / scale);
        }
    }
    out.condition_i_residual = res_i;
    out.condition_ii_residual = res_ii;
    return out;
}

}  // namespace

RibaucourResult ribaucour_transform(const CombescureData& data, double combescure_tolerance) {
    if (data.combescure_residual > combescure_tolerance)
        throw std::runtime_error("ribaucour_transform: Combescure residual above tolerance");
    return transform_impl(data, 0.0);
}

RibaucourResult ribaucour_transform_spaceform(const CombescureData& data, double c) {
    if (c == 0.0) return transform_impl(data, 0.0);
    const ImmersedGrid& f = data.base;
    double quad_res = 0.0;
    for (std::int64_t k = 0; k < f.grid().size(); ++k)
        quad_res = std::max(quad_res, std::abs(f.inner(f.value(k), f.value(k)) - 1.0 / c));
    double h = f.grid().max_step();
    if (quad_res > 100.0 * h * h)
        throw std::runtime_error("ribaucour_transform_spaceform: base samples off the quadric");
    RibaucourResult out = transform_impl(data, c);
    // The transform must stay on the same quadric.
    double res = 0.0;
    for (std::int64_t k = 0; k < f.grid().size(); ++k) {
        if (!out.regular_mask[size_t(k)]) continue;
        Eigen::VectorXd v = out.f_tilde.value(k);
        res = std::max(res, std::abs(f.inner(v, v) - 1.0 / c));
    }
    if (res > 100.0 * h * h)
        throw std::runtime_error("ribaucour_transform_spaceform: output left the quadric");
    return out;
}

}  // namespace ribgeo

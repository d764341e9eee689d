#include "ribgeo/geometry.hpp"

namespace ribgeo {

std::vector<Eigen::MatrixXd> partials(const ImmersedGrid& f) {
    std::vector<Eigen::MatrixXd> out;
    out.reserve(size_t(f.grid().dim()));
    for (int i = 0; i < f.grid().dim(); ++i) out.push_back(central_diff(f.values(), f.grid(), i));
    return out;
}

SecondPartials::SecondPartials(const ImmersedGrid& f) : dim_(f.grid().dim()) {
    blocks_.resize(size_t(dim_ * (dim_ + 1) / 2));
    for (int i = 0; i < dim_; ++i) {
        Eigen::MatrixXd di = central_diff(f.values(), f.grid(), i);
        for (int j = i; j < dim_; ++j)
            blocks_[size_t(index(i, j))] = central_diff(di, f.grid(), j);
    }
}

std::vector<Eigen::MatrixXd> induced_metric(const ImmersedGrid& f,
                                            const std::vector<Eigen::MatrixXd>& df) {
    const int d = f.grid().dim();
    const std::int64_t n = f.grid().size();
    std::vector<Eigen::MatrixXd> g(size_t(n), Eigen::MatrixXd(d, d));
    for (std::int64_t k = 0; k < n; ++k)
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                double v = f.inner(df[size_t(i)].col(k), df[size_t(j)].col(k));
                g[size_t(k)](i, j) = v;
                g[size_t(k)](j, i) = v;
            }
    return g;
}

std::vector<Eigen::MatrixXd> induced_metric(const ImmersedGrid& f) {
    return induced_metric(f, partials(f));
}

std::vector<std::vector<Eigen::MatrixXd>> christoffels(const std::vector<Eigen::MatrixXd>& metric,
                                                       const ParamGrid& grid) {
    const int d = grid.dim();
    const std::int64_t n = grid.size();
    // Flatten metric entries into a (d*d) x n field to differentiate.
    Eigen::MatrixXd gflat(d * d, n);
    for (std::int64_t k = 0; k < n; ++k)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) gflat(i * d + j, k) = metric[size_t(k)](i, j);
    std::vector<Eigen::MatrixXd> dg;  // dg[l] = d_l g, flattened
    dg.reserve(size_t(d));
    for (int l = 0; l < d; ++l) dg.push_back(central_diff(gflat, grid, l));

    std::vector<std::vector<Eigen::MatrixXd>> gamma(
        size_t(n), std::vector<Eigen::MatrixXd>(size_t(d), Eigen::MatrixXd(d, d)));
    for (std::int64_t k = 0; k < n; ++k) {
        Eigen::MatrixXd ginv = metric[size_t(k)].inverse();
        for (int c = 0; c < d; ++c)
            for (int i = 0; i < d; ++i)
                for (int j = i; j < d; ++j) {
                    double s = 0.0;
                    for (int l = 0; l < d; ++l) {
                        double term = dg[size_t(i)](j * d + l, k) + dg[size_t(j)](i * d + l, k) -
                                      dg[size_t(l)](i * d + j, k);
                        s += ginv(c, l) * term;
                    }
                    gamma[size_t(k)][size_t(c)](i, j) = 0.5 * s;
                    gamma[size_t(k)][size_t(c)](j, i) = 0.5 * s;
                }
    }
    return gamma;
}

std::vector<Eigen::MatrixXd> intrinsic_hessian(const Eigen::VectorXd& phi, const ParamGrid& grid,
                                               const std::vector<std::vector<Eigen::MatrixXd>>& gamma) {
    const int d = grid.dim();
    const std::int64_t n = grid.size();
    Eigen::MatrixXd phi_row = phi.transpose();
    std::vector<Eigen::MatrixXd> dphi;
    dphi.reserve(size_t(d));
    for (int i = 0; i < d; ++i) dphi.push_back(central_diff(phi_row, grid, i));
    std::vector<Eigen::MatrixXd> ddphi;
    ddphi.resize(size_t(d));
    for (int i = 0; i < d; ++i) {
        ddphi[size_t(i)].resize(d, n);
        for (int j = 0; j < d; ++j) ddphi[size_t(i)].row(j) = central_diff(dphi[size_t(i)], grid, j);
    }
    std::vector<Eigen::MatrixXd> hess(size_t(n), Eigen::MatrixXd(d, d));
    for (std::int64_t k = 0; k < n; ++k)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                double v = 0.5 * (ddphi[size_t(i)](j, k) + ddphi[size_t(j)](i, k));
                for (int c = 0; c < d; ++c) v -= gamma[size_t(k)][size_t(c)](i, j) * dphi[size_t(c)](0, k);
                hess[size_t(k)](i, j) = v;
            }
    return hess;
}

TangentFrames tangent_frames(const ImmersedGrid& f, const std::vector<Eigen::MatrixXd>& df,
                             double rank_tol) {
    const int d = f.grid().dim();
    const int m = f.ambient_dim();
    const std::int64_t n = f.grid().size();
    TangentFrames out;
    out.frame.assign(size_t(n), Eigen::MatrixXd(m, d));
    out.coeff.assign(size_t(n), Eigen::MatrixXd(d, d));
    out.full_rank.assign(size_t(n), 1);
    for (std::int64_t k = 0; k < n; ++k) {
        Eigen::MatrixXd E = Eigen::MatrixXd::Zero(m, d);
        Eigen::MatrixXd C = Eigen::MatrixXd::Zero(d, d);
        for (int i = 0; i < d; ++i) {
            Eigen::VectorXd v = df[size_t(i)].col(k);
            double scale = v.norm();
            for (int a = 0; a < i; ++a) {
                C(a, i) = E.col(a).dot(df[size_t(i)].col(k));
                v -= C(a, i) * E.col(a);
            }
            double len = v.norm();
            if (len <= rank_tol * std::max(scale, 1e-300)) {
                out.full_rank[size_t(k)] = 0;
                E.col(i).setZero();
                C(i, i) = 0.0;
            } else {
                E.col(i) = v / len;
                C(i, i) = len;
            }
        }
        out.frame[size_t(k)] = E;
        out.coeff[size_t(k)] = C;
    }
    return out;
}

Eigen::VectorXd normal_project(const TangentFrames& frames, std::int64_t k, const Eigen::VectorXd& v) {
    const Eigen::MatrixXd& E = frames.frame[size_t(k)];
    return v - E * (E.transpose() * v);
}

}  // namespace ribgeo

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ribgeo {

/// One sampled parameter axis: `count` equally spaced nodes on [lo, hi].
struct GridAxis {
    int count = 0;
    double lo = 0.0;
    double hi = 0.0;

    double step() const { return (hi - lo) / double(count - 1); }
    double coord(int i) const { return lo + double(i) * step(); }
};

/// Product parameter grid with a factor partition: each axis belongs to one
/// factor block (0 = fiber/leaf block, 1 = base block, higher blocks allowed
/// for metric checks).
class ParamGrid {
public:
    ParamGrid() = default;

    ParamGrid(std::vector<GridAxis> axes, std::vector<int> factor)
        : axes_(std::move(axes)), factor_(std::move(factor)) {
        if (axes_.empty()) throw std::invalid_argument("ParamGrid: no axes");
        if (factor_.size() != axes_.size())
            throw std::invalid_argument("ParamGrid: factor partition must cover all axes exactly once");
        for (const auto& a : axes_) {
            if (a.count < 2) throw std::invalid_argument("ParamGrid: axis needs >= 2 samples");
            if (!(a.hi > a.lo)) throw std::invalid_argument("ParamGrid: axis range empty");
        }
        strides_.assign(axes_.size(), 1);
        for (int i = int(axes_.size()) - 2; i >= 0; --i)
            strides_[i] = strides_[i + 1] * axes_[i + 1].count;
        size_ = strides_[0] * axes_[0].count;
    }

    static ParamGrid uniform(std::vector<GridAxis> axes) {
        std::vector<int> factor(axes.size(), 0);
        return ParamGrid(std::move(axes), std::move(factor));
    }

    int dim() const { return int(axes_.size()); }
    std::int64_t size() const { return size_; }
    const GridAxis& axis(int i) const { return axes_.at(i); }
    int factor_of(int axis) const { return factor_.at(axis); }
    const std::vector<int>& factors() const { return factor_; }

    int num_factors() const {
        int m = 0;
        for (int f : factor_) m = std::max(m, f);
        return m + 1;
    }

    std::vector<int> axes_of_factor(int f) const {
        std::vector<int> out;
        for (int i = 0; i < dim(); ++i)
            if (factor_[i] == f) out.push_back(i);
        return out;
    }

    std::int64_t stride(int axis) const { return strides_.at(axis); }

    std::int64_t flat(const std::vector<int>& idx) const {
        std::int64_t k = 0;
        for (int i = 0; i < dim(); ++i) k += strides_[i] * idx[i];
        return k;
    }

    std::vector<int> unflat(std::int64_t k) const {
        std::vector<int> idx(dim());
        for (int i = 0; i < dim(); ++i) {
            idx[i] = int(k / strides_[i]);
            k %= strides_[i];
        }
        return idx;
    }

    /// Parameter values of a node.
    Eigen::VectorXd params(std::int64_t k) const {
        auto idx = unflat(k);
        Eigen::VectorXd p(dim());
        for (int i = 0; i < dim(); ++i) p[i] = axes_[i].coord(idx[i]);
        return p;
    }

    bool same_shape(const ParamGrid& o) const {
        if (dim() != o.dim()) return false;
        for (int i = 0; i < dim(); ++i)
            if (axes_[i].count != o.axes_[i].count) return false;
        return true;
    }

    /// Max step over all axes; drives the C*h^2 tolerance model.
    double max_step() const {
        double h = 0.0;
        for (const auto& a : axes_) h = std::max(h, a.step());
        return h;
    }

private:
    std::vector<GridAxis> axes_;
    std::vector<int> factor_;
    std::vector<std::int64_t> strides_;
    std::int64_t size_ = 0;
};

/// Samples of a map from a ParamGrid into flat ambient space of Euclidean or
/// Lorentzian signature. Values are stored column-per-node.
class ImmersedGrid {
public:
    ImmersedGrid() = default;

    ImmersedGrid(ParamGrid grid, int ambient_dim, std::vector<int> signature = {})
        : grid_(std::move(grid)), ambient_dim_(ambient_dim) {
        if (signature.empty()) signature.assign(ambient_dim, 1);
        if (int(signature.size()) != ambient_dim)
            throw std::invalid_argument("ImmersedGrid: signature length mismatch");
        int timelike = 0;
        for (int s : signature) {
            if (s != 1 && s != -1) throw std::invalid_argument("ImmersedGrid: signature entries must be +-1");
            if (s == -1) ++timelike;
        }
        if (timelike > 1)
            throw std::invalid_argument("ImmersedGrid: at most one timelike direction");
        signature_ = std::move(signature);
        values_.setZero(ambient_dim_, grid_.size());
        mask_.assign(size_t(grid_.size()), 1);
    }

    const ParamGrid& grid() const { return grid_; }
    int ambient_dim() const { return ambient_dim_; }
    const std::vector<int>& signature() const { return signature_; }
    bool lorentzian() const {
        for (int s : signature_)
            if (s == -1) return true;
        return false;
    }

    Eigen::MatrixXd& values() { return values_; }
    const Eigen::MatrixXd& values() const { return values_; }

    Eigen::VectorXd value(std::int64_t k) const { return values_.col(k); }
    void set_value(std::int64_t k, const Eigen::VectorXd& v) { values_.col(k) = v; }

    bool node_ok(std::int64_t k) const { return mask_[size_t(k)] != 0; }
    void mask_node(std::int64_t k) { mask_[size_t(k)] = 0; }
    const std::vector<std::uint8_t>& mask() const { return mask_; }
    std::vector<std::uint8_t>& mask() { return mask_; }

    std::int64_t num_masked() const {
        std::int64_t n = 0;
        for (auto m : mask_)
            if (!m) ++n;
        return n;
    }

    /// Pseudo inner product of ambient vectors under this grid's signature.
    double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
        double s = 0.0;
        for (int i = 0; i < ambient_dim_; ++i) s += signature_[i] * u[i] * v[i];
        return s;
    }

private:
    ParamGrid grid_;
    int ambient_dim_ = 0;
    std::vector<int> signature_;
    Eigen::MatrixXd values_;
    std::vector<std::uint8_t> mask_;
};

}  // namespace ribgeo

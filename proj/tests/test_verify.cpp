#include "ribgeo/verify.hpp"

#include <doctest.h>

#include <cmath>

#include "ribgeo/curves.hpp"
#include "ribgeo/partial_tube.hpp"

using namespace ribgeo;

namespace {

// latitude/longitude net on the unit sphere; x (factor 0) sweeps longitude
ImmersedGrid round_net(int nx = 33, int nth = 33) {
    ParamGrid grid({GridAxis{nx, 0.0, 6.0}, GridAxis{nth, 0.2, 1.2}}, {0, 1});
    ImmersedGrid f(grid, 3);
    for (std::int64_t k = 0; k < grid.size(); ++k) {
        Eigen::VectorXd p = grid.params(k);
        f.set_value(k, Eigen::Vector3d(std::cos(p[1]) * std::cos(p[0]),
                                       std::cos(p[1]) * std::sin(p[0]), std::sin(p[1])));
    }
    return f;
}

// torus of revolution in its coordinate net, optionally with rotated parameters
ImmersedGrid torus_net(bool rotated = false) {
    ParamGrid grid({GridAxis{33, 0.0, 3.0}, GridAxis{33, 0.0, 3.0}}, {0, 1});
    ImmersedGrid f(grid, 3);
    for (std::int64_t k = 0; k < grid.size(); ++k) {
        Eigen::VectorXd p = grid.params(k);
        double u = rotated ? p[0] + p[1] : p[0];
        double v = rotated ? p[0] - p[1] : p[1];
        f.set_value(k, Eigen::Vector3d((2.0 + std::cos(v)) * std::cos(u),
                                       (2.0 + std::cos(v)) * std::sin(u), std::sin(v)));
    }
    return f;
}

// generic Ribaucour partial tube over a helix-like curve, with near-singular
// nodes masked so normalized residuals stay meaningful
TubeEvaluation generic_tube() {
    ParamGrid sg = ParamGrid::uniform({GridAxis{65, 0.0, 4.0}});
    std::vector<ScalarAlongCurve> k = {
        ScalarAlongCurve::from_function(sg, [](double s) { return 0.7 + 0.2 * std::sin(s); }),
        ScalarAlongCurve::from_function(sg, [](double) { return 0.4; })};
    auto crv = integrate_frame(k, Eigen::Vector3d::Zero(), Eigen::MatrixXd::Identity(3, 3));
    auto phi = ScalarAlongCurve::from_function(
        sg, [](double s) { return 0.3 * s - 1.5; }, [](double) { return 0.3; });
    Eigen::VectorXd b0(2);
    b0 << 0.2, -0.1;
    auto beta = solve_combescure_along_curve(crv, phi, b0);

    ParamGrid fg = ParamGrid::uniform({GridAxis{33, 0.0, 2.0 * M_PI}});
    Eigen::MatrixXd alpha(2, fg.size());
    for (std::int64_t i = 0; i < fg.size(); ++i) {
        double t = fg.axis(0).coord(i);
        alpha.col(i) = Eigen::Vector2d(2.0 + std::cos(t), std::sin(t));
    }
    TubeEvaluation ev = surface_family(crv, phi, beta, fg, alpha);
    for (std::int64_t kk = 0; kk < ev.f.grid().size(); ++kk)
        if (!ev.regular_mask[size_t(kk)] || std::abs(ev.D_op[kk]) < 0.3) ev.f.mask_node(kk);
    return ev;
}

// FD unit normals of a surface grid in R^3
Eigen::MatrixXd surface_normals(const ImmersedGrid& f) {
    auto df = partials(f);
    Eigen::MatrixXd N(3, f.grid().size());
    for (std::int64_t k = 0; k < f.grid().size(); ++k) {
        Eigen::Vector3d a = df[0].col(k), b = df[1].col(k);
        N.col(k) = a.cross(b).normalized();
    }
    return N;
}

}  // namespace

TEST_CASE("sampled metric validation") {
    ParamGrid grid({GridAxis{5, 0.0, 1.0}, GridAxis{5, 0.0, 1.0}}, {0, 1});
    std::vector<Eigen::MatrixXd> g(size_t(grid.size()), Eigen::MatrixXd::Identity(2, 2));
    CHECK_NOTHROW(make_sampled_metric(grid, g));

    auto bad = g;
    bad[3](0, 1) = 0.1;  // asymmetric
    CHECK_THROWS(make_sampled_metric(grid, bad));

    auto neg = g;
    neg[3] = -Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS(make_sampled_metric(grid, neg));
}

TEST_CASE("orthogonal net check") {
    SUBCASE("round sphere net is orthogonal") {
        ImmersedGrid f = round_net();
        InvariantReport rep = check_orthogonal_net(f);
        CHECK(rep.pass());
        // interior central stencils see the orthogonality exactly; only the
        // one-sided boundary stencils leave an O(h^3) remainder
        auto metric = induced_metric(f);
        for (int i = 2; i < 31; ++i)
            for (int j = 2; j < 31; ++j)
                CHECK(std::abs(metric[size_t(f.grid().flat({i, j}))](0, 1)) < 1e-10);
    }

    SUBCASE("partial tube output is orthogonal to difference order") {
        TubeEvaluation ev = generic_tube();
        InvariantReport rep = check_orthogonal_net(ev.f);
        CHECK(rep.pass());
    }

    SUBCASE("sheared plane fails by orders of magnitude") {
        ParamGrid grid({GridAxis{17, 0.0, 1.0}, GridAxis{17, 0.0, 1.0}}, {0, 1});
        ImmersedGrid f(grid, 3);
        for (std::int64_t k = 0; k < grid.size(); ++k) {
            Eigen::VectorXd p = grid.params(k);
            f.set_value(k, Eigen::Vector3d(p[0] + p[1], p[1], 0.0));
        }
        InvariantReport rep = check_orthogonal_net(f, 1e-3);
        CHECK_FALSE(rep.pass());
        CHECK(rep.max_residual > 100.0 * rep.tolerance);
    }
}

TEST_CASE("adapted second fundamental form check") {
    SUBCASE("torus of revolution coordinate net") {
        InvariantReport rep = check_adapted_second_fundamental_form(torus_net());
        CHECK(rep.pass());
    }

    SUBCASE("partial tube output") {
        TubeEvaluation ev = generic_tube();
        InvariantReport rep = check_adapted_second_fundamental_form(ev.f, 100.0 * ev.f.grid().max_step() * ev.f.grid().max_step());
        CHECK(rep.pass());
    }

    SUBCASE("graph surface with mixed bending fails") {
        ParamGrid grid({GridAxis{17, 0.0, 1.5}, GridAxis{17, 0.0, 1.5}}, {0, 1});
        ImmersedGrid f(grid, 3);
        for (std::int64_t k = 0; k < grid.size(); ++k) {
            Eigen::VectorXd p = grid.params(k);
            f.set_value(k, Eigen::Vector3d(p[0], p[1], std::sin(p[0] + 2.0 * p[1])));
        }
        InvariantReport rep = check_adapted_second_fundamental_form(f);
        CHECK_FALSE(rep.pass());
    }
}

TEST_CASE("spherical leaves check") {
    SUBCASE("circles of latitude") {
        InvariantReport rep = check_spherical_leaves(round_net(), 0);
        CHECK(rep.pass());
    }

    SUBCASE("helicoid rulings are plane-like, not failed") {
        ParamGrid grid({GridAxis{17, 0.5, 2.0}, GridAxis{17, 0.0, 3.0}}, {0, 1});
        ImmersedGrid f(grid, 3);
        for (std::int64_t k = 0; k < grid.size(); ++k) {
            Eigen::VectorXd p = grid.params(k);
            f.set_value(k, Eigen::Vector3d(p[0] * std::cos(p[1]), p[0] * std::sin(p[1]), 0.5 * p[1]));
        }
        LeafSphereFits fits;
        InvariantReport rep = check_spherical_leaves(f, 0, 0.0, &fits);
        CHECK(rep.pass());
        CHECK(rep.max_residual == 0.0);
        for (auto flag : fits.plane_like) CHECK(flag == 1);
        REQUIRE(!rep.notes.empty());
        CHECK(rep.notes[0].find("plane-like") != std::string::npos);
    }

    SUBCASE("elliptic leaves fail") {
        ParamGrid grid({GridAxis{33, 0.0, 6.0}, GridAxis{9, 0.0, 1.0}}, {0, 1});
        ImmersedGrid f(grid, 3);
        for (std::int64_t k = 0; k < grid.size(); ++k) {
            Eigen::VectorXd p = grid.params(k);
            f.set_value(k, Eigen::Vector3d(2.0 * std::cos(p[0]), std::sin(p[0]), p[1]));
        }
        InvariantReport rep = check_spherical_leaves(f, 0, 1e-3);
        CHECK_FALSE(rep.pass());
        CHECK(rep.max_residual > 100.0 * rep.tolerance);
    }

    SUBCASE("partial tube leaves") {
        TubeEvaluation ev = generic_tube();
        double h = ev.f.grid().max_step();
        InvariantReport rep = check_spherical_leaves(ev.f, 0, 100.0 * h * h);
        CHECK(rep.pass());
    }
}

TEST_CASE("constant angle check") {
    SUBCASE("rotational surface with prescribed leaf spheres") {
        // profile r(s) = 1 + 0.2 sin s at height s, leaf spheres centered at
        // (0,0,s-0.3); the surface meets them at the closed-form angle
        ParamGrid grid({GridAxis{65, 0.0, 6.0}, GridAxis{65, 0.0, 2.0}}, {0, 1});
        ImmersedGrid f(grid, 3);
        for (std::int64_t k = 0; k < grid.size(); ++k) {
            Eigen::VectorXd p = grid.params(k);
            double r = 1.0 + 0.2 * std::sin(p[1]);
            f.set_value(k, Eigen::Vector3d(r * std::cos(p[0]), r * std::sin(p[0]), p[1]));
        }
        const std::int64_t ns = 65;
        EnneperTriple triple;
        triple.gamma.resize(3, ns);
        triple.alpha.s_grid = ParamGrid::uniform({grid.axis(1)});
        triple.beta.s_grid = triple.alpha.s_grid;
        triple.alpha.values.resize(ns);
        triple.beta.values.resize(ns);
        for (std::int64_t j = 0; j < ns; ++j) {
            double s = grid.axis(1).coord(int(j));
            double r = 1.0 + 0.2 * std::sin(s), dr = 0.2 * std::cos(s);
            double R = std::sqrt(r * r + 0.09);
            double cosang = (r - 0.3 * dr) / (R * std::sqrt(1.0 + dr * dr));
            triple.gamma.col(j) = Eigen::Vector3d(0.0, 0.0, s - 0.3);
            triple.alpha.values[j] = R * cosang;
            triple.beta.values[j] = std::sqrt(R * R - triple.alpha.values[j] * triple.alpha.values[j]);
        }
        Eigen::MatrixXd N = surface_normals(f);
        InvariantReport rep = check_constant_angle(f, 0, N, 0.0, nullptr, &triple);
        CHECK(rep.pass());
    }

    SUBCASE("partial tube meets its leaf spheres orthogonally") {
        TubeEvaluation ev = generic_tube();
        const std::int64_t ns = ev.spec.s_grid.size();
        const std::int64_t nt = ev.f.grid().axis(0).count;
        // the leaf over base node j lies on the sphere through the leaf points
        // and the base point f1(j)
        Eigen::MatrixXd centers(3, ns);
        for (std::int64_t j = 0; j < ns; ++j) {
            std::vector<Eigen::VectorXd> pts;
            for (std::int64_t i = 0; i < nt; ++i) pts.push_back(ev.f.value(ev.node(i, int(j))));
            pts.push_back(ev.spec.f1.col(j));
            FitResult fit = fit_sphere(pts);
            CHECK(fit.rms < 1e-8);
            centers.col(j) = fit.center_or_normal;
        }
        Eigen::MatrixXd N = surface_normals(ev.f);
        double h = ev.f.grid().max_step();
        InvariantReport rep = check_constant_angle(ev.f, 0, N, 100.0 * h * h, &centers);
        CHECK(rep.pass());
        // and the constant angle is a right angle
        double worst_mean = 0.0;
        for (std::int64_t j = 0; j < ns; ++j) {
            double mean = 0.0;
            std::int64_t used = 0;
            for (std::int64_t i = 0; i < nt; ++i) {
                std::int64_t kk = ev.node(i, int(j));
                if (!ev.f.node_ok(kk)) continue;
                Eigen::VectorXd rad = ev.f.value(kk) - centers.col(j);
                mean += rad.normalized().dot(N.col(kk));
                ++used;
            }
            if (used > 0) worst_mean = std::max(worst_mean, std::abs(mean / double(used)));
        }
        CHECK(worst_mean < 100.0 * h * h);
    }
}

TEST_CASE("curvature line check") {
    InvariantReport good = check_curvature_lines(torus_net(false));
    CHECK(good.pass());

    InvariantReport bad = check_curvature_lines(torus_net(true), 1e-3);
    CHECK_FALSE(bad.pass());
    CHECK(bad.max_residual > 100.0 * bad.tolerance);
}

TEST_CASE("geodesic curvature constancy check") {
    SUBCASE("latitude circles have constant geodesic curvature") {
        InvariantReport rep = check_geodesic_curvature_constancy(round_net(), 0);
        CHECK(rep.pass());
    }

    SUBCASE("generic graph coordinate curves fail") {
        ParamGrid grid({GridAxis{33, 0.0, 2.0}, GridAxis{33, 0.0, 2.0}}, {0, 1});
        ImmersedGrid f(grid, 3);
        for (std::int64_t k = 0; k < grid.size(); ++k) {
            Eigen::VectorXd p = grid.params(k);
            f.set_value(k, Eigen::Vector3d(p[0], p[1], std::sin(2.0 * p[0]) * (1.0 + 0.5 * p[1])));
        }
        InvariantReport rep = check_geodesic_curvature_constancy(f, 0);
        CHECK_FALSE(rep.pass());
    }
}

TEST_CASE("principal structure check") {
    SUBCASE("round cylinder") {
        ParamGrid grid({GridAxis{33, 0.0, 3.0}, GridAxis{33, 0.0, 2.0}}, {0, 1});
        ImmersedGrid f(grid, 3);
        for (std::int64_t k = 0; k < grid.size(); ++k) {
            Eigen::VectorXd p = grid.params(k);
            f.set_value(k, Eigen::Vector3d(std::cos(p[0]), std::sin(p[0]), p[1]));
        }
        InvariantReport rep = check_principal_structure(f);
        CHECK(rep.pass());
        REQUIRE(!rep.notes.empty());
        CHECK(rep.notes[0].find("multiplicity 1") != std::string::npos);
    }

    SUBCASE("channel hypersurface in four-space") {
        ParamGrid sg = ParamGrid::uniform({GridAxis{33, 0.0, 2.0}});
        std::vector<ScalarAlongCurve> k = {
            ScalarAlongCurve::from_function(sg, [](double) { return 0.3; }),
            ScalarAlongCurve::from_function(sg, [](double) { return 0.1; }),
            ScalarAlongCurve::from_function(sg, [](double) { return 0.0; })};
        auto crv = integrate_frame(k, Eigen::Vector4d::Zero(), Eigen::MatrixXd::Identity(4, 4));
        const double r = 0.8;
        ParamGrid grid({GridAxis{17, 0.4, 1.2}, GridAxis{17, 0.0, 1.0}, GridAxis{33, 0.0, 2.0}},
                       {0, 0, 1});
        ImmersedGrid f(grid, 4);
        for (std::int64_t kk = 0; kk < grid.size(); ++kk) {
            auto idx = grid.unflat(kk);
            Eigen::VectorXd p = grid.params(kk);
            int j = idx[2];
            Eigen::VectorXd val = crv.gamma.col(j) +
                r * (std::sin(p[0]) * std::cos(p[1]) * crv.xi[0].col(j) +
                     std::sin(p[0]) * std::sin(p[1]) * crv.xi[1].col(j) +
                     std::cos(p[0]) * crv.xi[2].col(j));
            f.set_value(kk, val);
        }
        double h = grid.max_step();
        InvariantReport rep = check_principal_structure(f, 100.0 * h * h);
        CHECK(rep.pass());
        bool saw = false;
        for (const auto& n : rep.notes) saw = saw || n.find("multiplicity 2") != std::string::npos;
        CHECK(saw);
    }
}

TEST_CASE("polar metric check") {
    ParamGrid grid2({GridAxis{33, 0.1, 1.2}, GridAxis{33, 0.0, 2.0}}, {0, 1});

    SUBCASE("explicit polar metric passes") {
        std::vector<Eigen::MatrixXd> g;
        Eigen::VectorXd lam(grid2.size());
        for (std::int64_t k = 0; k < grid2.size(); ++k) {
            double s = grid2.params(k)[0];
            Eigen::Matrix2d m = Eigen::Vector2d(1.0, std::cos(s) * std::cos(s)).asDiagonal();
            g.push_back(m);
            lam[k] = 1.0 + 0.5 * std::sin(s);  // depends on the curve factor only
        }
        SampledMetric metric = make_sampled_metric(grid2, g, lam);
        InvariantReport rep = check_polar_conformal(metric, 100.0 * grid2.max_step() * grid2.max_step());
        CHECK(rep.pass());
    }

    SUBCASE("mixed conformal factor fails the Hessian block") {
        std::vector<Eigen::MatrixXd> g;
        Eigen::VectorXd lam(grid2.size());
        for (std::int64_t k = 0; k < grid2.size(); ++k) {
            Eigen::VectorXd p = grid2.params(k);
            g.push_back(Eigen::MatrixXd(Eigen::Vector2d(1.0, std::cos(p[0]) * std::cos(p[0])).asDiagonal()));
            lam[k] = p[0] * p[1];
        }
        SampledMetric metric = make_sampled_metric(grid2, g, lam);
        InvariantReport rep = check_polar_conformal(metric);
        CHECK_FALSE(rep.pass());
    }

    ParamGrid grid3({GridAxis{17, 0.0, 1.0}, GridAxis{17, 0.0, 1.0}, GridAxis{17, 0.0, 1.0}},
                    {0, 0, 1});

    SUBCASE("conformal to a product is umbilical") {
        std::vector<Eigen::MatrixXd> g;
        for (std::int64_t k = 0; k < grid3.size(); ++k) {
            Eigen::VectorXd p = grid3.params(k);
            double c = std::exp(2.0 * (p[0] + p[1] + p[2]));
            g.push_back(c * Eigen::MatrixXd::Identity(3, 3));
        }
        SampledMetric metric = make_sampled_metric(grid3, g);
        double h = grid3.max_step();
        InvariantReport rep = check_polar_conformal(metric, 100.0 * h * h);
        CHECK(rep.pass());
    }

    SUBCASE("non-umbilical block metric fails") {
        std::vector<Eigen::MatrixXd> g;
        for (std::int64_t k = 0; k < grid3.size(); ++k) {
            Eigen::VectorXd p = grid3.params(k);
            Eigen::Vector3d d(1.0 + 0.3 * p[2] * p[1] * p[1], 1.0, 1.0);
            g.push_back(Eigen::MatrixXd(d.asDiagonal()));
        }
        SampledMetric metric = make_sampled_metric(grid3, g);
        InvariantReport rep = check_polar_conformal(metric);
        CHECK_FALSE(rep.pass());
    }

    SUBCASE("non-orthogonal metric fails") {
        std::vector<Eigen::MatrixXd> g;
        for (std::int64_t k = 0; k < grid2.size(); ++k) {
            Eigen::Matrix2d m;
            m << 1.0, 0.3, 0.3, 1.0;
            g.push_back(m);
        }
        SampledMetric metric = make_sampled_metric(grid2, g);
        InvariantReport rep = check_polar_conformal(metric, 1e-3);
        CHECK_FALSE(rep.pass());
        CHECK(rep.max_residual > 100.0 * rep.tolerance);
    }
}

TEST_CASE("conformality check") {
    SUBCASE("sphere cone chart with expected factor") {
        ParamGrid grid({GridAxis{33, 0.0, 1.5}, GridAxis{33, -0.5, 0.5}}, {0, 1});
        ImmersedGrid f(grid, 2);
        Eigen::VectorXd lam(grid.size());
        for (std::int64_t k = 0; k < grid.size(); ++k) {
            Eigen::VectorXd p = grid.params(k);
            f.set_value(k, std::exp(p[1]) * Eigen::Vector2d(std::cos(p[0]), std::sin(p[0])));
            lam[k] = std::exp(p[1]);
        }
        InvariantReport rep = check_conformality(f, nullptr, &lam);
        CHECK(rep.pass());
    }

    SUBCASE("shear map fails") {
        ParamGrid grid({GridAxis{17, 0.0, 1.0}, GridAxis{17, 0.0, 1.0}}, {0, 1});
        ImmersedGrid f(grid, 2);
        for (std::int64_t k = 0; k < grid.size(); ++k) {
            Eigen::VectorXd p = grid.params(k);
            f.set_value(k, Eigen::Vector2d(p[0] + 0.5 * p[1], p[1]));
        }
        InvariantReport rep = check_conformality(f, nullptr, nullptr, 1e-3);
        CHECK_FALSE(rep.pass());
        CHECK(rep.max_residual > 100.0 * rep.tolerance);
    }
}

TEST_CASE("adapted spherical net suite bundles the tube precondition") {
    TubeEvaluation ev = generic_tube();
    double h = ev.f.grid().max_step();
    auto suite = adapted_spherical_net_suite(ev.f, 0, 100.0 * h * h);
    REQUIRE(suite.size() == 3);
    for (const auto& rep : suite) CHECK(rep.pass());
}

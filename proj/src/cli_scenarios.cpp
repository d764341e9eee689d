#include "ribgeo/cli.hpp"

#include "ribgeo/conformal_special.hpp"
#include "ribgeo/curves.hpp"
#include "ribgeo/expr.hpp"
#include "ribgeo/geometry.hpp"
#include "ribgeo/numerics.hpp"
#include "ribgeo/ribaucour.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

namespace ribgeo::cli {

namespace {

// ---- config helpers -------------------------------------------------------

Expression parse_expr(const std::string& text, std::vector<std::string> vars) {
    try {
        return Expression(text, std::move(vars));
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

ScalarAlongCurve expr_scalar(const ParamGrid& sg, const std::string& text) {
    Expression e = parse_expr(text, {"s"});
    return ScalarAlongCurve::from_function(sg, [e](double s) { return e(s); });
}

ParamGrid range_grid(const ScenarioConfig& cfg, const std::string& name,
                     std::vector<double> fallback_range, int fallback_res) {
    auto range = cfg.param_numbers(name + "_range", std::move(fallback_range));
    if (range.size() != 2 || !(range[1] > range[0]))
        throw ConfigError("config: '" + name + "_range' must be [lo, hi] with hi > lo");
    int n = cfg.resolution(name, fallback_res);
    return ParamGrid::uniform({GridAxis{n, range[0], range[1]}});
}

/// Curve with parallel frame from curvature expressions (or a seeded random
/// trigonometric profile), integrated from the origin with the standard frame.
SampledCurveFrame curve_from_config(const ScenarioConfig& cfg,
                                    std::vector<std::string> fallback_k,
                                    std::vector<double> fallback_range, int fallback_res) {
    ParamGrid sg = range_grid(cfg, "s", std::move(fallback_range), fallback_res);
    std::vector<ScalarAlongCurve> k;
    if (cfg.param_flag("random_curvature", false)) {
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> coeff(-0.2, 0.2);
        for (size_t i = 0; i < fallback_k.size(); ++i) {
            double c0 = (i == 0 ? 0.6 : 0.25) + coeff(rng);
            double c1 = coeff(rng), c2 = coeff(rng);
            k.push_back(ScalarAlongCurve::from_function(sg, [c0, c1, c2](double s) {
                return c0 + c1 * std::sin(s) + c2 * std::cos(2.0 * s);
            }));
        }
    } else {
        for (const auto& text : cfg.param_strings("curvature", std::move(fallback_k)))
            k.push_back(expr_scalar(sg, text));
    }
    if (k.empty()) throw ConfigError("config: 'curvature' needs at least one entry");
    int m = int(k.size()) + 1;
    return integrate_frame(k, Eigen::VectorXd::Zero(m), Eigen::MatrixXd::Identity(m, m));
}

std::vector<ScalarAlongCurve> beta_from_config(const ScenarioConfig& cfg,
                                               const SampledCurveFrame& crv,
                                               const ScalarAlongCurve& phi,
                                               std::vector<double> fallback_b0) {
    auto b0 = cfg.param_numbers("beta0", std::move(fallback_b0));
    if (int(b0.size()) != crv.num_normals())
        throw ConfigError("config: 'beta0' needs one entry per curve normal (" +
                          std::to_string(crv.num_normals()) + ")");
    Eigen::VectorXd init = Eigen::Map<Eigen::VectorXd>(b0.data(), Eigen::Index(b0.size()));
    return solve_combescure_along_curve(crv, phi, init);
}

/// Unit-speed circle fiber in R^2 for the tube scenarios.
std::pair<ParamGrid, Eigen::MatrixXd> fiber_circle(const ScenarioConfig& cfg, int fallback_res) {
    auto center = cfg.param_numbers("fiber_center", {2.0, 0.0});
    double r = cfg.param_number("fiber_radius", 1.0);
    if (center.size() != 2 || r <= 0.0)
        throw ConfigError("config: circle fiber needs 'fiber_center' [x, y] and positive 'fiber_radius'");
    ParamGrid fg = range_grid(cfg, "fiber", {0.0, 2.0 * M_PI * r}, fallback_res);
    Eigen::MatrixXd a(2, fg.size());
    for (std::int64_t i = 0; i < fg.size(); ++i) {
        double t = fg.axis(0).coord(int(i)) / r;  // arc length parameter
        a.col(i) = Eigen::Vector2d(center[0] + r * std::cos(t), center[1] + r * std::sin(t));
    }
    return {fg, a};
}

/// Latitude/longitude net on S^2, the stock Gauss-map source.
ImmersedGrid round_net(const ScenarioConfig& cfg, std::vector<double> s_fallback) {
    ParamGrid xg = range_grid(cfg, "x", {0.0, 1.2}, 41);
    ParamGrid sg = range_grid(cfg, "s", std::move(s_fallback), 41);
    ParamGrid pg({xg.axis(0), sg.axis(0)}, {0, 1});
    ImmersedGrid N(pg, 3);
    for (std::int64_t k = 0; k < pg.size(); ++k) {
        auto p = pg.params(k);
        N.set_value(k, Eigen::Vector3d(std::cos(p[1]) * std::cos(p[0]),
                                       std::cos(p[1]) * std::sin(p[0]), std::sin(p[1])));
    }
    return N;
}

EnneperTriple triple_from_config(const ScenarioConfig& cfg, const ParamGrid& sg) {
    EnneperTriple triple;
    triple.alpha = expr_scalar(sg, cfg.param_string("alpha", "0.7"));
    triple.beta = expr_scalar(sg, cfg.param_string("beta", "sin(s)"));
    auto gexprs = cfg.param_strings("gamma", {"0", "0", "s"});
    if (gexprs.size() != 3) throw ConfigError("config: 'gamma' needs three expressions");
    triple.gamma.resize(3, sg.size());
    for (int i = 0; i < 3; ++i) {
        Expression e = parse_expr(gexprs[size_t(i)], {"s"});
        for (std::int64_t j = 0; j < sg.size(); ++j)
            triple.gamma(i, j) = e(sg.axis(0).coord(int(j)));
    }
    return triple;
}

/// Serialize a triple as a 1-D grid with rows (gamma, alpha, beta).
ImmersedGrid triple_grid(const EnneperTriple& triple) {
    const ParamGrid& sg = triple.alpha.s_grid;
    ImmersedGrid out(sg, int(triple.gamma.rows()) + 2);
    for (std::int64_t j = 0; j < sg.size(); ++j) {
        Eigen::VectorXd v(out.ambient_dim());
        v.head(triple.gamma.rows()) = triple.gamma.col(j);
        v[triple.gamma.rows()] = triple.alpha.values[j];
        v[triple.gamma.rows() + 1] = triple.beta.values[j];
        out.set_value(j, v);
    }
    return out;
}

/// Copy a tube evaluation into the scenario, masking irregular nodes.
void adopt_tube(BuiltScenario& out, TubeEvaluation ev) {
    out.f = ev.f;
    // Keep a margin away from the regularity boundary: nodes where the
    // regularity factor nearly vanishes have unbounded curvature and would
    // dominate every finite-difference residual.
    constexpr double kRegularityMargin = 0.3;
    for (std::int64_t k = 0; k < out.f.grid().size(); ++k)
        if (!ev.regular_mask[size_t(k)] || std::abs(ev.D_op[k]) < kRegularityMargin)
            out.f.mask_node(k);
    out.tube = std::move(ev);
}

/// FD unit normal of a 2-D grid in R^3 (cross product of the partials).
Eigen::MatrixXd surface_normals(const ImmersedGrid& f) {
    if (f.ambient_dim() != 3 || f.grid().dim() != 2)
        throw ConfigError("surface normals need a 2-D grid in R^3");
    auto df = partials(f);
    Eigen::MatrixXd out(3, f.grid().size());
    for (std::int64_t k = 0; k < f.grid().size(); ++k) {
        Eigen::Vector3d n = Eigen::Vector3d(df[0].col(k)).cross(Eigen::Vector3d(df[1].col(k)));
        double len = n.norm();
        out.col(k) = len > 1e-14 ? Eigen::Vector3d(n / len) : Eigen::Vector3d::Zero();
    }
    return out;
}

// ---- scenario builders ----------------------------------------------------

BuiltScenario build_ribaucour_transform(const ScenarioConfig& cfg) {
    std::string base = cfg.param_string("base", "plane");
    std::string mode = cfg.param_string("mode", "inversion");
    ParamGrid ug = range_grid(cfg, "u", base == "sphere-band" ? std::vector<double>{0.3, 1.2}
                                                              : std::vector<double>{-0.8, 0.8}, 33);
    ParamGrid vg = range_grid(cfg, "v", base == "sphere-band" ? std::vector<double>{0.1, 1.3}
                                                              : std::vector<double>{-0.8, 0.8}, 33);
    ParamGrid pg({ug.axis(0), vg.axis(0)}, {0, 0});
    ImmersedGrid f(pg, 3);
    for (std::int64_t k = 0; k < pg.size(); ++k) {
        auto p = pg.params(k);
        if (base == "plane") {
            f.set_value(k, Eigen::Vector3d(p[0], p[1], 0.0));
        } else if (base == "paraboloid") {
            f.set_value(k, Eigen::Vector3d(p[0], p[1], 0.3 * (p[0] * p[0] + p[1] * p[1])));
        } else if (base == "sphere-band") {
            f.set_value(k, Eigen::Vector3d(std::sin(p[0]) * std::cos(p[1]),
                                           std::sin(p[0]) * std::sin(p[1]), std::cos(p[0])));
        } else {
            throw ConfigError("config: unknown base surface '" + base + "'");
        }
    }

    const std::int64_t n = pg.size();
    Eigen::VectorXd phi(n);
    Eigen::MatrixXd beta(3, n);
    if (mode == "inversion") {
        auto c = cfg.param_numbers("center", {0.0, 0.0, 2.0});
        double r = cfg.param_number("radius", 1.5);
        if (c.size() != 3 || r <= 0.0)
            throw ConfigError("config: inversion needs 'center' [x, y, z] and positive 'radius'");
        Eigen::Vector3d p0(c[0], c[1], c[2]);
        auto df = partials(f);
        auto frames = tangent_frames(f, df);
        for (std::int64_t k = 0; k < n; ++k) {
            Eigen::Vector3d q = Eigen::Vector3d(f.value(k)) - p0;
            phi[k] = 0.5 * (q.squaredNorm() - r * r);
            beta.col(k) = normal_project(frames, k, q);
        }
    } else if (mode == "normal-shift") {
        if (base != "sphere-band")
            throw ConfigError("config: mode 'normal-shift' needs base 'sphere-band'");
        double dist = cfg.param_number("distance", 1.0);
        phi.setConstant(0.5 * dist);
        for (std::int64_t k = 0; k < n; ++k) beta.col(k) = -f.value(k);  // inward unit normal
    } else {
        throw ConfigError("config: unknown mode '" + mode + "'");
    }

    auto data = build_combescure(f, phi, beta);
    auto res = ribaucour_transform(data);
    std::int64_t regular = 0;
    for (auto m : res.regular_mask) regular += m;
    if (regular == 0) throw ConstructionError("ribaucour-transform: every node is irregular");

    BuiltScenario out;
    out.f = res.f_tilde;
    for (std::int64_t k = 0; k < n; ++k)
        if (!res.regular_mask[size_t(k)]) out.f.mask_node(k);
    out.extras.emplace_back("base", f);
    return out;
}

BuiltScenario build_partial_tube_scenario(const ScenarioConfig& cfg) {
    auto crv = curve_from_config(cfg, {"1", "0"}, {0.0, 2.0 * M_PI}, 65);
    auto phi = expr_scalar(crv.s_grid, cfg.param_string("phi", "-1.0+0.3*sin(s)"));
    auto beta = beta_from_config(cfg, crv, phi, {0.15, 0.0});
    auto [fg, f0] = fiber_circle(cfg, 65);
    if (crv.num_normals() < 2) throw ConfigError("config: partial-tube needs a curve in R^3 or higher");
    BuiltScenario out;
    adopt_tube(out, build_partial_tube(make_tube_spec(crv, phi, beta, fg, f0)));
    return out;
}

BuiltScenario build_surface_family(const ScenarioConfig& cfg) {
    auto crv = curve_from_config(cfg, {"0.7+0.2*sin(s)", "0.4"}, {0.0, 4.0}, 81);
    auto phi = expr_scalar(crv.s_grid, cfg.param_string("phi", "0.3*s-1.5"));
    auto beta = beta_from_config(cfg, crv, phi, {0.2, -0.1});
    auto [fg, alpha] = fiber_circle(cfg, 33);
    BuiltScenario out;
    adopt_tube(out, surface_family(crv, phi, beta, fg, alpha));
    return out;
}

BuiltScenario build_foliation(const ScenarioConfig& cfg) {
    auto crv = curve_from_config(cfg, {"0.3", "0.1", "0.0"}, {0.0, 2.0}, 33);
    if (crv.num_normals() != 3)
        throw ConfigError("config: hypersurface-foliation needs a curve in R^4");
    auto phi = expr_scalar(crv.s_grid, cfg.param_string("phi", "-0.6"));
    auto beta = beta_from_config(cfg, crv, phi, {0.0, 0.0, 0.0});
    // fiber: sphere patch in R^3
    auto center = cfg.param_numbers("fiber_center", {2.5, 0.0, 0.0});
    double r = cfg.param_number("fiber_radius", 1.0);
    if (center.size() != 3 || r <= 0.0)
        throw ConfigError("config: foliation fiber needs 'fiber_center' [x, y, z] and positive 'fiber_radius'");
    ParamGrid ug = range_grid(cfg, "fiber_u", {0.4, 1.2}, 17);
    ParamGrid vg = range_grid(cfg, "fiber_v", {0.0, 1.0}, 17);
    ParamGrid fg({ug.axis(0), vg.axis(0)}, {0, 0});
    Eigen::MatrixXd g(3, fg.size());
    for (std::int64_t i = 0; i < fg.size(); ++i) {
        auto p = fg.params(i);
        g.col(i) = Eigen::Vector3d(center[0] + r * std::sin(p[0]) * std::cos(p[1]),
                                   center[1] + r * std::sin(p[0]) * std::sin(p[1]),
                                   center[2] + r * std::cos(p[0]));
    }
    BuiltScenario out;
    adopt_tube(out, hypersurface_foliation(crv, phi, beta, fg, g));
    return out;
}

BuiltScenario build_channel(const ScenarioConfig& cfg) {
    auto crv = curve_from_config(cfg, {"0.3", "0.1", "0.0"}, {0.0, 2.0}, 33);
    if (crv.num_normals() != 3) throw ConfigError("config: channel needs a curve in R^4");
    double r = cfg.param_number("radius", 0.8);
    if (r <= 0.0) throw ConfigError("config: channel 'radius' must be positive");
    ParamGrid ug = range_grid(cfg, "fiber_u", {0.4, 1.2}, 17);
    ParamGrid vg = range_grid(cfg, "fiber_v", {0.0, 1.0}, 17);
    ParamGrid pg({ug.axis(0), vg.axis(0), crv.s_grid.axis(0)}, {0, 0, 1});
    ImmersedGrid f(pg, 4);
    for (std::int64_t k = 0; k < pg.size(); ++k) {
        auto idx = pg.unflat(k);
        auto p = pg.params(k);
        int j = idx[2];
        Eigen::VectorXd val = crv.gamma.col(j) +
            r * (std::sin(p[0]) * std::cos(p[1]) * crv.xi[0].col(j) +
                 std::sin(p[0]) * std::sin(p[1]) * crv.xi[1].col(j) +
                 std::cos(p[0]) * crv.xi[2].col(j));
        f.set_value(k, val);
    }
    BuiltScenario out;
    out.f = f;
    return out;
}

BuiltScenario build_gauss_tube_scenario(const ScenarioConfig& cfg) {
    ParamGrid sg = range_grid(cfg, "s", {0.0, 2.0}, 81);
    std::vector<ScalarAlongCurve> k;
    for (const auto& text : cfg.param_strings("curvature", {"0.5"}))
        k.push_back(expr_scalar(sg, text));
    int m = int(k.size()) + 2;  // sphere curve in S^{m-1} subset R^m
    Eigen::VectorXd p0 = Eigen::VectorXd::Zero(m);
    p0[0] = 1.0;
    Eigen::MatrixXd frame = Eigen::MatrixXd::Zero(m, m - 1);
    for (int i = 0; i + 1 < m; ++i) frame(i + 1, i) = 1.0;
    auto crv = integrate_frame_sphere(k, p0, frame);

    auto phi = expr_scalar(sg, cfg.param_string("phi", "-0.5"));
    std::vector<ScalarAlongCurve> beta;
    auto bexprs = cfg.param_strings("beta", std::vector<std::string>(size_t(m - 2), "0"));
    if (int(bexprs.size()) != m - 2)
        throw ConfigError("config: gauss-tube 'beta' needs one expression per sphere normal");
    for (const auto& text : bexprs) beta.push_back(expr_scalar(sg, text));

    ParamGrid fg = range_grid(cfg, "fiber", {0.5, 2.0}, 41);
    auto fexprs = cfg.param_strings("fiber_curve", std::vector<std::string>(size_t(m - 2), "t"));
    if (int(fexprs.size()) != m - 2)
        throw ConfigError("config: gauss-tube 'fiber_curve' needs one expression per sphere normal");
    Eigen::MatrixXd f0(m - 2, fg.size());
    for (int i = 0; i < m - 2; ++i) {
        Expression e = parse_expr(fexprs[size_t(i)], {"t"});
        for (std::int64_t j = 0; j < fg.size(); ++j) f0(i, j) = e(fg.axis(0).coord(int(j)));
    }

    BuiltScenario out;
    out.gauss = build_gauss_tube(crv, phi, beta, fg, f0);
    out.f = out.gauss->N;
    return out;
}

BuiltScenario build_enneper_planar(const ScenarioConfig& cfg) {
    ImmersedGrid N = round_net(cfg, {0.1, 0.9});
    BuiltScenario out;
    out.gauss = gauss_tube_from_net(N);
    Expression Ue = parse_expr(cfg.param_string("U", "2+cos(x)"), {"x"});
    Eigen::VectorXd U(out.gauss->fiber_count());
    for (std::int64_t i = 0; i < out.gauss->fiber_count(); ++i)
        U[i] = Ue(N.grid().axis(0).coord(int(i)));
    ParamGrid sg = ParamGrid::uniform({N.grid().axis(1)});
    auto V = expr_scalar(sg, cfg.param_string("V", "0"));
    out.support = support_function(*out.gauss, U, V);
    out.f = gauss_parametrization(*out.gauss, *out.support);
    out.normals = out.gauss->N.values();
    return out;
}

BuiltScenario build_enneper_general(const ScenarioConfig& cfg, bool deform) {
    ImmersedGrid N = round_net(cfg, {0.0, 0.9});
    BuiltScenario out;
    out.gauss = gauss_tube_from_net(N);
    ParamGrid sg = ParamGrid::uniform({N.grid().axis(1)});
    EnneperTriple triple = triple_from_config(cfg, sg);
    if (deform) {
        auto lam = expr_scalar(sg, cfg.param_string("lambda", "1+s*s/4"));
        triple = deform_family(triple, lam);
    }
    out.f = enneper_parametrization(*out.gauss, triple);
    out.triple = std::move(triple);
    out.normals = surface_normals(out.f);
    out.extras.emplace_back("triple", triple_grid(*out.triple));
    return out;
}

BuiltScenario build_enneper_normalize(const ScenarioConfig& cfg) {
    ImmersedGrid N = round_net(cfg, {0.2, 1.0});
    BuiltScenario out;
    out.gauss = gauss_tube_from_net(N);
    ParamGrid sg = ParamGrid::uniform({N.grid().axis(1)});
    EnneperTriple triple = triple_from_config(cfg, sg);
    auto [norm, lam] = normalize_through_point(triple);
    double h = N.grid().max_step();
    // the normalization ODE and the inversion both stack FD stages
    out.f = enneper_parametrization(*out.gauss, norm, 2.0 * cfg.tolerance_c * h * h);
    out.triple = std::move(norm);
    out.normals = surface_normals(out.f);
    out.extras.emplace_back("normalized-triple", triple_grid(*out.triple));
    out.extras.emplace_back(
        "planar", planarize_by_inversion(out.f, Eigen::Vector3d::Zero(),
                                         5.0 * cfg.tolerance_c * h * h));
    return out;
}

BuiltScenario build_joachimsthal(const ScenarioConfig& cfg) {
    ParamGrid tg = range_grid(cfg, "t", {0.3, 1.1}, 33);
    auto gexprs = cfg.param_strings("gamma", {"cosh(t)", "sinh(t)", "0"});
    auto dexprs = cfg.param_strings("dgamma", {});
    if (gexprs.size() != 3 || (!dexprs.empty() && dexprs.size() != 3))
        throw ConfigError("config: joachimsthal 'gamma' (and optional 'dgamma') need three expressions");
    bool default_curve = !cfg.doc->contains("params") ||
                         !(*cfg.doc)["params"].contains("gamma");
    Eigen::MatrixXd gamma(3, tg.size()), dgamma(3, tg.size());
    for (int i = 0; i < 3; ++i) {
        Expression e = parse_expr(gexprs[size_t(i)], {"t"});
        for (std::int64_t j = 0; j < tg.size(); ++j) gamma(i, j) = e(tg.axis(0).coord(int(j)));
    }
    bool have_d = !dexprs.empty() || default_curve;
    if (!dexprs.empty()) {
        for (int i = 0; i < 3; ++i) {
            Expression e = parse_expr(dexprs[size_t(i)], {"t"});
            for (std::int64_t j = 0; j < tg.size(); ++j) dgamma(i, j) = e(tg.axis(0).coord(int(j)));
        }
    } else if (default_curve) {
        for (std::int64_t j = 0; j < tg.size(); ++j) {
            double t = tg.axis(0).coord(int(j));
            dgamma.col(j) = Eigen::Vector3d(std::sinh(t), std::cosh(t), 0.0);
        }
    }
    ParamGrid sg = range_grid(cfg, "s", {0.1, 1.0}, 33);
    auto a = expr_scalar(sg, cfg.param_string("a", "0.7*s+0.1*s^2"));
    BuiltScenario out;
    out.f = joachimsthal_surface(gamma, tg, a, have_d ? &dgamma : nullptr);
    out.eps = -1;
    return out;
}

BuiltScenario build_constant_angle(const ScenarioConfig& cfg) {
    int eps = int(cfg.param_number("eps", 1.0));
    if (eps < -1 || eps > 1) throw ConfigError("config: 'eps' must be -1, 0 or 1");
    ParamGrid xg = range_grid(cfg, "x", {0.0, 1.5}, 33);
    ParamGrid sg = range_grid(cfg, "s", {0.1, 1.2}, 33);
    auto a = expr_scalar(sg, cfg.param_string("a", "0.8*s"));

    ImmersedGrid g;
    Eigen::MatrixXd normal;
    if (eps == 1) {
        double lat = cfg.param_number("latitude", 0.3);
        g = ImmersedGrid(xg, 3);
        normal.resize(3, xg.size());
        for (std::int64_t k = 0; k < xg.size(); ++k) {
            double u = xg.axis(0).coord(int(k));
            g.set_value(k, Eigen::Vector3d(std::cos(lat) * std::cos(u),
                                           std::cos(lat) * std::sin(u), std::sin(lat)));
            normal.col(k) = Eigen::Vector3d(-std::sin(lat) * std::cos(u),
                                            -std::sin(lat) * std::sin(u), std::cos(lat));
        }
    } else if (eps == 0) {
        g = ImmersedGrid(xg, 2);
        normal.resize(2, xg.size());
        for (std::int64_t k = 0; k < xg.size(); ++k) {
            g.set_value(k, Eigen::Vector2d(xg.axis(0).coord(int(k)), 0.0));
            normal.col(k) = Eigen::Vector2d(0.0, 1.0);
        }
    } else {
        g = ImmersedGrid(xg, 3, {-1, 1, 1});
        normal.resize(3, xg.size());
        for (std::int64_t k = 0; k < xg.size(); ++k) {
            double u = xg.axis(0).coord(int(k));
            g.set_value(k, Eigen::Vector3d(std::cosh(u), std::sinh(u), 0.0));
            normal.col(k) = Eigen::Vector3d(0.0, 0.0, 1.0);
        }
    }

    auto spec = make_constant_angle_spec(eps, g, normal, a);
    BuiltScenario out;
    out.f = constant_angle_map(spec);
    out.eps = eps;

    // conformal image in flat space: the leaf geometry lives here
    const ParamGrid& pg = out.f.grid();
    int n = eps == 0 ? g.ambient_dim() : g.ambient_dim() - 1;  // dimension of Q_eps
    ImmersedGrid img(pg, eps == 0 ? out.f.ambient_dim() : n + 1);
    MinkowskiModel model;
    if (eps == -1) model = make_minkowski_model(2);
    for (std::int64_t k = 0; k < pg.size(); ++k) {
        if (!out.f.node_ok(k)) {
            img.mask_node(k);
            continue;
        }
        Eigen::VectorXd v = out.f.value(k);
        int amb = out.f.ambient_dim();
        Eigen::VectorXd x = v.head(amb - 1);
        double t = v[amb - 1];
        if (eps == 1) {
            img.set_value(k, conformal_map_sphere(x, t));
        } else if (eps == 0) {
            img.set_value(k, v);
        } else {
            Eigen::VectorXd coeffs = model.from_standard(x);
            if (coeffs[0] <= 1e-8) {
                img.mask_node(k);
                continue;
            }
            img.set_value(k, conformal_map_hyperbolic(model, coeffs, t));
        }
    }
    out.extras.emplace_back("image", std::move(img));
    return out;
}

BuiltScenario build_metric_check(const ScenarioConfig& cfg) {
    auto ranges = cfg.param_numbers("ranges", {0.1, 1.2, 0.0, 2.0});
    if (ranges.size() < 4 || ranges.size() % 2 != 0)
        throw ConfigError("config: 'ranges' must hold [lo, hi] pairs for >= 2 axes");
    int d = int(ranges.size()) / 2;
    std::vector<double> blocks_raw;
    {
        std::vector<double> fb(static_cast<size_t>(d));
        for (int i = 0; i < d; ++i) fb[size_t(i)] = double(i);
        blocks_raw = cfg.param_numbers("blocks", fb);
    }
    if (int(blocks_raw.size()) != d) throw ConfigError("config: 'blocks' needs one entry per axis");
    std::vector<GridAxis> axes;
    std::vector<int> blocks;
    std::vector<std::string> vars;
    for (int i = 0; i < d; ++i) {
        int n = cfg.resolution("x" + std::to_string(i), 33);
        if (!(ranges[size_t(2 * i + 1)] > ranges[size_t(2 * i)]))
            throw ConfigError("config: 'ranges' axis " + std::to_string(i) + " is empty");
        axes.push_back(GridAxis{n, ranges[size_t(2 * i)], ranges[size_t(2 * i + 1)]});
        blocks.push_back(int(blocks_raw[size_t(i)]));
        vars.push_back("x" + std::to_string(i));
    }
    ParamGrid grid(axes, blocks);

    std::vector<std::string> mexprs;
    {
        std::vector<std::string> fb;
        if (d == 2) fb = {"1", "0", "0", "cos(x0)^2"};
        else
            throw ConfigError("config: metric-check needs an explicit 'metric' for dim != 2");
        mexprs = cfg.param_strings("metric", fb);
    }
    if (int(mexprs.size()) != d * d)
        throw ConfigError("config: 'metric' needs " + std::to_string(d * d) +
                          " row-major expressions");
    std::vector<Expression> entry;
    for (const auto& text : mexprs) entry.push_back(parse_expr(text, vars));

    std::vector<Eigen::MatrixXd> g(size_t(grid.size()));
    ImmersedGrid samples(grid, d * d);
    for (std::int64_t k = 0; k < grid.size(); ++k) {
        auto p = grid.params(k);
        std::vector<double> pv(p.data(), p.data() + d);
        Eigen::MatrixXd m(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) m(i, j) = entry[size_t(i * d + j)](pv);
        g[size_t(k)] = 0.5 * (m + m.transpose());  // enforce exact symmetry of samples
        samples.set_value(k, Eigen::Map<Eigen::VectorXd>(g[size_t(k)].data(), d * d));
    }

    std::optional<Eigen::VectorXd> conf;
    std::string ctext = cfg.param_string("conformal", "");
    if (!ctext.empty()) {
        Expression ce = parse_expr(ctext, vars);
        Eigen::VectorXd lam(grid.size());
        for (std::int64_t k = 0; k < grid.size(); ++k) {
            auto p = grid.params(k);
            lam[k] = ce(std::vector<double>(p.data(), p.data() + d));
        }
        conf = std::move(lam);
    }

    BuiltScenario out;
    try {
        out.metric = make_sampled_metric(grid, std::move(g), std::move(conf));
    } catch (const std::exception& e) {
        throw ConstructionError(std::string("metric-check: ") + e.what());
    }
    out.f = samples;
    return out;
}

// ---- suites ---------------------------------------------------------------

std::vector<InvariantReport> joachimsthal_suite(const BuiltScenario& sc, double tol) {
    const ImmersedGrid& f = sc.f;
    if (f.ambient_dim() != 3 || f.grid().dim() != 2 || f.grid().num_factors() < 2)
        throw ConfigError("joachimsthal suite needs a 2-factor surface grid in R^3");

    std::vector<InvariantReport> out;
    double scale = std::max(1.0, f.values().colwise().norm().maxCoeff());

    // fixed-s leaves: planes, later intersected along a common line
    std::vector<Eigen::Vector3d> plane_normal;
    std::vector<double> plane_offset;
    InvariantReport planes;
    planes.name = "joachimsthal-planes";
    planes.tolerance = tol;
    planes.grid_h = f.grid().max_step();
    std::vector<double> plane_res;
    for (const auto& leaf : leaves_of_factor(f.grid(), 0)) {
        std::vector<Eigen::VectorXd> pts;
        for (auto k : leaf)
            if (f.node_ok(k)) pts.push_back(f.value(k));
        if (pts.size() < 3) {
            ++planes.samples_excluded;
            continue;
        }
        auto fit = fit_plane(pts);
        plane_res.push_back(fit.rms / scale);
        plane_normal.emplace_back(fit.center_or_normal);
        plane_offset.push_back(fit.radius_or_offset);
        ++planes.samples_used;
    }
    for (double r : plane_res) {
        planes.max_residual = std::max(planes.max_residual, r);
        planes.rms_residual += r * r;
    }
    planes.rms_residual = plane_res.empty() ? 0.0 : std::sqrt(planes.rms_residual / double(plane_res.size()));
    out.push_back(planes);

    // common line of the plane family: direction from the stacked normals,
    // foot point from least squares in the orthogonal complement
    InvariantReport line;
    line.name = "joachimsthal-common-line";
    line.tolerance = tol;
    line.grid_h = planes.grid_h;
    Eigen::Vector3d axis = Eigen::Vector3d::UnitX();
    Eigen::Vector3d foot = Eigen::Vector3d::Zero();
    if (plane_normal.size() >= 2) {
        Eigen::MatrixXd Nrm(plane_normal.size(), 3);
        Eigen::VectorXd off(plane_normal.size());
        for (size_t j = 0; j < plane_normal.size(); ++j) {
            Nrm.row(Eigen::Index(j)) = plane_normal[j].transpose();
            off[Eigen::Index(j)] = plane_offset[j];
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(Nrm, Eigen::ComputeThinV);
        axis = svd.matrixV().col(2);
        foot = Nrm.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(off);
        std::vector<double> res;
        for (size_t j = 0; j < plane_normal.size(); ++j) {
            double miss = std::hypot(plane_normal[j].dot(foot) - plane_offset[j],
                                     plane_normal[j].dot(axis) * scale);
            res.push_back(miss / scale);
        }
        for (double r : res) {
            line.max_residual = std::max(line.max_residual, r);
            line.rms_residual += r * r;
        }
        line.rms_residual = std::sqrt(line.rms_residual / double(res.size()));
        line.samples_used = std::int64_t(res.size());
    } else {
        line.notes.push_back("fewer than two planes; nothing to intersect");
    }
    out.push_back(line);

    // fixed-t leaves: spheres with center constrained to the common line
    InvariantReport spheres;
    spheres.name = "joachimsthal-spheres";
    spheres.tolerance = tol;
    spheres.grid_h = planes.grid_h;
    std::vector<double> sph_res;
    for (const auto& leaf : leaves_of_factor(f.grid(), 1)) {
        std::vector<Eigen::VectorXd> pts;
        for (auto k : leaf)
            if (f.node_ok(k)) pts.push_back(f.value(k));
        if (pts.size() < 3) {
            ++spheres.samples_excluded;
            continue;
        }
        // center = foot + tau * axis; linear least squares in (tau, rho)
        Eigen::MatrixXd A(pts.size(), 2);
        Eigen::VectorXd b(pts.size());
        for (size_t i = 0; i < pts.size(); ++i) {
            Eigen::Vector3d q = Eigen::Vector3d(pts[i]) - foot;
            A(Eigen::Index(i), 0) = 2.0 * axis.dot(q);
            A(Eigen::Index(i), 1) = 1.0;
            b[Eigen::Index(i)] = q.squaredNorm();
        }
        Eigen::Vector2d sol = A.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(b);
        double r2 = sol[1] + sol[0] * sol[0];
        if (r2 <= 0.0) {
            ++spheres.samples_excluded;
            continue;
        }
        double r = std::sqrt(r2);
        Eigen::Vector3d center = foot + sol[0] * axis;
        double worst = 0.0, acc = 0.0;
        for (const auto& p : pts) {
            double e = std::abs((Eigen::Vector3d(p) - center).norm() - r) / r;
            worst = std::max(worst, e);
            acc += e * e;
        }
        sph_res.push_back(worst);
        spheres.rms_residual += acc / double(pts.size());
        ++spheres.samples_used;
    }
    for (double r : sph_res) spheres.max_residual = std::max(spheres.max_residual, r);
    spheres.rms_residual =
        sph_res.empty() ? 0.0 : std::sqrt(spheres.rms_residual / double(sph_res.size()));
    out.push_back(spheres);

    out.push_back(check_curvature_lines(f, tol));
    return out;
}

std::vector<InvariantReport> gauss_map_suite(const BuiltScenario& sc, double tol) {
    if (!sc.gauss || !sc.support)
        throw ConfigError("gauss-map suite needs a Gauss-parametrized scenario (enneper-planar)");
    const ImmersedGrid& f = sc.f;
    const ImmersedGrid& N = sc.gauss->N;
    auto df = partials(f);
    auto dN = partials(N);
    const ParamGrid& grid = f.grid();
    double h = grid.max_step();

    InvariantReport tangency, shape, planar;
    tangency.name = "gauss-map-tangency";
    shape.name = "gauss-map-shape-operator";
    planar.name = "gauss-map-planar-leaves";
    for (auto* r : {&tangency, &shape, &planar}) {
        r->tolerance = tol;
        r->grid_h = h;
    }

    double tan_acc = 0.0, shape_acc = 0.0;
    for (std::int64_t k = 0; k < grid.size(); ++k) {
        if (!f.node_ok(k)) continue;
        // stacked FD: stay out of the boundary layer and away from masked nodes
        auto idx = grid.unflat(k);
        bool interior = true;
        for (int a = 0; a < grid.dim() && interior; ++a) {
            if (idx[size_t(a)] < 3 || idx[size_t(a)] > grid.axis(a).count - 4) interior = false;
            for (int off = -2; off <= 2 && interior; ++off) {
                auto idx2 = idx;
                idx2[size_t(a)] += off;
                if (!f.node_ok(grid.flat(idx2))) interior = false;
            }
        }
        if (!interior) {
            ++tangency.samples_excluded;
            continue;
        }

        // raw dot against the unit normal: normalizing by |f_*X| would blow up
        // where the parametrization degenerates (P near-singular)
        double tmax = 0.0;
        for (int a = 0; a < grid.dim(); ++a)
            tmax = std::max(tmax, std::abs(df[size_t(a)].col(k).dot(N.value(k))));
        tangency.max_residual = std::max(tangency.max_residual, tmax);
        tan_acc += tmax * tmax;
        ++tangency.samples_used;

        const Eigen::MatrixXd& P = sc.support->P[size_t(k)];
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(P);
        double cond = svd.singularValues()(0) / svd.singularValues()(svd.singularValues().size() - 1);
        if (!(cond < 1e4)) {
            ++shape.samples_excluded;
            continue;
        }
        int d = grid.dim();
        Eigen::MatrixXd S(d, d), G(d, d);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) {
                S(a, b) = -dN[size_t(a)].col(k).dot(df[size_t(b)].col(k));
                G(a, b) = df[size_t(a)].col(k).dot(df[size_t(b)].col(k));
            }
        Eigen::MatrixXd A_fd = G.ldlt().solve(S);
        Eigen::MatrixXd A_pred = -P.inverse();
        double res = (A_fd - A_pred).norm() / std::max(1.0, A_pred.norm());
        shape.max_residual = std::max(shape.max_residual, res);
        shape_acc += res * res;
        ++shape.samples_used;
    }
    if (tangency.samples_used) tangency.rms_residual = std::sqrt(tan_acc / double(tangency.samples_used));
    if (shape.samples_used) shape.rms_residual = std::sqrt(shape_acc / double(shape.samples_used));

    double scale = std::max(1.0, f.values().colwise().norm().maxCoeff());
    double planar_acc = 0.0;
    for (const auto& leaf : leaves_of_factor(grid, 0)) {
        std::vector<Eigen::VectorXd> pts;
        for (auto k : leaf)
            if (f.node_ok(k)) pts.push_back(f.value(k));
        if (pts.size() < 3) {
            ++planar.samples_excluded;
            continue;
        }
        double r = fit_plane(pts).rms / scale;
        planar.max_residual = std::max(planar.max_residual, r);
        planar_acc += r * r;
        ++planar.samples_used;
    }
    if (planar.samples_used) planar.rms_residual = std::sqrt(planar_acc / double(planar.samples_used));

    return {tangency, shape, planar};
}

std::vector<InvariantReport> conformal_suite(const BuiltScenario& sc, double tol) {
    if (sc.name != "constant-angle" && sc.name != "joachimsthal")
        throw ConfigError("conformal suite needs a constant-angle or joachimsthal scenario");
    int eps = sc.eps;
    ParamGrid pg({GridAxis{33, 0.1, 1.5}, GridAxis{33, -0.3, 0.8}}, {0, 0});
    Eigen::VectorXd lambda(pg.size());

    ImmersedGrid chart;
    if (eps == 1) {
        chart = ImmersedGrid(pg, 2);
        for (std::int64_t k = 0; k < pg.size(); ++k) {
            auto p = pg.params(k);
            chart.set_value(k, conformal_map_sphere(Eigen::Vector2d(std::cos(p[0]), std::sin(p[0])), p[1]));
            lambda[k] = std::exp(p[1]);
        }
    } else if (eps == 0) {
        chart = ImmersedGrid(pg, 2);
        for (std::int64_t k = 0; k < pg.size(); ++k) {
            chart.set_value(k, pg.params(k));
            lambda[k] = 1.0;
        }
    } else {
        auto model = make_minkowski_model(2);
        chart = ImmersedGrid(pg, 3);
        for (std::int64_t k = 0; k < pg.size(); ++k) {
            auto p = pg.params(k);
            Eigen::Vector3d x(std::cosh(p[0]), std::sinh(p[0]), 0.0);
            Eigen::VectorXd coeffs = model.from_standard(x);
            chart.set_value(k, conformal_map_hyperbolic(model, coeffs, p[1]));
            lambda[k] = 1.0 / coeffs[0];
        }
    }
    InvariantReport rep = check_conformality(chart, nullptr, &lambda, tol);
    rep.name = "conformal-factor-eps" + std::to_string(eps);
    return {rep};
}

std::string read_file_or_throw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::string out_path(const std::string& out_dir, const std::string& name) {
    namespace fs = std::filesystem;
    fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
    fs::create_directories(dir);
    return (dir / name).string();
}

const std::set<std::string>& suite_names() {
    static const std::set<std::string> names = {"cor-rpt",   "enneper",      "joachimsthal",
                                                "gauss-map", "polar-metric", "conformal"};
    return names;
}

bool tube_scenario(const std::string& name) {
    return name == "partial-tube" || name == "surface-family" || name == "channel" ||
           name == "hypersurface-foliation";
}

}  // namespace

BuiltScenario build_scenario(const ScenarioConfig& cfg) {
    BuiltScenario out;
    try {
        if (cfg.scenario == "ribaucour-transform") out = build_ribaucour_transform(cfg);
        else if (cfg.scenario == "partial-tube") out = build_partial_tube_scenario(cfg);
        else if (cfg.scenario == "surface-family") out = build_surface_family(cfg);
        else if (cfg.scenario == "hypersurface-foliation") out = build_foliation(cfg);
        else if (cfg.scenario == "channel") out = build_channel(cfg);
        else if (cfg.scenario == "gauss-tube") out = build_gauss_tube_scenario(cfg);
        else if (cfg.scenario == "enneper-planar") out = build_enneper_planar(cfg);
        else if (cfg.scenario == "enneper-general") out = build_enneper_general(cfg, false);
        else if (cfg.scenario == "enneper-family") out = build_enneper_general(cfg, true);
        else if (cfg.scenario == "enneper-normalize") out = build_enneper_normalize(cfg);
        else if (cfg.scenario == "joachimsthal") out = build_joachimsthal(cfg);
        else if (cfg.scenario == "constant-angle") out = build_constant_angle(cfg);
        else if (cfg.scenario == "metric-check") out = build_metric_check(cfg);
        else throw ConfigError("config: unknown scenario '" + cfg.scenario + "'");
    } catch (const ConfigError&) {
        throw;
    } catch (const ConstructionError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConstructionError(cfg.scenario + ": " + e.what());
    }
    out.name = cfg.scenario;
    if (out.f.grid().size() > 0 && out.f.num_masked() == out.f.grid().size())
        throw ConstructionError(cfg.scenario + ": every node is irregular");
    return out;
}

std::vector<InvariantReport> run_suite(const BuiltScenario& sc, const std::string& suite,
                                       double tol_scale) {
    if (!suite_names().count(suite)) throw ConfigError("unknown suite '" + suite + "'");
    double h = sc.f.grid().size() > 0 ? sc.f.grid().max_step() : 0.0;
    double tol = 10.0 * h * h * tol_scale;

    if (suite == "cor-rpt") {
        if (sc.f.grid().num_factors() < 2)
            throw ConfigError("cor-rpt suite needs a grid with a 2-block factor partition");
        return adapted_spherical_net_suite(sc.f, 0, tol);
    }
    if (suite == "enneper") {
        if (!sc.triple) throw ConfigError("enneper suite needs a scenario with a leaf-sphere family");
        std::vector<InvariantReport> out;
        out.push_back(check_spherical_leaves(sc.f, 0, tol));
        out.push_back(check_constant_angle(sc.f, 0, sc.normals, tol, nullptr, &*sc.triple));
        return out;
    }
    if (suite == "joachimsthal") return joachimsthal_suite(sc, tol);
    if (suite == "gauss-map") return gauss_map_suite(sc, tol);
    if (suite == "polar-metric") {
        if (!sc.metric) throw ConfigError("polar-metric suite needs a metric-check scenario");
        double hm = sc.metric->grid.max_step();
        return {check_polar_conformal(*sc.metric, 10.0 * hm * hm * tol_scale)};
    }
    return conformal_suite(sc, tol);
}

int run_generate(const std::string& config_path, const std::string& out_dir) {
    using clock = std::chrono::steady_clock;
    std::string bytes;
    ScenarioConfig cfg;
    try {
        bytes = read_file_or_throw(config_path);
        cfg = parse_config(bytes, config_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    RunManifest manifest;
    manifest.config_hash = content_hash(bytes);
    BuiltScenario sc;
    auto t0 = clock::now();
    try {
        sc = build_scenario(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ConstructionError& e) {
        std::cerr << "construction failure: " << e.what() << "\n";
        return kExitConstruction;
    }
    auto t1 = clock::now();
    manifest.stages.emplace_back("construct",
                                 std::chrono::duration<double, std::milli>(t1 - t0).count());

    try {
        std::vector<std::pair<std::string, const ImmersedGrid*>> grids;
        grids.emplace_back(cfg.out_prefix + ".grid", &sc.f);
        for (const auto& [name, grid] : sc.extras)
            grids.emplace_back(cfg.out_prefix + "-" + name + ".grid", &grid);
        for (const auto& [name, grid] : grids) {
            std::string p = out_path(out_dir, name);
            write_grid(p, *grid);
            manifest.files.push_back(p);
            if (grid->ambient_dim() == 3 && grid->grid().dim() == 2) {
                std::string op = p.substr(0, p.size() - 5) + ".obj";
                write_obj(op, *grid);
                manifest.files.push_back(op);
            }
        }
        for (std::int64_t k = 0; k < sc.f.grid().size(); ++k)
            if (!sc.f.node_ok(k)) manifest.masked_nodes.push_back(k);
        auto t2 = clock::now();
        manifest.stages.emplace_back("emit",
                                     std::chrono::duration<double, std::milli>(t2 - t1).count());
        write_manifest(out_path(out_dir, cfg.out_prefix + ".manifest"), manifest);
    } catch (const std::exception& e) {
        std::cerr << "output failure: " << e.what() << "\n";
        return kExitConstruction;
    }
    return kExitOk;
}

int run_verify(const std::string& input_path, const std::string& suite, const std::string& out_dir,
               double tol_scale) {
    std::vector<InvariantReport> reports;
    std::string prefix;
    try {
        if (!suite_names().count(suite)) throw ConfigError("unknown suite '" + suite + "'");
        std::string bytes = read_file_or_throw(input_path);
        if (bytes.rfind("ribgeo-grid", 0) == 0) {
            if (suite != "cor-rpt")
                throw ConfigError("suite '" + suite + "' needs a scenario config, not a bare grid file");
            ImmersedGrid f = read_grid(input_path);
            if (f.grid().num_factors() < 2)
                throw ConfigError("cor-rpt suite needs a grid with a 2-block factor partition");
            double h = f.grid().max_step();
            reports = adapted_spherical_net_suite(f, 0, 10.0 * h * h * tol_scale);
            prefix = std::filesystem::path(input_path).stem().string();
        } else {
            ScenarioConfig cfg = parse_config(bytes, input_path);
            BuiltScenario sc = build_scenario(cfg);
            reports = run_suite(sc, suite, tol_scale * cfg.tolerance_c / 10.0);
            prefix = cfg.out_prefix;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ConstructionError& e) {
        std::cerr << "construction failure: " << e.what() << "\n";
        return kExitConstruction;
    }

    try {
        write_report(out_path(out_dir, prefix + "-" + suite + ".report"), reports);
    } catch (const std::exception& e) {
        std::cerr << "output failure: " << e.what() << "\n";
        return kExitConstruction;
    }
    for (const auto& r : reports)
        if (!r.pass()) {
            std::cerr << "first failing check: " << r.name << " (max " << r.max_residual
                      << " > tol " << r.tolerance << ")\n";
            return kExitVerify;
        }
    return kExitOk;
}

int run_roundtrip(const std::string& config_path, const std::string& out_dir, double tol_scale) {
    ScenarioConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    if (!tube_scenario(cfg.scenario)) {
        std::cerr << "precondition failure: scenario '" << cfg.scenario
                  << "' is not a tube-type construction\n";
        return kExitVerify;
    }
    BuiltScenario sc;
    try {
        sc = build_scenario(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ConstructionError& e) {
        std::cerr << "construction failure: " << e.what() << "\n";
        return kExitConstruction;
    }

    double h = sc.f.grid().max_step();
    // the precondition (spherical fiber leaves) is part of the construction
    // contract and stays at the config tolerance; --tol-scale tightens or
    // relaxes only the deviation verdict
    double precond_tol = cfg.tolerance_c * h * h;
    double tol = cfg.tolerance_c * h * h * tol_scale;
    std::int64_t fiber_count = 1;
    const ParamGrid& grid = sc.f.grid();
    for (int a : grid.axes_of_factor(0)) fiber_count *= grid.axis(a).count;
    std::int64_t base_slice = std::int64_t(cfg.param_number("base_slice", 3.0));
    std::int64_t ref = std::int64_t(cfg.param_number("reference_fiber_point", 9.0));
    if (base_slice < 0 || base_slice >= fiber_count || ref < 0 || ref >= fiber_count ||
        base_slice == ref) {
        std::cerr << "config error: 'base_slice' and 'reference_fiber_point' must be distinct"
                     " fiber node indices below " << fiber_count << "\n";
        return kExitConfig;
    }

    std::vector<InvariantReport> reports;
    double deviation = 0.0;
    try {
        PartialTubeSpec spec = reconstruct_tube(sc.f, base_slice, ref, precond_tol);
        TubeEvaluation rebuilt = build_partial_tube(spec);
        if (!rebuilt.f.grid().same_shape(sc.f.grid()))
            throw std::runtime_error("rebuilt grid shape differs from the input");
        double acc = 0.0;
        std::int64_t used = 0;
        for (std::int64_t k = 0; k < grid.size(); ++k) {
            if (!sc.f.node_ok(k) || !rebuilt.regular_mask[size_t(k)]) continue;
            double d = (rebuilt.f.value(k) - sc.f.value(k)).norm();
            deviation = std::max(deviation, d);
            acc += d * d;
            ++used;
        }
        InvariantReport dev;
        dev.name = "roundtrip-deviation";
        dev.max_residual = deviation;
        dev.rms_residual = used ? std::sqrt(acc / double(used)) : 0.0;
        dev.tolerance = tol;
        dev.grid_h = h;
        dev.samples_used = used;
        dev.samples_excluded = grid.size() - used;
        reports.push_back(dev);

        if (sc.tube) {
            // (phi, beta, F) carry a common scale gauge; align at the node
            // where the input phi is largest before comparing
            const Eigen::VectorXd& phi_in = sc.tube->spec.phi;
            const Eigen::VectorXd& phi_rec = spec.phi;
            if (phi_in.size() == phi_rec.size()) {
                Eigen::Index j0;
                phi_in.cwiseAbs().maxCoeff(&j0);
                double scale = phi_rec[j0] != 0.0 ? phi_in[j0] / phi_rec[j0] : 1.0;
                InvariantReport prep;
                prep.name = "roundtrip-phi";
                prep.max_residual = (scale * phi_rec - phi_in).cwiseAbs().maxCoeff() /
                                    std::max(1.0, phi_in.cwiseAbs().maxCoeff());
                prep.rms_residual = prep.max_residual;
                prep.tolerance = tol;
                prep.grid_h = h;
                prep.samples_used = phi_in.size();
                reports.push_back(prep);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "precondition failure: " << e.what() << "\n";
        return kExitVerify;
    }

    try {
        write_report(out_path(out_dir, cfg.out_prefix + "-roundtrip.report"), reports);
    } catch (const std::exception& e) {
        std::cerr << "output failure: " << e.what() << "\n";
        return kExitConstruction;
    }
    if (deviation > tol) {
        std::cerr << "roundtrip deviation " << deviation << " exceeds tolerance " << tol << "\n";
        return kExitRoundtrip;
    }
    return kExitOk;
}

}  // namespace ribgeo::cli

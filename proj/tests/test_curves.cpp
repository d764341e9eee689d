#include "ribgeo/curves.hpp"

#include <doctest.h>

#include <cmath>

using namespace ribgeo;

namespace {

ParamGrid sgrid(int n, double lo, double hi) {
    return ParamGrid::uniform({GridAxis{n, lo, hi}});
}

}  // namespace

TEST_CASE("integrate_frame closes a circle for constant curvature") {
    double kappa = 2.0;
    auto g = sgrid(401, 0.0, 2.0 * M_PI / kappa);
    std::vector<ScalarAlongCurve> k = {
        ScalarAlongCurve::from_function(g, [&](double) { return kappa; })};
    Eigen::VectorXd p0 = Eigen::Vector2d(0.0, 0.0);
    Eigen::MatrixXd frame(2, 2);
    frame.col(0) = Eigen::Vector2d(1.0, 0.0);  // T
    frame.col(1) = Eigen::Vector2d(0.0, 1.0);  // xi
    auto crv = integrate_frame(k, p0, frame);
    REQUIRE(crv.nodes() == 401);
    CHECK((crv.gamma.col(400) - crv.gamma.col(0)).norm() < 1e-8);
    // radius 1/kappa about the center p0 + xi/kappa
    Eigen::Vector2d c = p0 + frame.col(1) / kappa;
    for (std::int64_t i = 0; i < crv.nodes(); i += 37)
        CHECK((Eigen::Vector2d(crv.gamma.col(i)) - c).norm() == doctest::Approx(1.0 / kappa).epsilon(1e-8));
}

TEST_CASE("integrate_frame keeps unit speed and frame orthonormality") {
    auto g = sgrid(801, 0.0, 12.0);
    std::vector<ScalarAlongCurve> k = {
        ScalarAlongCurve::from_function(g, [](double s) { return 0.8 + 0.3 * std::sin(s); }),
        ScalarAlongCurve::from_function(g, [](double s) { return 0.4 * std::cos(0.7 * s); })};
    Eigen::VectorXd p0 = Eigen::Vector3d::Zero();
    Eigen::MatrixXd frame = Eigen::MatrixXd::Identity(3, 3);
    auto crv = integrate_frame(k, p0, frame);
    for (std::int64_t i = 0; i < crv.nodes(); i += 53) {
        Eigen::MatrixXd Q(3, 3);
        Q.col(0) = crv.tangent.col(i);
        Q.col(1) = crv.xi[0].col(i);
        Q.col(2) = crv.xi[1].col(i);
        CHECK((Q.transpose() * Q - Eigen::Matrix3d::Identity()).norm() < 1e-7);
    }
    CHECK(crv.max_frame_correction < 1e-7);
}

TEST_CASE("integrate_frame reproduces a helix with a parallel normal frame") {
    // circular helix: |gamma''| = sqrt(k1^2 + k2^2) for constant k1, k2
    double k1 = 0.6, k2 = 0.8;
    auto g = sgrid(1201, 0.0, 8.0);
    std::vector<ScalarAlongCurve> k = {ScalarAlongCurve::from_function(g, [&](double) { return k1; }),
                                       ScalarAlongCurve::from_function(g, [&](double) { return k2; })};
    Eigen::VectorXd p0 = Eigen::Vector3d::Zero();
    auto crv = integrate_frame(k, p0, Eigen::MatrixXd::Identity(3, 3));
    double h = g.axis(0).step();
    for (std::int64_t i = 2; i < crv.nodes() - 2; i += 101) {
        Eigen::Vector3d acc =
            (crv.gamma.col(i + 1) - 2.0 * crv.gamma.col(i) + crv.gamma.col(i - 1)) / (h * h);
        CHECK(acc.norm() == doctest::Approx(std::hypot(k1, k2)).epsilon(1e-5));
    }
}

TEST_CASE("integrate_frame_sphere keeps the curve on the unit sphere") {
    auto g = sgrid(601, 0.0, 5.0);
    std::vector<ScalarAlongCurve> k = {
        ScalarAlongCurve::from_function(g, [](double s) { return 0.5 * std::cos(s); })};
    Eigen::VectorXd p0 = Eigen::Vector3d(1.0, 0.0, 0.0);
    Eigen::MatrixXd frame(3, 2);
    frame.col(0) = Eigen::Vector3d(0.0, 1.0, 0.0);
    frame.col(1) = Eigen::Vector3d(0.0, 0.0, 1.0);
    auto crv = integrate_frame_sphere(k, p0, frame);
    for (std::int64_t i = 0; i < crv.nodes(); i += 29) {
        CHECK(crv.gamma.col(i).norm() == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(std::abs(crv.gamma.col(i).dot(crv.tangent.col(i))) < 1e-8);
        CHECK(std::abs(crv.gamma.col(i).dot(crv.xi[0].col(i))) < 1e-8);
    }
}

TEST_CASE("integrate_frame_sphere with zero curvature gives a great circle") {
    auto g = sgrid(501, 0.0, 2.0 * M_PI);
    std::vector<ScalarAlongCurve> k = {ScalarAlongCurve::from_function(g, [](double) { return 0.0; })};
    Eigen::VectorXd p0 = Eigen::Vector3d(1.0, 0.0, 0.0);
    Eigen::MatrixXd frame(3, 2);
    frame.col(0) = Eigen::Vector3d(0.0, 1.0, 0.0);
    frame.col(1) = Eigen::Vector3d(0.0, 0.0, 1.0);
    auto crv = integrate_frame_sphere(k, p0, frame);
    for (std::int64_t i = 0; i < crv.nodes(); i += 23) {
        double s = g.params(i)[0];
        Eigen::Vector3d expect(std::cos(s), std::sin(s), 0.0);
        CHECK((Eigen::Vector3d(crv.gamma.col(i)) - expect).norm() < 1e-8);
    }
}

TEST_CASE("integrate_frame rejects a non-orthonormal initial frame") {
    auto g = sgrid(11, 0.0, 1.0);
    std::vector<ScalarAlongCurve> k = {ScalarAlongCurve::from_function(g, [](double) { return 1.0; })};
    Eigen::MatrixXd frame(2, 2);
    frame << 1.0, 0.5, 0.0, 1.0;
    CHECK_THROWS(integrate_frame(k, Eigen::Vector2d::Zero(), frame));
}

TEST_CASE("solve_combescure_along_curve integrates beta' = -phi' k") {
    auto g = sgrid(401, 0.0, 3.0);
    double kappa = 1.3;
    std::vector<ScalarAlongCurve> k = {
        ScalarAlongCurve::from_function(g, [&](double) { return kappa; })};
    Eigen::VectorXd p0 = Eigen::Vector2d::Zero();
    auto crv = integrate_frame(k, p0, Eigen::MatrixXd::Identity(2, 2));
    auto phi = ScalarAlongCurve::from_function(
        g, [](double s) { return std::sin(s); }, [](double s) { return std::cos(s); });
    Eigen::VectorXd b0(1);
    b0 << 0.25;
    auto beta = solve_combescure_along_curve(crv, phi, b0);
    REQUIRE(beta.size() == 1);
    double h = g.axis(0).step();
    for (std::int64_t i = 0; i < g.size(); i += 17) {
        double s = g.params(i)[0];
        CHECK(std::abs(beta[0].values[i] - (0.25 - kappa * std::sin(s))) < 10.0 * h * h);
    }
}

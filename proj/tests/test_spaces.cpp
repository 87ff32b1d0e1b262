#include "mcflab/spaces.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace mcflab;

namespace {

Vec vec(std::initializer_list<double> xs) {
    Vec v(static_cast<int>(xs.size()));
    int i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

// Gaussian curvature of a parametrized surface in R^3 from central differences
// of the parametrization (independent of the connection machinery).
double fd_gauss_curvature(const std::function<Eigen::Vector3d(double, double)>& f, double s,
                          double t) {
    const double h = 1e-3;
    auto fs = [&](double a, double b) -> Eigen::Vector3d { return (f(a + h, b) - f(a - h, b)) / (2 * h); };
    auto ft = [&](double a, double b) -> Eigen::Vector3d { return (f(a, b + h) - f(a, b - h)) / (2 * h); };
    const Eigen::Vector3d xs = fs(s, t), xt = ft(s, t);
    const Eigen::Vector3d xss = (f(s + h, t) - 2 * f(s, t) + f(s - h, t)) / (h * h);
    const Eigen::Vector3d xtt = (f(s, t + h) - 2 * f(s, t) + f(s, t - h)) / (h * h);
    const Eigen::Vector3d xst =
        (f(s + h, t + h) - f(s + h, t - h) - f(s - h, t + h) + f(s - h, t - h)) / (4 * h * h);
    const Eigen::Vector3d n = xs.cross(xt).normalized();
    const double E = xs.dot(xs), F = xs.dot(xt), G = xt.dot(xt);
    const double L = xss.dot(n), M = xst.dot(n), N = xtt.dot(n);
    return (L * N - M * M) / (E * G - F * F);
}

}  // namespace

TEST_CASE("metric_at examples") {
    const auto e2 = AmbientSpace::euclidean(2);
    CHECK(metric_at(e2, vec({0.3, -1.0}), vec({1, 0}), vec({1, 0})) == doctest::Approx(1.0));

    const auto h1 = AmbientSpace::heisenberg(1);
    for (const Vec& x : {vec({0, 0, 0}), vec({1.5, -2.0, 3.0}), vec({-0.7, 0.2, 11.0})}) {
        const Vec X1 = heisenberg_frame(h1, x, 0);
        const Vec Y1 = heisenberg_frame(h1, x, 1);
        const Vec V = heisenberg_frame(h1, x, 2);
        CHECK(metric_at(h1, x, X1, X1) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(metric_at(h1, x, Y1, Y1) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(metric_at(h1, x, V, V) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(std::abs(metric_at(h1, x, X1, Y1)) < 1e-14);
        CHECK(std::abs(metric_at(h1, x, X1, V)) < 1e-14);
    }

    // Tangent lift of u itself has zero length: r^2 - (1/r^2) r^4.
    const auto sb = AmbientSpace::sasaki_bundle(1.0, 1.0);
    const Vec x = vec({0, 0, 1, 1, 0, 0});
    Vec lift_u = Vec::Zero(6);
    lift_u.tail<3>() = x.tail<3>();
    CHECK(std::abs(metric_at(sb, x, lift_u, lift_u)) < 1e-15);
    CHECK(std::abs(sasaki_lift_metric(sb, x, x.tail<3>(), true, x.tail<3>(), true)) < 1e-15);
}

TEST_CASE("metric_at rejects points off the model") {
    const auto s2 = AmbientSpace::round_sphere(2, 1.0);
    CHECK_THROWS_AS(metric_at(s2, vec({1.1, 0, 0}), vec({0, 1, 0}), vec({0, 1, 0})), Error);
    try {
        metric_at(s2, vec({1.1, 0, 0}), vec({0, 1, 0}), vec({0, 1, 0}));
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConstraintViolation);
    }
}

TEST_CASE("Berger sphere at lambda = 1 is the round sphere") {
    const auto berger = AmbientSpace::berger_sphere(1.0, 2.0);
    const auto round = AmbientSpace::round_sphere(3, 2.0);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        const Vec x = random_point(round, rng);
        const Vec v = random_tangent(round, x, rng), w = random_tangent(round, x, rng);
        CHECK(std::abs(metric_at(berger, x, v, w) - metric_at(round, x, v, w)) < 1e-12);
    }
}

TEST_CASE("Sasaki extension agrees with the lift formula on tangent vectors") {
    const auto sb = AmbientSpace::sasaki_bundle(0.7, 1.3);
    std::mt19937_64 rng(11);
    for (int i = 0; i < 50; ++i) {
        const Vec x = random_point(sb, rng);
        const Vec v = random_tangent(sb, x, rng), w = random_tangent(sb, x, rng);
        const Mat g = metric_tensor(sb, x);
        CHECK(std::abs(metric_at(sb, x, v, w) - v.dot(g * w)) < 1e-12);
        // Decompose into lifts and apply the three-line formula.
        auto base_part = [&](const Vec& t) { return Vec(t.head<3>()); };
        auto fiber_part = [&](const Vec& t) {
            Vec f = t.tail<3>() + sb.curvature * t.head<3>().dot(x.tail<3>()) * x.head<3>();
            return f;
        };
        const double by_formula =
            sasaki_lift_metric(sb, x, base_part(v), false, base_part(w), false) +
            sasaki_lift_metric(sb, x, fiber_part(v), true, fiber_part(w), true);
        CHECK(std::abs(by_formula - metric_at(sb, x, v, w)) < 1e-12);
    }
    // The R^6-induced metric differs on horizontal directions with <X,u> != 0.
    const Vec x = vec({0, 0, 1 / std::sqrt(1.3), 0.7, 0, 0});
    const Vec xh = sasaki_horizontal_lift(sb, x, vec({1, 0, 0}));
    CHECK(xh.squaredNorm() > metric_at(sb, x, xh, xh) + 0.1);
}

TEST_CASE("covariant_derivative examples") {
    const auto h1 = AmbientSpace::heisenberg(1);
    const Vec x = vec({0.4, -1.2, 2.0});
    auto frame_field = [&](int i) {
        return VectorField([&h1, i](const Vec& y) { return heisenberg_frame(h1, y, i); });
    };
    const Vec d = covariant_derivative(h1, frame_field(1), {x, heisenberg_frame(h1, x, 0)});
    CHECK((d - 0.5 * heisenberg_frame(h1, x, 2)).norm() < 1e-9);
    const Vec vv = covariant_derivative(h1, frame_field(2), {x, heisenberg_frame(h1, x, 2)});
    CHECK(vv.norm() < 1e-9);

    // Sasaki item 4 with constant base fields.
    const auto sb = AmbientSpace::sasaki_bundle(1.0, 1.0);
    const Vec xs = vec({0, 0, 1, 0.6, 0.8, 0});
    const Vec X = vec({0.8, -0.6, 0}), Y = vec({1.0, 0.5, 0});
    auto tlift = [&sb](Vec base) {
        return VectorField([&sb, base](const Vec& y) {
            Eigen::Vector3d p = y.head<3>();
            Vec b = base - base.dot(p) / p.squaredNorm() * p;
            return sasaki_tangent_lift(sb, y, b);
        });
    };
    const Vec lhs = covariant_derivative(sb, tlift(Y), {xs, sasaki_tangent_lift(sb, xs, X)});
    const Vec rhs = -xs.tail<3>().dot(Y) * sasaki_tangent_lift(sb, xs, X);
    CHECK((lhs - rhs).norm() < 1e-8);
}

TEST_CASE("covariant derivative along a path needs three samples") {
    const auto e2 = AmbientSpace::euclidean(2);
    std::vector<Vec> path{vec({0, 0}), vec({1, 0})};
    CHECK_THROWS_AS(covariant_derivative_along(e2, path, path, 1.0, 0), Error);
}

TEST_CASE("parallel transport along a great circle preserves inner products") {
    // Integrate dV/dt = -Gamma - II along the path and check metric compatibility.
    const auto s2 = AmbientSpace::round_sphere(2, 1.0);
    const int steps = 400;
    const double dt = 1.0 / steps;
    Vec v = vec({0, 1, 0}), w = vec({0, 0.6, 0.8});
    auto path = [](double t) { return vec({std::cos(t), std::sin(t), 0}); };
    auto rhs = [&](double t, const Vec& f) {
        const Vec p = path(t);
        const Vec vel = vec({-std::sin(t), std::cos(t), 0});
        LocalGeometry geo(s2, p);
        return Vec(-geo.christoffel(vel, f) + geo.constraint_second_form(vel, f));
    };
    for (int i = 0; i < steps; ++i) {
        const double t = i * dt;
        auto rk = [&](Vec& f) {
            const Vec k1 = rhs(t, f), k2 = rhs(t + dt / 2, f + dt / 2 * k1);
            const Vec k3 = rhs(t + dt / 2, f + dt / 2 * k2), k4 = rhs(t + dt, f + dt * k3);
            f += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        };
        rk(v);
        rk(w);
    }
    CHECK(std::abs(v.dot(w) - 0.6) < 1e-8);
    CHECK(std::abs(v.norm() - 1.0) < 1e-8);
}

TEST_CASE("torsion-free on analytic frames") {
    const auto h1 = AmbientSpace::heisenberg(1);
    const Vec x = vec({0.3, 0.9, -0.4});
    auto field = [&](int i) {
        return VectorField([&h1, i](const Vec& y) { return heisenberg_frame(h1, y, i); });
    };
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            const Vec Xa = heisenberg_frame(h1, x, a), Xb = heisenberg_frame(h1, x, b);
            const Vec nab = covariant_derivative(h1, field(b), {x, Xa});
            const Vec nba = covariant_derivative(h1, field(a), {x, Xb});
            // Coordinate Lie bracket by finite differences.
            const double h = 1e-5;
            const Vec dXb = (heisenberg_frame(h1, x + h * Xa, b) - heisenberg_frame(h1, x - h * Xa, b)) / (2 * h);
            const Vec dXa = (heisenberg_frame(h1, x + h * Xb, a) - heisenberg_frame(h1, x - h * Xb, a)) / (2 * h);
            CHECK((nab - nba - (dXb - dXa)).norm() < 1e-6);
        }
    }
}

TEST_CASE("riemann_at examples and sign convention") {
    const auto s2 = AmbientSpace::round_sphere(2, 1.0);
    const Vec x = vec({0, 0, 1});
    CHECK(sectional_curvature(s2, x, vec({1, 0, 0}), vec({0, 1, 0})) == doctest::Approx(1.0));

    const auto e3 = AmbientSpace::euclidean(3);
    CHECK(sectional_curvature(e3, vec({1, 2, 3}), vec({1, 0, 0}), vec({0, 1, 1})) == 0.0);

    // FS_SPHERE(c=1): finite-difference Gaussian curvature of the radius-1/2 sphere.
    const auto fs = AmbientSpace::fs_sphere(1.0);
    auto param = [](double th, double ph) {
        return Eigen::Vector3d(0.5 * std::sin(th) * std::cos(ph), 0.5 * std::sin(th) * std::sin(ph),
                               0.5 * std::cos(th));
    };
    const double oracle = fd_gauss_curvature(param, 1.1, 0.4);
    CHECK(oracle == doctest::Approx(4.0).epsilon(1e-4));
    const Eigen::Vector3d p = param(1.1, 0.4);
    const Vec xp = vec({p(0), p(1), p(2)});
    const Vec X = vec({std::cos(1.1) * std::cos(0.4), std::cos(1.1) * std::sin(0.4), -std::sin(1.1)});
    const Vec Y = vec({-std::sin(0.4), std::cos(0.4), 0});
    CHECK(sectional_curvature(fs, xp, X, Y) == doctest::Approx(oracle).epsilon(1e-4));
    CHECK(std::abs(sectional_curvature(fs, xp, X, Y) - 4.0) < 1e-10);
}

TEST_CASE("curvature tensor symmetries on analytic spaces") {
    std::mt19937_64 rng(5);
    for (const auto& space : {AmbientSpace::heisenberg(1), AmbientSpace::berger_sphere(0.3, 1.0),
                              AmbientSpace::sasaki_bundle(1.0, 1.0), AmbientSpace::fs_sphere(2.0)}) {
        for (int trial = 0; trial < 5; ++trial) {
            const Vec x = random_point(space, rng);
            const Vec X = random_tangent(space, x, rng), Y = random_tangent(space, x, rng);
            const Vec Z = random_tangent(space, x, rng), W = random_tangent(space, x, rng);
            const double r = riemann_at(space, x, X, Y, Z, W);
            CHECK(std::abs(r + riemann_at(space, x, Y, X, Z, W)) < 1e-8);
            CHECK(std::abs(r - riemann_at(space, x, Z, W, X, Y)) < 1e-8);
            const double bianchi = r + riemann_at(space, x, Y, Z, X, W) + riemann_at(space, x, Z, X, Y, W);
            CHECK(std::abs(bianchi) < 1e-8);
        }
    }
}

TEST_CASE("Berger sphere curvatures match the known homogeneous values") {
    // Berger sphere (c=1): K(X,Y) horizontal plane = 4 - 3 lambda, K(X,V) = lambda.
    for (double lambda : {0.25, 0.5, 2.0}) {
        const auto b = AmbientSpace::berger_sphere(lambda, 1.0);
        const Vec x = vec({1, 0, 0, 0});
        const Vec V = hopf_j(x);
        const Vec X = vec({0, 0, 1, 0}), Y = vec({0, 0, 0, 1});
        CHECK(sectional_curvature(b, x, X, Y) == doctest::Approx(4.0 - 3.0 * lambda).epsilon(1e-9));
        CHECK(sectional_curvature(b, x, X, V) == doctest::Approx(lambda).epsilon(1e-9));
    }
}

TEST_CASE("geodesic_shoot examples") {
    const auto s2 = AmbientSpace::round_sphere(2, 1.0);
    const Vec p = vec({0, 0, 1});
    const Vec back = geodesic_shoot(s2, p, vec({1, 0, 0}), 2 * std::numbers::pi);
    CHECK((back - p).norm() < 1e-6);

    const auto e2 = AmbientSpace::euclidean(2);
    const Vec q = geodesic_shoot(e2, vec({1, 2}), vec({0.5, -1}), 3.0);
    CHECK((q - vec({2.5, -1})).norm() < 1e-12);

    const auto h1 = AmbientSpace::heisenberg(1);
    const Vec z = geodesic_shoot(h1, vec({0, 0, 0}), vec({0, 0, 1}), 1.0);
    CHECK((z - vec({0, 0, 1})).norm() < 1e-10);

    CHECK_THROWS_AS(geodesic_shoot(s2, p, vec({0, 0, 0}), 1.0), Error);
}

TEST_CASE("geodesic speed is conserved") {
    std::mt19937_64 rng(9);
    for (const auto& space : {AmbientSpace::heisenberg(1), AmbientSpace::berger_sphere(0.5, 1.0),
                              AmbientSpace::sasaki_bundle(1.0, 1.0)}) {
        const Vec x = random_point(space, rng);
        const Vec v = random_tangent(space, x, rng);
        // Speed at the end via a short finite difference of the flow.
        const double t = 1.0, h = 1e-4;
        const Vec a = geodesic_shoot(space, x, v, t - h), b = geodesic_shoot(space, x, v, t + h);
        const Vec mid = geodesic_shoot(space, x, v, t);
        const Vec vel = LocalGeometry(space, mid).tangent((b - a) / (2 * h));
        CHECK(std::abs(LocalGeometry(space, mid).norm(vel) - 1.0) < 1e-7);
    }
}

TEST_CASE("connection tables") {
    const auto h1 = validate_connection_tables(AmbientSpace::heisenberg(1), 100);
    CHECK(h1.pass);
    CHECK(h1.max_residual <= 1e-6);
    for (const auto& item : h1.items) CHECK_MESSAGE(item.pass, item.name);

    const auto h2 = validate_connection_tables(AmbientSpace::heisenberg(2), 20);
    CHECK(h2.pass);

    const auto sb = validate_connection_tables(AmbientSpace::sasaki_bundle(1.0, 1.0), 100);
    CHECK(sb.items.size() == 4);
    for (const auto& item : sb.items) CHECK_MESSAGE(item.pass, item.name << " " << item.max_residual);
    CHECK(sb.pass);

    const auto sb2 = validate_connection_tables(AmbientSpace::sasaki_bundle(0.5, 2.0), 30);
    CHECK(sb2.pass);

    try {
        validate_connection_tables(AmbientSpace::round_sphere(2, 1.0));
        FAIL("expected UNSUPPORTED_SPACE");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnsupportedSpace);
    }
}

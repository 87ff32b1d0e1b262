#include "mcflab/verify.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace mcflab;

namespace {

constexpr double kPi = std::numbers::pi;

DiscreteImmersion unit_circle(double h) { return plane_circle(1.0, samples_for(2 * kPi, h)); }

// Circle at polar angle alpha on FS_SPHERE(1) (radius 1/2).
DiscreteImmersion hopf_base(double h, double alpha = kPi / 3) {
    const double len = kPi * std::sin(alpha);
    return geodesic_circle(AmbientSpace::fs_sphere(1.0), 0.5 * alpha, samples_for(len, h));
}

}  // namespace

TEST_CASE("hausdorff distance of point clouds") {
    const auto a = plane_circle(1.0, 200).vertices;
    const auto b = plane_circle(1.1, 300).vertices;
    CHECK(hausdorff_distance(a, b) == doctest::Approx(0.1).epsilon(1e-3));
    CHECK(hausdorff_distance(a, a) == 0.0);
    std::vector<Vec> c = a;
    c.push_back(Vec::Constant(2, 3.0));
    CHECK(hausdorff_distance(a, c) == doctest::Approx((Vec::Constant(2, 3.0)).norm() - 1.0).epsilon(1e-2));
}

TEST_CASE("dense samples lie on the space") {
    const auto torus = clifford_torus(1.0, 12, 12);
    const auto pts = dense_samples(torus, 3);
    CHECK(pts.size() >= 10 * static_cast<std::size_t>(torus.size()));
    for (const Vec& p : pts) CHECK(std::abs(p.norm() - 1.0) < 1e-12);
}

TEST_CASE("fiber lengths") {
    const auto hopf = SubmersionModel::hopf(1.0);
    CHECK(fiber_length(hopf, fiber_point(hopf, hopf_base(0.1).vertices[0])) == doctest::Approx(2 * kPi).epsilon(1e-4));
    const auto berger = SubmersionModel::hopf_berger(4.0, 1.0);
    CHECK(fiber_length(berger, fiber_point(berger, hopf_base(0.1).vertices[0])) ==
          doctest::Approx(4 * kPi).epsilon(1e-4));
    const auto heis = SubmersionModel::heisenberg_proj(1);
    CHECK(fiber_length(heis, fiber_point(heis, Vec::Zero(2))) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("projected lift matches its base") {
    const auto sub = SubmersionModel::hopf(1.0);
    const auto base = hopf_base(0.1);
    const auto lifted = lift_at_resolution(sub, base, 0.1);
    const double d = projected_hausdorff(sub, lifted, base);
    CHECK(d < 0.01);
    // A different base circle is far away.
    CHECK(projected_hausdorff(sub, lifted, hopf_base(0.1, kPi / 4)) > 0.05);
}

TEST_CASE("lift norm identities") {
    SUBCASE("Heisenberg cylinder") {
        const auto v = lift_norm_identity_test(SubmersionModel::heisenberg_proj(1), unit_circle, 0.1);
        CHECK(v.pass);
        CHECK(v.residuals["levels"][1]["mean_measured"].get<double>() == doctest::Approx(1.5).epsilon(0.05));
    }
    SUBCASE("Hopf torus") {
        const auto v = lift_norm_identity_test(SubmersionModel::hopf(1.0), [](double h) { return hopf_base(h); },
                                               0.05);
        CHECK(v.pass);
        CHECK(v.residuals["levels"][1]["mean_correction"].get<double>() == doctest::Approx(2.0).epsilon(0.05));
    }
    SUBCASE("Sasaki, non-great circle") {
        const auto s2 = AmbientSpace::round_sphere(2, 1.0);
        const auto v = lift_norm_identity_test(
            SubmersionModel::sasaki_proj(1.0, 1.0),
            [&](double h) { return geodesic_circle(s2, 1.0, samples_for(2 * kPi * std::sin(1.0), h)); }, 0.1);
        CHECK(v.pass);
        CHECK(v.refinement_slopes["relative_residual"].get<double>() > 1.5);
    }
    SUBCASE("Sasaki, great circle") {
        const auto level = lift_norm_level(SubmersionModel::sasaki_proj(1.0, 1.0),
                                           great_circle(AmbientSpace::round_sphere(2, 1.0), 63), 0.1);
        CHECK(level.mean_measured == doctest::Approx(0.5).epsilon(0.05));
    }
}

TEST_CASE("closed forms") {
    CHECK(lift_norm_closed_form(SubmersionModel::hopf(1.0), 3.0, 1.0) == 5.0);
    CHECK(lift_norm_closed_form(SubmersionModel::heisenberg_proj(1), 1.0, 1.0) == 1.5);
    CHECK(lift_norm_closed_form(SubmersionModel::sasaki_proj(2.0, 0.5), 0.0, 0.0) == doctest::Approx(0.5));
}

TEST_CASE("mean curvature is pi-related") {
    const auto v = mean_curvature_relation_test(SubmersionModel::hopf(1.0), [](double h) { return hopf_base(h); },
                                                0.1);
    CHECK(v.pass);
    // Geodesic base: both sides vanish up to the discretization error.
    const auto fs = AmbientSpace::fs_sphere(1.0);
    const double r1 = mean_curvature_relation_residual(SubmersionModel::hopf(1.0), great_circle(fs, 40), 0.1);
    const double r2 = mean_curvature_relation_residual(SubmersionModel::hopf(1.0), great_circle(fs, 80), 0.05);
    CHECK(r1 < 0.01);
    CHECK(r2 < 0.5 * r1);
    const auto heis = mean_curvature_relation_test(SubmersionModel::heisenberg_proj(1), unit_circle, 0.1);
    CHECK(heis.pass);
}

TEST_CASE("canonical variation exponents are measured") {
    std::vector<VariationSample> samples;
    const auto v = variation_exponent_fit([](double h) { return hopf_base(h); }, {0.25, 0.5, 1.0, 2.0, 4.0}, 0.1,
                                          &samples);
    REQUIRE(samples.size() == 5);
    CHECK(v.residuals["lambda_one_difference"].get<double>() == 0.0);
    // Mixed entries grow with lambda.
    for (std::size_t i = 1; i < samples.size(); ++i) CHECK(samples[i].mixed > samples[i - 1].mixed);
    CHECK(std::isfinite(v.refinement_slopes["correction_slope"].get<double>()));
    CHECK_THROWS_AS(variation_exponent_fit([](double h) { return hopf_base(h); }, {1.0, 2.0, 3.0}, 0.1), Error);
    CHECK_THROWS_AS(variation_exponent_fit([](double h) { return hopf_base(h); }, {1.0, 2.0, 3.0, 4.0}, 0.1), Error);
}

TEST_CASE("isometries commute with the flow") {
    FlowPolicy policy;
    policy.horizon = 0.02;
    policy.sample_interval = 0.01;
    policy.target_h = 0.1;
    policy.remesh = false;
    SUBCASE("rotation of a plane curve") {
        auto curve = plane_circle(1.0, 64);
        for (int i = 0; i < curve.size(); ++i) curve.vertices[i] *= 1.0 + 0.1 * std::cos(3.0 * 2 * kPi * i / 64);
        const double a = 0.7;
        const auto v = isometry_commutation_test(curve, [&](const Vec& x) {
            Vec y(2);
            y << std::cos(a) * x(0) - std::sin(a) * x(1), std::sin(a) * x(0) + std::cos(a) * x(1);
            return y;
        }, policy);
        CHECK(v.pass);
    }
    SUBCASE("Hopf circle action on a lifted torus") {
        const auto sub = SubmersionModel::hopf(1.0);
        const auto torus = lift_at_resolution(sub, hopf_base(0.2), 0.2);
        const auto v = isometry_commutation_test(torus, [&](const Vec& x) { return fiber_action(sub, x, 0.4); },
                                                 policy);
        CHECK(v.pass);
    }
    SUBCASE("Heisenberg left translation") {
        const auto sub = SubmersionModel::heisenberg_proj(1);
        const auto cyl = lift_at_resolution(sub, unit_circle(0.2), 0.2);
        const double a = 0.3, b = -0.8, c = 0.25;
        const auto v = isometry_commutation_test(cyl, [&](const Vec& x) {
            Vec y(3);
            y << x(0) + a, x(1) + b, x(2) + c + 0.5 * (a * x(1) - b * x(0));
            return y;
        }, policy);
        CHECK(v.pass);
    }
    SUBCASE("Heisenberg vertical translation") {
        const auto sub = SubmersionModel::heisenberg_proj(1);
        const auto cyl = lift_at_resolution(sub, unit_circle(0.2), 0.2);
        const auto v = isometry_commutation_test(cyl, [&](const Vec& x) { return fiber_action(sub, x, 0.3); },
                                                 policy);
        CHECK(v.pass);
    }
}

TEST_CASE("lifted flows stay invariant") {
    FlowPolicy policy;
    policy.horizon = 0.02;
    policy.sample_interval = 0.01;
    const auto sub = SubmersionModel::hopf(1.0);
    const auto v = invariance_test(sub, lift_at_resolution(sub, hopf_base(0.2), 0.2), policy);
    CHECK(v.pass);
    CHECK(v.residuals["max_defect"].get<double>() < 1e-10);
}

TEST_CASE("commutation on a coarse Heisenberg cylinder") {
    CommutationOptions opt;
    opt.h = 0.2;
    opt.horizon = 0.1;
    opt.sample_interval = 0.05;
    opt.refine = false;
    const auto result = commutation_test(SubmersionModel::heisenberg_proj(1), unit_circle, opt);
    REQUIRE(result.levels.size() == 1);
    CHECK(result.levels[0].t.size() == 3);
    CHECK(result.verdict.pass);
    std::ostringstream os;
    write_commutation_csv(os, result);
    CHECK(os.str().rfind("h,t,hausdorff\n", 0) == 0);
}

TEST_CASE("stationarity and the sphere circle") {
    CHECK(stationarity_test(equatorial_sphere(1.0, 2), 0.01).pass);
    const auto v = sphere_circle_test(1.0, 1.0, 0.05, 0.1);
    CHECK(v.pass);
}

TEST_CASE("verdict json shape") {
    const auto v = fiber_audit_verdict(SubmersionModel::heisenberg_proj(1), 10);
    const Json j = verdict_to_json(v);
    for (const char* key : {"test", "params", "residuals", "refinement_slopes", "pass"}) CHECK(j.contains(key));
    CHECK(j["pass"].get<bool>());
    CHECK(refinement_slope(4.0, 1.0) == doctest::Approx(2.0));
}

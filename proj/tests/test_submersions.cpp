#include "mcflab/json_io.hpp"
#include "mcflab/submersions.hpp"

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

std::vector<SubmersionModel> catalog() {
    return {SubmersionModel::hopf(1.0), SubmersionModel::hopf(2.5),
            SubmersionModel::hopf_berger(0.5, 1.0), SubmersionModel::heisenberg_proj(1),
            SubmersionModel::heisenberg_proj(2), SubmersionModel::sasaki_proj(1.0, 1.0),
            SubmersionModel::sasaki_proj(0.6, 2.0)};
}

}  // namespace

TEST_CASE("project_point examples") {
    const auto hopf = SubmersionModel::hopf(1.0);
    CHECK((project_point(hopf, vec({1, 0, 0, 0})) - vec({0, 0, 0.5})).norm() < 1e-15);

    const auto heis = SubmersionModel::heisenberg_proj(1);
    CHECK((project_point(heis, vec({1, 2, 7})) - vec({1, 2})).norm() == 0.0);

    const auto sas = SubmersionModel::sasaki_proj(1.0, 1.0);
    const Vec pu = vec({0, 0, 1, 0.6, 0.8, 0});
    CHECK((project_point(sas, pu) - vec({0, 0, 1})).norm() == 0.0);

    CHECK_THROWS_AS(project_point(hopf, vec({1, 1, 0, 0})), Error);
}

TEST_CASE("projection lands on the base and is constant along fibers") {
    std::mt19937_64 rng(1);
    for (const auto& sub : catalog()) {
        for (int s = 0; s < 20; ++s) {
            const Vec p = random_point(sub.total, rng);
            const Vec b = project_point(sub, p);
            CHECK_NOTHROW(require_on_space(sub.base, b, 1e-12));
            for (double t : {0.3, 1.7, 4.0}) {
                CHECK((project_point(sub, fiber_action(sub, p, t)) - b).norm() < 1e-10);
            }
        }
    }
}

TEST_CASE("split examples and invariants") {
    const auto hopf = SubmersionModel::hopf(1.0);
    const Vec p = vec({0.6, 0, 0, 0.8});
    const Vec jn = hopf_j(p);
    const auto s1 = split(hopf, p, jn);
    CHECK(s1.horizontal.norm() < 1e-15);
    CHECK((s1.vertical - jn).norm() < 1e-15);

    const auto heis = SubmersionModel::heisenberg_proj(1);
    const Vec q = vec({0.5, -1.0, 3.0});
    const Vec x1 = heisenberg_frame(heis.total, q, 0);
    const auto s2 = split(heis, q, x1);
    CHECK((s2.horizontal - x1).norm() < 1e-15);
    CHECK(s2.vertical.norm() < 1e-15);

    for (const auto& sub : catalog()) {
        const Vec z = Vec::Zero(sub.total.embed_dim);
        std::mt19937_64 rng(2);
        const Vec pt = random_point(sub.total, rng);
        const auto s0 = split(sub, pt, z);
        CHECK(s0.horizontal.norm() == 0.0);
        CHECK(s0.vertical.norm() == 0.0);
        for (int k = 0; k < 20; ++k) {
            const Vec x = random_point(sub.total, rng);
            const Vec v = random_tangent(sub.total, x, rng);
            const auto sv = split(sub, x, v);
            const LocalGeometry geo(sub.total, x);
            CHECK(std::abs(geo.inner(sv.horizontal, sv.vertical)) <= 1e-10);
            CHECK((sv.horizontal + sv.vertical - v).norm() <= 1e-12);
            CHECK(push_forward(sub, x, sv.vertical).norm() <= 1e-10);
            CHECK(split(sub, x, sv.horizontal).vertical.norm() <= 1e-12);
        }
    }
}

TEST_CASE("horizontal_lift preserves norms and inverts the differential") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> scale(0.1, 3.0);
    for (const auto& sub : catalog()) {
        double worst_norm = 0.0, worst_push = 0.0, worst_vert = 0.0;
        for (int s = 0; s < 100; ++s) {
            const Vec p = random_point(sub.total, rng);
            const Vec b = project_point(sub, p);
            const Vec w = scale(rng) * random_tangent(sub.base, b, rng);
            const Vec lift = horizontal_lift(sub, p, w);
            const LocalGeometry total(sub.total, p), base(sub.base, b);
            worst_norm = std::max(worst_norm, std::abs(total.norm(lift) - base.norm(w)));
            worst_push = std::max(worst_push, (push_forward(sub, p, lift) - w).norm());
            worst_vert = std::max(worst_vert, split(sub, p, lift).vertical.norm());
        }
        INFO(to_string(sub.kind));
        CHECK(worst_norm <= 1e-10);
        CHECK(worst_push <= 1e-10);
        CHECK(worst_vert <= 1e-12);
        const Vec p = random_point(sub.total, rng);
        CHECK(horizontal_lift(sub, p, Vec::Zero(sub.base.embed_dim)).norm() == 0.0);
    }
    const auto heis = SubmersionModel::heisenberg_proj(1);
    const Vec x = vec({0.4, 1.8, -2.0});
    CHECK((horizontal_lift(heis, x, vec({1, 0})) - vec({1, 0, -0.9})).norm() < 1e-15);
}

TEST_CASE("Berger totals keep horizontal norms and scale vertical norms by sqrt(lambda)") {
    const auto round = SubmersionModel::hopf(1.0);
    std::mt19937_64 rng(4);
    for (int s = 0; s < 10; ++s) {
        const Vec p = random_point(round.total, rng);
        const Vec b = project_point(round, p);
        const Vec w = random_tangent(round.base, b, rng);
        const Vec jx = hopf_j(p);
        const double h1 = metric_norm(round.total, p, horizontal_lift(round, p, w));
        for (double lambda : {0.25, 0.5, 1.0, 2.0, 4.0}) {
            const auto berger = SubmersionModel::hopf_berger(lambda, 1.0);
            const Vec hl = horizontal_lift(berger, p, w);
            CHECK(std::abs(metric_norm(berger.total, p, hl) - h1) <= 1e-10);
            CHECK(std::abs(metric_norm(berger.total, p, jx) - std::sqrt(lambda) * jx.norm()) <=
                  1e-12);
        }
    }
}

TEST_CASE("fiber_sample examples") {
    const auto hopf = SubmersionModel::hopf(1.0);
    const Vec b = vec({0.3, -0.2, std::sqrt(0.25 - 0.13)});
    const int count = 4000;
    const auto pts = fiber_sample(hopf, b, count);
    double length = 0.0;
    for (int k = 0; k < count; ++k) {
        CHECK((project_point(hopf, pts[k]) - b).norm() <= 1e-10);
        length += (pts[(k + 1) % count] - pts[k]).norm();
    }
    CHECK(std::abs(length - 2 * std::numbers::pi) < 1e-6);

    // South pole branch of the section.
    const auto south = fiber_sample(hopf, vec({0, 0, -0.5}), 8);
    for (const auto& q : south) CHECK((project_point(hopf, q) - vec({0, 0, -0.5})).norm() <= 1e-10);

    const auto sas = SubmersionModel::sasaki_proj(1.0, 1.0);
    const Vec p = vec({0.6, 0.0, 0.8});
    for (const auto& q : fiber_sample(sas, p, 16)) {
        CHECK(std::abs(q.tail<3>().norm() - 1.0) < 1e-12);
        CHECK(std::abs(q.tail<3>().dot(q.head<3>())) < 1e-12);
        CHECK((q.head<3>() - p).norm() == 0.0);
    }

    const auto heis = SubmersionModel::heisenberg_proj(1);
    const auto line = fiber_sample(heis, vec({1, 2}), 4);
    CHECK(line[2](2) == doctest::Approx(0.5));
    CHECK_THROWS_AS(fiber_sample(heis, vec({1, 2}), 1), Error);
}

TEST_CASE("fiber mean curvature vanishes for all three kinds") {
    std::mt19937_64 rng(5);
    for (const auto& sub : catalog()) {
        double worst = 0.0;
        for (int s = 0; s < 20; ++s) {
            const Vec p = random_point(sub.total, rng);
            worst = std::max(worst, LocalGeometry(sub.total, p).norm(fiber_mean_curvature(sub, p)));
        }
        INFO(to_string(sub.kind) << " " << worst);
        CHECK(worst <= fiber_tolerance(sub.kind));
        CHECK(audit_fibers(sub).minimal);
    }
}

TEST_CASE("the fiber stencil sees curvature of a small circle") {
    const auto s3 = AmbientSpace::round_sphere(3, 1.0);
    const Vec p = vec({0.6, 0.0, 0.8, 0.0});
    // Small circle (x0, x1) rotation: curvature sqrt(1/0.36 - 1) in S^3.
    const double h = 1e-3;
    auto curve = [&](double t) { return vec({0.6 * std::cos(t), 0.6 * std::sin(t), 0.8, 0.0}); };
    const Vec vel = (curve(-2 * h) - 8.0 * curve(-h) + 8.0 * curve(h) - curve(2 * h)) / (12 * h);
    const Vec acc = (-curve(-2 * h) + 16.0 * curve(-h) - 30.0 * p + 16.0 * curve(h) - curve(2 * h)) /
                    (12 * h * h);
    const LocalGeometry geo(s3, p);
    const Vec k = geo.tangent(acc) / vel.squaredNorm();
    CHECK(k.norm() == doctest::Approx(std::sqrt(1 / 0.36 - 1)).epsilon(1e-8));
}

TEST_CASE("O'Neill A on Hopf and Heisenberg") {
    std::mt19937_64 rng(6);
    const auto hopf = SubmersionModel::hopf(1.0);
    for (int s = 0; s < 20; ++s) {
        const Vec p = random_point(hopf.total, rng);
        const Vec b = project_point(hopf, p);
        const Vec xl = horizontal_lift(hopf, p, random_tangent(hopf.base, b, rng));
        const Vec v = vertical_unit(hopf, p);
        CHECK((oneill_A(hopf, p, xl, v) - hopf_j(xl)).norm() <= 1e-6);
        CHECK(oneill_A(hopf, p, v, v).norm() <= 1e-12);
        CHECK(oneill_A(hopf, p, v, xl).norm() <= 1e-12);
    }
    const auto heis = SubmersionModel::heisenberg_proj(1);
    for (int s = 0; s < 20; ++s) {
        const Vec p = random_point(heis.total, rng);
        const Vec z = split(heis, p, random_tangent(heis.total, p, rng)).horizontal;
        const Vec v = vertical_unit(heis, p);
        const Vec expected = -0.5 * heisenberg_j(heis.total, p, z);
        CHECK((oneill_A(heis, p, z, v) - expected).norm() <= 1e-6);
        // A_Z W is half the vertical part of the bracket.
        const Vec w = split(heis, p, random_tangent(heis.total, p, rng)).horizontal;
        const Vec azw = oneill_A(heis, p, z, w);
        CHECK(split(heis, p, azw).horizontal.norm() <= 1e-6);
        CHECK((azw + oneill_A(heis, p, w, z)).norm() <= 1e-6);
    }
}

TEST_CASE("O'Neill T vanishes on geodesic and totally geodesic fibers") {
    std::mt19937_64 rng(7);
    for (const auto& sub : catalog()) {
        double worst = 0.0;
        for (int s = 0; s < (sub.kind == SubmersionKind::SasakiProj ? 100 : 10); ++s) {
            const Vec p = random_point(sub.total, rng);
            const Vec v = vertical_unit(sub, p);
            const Vec e = random_tangent(sub.total, p, rng), f = random_tangent(sub.total, p, rng);
            worst = std::max(worst, oneill_T(sub, p, v, v).norm());
            worst = std::max(worst, oneill_T(sub, p, e, f).norm());
            const Vec h = split(sub, p, e).horizontal;
            CHECK(oneill_T(sub, p, h, f).norm() <= 1e-12);
        }
        INFO(to_string(sub.kind));
        CHECK(worst <= 1e-6);
    }
}

TEST_CASE("descriptor JSON round trip") {
    for (const auto& sub : catalog()) {
        const Json j = submersion_to_json(sub);
        const auto back = submersion_from_json(Json::parse(j.dump()));
        CHECK(back.kind == sub.kind);
        CHECK(submersion_to_json(back) == j);
    }
    const Json bad = Json::parse(R"({"kind": "HOPF", "total": {"kind": "HEISENBERG"}})");
    try {
        submersion_from_json(bad);
        FAIL("expected CONFIG_ERROR");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigError);
    }
    const Json short_form = Json::parse(R"({"kind": "SASAKI_PROJ", "total": {"kind": "SASAKI_BUNDLE", "params": {"r": 0.5}}})");
    const auto s = submersion_from_json(short_form);
    CHECK(s.total.radius == 0.5);
    CHECK(s.base.kind == SpaceKind::RoundSphere);
}

#include "mcflab/flow.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace mcflab;

namespace {

constexpr double kPi = std::numbers::pi;

double mean_radius(const DiscreteImmersion& imm) {
    double r = 0.0;
    for (const Vec& v : imm.vertices) r += v.norm();
    return r / imm.size();
}

// Geodesic distance from the north pole of ROUND_SPHERE(2, c), averaged.
double mean_polar_radius(const DiscreteImmersion& imm, double c) {
    const double R = 1.0 / std::sqrt(c);
    double rho = 0.0;
    for (const Vec& v : imm.vertices) rho += R * std::acos(std::clamp(v(2) / R, -1.0, 1.0));
    return rho / imm.size();
}

// rho' = -sqrt(c) cot(sqrt(c) rho), classical RK4.
double sphere_circle_ode(double rho0, double c, double t_end) {
    const double s = std::sqrt(c);
    auto f = [&](double r) { return -s / std::tan(s * r); };
    const int steps = 20000;
    const double h = t_end / steps;
    double r = rho0;
    for (int i = 0; i < steps; ++i) {
        const double k1 = f(r), k2 = f(r + 0.5 * h * k1), k3 = f(r + 0.5 * h * k2), k4 = f(r + h * k3);
        r += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return r;
}

}  // namespace

TEST_CASE("adaptive step bound") {
    CHECK(adaptive_dt_bound(0.1, 1.0, 1.0) == doctest::Approx(0.0025));
    CHECK(adaptive_dt_bound(0.1, 1000.0, 1.0) == doctest::Approx(0.0005));
    CHECK(adaptive_dt_bound(0.1, 1.0, 0.5) == doctest::Approx(0.00125));
    CHECK_THROWS_AS(adaptive_dt_bound(0.0, 1.0, 1.0), Error);

    FlowState s;
    s.imm = plane_circle(1.0, 64);
    const double h = s.imm.min_edge();
    CHECK(adaptive_dt(s, 1.0) == doctest::Approx(h * h / 4.0).epsilon(1e-9));
}

TEST_CASE("step rejects steps above the stability bound") {
    FlowState s;
    s.imm = plane_circle(1.0, 64);
    const double bound = adaptive_dt(s, 1.0);
    CHECK_NOTHROW(step_mcf(s, bound));
    try {
        step_mcf(s, 2.0 * bound);
        FAIL("expected CFL_VIOLATION");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CflViolation);
    }
}

TEST_CASE("single step moves a circle inwards by dt / r") {
    FlowState s;
    s.imm = plane_circle(1.0, 128);
    const double dt = adaptive_dt(s, 0.5);
    const auto next = step_mcf(s, dt);
    CHECK(next.t == doctest::Approx(dt));
    CHECK(next.step_count == 1);
    CHECK(mean_radius(next.imm) == doctest::Approx(1.0 - dt).epsilon(1e-6));
}

TEST_CASE("shrinking plane circle") {
    FlowPolicy policy;
    policy.horizon = 1.0;
    policy.sample_interval = 0.005;
    policy.target_h = 0.02;
    double worst = 0.0;
    const auto result = run_flow(plane_circle(1.0, samples_for(2 * kPi, 0.02)), policy,
                                 [&](const FlowState& s) {
                                     if (s.t > 0.45) return;
                                     const double r = std::sqrt(1.0 - 2.0 * s.t);
                                     worst = std::max(worst, std::abs(mean_radius(s.imm) - r));
                                 });
    CHECK(result.fate.outcome == FateOutcome::ShrinksToPoint);
    REQUIRE(result.fate.t_singular.has_value());
    CHECK(*result.fate.t_singular == doctest::Approx(0.5).epsilon(0.02));
    CHECK(result.fate.final_t < 0.5);
    CHECK(worst < 1e-3);
}

TEST_CASE("concentric circles shrink independently") {
    for (double r0 : {0.6, 0.9}) {
        FlowPolicy policy;
        policy.horizon = 1.0;
        policy.sample_interval = 0.005;
        policy.target_h = 0.02;
        const auto result = run_flow(plane_circle(r0, samples_for(2 * kPi * r0, 0.02)), policy);
        REQUIRE(result.fate.t_singular.has_value());
        CHECK(*result.fate.t_singular == doctest::Approx(r0 * r0 / 2).epsilon(0.02));
    }
}

TEST_CASE("circle on a round sphere follows the radius ODE") {
    const double c = 1.0;
    const double rho0 = 1.0;
    const auto sphere = AmbientSpace::round_sphere(2, c);
    FlowPolicy policy;
    policy.horizon = 0.3;
    policy.sample_interval = 0.05;
    policy.target_h = 0.02;
    double worst = 0.0;
    run_flow(geodesic_circle(sphere, rho0, samples_for(2 * kPi * std::sin(rho0), 0.02)), policy,
             [&](const FlowState& s) {
                 const double expected = sphere_circle_ode(rho0, c, s.t);
                 worst = std::max(worst, std::abs(mean_polar_radius(s.imm, c) - expected));
             });
    CHECK(worst < 1e-3);
}

TEST_CASE("great circle and great sphere are stationary") {
    FlowPolicy policy;
    policy.horizon = 0.1;
    policy.sample_interval = 0.05;
    policy.target_h = 0.1;
    const auto gc = run_flow(great_circle(AmbientSpace::round_sphere(2, 1.0), 64), policy);
    CHECK(gc.fate.outcome == FateOutcome::ConvergesMinimal);
    const auto gs = run_flow(equatorial_sphere(1.0, 3), policy);
    CHECK(gs.fate.outcome == FateOutcome::ConvergesMinimal);
    CHECK(gs.fate.final_t == 0.0);
}

TEST_CASE("Clifford torus stays put") {
    FlowState s;
    s.imm = clifford_torus(1.0, 40, 40);
    const auto start = s.imm.vertices;
    for (int k = 0; k < 20; ++k) s = step_mcf(s, adaptive_dt(s, 0.5));
    double moved = 0.0;
    for (int i = 0; i < s.imm.size(); ++i) moved = std::max(moved, (s.imm.vertices[i] - start[i]).norm());
    CHECK(moved < 1e-3 * s.t + 1e-12);
}

TEST_CASE("curve remeshing") {
    const auto circle = plane_circle(1.0, 40);
    CHECK(needs_remesh(circle, 0.05));
    CHECK_FALSE(needs_remesh(circle, circle.min_edge()));
    const auto fine = remesh(circle, 0.05);
    CHECK(fine.size() == samples_for(2 * kPi, 0.05));
    double off = 0.0;
    for (const Vec& v : fine.vertices) off = std::max(off, std::abs(v.norm() - 1.0));
    const double h = circle.mesh_size();
    CHECK(off < h * h);
    validate(fine);
}

TEST_CASE("surface remeshing removes a needle") {
    auto sphere = equatorial_sphere(1.0, 2);
    // Drag vertex 0 almost onto one of its neighbours.
    const auto rings = one_rings(sphere);
    const int nb = rings[0].front().index;
    Vec x = sphere.vertices[0] + 0.97 * (sphere.vertices[nb] - sphere.vertices[0]);
    sphere.vertices[0] = project_to_space(sphere.space, x);
    const double before = sphere.min_edge();
    const double typical = equatorial_sphere(1.0, 2).mesh_size();
    CHECK(before < 0.1 * typical);
    const auto fixed = remesh(sphere, typical);
    validate(fixed);
    CHECK(fixed.min_edge() > 0.3 * typical);
}

TEST_CASE("surface remeshing keeps periodic wraps consistent") {
    const auto sub = SubmersionModel::heisenberg_proj(1);
    const auto cyl = lift_immersion(sub, plane_circle(1.0, 24), 6);
    const auto fine = remesh(cyl, 0.5 * cyl.min_edge());
    validate(fine);
    CHECK(fine.size() > cyl.size());
    CHECK(fine.fiber_columns.empty());
}

TEST_CASE("singularity detection from a trace") {
    FlowTrace trace;
    trace.reference_h = 0.01;
    for (int i = 0; i <= 4999; ++i) {
        const double t = 0.49996 * i / 4999.0;
        trace.t.push_back(t);
        trace.max_A2.push_back(1.0 / (1.0 - 2.0 * t));
        trace.max_H2.push_back(trace.max_A2.back());
        trace.diameter.push_back(2.0 * std::sqrt(1.0 - 2.0 * t));
    }
    const auto ev = detect_singularity(trace);
    REQUIRE(ev.has_value());
    CHECK(ev->t_singular == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(ev->trigger == "max_A2");

    FlowTrace calm;
    calm.reference_h = 0.01;
    for (int i = 0; i < 50; ++i) {
        calm.t.push_back(0.01 * i);
        calm.max_A2.push_back(1.0 / (1.0 + calm.t.back()));
        calm.diameter.push_back(2.0);
    }
    CHECK_FALSE(detect_singularity(calm).has_value());

    FlowTrace flat = calm;
    std::fill(flat.max_A2.begin(), flat.max_A2.end(), 2.0);
    CHECK_FALSE(detect_singularity(flat).has_value());
}

TEST_CASE("lifted Hopf flow stays fiber invariant") {
    const auto sub = SubmersionModel::hopf(1.0);
    const auto base = geodesic_circle(sub.base, 0.5, 40);
    const auto torus = lift_immersion(sub, base, 12);
    FlowPolicy policy;
    policy.horizon = 0.01;
    policy.sample_interval = 0.005;
    policy.target_h = torus.mesh_size();
    policy.remesh = false;
    policy.submersion = sub;
    const auto result = run_flow(torus, policy);
    REQUIRE(result.trace.size() == 3);
    for (double d : result.trace.invariance_defect) CHECK(d < 1e-10);
}

TEST_CASE("trace csv columns") {
    FlowPolicy policy;
    policy.horizon = 0.01;
    policy.sample_interval = 0.005;
    policy.target_h = 0.1;
    policy.conditions = {pinching::heisenberg_cylinder(2)};
    const auto result = run_flow(plane_circle(1.0, 64), policy);
    std::ostringstream os;
    write_trace_csv(os, result.trace);
    std::istringstream is(os.str());
    std::string header;
    std::getline(is, header);
    CHECK(header == "t,max_A2,max_H2,min_margin_" + policy.conditions[0].name +
                        ",diameter,fiber_distance,invariance_defect");
    int rows = 0;
    for (std::string line; std::getline(is, line);) ++rows;
    CHECK(rows == 3);
    CHECK(os.str().find("nan") != std::string::npos);
}

#pragma once

#include "mcflab/flow.hpp"
#include "mcflab/json_io.hpp"

#include <functional>

namespace mcflab {

/// JSON verdict emitted by every check.
struct Verdict {
    std::string test;
    Json params = Json::object();
    Json residuals = Json::object();
    Json refinement_slopes = Json::object();
    bool pass = false;
};
Json verdict_to_json(const Verdict& v);

/// Builds the base immersion for a target edge length h.
using BaseFactory = std::function<DiscreteImmersion(double h)>;

/// Symmetric Hausdorff distance between two point clouds (hash-grid nearest neighbours).
double hausdorff_distance(const std::vector<Vec>& a, const std::vector<Vec>& b);
/// Hausdorff distance between pi(total) and the base polyline: projected surface
/// samples against base segments and base samples against projected mesh edges.
double projected_hausdorff(const SubmersionModel& sub, const DiscreteImmersion& total,
                           const DiscreteImmersion& base);
/// Points on the mesh: `per_edge` samples along every curve edge, or a barycentric
/// grid of that order on every triangle, projected back onto the space.
std::vector<Vec> dense_samples(const DiscreteImmersion& imm, int per_edge = 10);
/// Metric length of one fiber through p.
double fiber_length(const SubmersionModel& sub, const Vec& p);
/// Lift of a base curve with fiber resolution chosen so fiber edges are about h.
DiscreteImmersion lift_at_resolution(const SubmersionModel& sub, const DiscreteImmersion& base, double h);

struct CommutationOptions {
    double h = 0.05;
    double horizon = 0.3;
    double sample_interval = 0.03;
    double safety = 0.5;
    /// Also run at (h/2, dt/4) and require the distance to drop by `min_ratio`.
    bool refine = true;
    double min_ratio = 3.0;
    double abs_tol = 0.05;
    /// Stop both flows when the base diameter drops below this many h (0 disables).
    double singular_diameter_factor = 0.0;
};

struct CommutationSeries {
    double h = 0.0;
    std::vector<double> t;
    std::vector<double> distance;
    FateReport total_fate;
    FateReport base_fate;
    [[nodiscard]] double max_distance() const;
};

struct CommutationResult {
    Verdict verdict;
    std::vector<CommutationSeries> levels;
};

/// Flows the base curve and, independently, its lift; compares pi(M_t) with B_t at
/// every common sample time. Refuses to run unless the fiber audit passes.
CommutationResult commutation_test(const SubmersionModel& sub, const BaseFactory& make_base,
                                   const CommutationOptions& opt);
void write_commutation_csv(std::ostream& os, const CommutationResult& result);

/// Closed-form |A'|^2 on the lift from base data at a base vertex.
double lift_norm_closed_form(const SubmersionModel& sub, double base_A2, double tangency);

struct IdentityLevel {
    double h = 0.0;
    double max_relative_residual = 0.0;
    double mean_measured = 0.0;
    double mean_closed_form = 0.0;
    double mean_base_A2 = 0.0;
};

/// |A'|^2 measured on lift(B) against the closed form, at h and h/2. PASS iff the
/// relative residual is <= tol at h and halves at h/2 (or sits at round-off).
Verdict lift_norm_identity_test(const SubmersionModel& sub, const BaseFactory& make_base, double h,
                                double tol = 0.05);
IdentityLevel lift_norm_level(const SubmersionModel& sub, const DiscreteImmersion& base, double h);

/// Flows phi(M0) and phi(flow of M0); max vertex distance. PASS iff <= tol.
using Isometry = std::function<Vec(const Vec&)>;
Verdict isometry_commutation_test(const DiscreteImmersion& imm, const Isometry& phi, const FlowPolicy& policy,
                                  double tol = 1e-8);

/// Flow of a lift keeps its invariance defect below 10 (h^2 + dt) t at every sample.
Verdict invariance_test(const SubmersionModel& sub, const DiscreteImmersion& lifted, const FlowPolicy& policy);

struct VariationSample {
    double lambda = 0.0;
    double mixed = 0.0;       // mean |h(X^L, V_lambda)|
    double correction = 0.0;  // mean |A'|^2 - |A|^2
};

/// Mixed second fundamental form entries and |A'|^2 correction of Berger lifts
/// across lambda, with log-log slopes. PASS iff the mixed slope is -0.5 +- 0.02.
Verdict variation_exponent_fit(const BaseFactory& make_base, const std::vector<double>& lambdas, double h,
                               std::vector<VariationSample>* samples = nullptr);
VariationSample variation_sample(const DiscreteImmersion& base, double lambda, double h);

/// max |d pi(H') - H| over lift vertices, at h and h/2. PASS iff <= h at h and
/// halving under refinement (or at round-off on both levels).
Verdict mean_curvature_relation_test(const SubmersionModel& sub, const BaseFactory& make_base, double h);
double mean_curvature_relation_residual(const SubmersionModel& sub, const DiscreteImmersion& base, double h);

/// Largest vertex displacement per unit time over a short explicit flow.
/// PASS iff <= 10 h^2.
Verdict stationarity_test(const DiscreteImmersion& imm, double horizon, double safety = 0.5);

/// Geodesic circle on ROUND_SPHERE(2, c) against rho' = -sqrt(c) cot(sqrt(c) rho),
/// at h and h/2. PASS iff error(h/2) <= tol and error(h/2) < error(h).
Verdict sphere_circle_test(double c, double rho0, double horizon, double h, double tol = 1e-2);
/// Reference solution of the radius ODE (RK4).
double sphere_circle_radius(double c, double rho0, double t);

/// Wraps audit_fibers in a verdict.
Verdict fiber_audit_verdict(const SubmersionModel& sub, int samples = 100, unsigned seed = 17);

/// log2(coarse / fine), or +inf when the fine residual is at round-off.
double refinement_slope(double coarse, double fine);

}  // namespace mcflab

#pragma once

#include "mcflab/immersions.hpp"

#include <functional>

namespace mcflab {

struct FlowState {
    DiscreteImmersion imm;
    double t = 0.0;
    int step_count = 0;
    double last_dt = 0.0;
};

/// safety * min(h^2 / 4, 1 / (2 max|A|^2)); h is the shortest edge.
double adaptive_dt_bound(double h, double max_A2, double safety);
double adaptive_dt(const FlowState& state, double safety);

/// x <- project(x + dt H) at every vertex. `forms` may be passed when already
/// computed for the current mesh. Throws CFL_VIOLATION or MESH_COLLAPSE.
FlowState step_mcf(const FlowState& state, double dt, const FundamentalFormsSample* forms = nullptr);

/// True when some edge leaves [0.5, 1.5] * target_h and remeshing can help.
bool needs_remesh(const DiscreteImmersion& imm, double target_h);
/// Curves: arclength resampling. Surfaces: split above 4/3, collapse below 4/5
/// of the target, projecting new vertices. Drops fiber columns.
DiscreteImmersion remesh(const DiscreteImmersion& imm, double target_h);

struct FlowPolicy {
    double horizon = 1.0;
    double sample_interval = 0.01;
    double target_h = 0.05;
    double safety = 0.5;
    /// Singular when max|A|^2 exceeds this ...
    double singular_A2 = 1e4;
    /// ... or the (transverse) diameter drops below this many target_h.
    double singular_diameter_factor = 10.0;
    /// Converged when max|H|^2 stays below this with bounded |A|^2.
    double minimal_H2 = 1e-4;
    bool remesh = true;
    long max_steps = 5'000'000;
    std::vector<PinchingCondition> conditions;
    /// Diagnostics measured in the base when set (diameter, fiber distance, invariance).
    std::optional<SubmersionModel> submersion;
};

struct FlowTrace {
    std::vector<double> t;
    std::vector<double> max_A2;
    std::vector<double> max_H2;
    std::vector<std::string> margin_names;
    std::vector<std::vector<double>> min_margin;  // [condition][sample]
    std::vector<double> diameter;
    std::vector<double> fiber_distance;
    std::vector<double> invariance_defect;
    double reference_h = 0.0;

    [[nodiscard]] std::size_t size() const { return t.size(); }
};

enum class FateOutcome { ShrinksToFiber, ConvergesMinimal, ShrinksToPoint, Inconclusive };
std::string_view to_string(FateOutcome outcome);

struct FateReport {
    FateOutcome outcome = FateOutcome::Inconclusive;
    std::optional<double> t_singular;
    std::string reason;
    double final_t = 0.0;
    long steps = 0;
    double final_max_A2 = 0.0;
    double final_max_H2 = 0.0;
    double final_diameter = 0.0;
    double final_fiber_distance = 0.0;
    FlowPolicy policy;
};

struct SingularityEvent {
    double t_detected = 0.0;
    double t_singular = 0.0;
    std::string trigger;
};

/// Flags a singularity when the last sample has max|A|^2 above `max_A2` or a
/// diameter below `diameter_factor * trace.reference_h`, and estimates the
/// blow-up time by regressing 1 / max|A|^2 linearly to zero over the trailing
/// samples where max|A|^2 is at least half its last value.
std::optional<SingularityEvent> detect_singularity(const FlowTrace& trace, double max_A2 = 1e4,
                                                   double diameter_factor = 10.0);

struct FlowResult {
    FlowTrace trace;
    FateReport fate;
    FlowState final_state;
};

using SampleCallback = std::function<void(const FlowState&)>;

/// Steps, remeshes and samples until the horizon, a singularity or convergence.
/// Steps are clipped so that samples land exactly on multiples of the interval.
FlowResult run_flow(const DiscreteImmersion& imm, const FlowPolicy& policy,
                    const SampleCallback& on_sample = {});

/// Diameter of the vertex set (of its projection when `sub` is given).
double immersion_diameter(const DiscreteImmersion& imm, const SubmersionModel* sub);
/// Largest base distance from a projected vertex to the projected centroid.
double fiber_distance(const DiscreteImmersion& imm, const SubmersionModel& sub);

void write_trace_csv(std::ostream& os, const FlowTrace& trace);

}  // namespace mcflab

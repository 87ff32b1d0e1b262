#include "mcflab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace mcflab {

namespace {

constexpr double kCollapseEdge = 1e-10;
constexpr int kMinCurveVertices = 12;

bool all_finite(const Vec& v) { return v.allFinite(); }

// --- curve resampling --------------------------------------------------------------

DiscreteImmersion resample_curve(const DiscreteImmersion& imm, double target_h) {
    const int n = imm.size();
    std::vector<double> s(n + 1, 0.0);
    for (int i = 0; i < n; ++i)
        s[i + 1] = s[i] + chord_length(imm.space, imm.vertices[i], imm.vertices[(i + 1) % n]);
    const double length = s[n];
    const int count = std::max(kMinCurveVertices, static_cast<int>(std::lround(length / target_h)));
    auto P = [&](int i) -> const Vec& { return imm.vertices[((i % n) + n) % n]; };

    DiscreteImmersion out = imm;
    out.vertices.clear();
    out.fiber_columns.clear();
    int seg = 0;
    for (int k = 0; k < count; ++k) {
        const double target = length * k / count;
        while (seg < n - 1 && s[seg + 1] <= target) ++seg;
        const double len = s[seg + 1] - s[seg];
        const double u = len > 0.0 ? (target - s[seg]) / len : 0.0;
        // Uniform Catmull-Rom through P(seg-1) .. P(seg+2).
        const Vec& p0 = P(seg - 1);
        const Vec& p1 = P(seg);
        const Vec& p2 = P(seg + 1);
        const Vec& p3 = P(seg + 2);
        const double u2 = u * u;
        const double u3 = u2 * u;
        Vec x = 0.5 * ((2.0 * p1) + (-p0 + p2) * u + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u2 +
                       (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u3);
        out.vertices.push_back(project_to_space(imm.space, x));
    }
    return out;
}

// --- surface split / collapse ------------------------------------------------------

struct EdgeRef {
    int a = 0;
    int b = 0;
    int delta = 0;  // wrap of b relative to a
    double length = 0.0;
};

struct WorkMesh {
    const DiscreteImmersion* base = nullptr;
    std::vector<Vec> verts;
    std::vector<bool> vert_alive;
    std::vector<Triangle> tris;
    std::vector<bool> tri_alive;

    Vec pos(int v, int w) const {
        if (w == 0) return verts[v];
        return verts[v] + static_cast<double>(w) * base->period;
    }
    Vec corner(const Triangle& t, int k) const { return pos(t.v[k], t.wrap[k]); }
};

// Inner product of the bivectors (p1 - p0) ^ (p2 - p0) and (q1 - q0) ^ (q2 - q0).
double bivector_dot(const Vec& a1, const Vec& a2, const Vec& b1, const Vec& b2) {
    return a1.dot(b1) * a2.dot(b2) - a1.dot(b2) * a2.dot(b1);
}

std::vector<EdgeRef> collect_edges(const WorkMesh& m) {
    std::map<std::tuple<int, int, int>, EdgeRef> edges;
    for (std::size_t t = 0; t < m.tris.size(); ++t) {
        if (!m.tri_alive[t]) continue;
        const Triangle& tri = m.tris[t];
        for (int k = 0; k < 3; ++k) {
            const int l = (k + 1) % 3;
            int a = tri.v[k], b = tri.v[l];
            int d = tri.wrap[l] - tri.wrap[k];
            if (a > b) {
                std::swap(a, b);
                d = -d;
            }
            auto key = std::make_tuple(a, b, d);
            if (edges.count(key)) continue;
            EdgeRef e{a, b, d, 0.0};
            e.length = chord_length(m.base->space, m.pos(a, 0), m.pos(b, d));
            edges.emplace(key, e);
        }
    }
    std::vector<EdgeRef> out;
    out.reserve(edges.size());
    for (auto& [key, e] : edges) out.push_back(e);
    return out;
}

// Corner slot of edge (a, b with relative wrap d) in a triangle, or -1.
int find_edge(const Triangle& t, int a, int b, int d) {
    for (int k = 0; k < 3; ++k) {
        const int l = (k + 1) % 3;
        if (t.v[k] == a && t.v[l] == b && t.wrap[l] - t.wrap[k] == d) return k;
        if (t.v[k] == b && t.v[l] == a && t.wrap[l] - t.wrap[k] == -d) return k;
    }
    return -1;
}

bool split_edge(WorkMesh& m, const EdgeRef& e, std::vector<bool>& touched) {
    std::vector<std::size_t> faces;
    for (std::size_t t = 0; t < m.tris.size(); ++t)
        if (m.tri_alive[t] && find_edge(m.tris[t], e.a, e.b, e.delta) >= 0) faces.push_back(t);
    for (std::size_t f : faces)
        if (touched[f]) return false;
    const Vec mid = project_to_space(m.base->space, 0.5 * (m.pos(e.a, 0) + m.pos(e.b, e.delta)));
    const int mid_index = static_cast<int>(m.verts.size());
    m.verts.push_back(mid);
    m.vert_alive.push_back(true);
    for (std::size_t f : faces) {
        const Triangle t = m.tris[f];
        const int k = find_edge(t, e.a, e.b, e.delta);
        const int l = (k + 1) % 3;
        const int o = (k + 2) % 3;
        // The new vertex lives in the frame of a, so its wrap is that of a's corner.
        const int a_slot = t.v[k] == e.a ? k : l;
        const int mid_wrap = t.wrap[a_slot];
        Triangle t1{{t.v[k], mid_index, t.v[o]}, {t.wrap[k], mid_wrap, t.wrap[o]}};
        Triangle t2{{mid_index, t.v[l], t.v[o]}, {mid_wrap, t.wrap[l], t.wrap[o]}};
        m.tri_alive[f] = false;
        m.tris.push_back(t1);
        m.tris.push_back(t2);
        m.tri_alive.push_back(true);
        m.tri_alive.push_back(true);
        touched.push_back(true);
        touched.push_back(true);
    }
    return true;
}

bool collapse_edge(WorkMesh& m, const EdgeRef& e, double max_len, std::vector<bool>& touched) {
    // Neighbours of a (in a's frame) and of b (moved into a's frame).
    std::set<std::pair<int, int>> na, nb;
    std::vector<std::size_t> incident_a, incident_b;
    for (std::size_t f = 0; f < m.tris.size(); ++f) {
        if (!m.tri_alive[f]) continue;
        const Triangle& t = m.tris[f];
        for (int k = 0; k < 3; ++k) {
            if (t.v[k] == e.a) {
                incident_a.push_back(f);
                for (int l = 0; l < 3; ++l)
                    if (l != k) na.insert({t.v[l], t.wrap[l] - t.wrap[k]});
            }
            if (t.v[k] == e.b) {
                incident_b.push_back(f);
                for (int l = 0; l < 3; ++l)
                    if (l != k) nb.insert({t.v[l], t.wrap[l] - t.wrap[k] + e.delta});
            }
        }
    }
    if (e.a == e.b) return false;
    for (std::size_t f : incident_a)
        if (touched[f]) return false;
    for (std::size_t f : incident_b)
        if (touched[f]) return false;
    int common = 0;
    for (const auto& n : na)
        if (n.first != e.b && nb.count(n)) ++common;
    if (common != 2) return false;

    const Vec target = project_to_space(m.base->space, 0.5 * (m.pos(e.a, 0) + m.pos(e.b, e.delta)));
    std::vector<std::pair<std::size_t, Triangle>> updated;
    auto check = [&](std::size_t f, const Triangle& after) {
        const Triangle& before = m.tris[f];
        const Vec p0 = m.corner(before, 0), p1 = m.corner(before, 1), p2 = m.corner(before, 2);
        auto moved = [&](int k) -> Vec {
            if (after.v[k] != e.a || after.wrap[k] == 0) return after.v[k] == e.a ? target : m.corner(after, k);
            return target + static_cast<double>(after.wrap[k]) * m.base->period;
        };
        const Vec q0 = moved(0), q1 = moved(1), q2 = moved(2);
        const Vec a1 = p1 - p0, a2 = p2 - p0, b1 = q1 - q0, b2 = q2 - q0;
        const double before_area = std::sqrt(std::max(0.0, bivector_dot(a1, a2, a1, a2)));
        const double after_area = std::sqrt(std::max(0.0, bivector_dot(b1, b2, b1, b2)));
        if (after_area < 1e-3 * before_area || bivector_dot(a1, a2, b1, b2) <= 0.0) return false;
        for (int k = 0; k < 3; ++k)
            if (chord_length(m.base->space, moved(k), moved((k + 1) % 3)) > max_len) return false;
        return true;
    };
    std::vector<std::size_t> removed;
    for (std::size_t f : incident_b) {
        const Triangle& t = m.tris[f];
        if (find_edge(t, e.a, e.b, e.delta) >= 0) {
            removed.push_back(f);
            continue;
        }
        Triangle after = t;
        for (int k = 0; k < 3; ++k)
            if (t.v[k] == e.b) {
                after.v[k] = e.a;
                after.wrap[k] = t.wrap[k] - e.delta;
            }
        if (!check(f, after)) return false;
        updated.emplace_back(f, after);
    }
    for (std::size_t f : incident_a) {
        if (std::find(removed.begin(), removed.end(), f) != removed.end()) continue;
        if (!check(f, m.tris[f])) return false;
    }
    if (removed.size() != 2) return false;
    for (std::size_t f : removed) m.tri_alive[f] = false;
    for (auto& [f, t] : updated) {
        m.tris[f] = t;
        touched[f] = true;
    }
    for (std::size_t f : incident_a) touched[f] = true;
    m.verts[e.a] = target;
    m.vert_alive[e.b] = false;
    return true;
}

DiscreteImmersion remesh_surface(const DiscreteImmersion& imm, double target_h) {
    WorkMesh m;
    m.base = &imm;
    m.verts = imm.vertices;
    m.vert_alive.assign(imm.size(), true);
    m.tris = imm.triangles;
    m.tri_alive.assign(imm.triangles.size(), true);
    const double hi = 4.0 / 3.0 * target_h;
    const double lo = 4.0 / 5.0 * target_h;

    for (int pass = 0; pass < 20; ++pass) {
        bool changed = false;
        auto edges = collect_edges(m);
        std::sort(edges.begin(), edges.end(),
                  [](const EdgeRef& x, const EdgeRef& y) { return x.length > y.length; });
        std::vector<bool> touched(m.tris.size(), false);
        for (const EdgeRef& e : edges) {
            if (e.length <= hi) break;
            changed |= split_edge(m, e, touched);
        }
        edges = collect_edges(m);
        std::sort(edges.begin(), edges.end(),
                  [](const EdgeRef& x, const EdgeRef& y) { return x.length < y.length; });
        touched.assign(m.tris.size(), false);
        for (const EdgeRef& e : edges) {
            if (e.length >= lo) break;
            if (!m.vert_alive[e.a] || !m.vert_alive[e.b]) continue;
            changed |= collapse_edge(m, e, hi, touched);
        }
        if (!changed) break;
    }

    DiscreteImmersion out;
    out.space = imm.space;
    out.kind = imm.kind;
    out.period = imm.period;
    std::vector<int> remap(m.verts.size(), -1);
    for (std::size_t v = 0; v < m.verts.size(); ++v) {
        if (!m.vert_alive[v]) continue;
        remap[v] = static_cast<int>(out.vertices.size());
        out.vertices.push_back(m.verts[v]);
    }
    for (std::size_t f = 0; f < m.tris.size(); ++f) {
        if (!m.tri_alive[f]) continue;
        Triangle t = m.tris[f];
        for (int k = 0; k < 3; ++k) t.v[k] = remap[t.v[k]];
        out.triangles.push_back(t);
    }
    return out;
}

double base_distance(const SubmersionModel& sub, const Vec& a, const Vec& b) {
    return chord_length(sub.base, a, b);
}

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace

double adaptive_dt_bound(double h, double max_A2, double safety) {
    if (!(h > 0.0) || !(safety > 0.0))
        throw Error(ErrorCode::InvalidArgument, "adaptive step needs h > 0 and safety > 0");
    double bound = h * h / 4.0;
    if (max_A2 > 0.0) bound = std::min(bound, 1.0 / (2.0 * max_A2));
    return safety * bound;
}

double adaptive_dt(const FlowState& state, double safety) {
    const auto forms = fundamental_forms(state.imm);
    return adaptive_dt_bound(state.imm.min_edge(), forms.max_A2(), safety);
}

FlowState step_mcf(const FlowState& state, double dt, const FundamentalFormsSample* forms) {
    if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "time step must be positive");
    FundamentalFormsSample own;
    if (!forms) {
        own = fundamental_forms(state.imm);
        forms = &own;
    }
    const double bound = adaptive_dt_bound(state.imm.min_edge(), forms->max_A2(), 1.0);
    if (dt > bound * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "dt = " << dt << " exceeds the stability bound " << bound;
        throw Error(ErrorCode::CflViolation, os.str());
    }
    FlowState next = state;
    for (int i = 0; i < state.imm.size(); ++i) {
        const Vec moved = state.imm.vertices[i] + dt * forms->vertices[i].mean_curvature;
        Vec x = project_to_space(state.imm.space, moved);
        if (!all_finite(x)) {
            std::ostringstream os;
            os << "vertex " << i << " left the finite range";
            throw Error(ErrorCode::MeshCollapse, os.str());
        }
        next.imm.vertices[i] = std::move(x);
    }
    if (!(next.imm.min_edge() > kCollapseEdge))
        throw Error(ErrorCode::MeshCollapse, "an edge collapsed to zero length");
    next.t = state.t + dt;
    next.step_count = state.step_count + 1;
    next.last_dt = dt;
    return next;
}

bool needs_remesh(const DiscreteImmersion& imm, double target_h) {
    if (!(target_h > 0.0)) return false;
    const double lo = imm.min_edge();
    const double hi = imm.mesh_size();
    if (hi > 1.5 * target_h) return true;
    if (lo < 0.5 * target_h) {
        // A curve at its minimum vertex count cannot be coarsened further.
        return !(imm.kind == ImmersionKind::Curve && imm.size() <= kMinCurveVertices);
    }
    return false;
}

DiscreteImmersion remesh(const DiscreteImmersion& imm, double target_h) {
    if (!(target_h > 0.0)) throw Error(ErrorCode::InvalidArgument, "target edge length must be positive");
    DiscreteImmersion out =
        imm.kind == ImmersionKind::Curve ? resample_curve(imm, target_h) : remesh_surface(imm, target_h);
    validate(out);
    return out;
}

double immersion_diameter(const DiscreteImmersion& imm, const SubmersionModel* sub) {
    std::vector<Vec> pts;
    const int n = imm.size();
    const int stride = std::max(1, n / 400);
    for (int i = 0; i < n; i += stride)
        pts.push_back(sub ? project_point(*sub, imm.vertices[i]) : imm.vertices[i]);
    const AmbientSpace& space = sub ? sub->base : imm.space;
    double d = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) d = std::max(d, chord_length(space, pts[i], pts[j]));
    return d;
}

double fiber_distance(const DiscreteImmersion& imm, const SubmersionModel& sub) {
    std::vector<Vec> pts;
    for (const Vec& v : imm.vertices) pts.push_back(project_point(sub, v));
    Vec mean = Vec::Zero(pts.front().size());
    for (const Vec& p : pts) mean += p;
    mean /= static_cast<double>(pts.size());
    const Vec center = project_to_space(sub.base, mean);
    double d = 0.0;
    for (const Vec& p : pts) d = std::max(d, base_distance(sub, p, center));
    return d;
}

std::string_view to_string(FateOutcome outcome) {
    switch (outcome) {
        case FateOutcome::ShrinksToFiber: return "SHRINKS_TO_FIBER";
        case FateOutcome::ConvergesMinimal: return "CONVERGES_MINIMAL";
        case FateOutcome::ShrinksToPoint: return "SHRINKS_TO_POINT";
        case FateOutcome::Inconclusive: return "INCONCLUSIVE";
    }
    return "INCONCLUSIVE";
}

std::optional<SingularityEvent> detect_singularity(const FlowTrace& trace, double max_A2,
                                                   double diameter_factor) {
    const std::size_t n = trace.size();
    if (n < 3) return std::nullopt;
    SingularityEvent ev;
    ev.t_detected = trace.t.back();
    const double last = trace.max_A2.back();
    if (last > max_A2) {
        ev.trigger = "max_A2";
    } else if (trace.reference_h > 0.0 && !trace.diameter.empty() &&
               trace.diameter.back() < diameter_factor * trace.reference_h) {
        ev.trigger = "diameter";
    } else {
        return std::nullopt;
    }
    // Curvature must be growing towards the end for a blow-up fit.
    if (!(last > trace.max_A2.front())) return std::nullopt;
    std::size_t first = n - 1;
    while (first > 0 && trace.max_A2[first - 1] >= 0.5 * last) --first;
    first = std::min(first, n - 3);
    double st = 0, sy = 0, stt = 0, sty = 0;
    const double m = static_cast<double>(n - first);
    for (std::size_t i = first; i < n; ++i) {
        const double t = trace.t[i];
        const double y = 1.0 / trace.max_A2[i];
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    const double denom = m * stt - st * st;
    if (denom == 0.0) return std::nullopt;
    const double slope = (m * sty - st * sy) / denom;
    const double intercept = (sy - slope * st) / m;
    if (!(slope < 0.0)) return std::nullopt;
    ev.t_singular = -intercept / slope;
    return ev;
}

namespace {

void record(FlowTrace& trace, const FlowState& state, const FundamentalFormsSample& forms,
            const FlowPolicy& policy) {
    trace.t.push_back(state.t);
    trace.max_A2.push_back(forms.max_A2());
    trace.max_H2.push_back(forms.max_H2());
    for (std::size_t c = 0; c < policy.conditions.size(); ++c)
        trace.min_margin[c].push_back(pinching_margin(forms, policy.conditions[c]).min);
    const SubmersionModel* sub = policy.submersion ? &*policy.submersion : nullptr;
    trace.diameter.push_back(immersion_diameter(state.imm, sub));
    const double nan = std::numeric_limits<double>::quiet_NaN();
    trace.fiber_distance.push_back(sub ? fiber_distance(state.imm, *sub) : nan);
    trace.invariance_defect.push_back(sub && !state.imm.fiber_columns.empty()
                                          ? invariance_defect(*sub, state.imm)
                                          : nan);
}

}  // namespace

FlowResult run_flow(const DiscreteImmersion& imm, const FlowPolicy& policy, const SampleCallback& on_sample) {
    if (!(policy.horizon > 0.0) || !(policy.sample_interval > 0.0))
        throw Error(ErrorCode::InvalidArgument, "horizon and sample interval must be positive");
    validate(imm);
    FlowResult result;
    FlowTrace& trace = result.trace;
    for (const auto& c : policy.conditions) trace.margin_names.push_back(c.name);
    trace.min_margin.resize(policy.conditions.size());
    trace.reference_h = policy.target_h;

    FlowState state;
    state.imm = imm;
    FundamentalFormsSample forms = fundamental_forms(state.imm);
    record(trace, state, forms, policy);
    if (on_sample) on_sample(state);

    FateReport& fate = result.fate;
    fate.policy = policy;
    bool singular = false;
    bool converged = trace.max_H2.back() < policy.minimal_H2;
    std::optional<SingularityEvent> event;
    long sample_index = 1;
    const double eps = 1e-12 * policy.horizon;

    while (!converged && state.t < policy.horizon - eps) {
        if (state.step_count >= policy.max_steps)
            throw Error(ErrorCode::IntegrationError, "step budget exhausted");
        const double next_sample = std::min(policy.horizon, sample_index * policy.sample_interval);
        double dt = adaptive_dt_bound(state.imm.min_edge(), forms.max_A2(), policy.safety);
        const bool lands = state.t + dt >= next_sample - eps;
        if (lands) dt = next_sample - state.t;
        state = step_mcf(state, dt, &forms);
        if (lands) state.t = next_sample;
        if (policy.remesh && needs_remesh(state.imm, policy.target_h))
            state.imm = remesh(state.imm, policy.target_h);
        forms = fundamental_forms(state.imm);
        const bool blowing_up = forms.max_A2() > policy.singular_A2;
        // Extra samples each time the curvature doubles keep the blow-up resolved.
        const bool steep = forms.max_A2() > 2.0 * trace.max_A2.back();
        if (lands || blowing_up || steep) {
            if (lands) ++sample_index;
            record(trace, state, forms, policy);
            if (on_sample) on_sample(state);
            event = detect_singularity(trace, policy.singular_A2, policy.singular_diameter_factor);
            if (event || blowing_up) {
                singular = true;
                break;
            }
            converged = trace.max_H2.back() < policy.minimal_H2;
        }
    }

    fate.final_t = state.t;
    fate.steps = state.step_count;
    fate.final_max_A2 = trace.max_A2.back();
    fate.final_max_H2 = trace.max_H2.back();
    fate.final_diameter = trace.diameter.back();
    fate.final_fiber_distance = trace.fiber_distance.back();
    if (converged) {
        fate.outcome = FateOutcome::ConvergesMinimal;
        fate.reason = "max|H|^2 below the minimality threshold";
    } else if (singular) {
        if (event) fate.t_singular = event->t_singular;
        const std::string trigger = event ? event->trigger : std::string("max_A2");
        const bool small = fate.final_diameter < policy.singular_diameter_factor * policy.target_h;
        if (policy.submersion && small) {
            fate.outcome = FateOutcome::ShrinksToFiber;
            fate.reason = "transverse diameter collapsed (" + trigger + " trigger)";
        } else if (!policy.submersion && small) {
            fate.outcome = FateOutcome::ShrinksToPoint;
            fate.reason = "diameter collapsed (" + trigger + " trigger)";
        } else {
            fate.outcome = FateOutcome::Inconclusive;
            fate.reason = "curvature blew up without the diameter collapsing (" + trigger + " trigger)";
        }
    } else {
        fate.outcome = FateOutcome::Inconclusive;
        fate.reason = "horizon reached";
    }
    result.final_state = std::move(state);
    return result;
}

void write_trace_csv(std::ostream& os, const FlowTrace& trace) {
    os << "t,max_A2,max_H2";
    for (const auto& name : trace.margin_names) os << ",min_margin_" << name;
    os << ",diameter,fiber_distance,invariance_defect\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        os << fmt(trace.t[i]) << ',' << fmt(trace.max_A2[i]) << ',' << fmt(trace.max_H2[i]);
        for (const auto& col : trace.min_margin) os << ',' << fmt(col[i]);
        os << ',' << fmt(trace.diameter[i]) << ',' << fmt(trace.fiber_distance[i]) << ','
           << fmt(trace.invariance_defect[i]) << '\n';
    }
}

}  // namespace mcflab

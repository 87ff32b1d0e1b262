#include "mcflab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace mcflab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

using Segment = std::pair<Vec, Vec>;

// Uniform hash grid over the first three coordinates.
class PointGrid {
public:
    explicit PointGrid(const std::vector<Vec>& pts) : pts_(pts) {
        if (pts.empty()) return;
        const int d = std::min<int>(3, static_cast<int>(pts.front().size()));
        Eigen::Vector3d lo = Eigen::Vector3d::Constant(kInf), hi = Eigen::Vector3d::Constant(-kInf);
        for (const Vec& p : pts)
            for (int k = 0; k < d; ++k) {
                lo(k) = std::min(lo(k), p(k));
                hi(k) = std::max(hi(k), p(k));
            }
        double extent = 0.0;
        for (int k = 0; k < d; ++k) extent = std::max(extent, hi(k) - lo(k));
        const double n = static_cast<double>(pts.size());
        cell_ = extent > 0.0 ? extent / std::max(1.0, std::pow(n, 1.0 / d)) * 2.0 : 1.0;
        dims_ = d;
        for (std::size_t i = 0; i < pts.size(); ++i) cells_[key(coords(pts[i]))].push_back(static_cast<int>(i));
    }

    [[nodiscard]] double nearest(const Vec& q) const {
        if (pts_.empty()) return kInf;
        const auto c = coords(q);
        double best = kInf;
        for (int r = 0;; ++r) {
            visit_shell(c, r, [&](int i) { best = std::min(best, (pts_[i] - q).norm()); });
            // Anything in shells beyond r lies at least r * cell away.
            if (best <= r * cell_) return best;
            if (r > 1 << 20) return best;
        }
    }

private:
    using Cell = std::array<long, 3>;

    [[nodiscard]] Cell coords(const Vec& p) const {
        Cell c{0, 0, 0};
        for (int k = 0; k < dims_; ++k) c[k] = static_cast<long>(std::floor(p(k) / cell_));
        return c;
    }
    static long long key(const Cell& c) {
        return ((c[0] & 0x1FFFFF) << 42) | ((c[1] & 0x1FFFFF) << 21) | (c[2] & 0x1FFFFF);
    }
    template <class F>
    void visit_shell(const Cell& c, int r, F&& f) const {
        const int rz = dims_ >= 3 ? r : 0;
        const int ry = dims_ >= 2 ? r : 0;
        for (long dx = -r; dx <= r; ++dx)
            for (long dy = -ry; dy <= ry; ++dy)
                for (long dz = -rz; dz <= rz; ++dz) {
                    if (std::max({std::labs(dx), std::labs(dy), std::labs(dz)}) != r) continue;
                    const auto it = cells_.find(key({c[0] + dx, c[1] + dy, c[2] + dz}));
                    if (it == cells_.end()) continue;
                    for (int i : it->second) f(i);
                }
    }

    const std::vector<Vec>& pts_;
    double cell_ = 1.0;
    int dims_ = 3;
    std::unordered_map<long long, std::vector<int>> cells_;
};

// Segments bucketed into every cell their bounding box touches.
class SegmentGrid {
public:
    explicit SegmentGrid(const std::vector<Segment>& segs) : segs_(segs) {
        if (segs.empty()) return;
        dims_ = std::min<int>(3, static_cast<int>(segs.front().first.size()));
        double len = 0.0;
        for (const auto& [a, b] : segs) len += (b - a).norm();
        cell_ = std::max(len / static_cast<double>(segs.size()), 1e-12);
        for (std::size_t i = 0; i < segs.size(); ++i) {
            const auto lo = coords(segs[i].first.cwiseMin(segs[i].second));
            const auto hi = coords(segs[i].first.cwiseMax(segs[i].second));
            for (long x = lo[0]; x <= hi[0]; ++x)
                for (long y = lo[1]; y <= hi[1]; ++y)
                    for (long z = lo[2]; z <= hi[2]; ++z) cells_[key({x, y, z})].push_back(static_cast<int>(i));
        }
    }

    [[nodiscard]] double nearest(const Vec& q) const {
        if (segs_.empty()) return kInf;
        const auto c = coords(q);
        double best = kInf;
        for (int r = 0;; ++r) {
            const int rz = dims_ >= 3 ? r : 0;
            const int ry = dims_ >= 2 ? r : 0;
            for (long dx = -r; dx <= r; ++dx)
                for (long dy = -ry; dy <= ry; ++dy)
                    for (long dz = -rz; dz <= rz; ++dz) {
                        if (std::max({std::labs(dx), std::labs(dy), std::labs(dz)}) != r) continue;
                        const auto it = cells_.find(key({c[0] + dx, c[1] + dy, c[2] + dz}));
                        if (it == cells_.end()) continue;
                        for (int i : it->second) best = std::min(best, distance(q, segs_[i]));
                    }
            if (best <= r * cell_ || r > 1 << 20) return best;
        }
    }

    static double distance(const Vec& q, const Segment& s) {
        const Vec d = s.second - s.first;
        const double dd = d.squaredNorm();
        const double u = dd > 0.0 ? std::clamp((q - s.first).dot(d) / dd, 0.0, 1.0) : 0.0;
        return (q - s.first - u * d).norm();
    }

private:
    using Cell = std::array<long, 3>;
    [[nodiscard]] Cell coords(const Vec& p) const {
        Cell c{0, 0, 0};
        for (int k = 0; k < dims_; ++k) c[k] = static_cast<long>(std::floor(p(k) / cell_));
        return c;
    }
    static long long key(const Cell& c) {
        return ((c[0] & 0x1FFFFF) << 42) | ((c[1] & 0x1FFFFF) << 21) | (c[2] & 0x1FFFFF);
    }

    const std::vector<Segment>& segs_;
    double cell_ = 1.0;
    int dims_ = 3;
    std::unordered_map<long long, std::vector<int>> cells_;
};

double directed_hausdorff(const std::vector<Vec>& from, const PointGrid& to) {
    double d = 0.0;
    for (const Vec& p : from) d = std::max(d, to.nearest(p));
    return d;
}

double log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void require_minimal_fibers(const SubmersionModel& sub) {
    const auto audit = audit_fibers(sub, 100);
    if (!audit.minimal) {
        std::ostringstream os;
        os << "fiber audit failed: max |H_fiber| = " << audit.max_mean_curvature << " > " << audit.tolerance;
        throw Error(ErrorCode::HypothesisFailed, os.str());
    }
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

FlowPolicy fixed_mesh_policy(double horizon, double interval, double h, double safety) {
    FlowPolicy p;
    p.horizon = horizon;
    p.sample_interval = interval;
    p.target_h = h;
    p.safety = safety;
    p.remesh = false;
    p.minimal_H2 = -1.0;
    return p;
}

// Residual halves under refinement, or both levels already sit at round-off.
bool halves(double coarse, double fine) {
    constexpr double kRoundoff = 1e-12;
    return fine <= 0.5 * coarse || (coarse <= kRoundoff && fine <= kRoundoff);
}

long sample_key(double t, double interval) {
    const double k = std::round(t / interval);
    return std::abs(t - k * interval) <= 1e-9 * std::max(1.0, t) ? static_cast<long>(k) : -1;
}

}  // namespace

namespace {

std::vector<Segment> mesh_segments(const DiscreteImmersion& imm) {
    std::vector<Segment> out;
    if (imm.kind == ImmersionKind::Curve) {
        const int n = imm.size();
        for (int i = 0; i < n; ++i) out.emplace_back(imm.vertices[i], imm.vertices[(i + 1) % n]);
        return out;
    }
    for (const Triangle& t : imm.triangles)
        for (int k = 0; k < 3; ++k) {
            const int l = (k + 1) % 3;
            // Interior edges appear twice; keep one orientation.
            if (std::tie(t.v[k], t.wrap[k]) < std::tie(t.v[l], t.wrap[l]))
                out.emplace_back(imm.corner(t, k), imm.corner(t, l));
        }
    return out;
}

double directed_hausdorff(const std::vector<Vec>& from, const std::vector<Segment>& to) {
    const SegmentGrid grid(to);
    double d = 0.0;
    for (const Vec& p : from) d = std::max(d, grid.nearest(p));
    return d;
}

}  // namespace

double projected_hausdorff(const SubmersionModel& sub, const DiscreteImmersion& total,
                           const DiscreteImmersion& base) {
    std::vector<Vec> from_total;
    for (const Vec& x : dense_samples(total, 4)) from_total.push_back(project_point(sub, x));
    std::vector<Segment> total_segments;
    for (const auto& [a, b] : mesh_segments(total))
        total_segments.emplace_back(project_point(sub, a), project_point(sub, b));
    return std::max(directed_hausdorff(from_total, mesh_segments(base)),
                    directed_hausdorff(dense_samples(base), total_segments));
}

Json verdict_to_json(const Verdict& v) {
    Json j;
    j["test"] = v.test;
    j["params"] = v.params;
    j["residuals"] = v.residuals;
    j["refinement_slopes"] = v.refinement_slopes;
    j["pass"] = v.pass;
    return j;
}

double refinement_slope(double coarse, double fine) {
    if (!(fine > 0.0)) return kInf;
    return std::log2(coarse / fine);
}

double hausdorff_distance(const std::vector<Vec>& a, const std::vector<Vec>& b) {
    if (a.empty() || b.empty()) return kInf;
    const PointGrid ga(a), gb(b);
    return std::max(directed_hausdorff(a, gb), directed_hausdorff(b, ga));
}

std::vector<Vec> dense_samples(const DiscreteImmersion& imm, int per_edge) {
    std::vector<Vec> out;
    if (imm.kind == ImmersionKind::Curve) {
        const int n = imm.size();
        out.reserve(static_cast<std::size_t>(n) * per_edge);
        for (int i = 0; i < n; ++i) {
            const Vec& a = imm.vertices[i];
            const Vec& b = imm.vertices[(i + 1) % n];
            for (int k = 0; k < per_edge; ++k) {
                const double s = static_cast<double>(k) / per_edge;
                out.push_back(k == 0 ? a : project_to_space(imm.space, (1.0 - s) * a + s * b));
            }
        }
        return out;
    }
    out.reserve(imm.triangles.size() * static_cast<std::size_t>((per_edge + 1) * (per_edge + 2) / 2));
    for (const Triangle& t : imm.triangles) {
        const Vec p0 = imm.corner(t, 0), p1 = imm.corner(t, 1), p2 = imm.corner(t, 2);
        for (int i = 0; i <= per_edge; ++i)
            for (int j = 0; i + j <= per_edge; ++j) {
                const double u = static_cast<double>(i) / per_edge, v = static_cast<double>(j) / per_edge;
                out.push_back(project_to_space(imm.space, (1.0 - u - v) * p0 + u * p1 + v * p2));
            }
    }
    return out;
}

double fiber_length(const SubmersionModel& sub, const Vec& p) {
    constexpr int kSteps = 256;
    const double period = fiber_period(sub);
    double len = 0.0;
    Vec prev = p;
    for (int j = 1; j <= kSteps; ++j) {
        const Vec next = fiber_action(sub, p, period * j / kSteps);
        len += chord_length(sub.total, prev, next);
        prev = next;
    }
    return len;
}

DiscreteImmersion lift_at_resolution(const SubmersionModel& sub, const DiscreteImmersion& base, double h) {
    const double len = fiber_length(sub, fiber_point(sub, base.vertices.front()));
    const int res = std::max(8, static_cast<int>(std::ceil(len / h)));
    return lift_immersion(sub, base, res);
}

// --- commutation -----------------------------------------------------------------------

double CommutationSeries::max_distance() const {
    double m = 0.0;
    for (double d : distance) m = std::max(m, d);
    return m;
}

CommutationResult commutation_test(const SubmersionModel& sub, const BaseFactory& make_base,
                                   const CommutationOptions& opt) {
    require_minimal_fibers(sub);
    CommutationResult result;
    std::vector<double> hs{opt.h};
    if (opt.refine) hs.push_back(opt.h / 2.0);

    for (double h : hs) {
        CommutationSeries series;
        series.h = h;
        const DiscreteImmersion base = make_base(h);
        const DiscreteImmersion total = lift_at_resolution(sub, base, h);

        FlowPolicy policy = fixed_mesh_policy(opt.horizon, opt.sample_interval, h, opt.safety);
        policy.singular_diameter_factor = opt.singular_diameter_factor;

        std::map<long, DiscreteImmersion> base_states;
        const auto base_run = run_flow(base, policy, [&](const FlowState& s) {
            const long k = sample_key(s.t, opt.sample_interval);
            if (k >= 0) base_states[k] = s.imm;
        });
        series.base_fate = base_run.fate;

        FlowPolicy total_policy = policy;
        total_policy.submersion = sub;
        const auto total_run = run_flow(total, total_policy, [&](const FlowState& s) {
            const long k = sample_key(s.t, opt.sample_interval);
            const auto it = base_states.find(k);
            if (k < 0 || it == base_states.end()) return;
            series.t.push_back(s.t);
            series.distance.push_back(projected_hausdorff(sub, s.imm, it->second));
        });
        series.total_fate = total_run.fate;
        result.levels.push_back(std::move(series));
    }

    Verdict& v = result.verdict;
    v.test = "commutation";
    v.params = {{"submersion", submersion_to_json(sub)},
                {"h", opt.h},
                {"horizon", opt.horizon},
                {"sample_interval", opt.sample_interval},
                {"safety", opt.safety},
                {"refine", opt.refine},
                {"min_ratio", opt.min_ratio},
                {"abs_tol", opt.abs_tol}};
    Json levels = Json::array();
    for (const auto& s : result.levels) {
        Json l;
        l["h"] = s.h;
        l["max_distance"] = s.max_distance();
        l["samples"] = s.t.size();
        l["total_outcome"] = std::string(to_string(s.total_fate.outcome));
        l["total_t_singular"] = s.total_fate.t_singular ? Json(*s.total_fate.t_singular) : Json(nullptr);
        l["base_outcome"] = std::string(to_string(s.base_fate.outcome));
        l["base_t_singular"] = s.base_fate.t_singular ? Json(*s.base_fate.t_singular) : Json(nullptr);
        levels.push_back(l);
    }
    v.residuals["levels"] = levels;
    const double finest = result.levels.back().max_distance();
    bool pass = finest <= opt.abs_tol && !result.levels.back().t.empty();
    if (opt.refine) {
        const double coarse = result.levels.front().max_distance();
        const double ratio = finest > 0.0 ? coarse / finest : kInf;
        v.residuals["ratio"] = ratio;
        v.refinement_slopes["distance"] = refinement_slope(coarse, finest);
        pass = pass && ratio >= opt.min_ratio;
    }
    v.pass = pass;
    return result;
}

void write_commutation_csv(std::ostream& os, const CommutationResult& result) {
    os << "h,t,hausdorff\n";
    for (const auto& s : result.levels)
        for (std::size_t i = 0; i < s.t.size(); ++i)
            os << fmt(s.h) << ',' << fmt(s.t[i]) << ',' << fmt(s.distance[i]) << '\n';
}

// --- lift norm identity ----------------------------------------------------------------

double lift_norm_closed_form(const SubmersionModel& sub, double base_A2, double tangency) {
    switch (sub.kind) {
        case SubmersionKind::Hopf:
            return base_A2 + 2.0 * sub.total.curvature / std::sqrt(sub.total.variation) * tangency;
        case SubmersionKind::HeisenbergProj:
            return base_A2 + 0.5 * tangency;
        case SubmersionKind::SasakiProj: {
            // Curve in S^2: n = k = 1, the angle terms drop out.
            const double c = sub.total.curvature, r = sub.total.radius;
            return base_A2 + 0.5 * c * c * r * r;
        }
    }
    throw Error(ErrorCode::UnsupportedSpace, "no closed form for this submersion");
}

IdentityLevel lift_norm_level(const SubmersionModel& sub, const DiscreteImmersion& base, double h) {
    const auto lifted = lift_at_resolution(sub, base, h);
    const auto base_forms = fundamental_forms(base);
    const auto lift_forms = fundamental_forms(lifted);
    std::vector<double> tangency(base.size(), 0.0);
    if (sub.kind != SubmersionKind::SasakiProj) tangency = tangency_defect(base, sub);
    IdentityLevel level;
    level.h = h;
    double n = 0.0;
    for (int i = 0; i < base.size(); ++i) {
        const double a2 = base_forms.vertices[i].norm_A2;
        const double closed = lift_norm_closed_form(sub, a2, tangency[i]);
        for (int v : lifted.fiber_columns[i]) {
            const double measured = lift_forms.vertices[v].norm_A2;
            level.max_relative_residual =
                std::max(level.max_relative_residual, std::abs(measured - closed) / std::abs(closed));
            level.mean_measured += measured;
            level.mean_closed_form += closed;
            level.mean_base_A2 += a2;
            n += 1.0;
        }
    }
    level.mean_measured /= n;
    level.mean_closed_form /= n;
    level.mean_base_A2 /= n;
    return level;
}

Verdict lift_norm_identity_test(const SubmersionModel& sub, const BaseFactory& make_base, double h, double tol) {
    const auto coarse = lift_norm_level(sub, make_base(h), h);
    const auto fine = lift_norm_level(sub, make_base(h / 2.0), h / 2.0);
    Verdict v;
    v.test = "lift_norm_identity";
    v.params = {{"submersion", submersion_to_json(sub)}, {"h", h}, {"tol", tol}};
    auto level_json = [](const IdentityLevel& l) {
        return Json{{"h", l.h},
                    {"max_relative_residual", l.max_relative_residual},
                    {"mean_measured", l.mean_measured},
                    {"mean_closed_form", l.mean_closed_form},
                    {"mean_correction", l.mean_measured - l.mean_base_A2}};
    };
    v.residuals["levels"] = Json::array({level_json(coarse), level_json(fine)});
    v.refinement_slopes["relative_residual"] =
        refinement_slope(coarse.max_relative_residual, fine.max_relative_residual);
    v.pass = coarse.max_relative_residual <= tol && halves(coarse.max_relative_residual, fine.max_relative_residual);
    return v;
}

// --- isometries and invariance ---------------------------------------------------------

Verdict isometry_commutation_test(const DiscreteImmersion& imm, const Isometry& phi, const FlowPolicy& policy,
                                  double tol) {
    DiscreteImmersion moved = imm;
    for (Vec& x : moved.vertices) x = phi(x);
    const auto flowed = run_flow(imm, policy).final_state.imm;
    const auto flowed_moved = run_flow(moved, policy).final_state.imm;
    double residual = 0.0;
    if (flowed.size() != flowed_moved.size()) {
        residual = kInf;
    } else {
        for (int i = 0; i < flowed.size(); ++i)
            residual = std::max(residual, (phi(flowed.vertices[i]) - flowed_moved.vertices[i]).norm());
    }
    Verdict v;
    v.test = "isometry_commutation";
    v.params = {{"space", space_to_json(imm.space)}, {"vertices", imm.size()}, {"horizon", policy.horizon},
                {"tol", tol}};
    v.residuals["max_vertex_distance"] = residual;
    v.pass = residual <= tol;
    return v;
}

Verdict invariance_test(const SubmersionModel& sub, const DiscreteImmersion& lifted, const FlowPolicy& policy) {
    FlowPolicy p = policy;
    p.submersion = sub;
    p.remesh = false;
    const double h = lifted.mesh_size();
    double max_dt = 0.0;
    double worst_ratio = 0.0;
    double worst_defect = 0.0;
    bool ok = true;
    run_flow(lifted, p, [&](const FlowState& s) {
        max_dt = std::max(max_dt, s.last_dt);
        const double defect = invariance_defect(sub, s.imm);
        const double bound = 10.0 * (h * h + max_dt) * s.t;
        worst_defect = std::max(worst_defect, defect);
        if (s.t > 0.0) worst_ratio = std::max(worst_ratio, defect / bound);
        if (defect > bound + 1e-12) ok = false;
    });
    Verdict v;
    v.test = "invariance";
    v.params = {{"submersion", submersion_to_json(sub)}, {"h", h}, {"horizon", policy.horizon}};
    v.residuals["max_defect"] = worst_defect;
    v.residuals["max_defect_over_bound"] = worst_ratio;
    v.residuals["max_dt"] = max_dt;
    v.pass = ok;
    return v;
}

// --- canonical variation ---------------------------------------------------------------

VariationSample variation_sample(const DiscreteImmersion& base, double lambda, double h) {
    const auto sub = SubmersionModel::hopf_berger(lambda, base.space.curvature);
    const auto lifted = lift_at_resolution(sub, base, h);
    const auto base_forms = fundamental_forms(base);
    const auto forms = fundamental_forms(lifted);
    VariationSample s;
    s.lambda = lambda;
    double n = 0.0;
    for (int i = 0; i < base.size(); ++i) {
        for (int idx : lifted.fiber_columns[i]) {
            const Vec& x = lifted.vertices[idx];
            const VertexForms& f = forms.vertices[idx];
            const LocalGeometry geo(sub.total, x);
            const Mat& E = f.tangent_frame;
            // Unit vertical and horizontal directions inside the discrete tangent plane.
            const Vec vert = vertical_unit(sub, x);
            Eigen::Vector2d bv(geo.inner(vert, E.col(0)), geo.inner(vert, E.col(1)));
            bv.normalize();
            const Eigen::Vector2d bx(-bv(1), bv(0));
            double mixed2 = 0.0;
            for (const Mat& S : f.shape) {
                const double m = bx.dot(S * bv);
                mixed2 += m * m;
            }
            s.mixed += std::sqrt(mixed2);
            s.correction += f.norm_A2 - base_forms.vertices[i].norm_A2;
            n += 1.0;
        }
    }
    s.mixed /= n;
    s.correction /= n;
    return s;
}

Verdict variation_exponent_fit(const BaseFactory& make_base, const std::vector<double>& lambdas, double h,
                               std::vector<VariationSample>* samples) {
    if (lambdas.size() < 4) throw Error(ErrorCode::InvalidArgument, "need at least four lambda values");
    const auto [lo, hi] = std::minmax_element(lambdas.begin(), lambdas.end());
    if (!(*lo > 0.0) || *hi / *lo < 10.0 - 1e-12)
        throw Error(ErrorCode::InvalidArgument, "lambda grid must be positive and span a decade");
    const DiscreteImmersion base = make_base(h);
    std::vector<VariationSample> out;
    std::vector<double> xs, mixed, corr;
    for (double l : lambdas) {
        out.push_back(variation_sample(base, l, h));
        xs.push_back(l);
        mixed.push_back(out.back().mixed);
        corr.push_back(out.back().correction);
    }
    // lambda = 1 against the round sphere itself.
    const auto round = SubmersionModel::hopf(base.space.curvature);
    const auto l1 = variation_sample(base, 1.0, h);
    const auto round_lift = lift_at_resolution(round, base, h);
    const auto round_forms = fundamental_forms(round_lift);
    const auto base_forms = fundamental_forms(base);
    double round_corr = 0.0;
    double n = 0.0;
    for (int i = 0; i < base.size(); ++i)
        for (int idx : round_lift.fiber_columns[i]) {
            round_corr += round_forms.vertices[idx].norm_A2 - base_forms.vertices[i].norm_A2;
            n += 1.0;
        }
    round_corr /= n;

    const double mixed_slope = log_slope(xs, mixed);
    const double corr_slope = log_slope(xs, corr);
    Verdict v;
    v.test = "variation_exponent";
    v.params = {{"lambdas", lambdas}, {"h", h}, {"expected_mixed_slope", -0.5}, {"slope_tol", 0.02}};
    Json rows = Json::array();
    for (const auto& s : out) rows.push_back({{"lambda", s.lambda}, {"mixed", s.mixed}, {"correction", s.correction}});
    v.residuals["samples"] = rows;
    v.residuals["lambda_one_correction"] = l1.correction;
    v.residuals["round_sphere_correction"] = round_corr;
    v.residuals["lambda_one_difference"] = std::abs(l1.correction - round_corr);
    v.refinement_slopes["mixed_entry_slope"] = mixed_slope;
    v.refinement_slopes["correction_slope"] = corr_slope;
    v.pass = std::abs(mixed_slope + 0.5) <= 0.02 && std::abs(l1.correction - round_corr) <= 1e-9;
    if (samples) *samples = std::move(out);
    return v;
}

// --- mean curvature relation -----------------------------------------------------------

double mean_curvature_relation_residual(const SubmersionModel& sub, const DiscreteImmersion& base, double h) {
    const auto lifted = lift_at_resolution(sub, base, h);
    const auto base_forms = fundamental_forms(base);
    const auto forms = fundamental_forms(lifted);
    double r = 0.0;
    for (int i = 0; i < base.size(); ++i) {
        const Vec& H = base_forms.vertices[i].mean_curvature;
        for (int idx : lifted.fiber_columns[i]) {
            const Vec pushed = push_forward(sub, lifted.vertices[idx], forms.vertices[idx].mean_curvature);
            r = std::max(r, metric_norm(sub.base, base.vertices[i], pushed - H));
        }
    }
    return r;
}

Verdict mean_curvature_relation_test(const SubmersionModel& sub, const BaseFactory& make_base, double h) {
    require_minimal_fibers(sub);
    const double coarse = mean_curvature_relation_residual(sub, make_base(h), h);
    const double fine = mean_curvature_relation_residual(sub, make_base(h / 2.0), h / 2.0);
    Verdict v;
    v.test = "mean_curvature_relation";
    v.params = {{"submersion", submersion_to_json(sub)}, {"h", h}, {"tol", h}};
    v.residuals["levels"] = Json::array({Json{{"h", h}, {"max_residual", coarse}},
                                         Json{{"h", h / 2.0}, {"max_residual", fine}}});
    v.refinement_slopes["residual"] = refinement_slope(coarse, fine);
    v.pass = coarse <= h && halves(coarse, fine);
    return v;
}

// --- stationarity and the sphere circle ------------------------------------------------

Verdict stationarity_test(const DiscreteImmersion& imm, double horizon, double safety) {
    FlowState s;
    s.imm = imm;
    while (s.t < horizon) {
        const auto forms = fundamental_forms(s.imm);
        double dt = adaptive_dt_bound(s.imm.min_edge(), forms.max_A2(), safety);
        dt = std::min(dt, horizon - s.t);
        s = step_mcf(s, dt, &forms);
    }
    double moved = 0.0;
    for (int i = 0; i < imm.size(); ++i)
        moved = std::max(moved, chord_length(imm.space, imm.vertices[i], s.imm.vertices[i]));
    const double h = imm.mesh_size();
    const double rate = moved / s.t;
    Verdict v;
    v.test = "stationarity";
    v.params = {{"space", space_to_json(imm.space)}, {"h", h}, {"horizon", horizon}, {"tol", 10.0 * h * h}};
    v.residuals["max_displacement"] = moved;
    v.residuals["displacement_per_time"] = rate;
    v.residuals["steps"] = s.step_count;
    v.pass = rate <= 10.0 * h * h;
    return v;
}

double sphere_circle_radius(double c, double rho0, double t) {
    const double s = std::sqrt(c);
    auto f = [&](double r) { return -s / std::tan(s * r); };
    const int steps = std::max(1000, static_cast<int>(std::ceil(t / 1e-5)));
    const double dt = t / steps;
    double r = rho0;
    for (int i = 0; i < steps; ++i) {
        const double k1 = f(r), k2 = f(r + 0.5 * dt * k1), k3 = f(r + 0.5 * dt * k2), k4 = f(r + dt * k3);
        r += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return r;
}

Verdict sphere_circle_test(double c, double rho0, double horizon, double h, double tol) {
    const auto sphere = AmbientSpace::round_sphere(2, c);
    const double R = 1.0 / std::sqrt(c);
    auto run = [&](double hl) {
        const double len = 2.0 * kPi * R * std::sin(rho0 / R);
        FlowPolicy p;
        p.horizon = horizon;
        p.sample_interval = horizon / 20.0;
        p.target_h = hl;
        p.minimal_H2 = -1.0;
        double err = 0.0;
        run_flow(geodesic_circle(sphere, rho0, samples_for(len, hl)), p, [&](const FlowState& s) {
            double rho = 0.0;
            for (const Vec& x : s.imm.vertices) rho += R * std::acos(std::clamp(x(2) / R, -1.0, 1.0));
            rho /= s.imm.size();
            err = std::max(err, std::abs(rho - sphere_circle_radius(c, rho0, s.t)));
        });
        return err;
    };
    const double coarse = run(h);
    const double fine = run(h / 2.0);
    Verdict v;
    v.test = "sphere_circle_ode";
    v.params = {{"c", c}, {"rho0", rho0}, {"horizon", horizon}, {"h", h}, {"tol", tol}};
    v.residuals["levels"] = Json::array({Json{{"h", h}, {"max_error", coarse}},
                                         Json{{"h", h / 2.0}, {"max_error", fine}}});
    v.refinement_slopes["error"] = refinement_slope(coarse, fine);
    v.pass = fine <= tol && fine < coarse;
    return v;
}

Verdict fiber_audit_verdict(const SubmersionModel& sub, int samples, unsigned seed) {
    const auto audit = audit_fibers(sub, samples, seed);
    Verdict v;
    v.test = "fiber_audit";
    v.params = {{"submersion", submersion_to_json(sub)}, {"samples", samples}, {"seed", seed}};
    v.residuals["max_mean_curvature"] = audit.max_mean_curvature;
    v.residuals["tolerance"] = audit.tolerance;
    v.pass = audit.minimal;
    return v;
}

}  // namespace mcflab

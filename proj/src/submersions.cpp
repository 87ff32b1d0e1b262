#include "mcflab/submersions.hpp"

#include <cmath>
#include <numbers>

namespace mcflab {

namespace {

void require_same_total(const SubmersionModel& sub, const Vec& p) {
    if (p.size() != sub.total.embed_dim)
        throw Error(ErrorCode::ConstraintViolation, "point does not belong to the total space");
}

// Unnormalized vertical direction.
Vec vertical_raw(const SubmersionModel& sub, const Vec& p) {
    switch (sub.kind) {
        case SubmersionKind::Hopf:
            return hopf_j(p);
        case SubmersionKind::HeisenbergProj: {
            Vec v = Vec::Zero(sub.total.embed_dim);
            v(sub.total.embed_dim - 1) = 1.0;
            return v;
        }
        case SubmersionKind::SasakiProj: {
            Vec v = Vec::Zero(6);
            const Eigen::Vector3d pp = p.head<3>(), u = p.tail<3>();
            v.tail<3>() = pp.cross(u);
            return v;
        }
    }
    return Vec();
}

// Extension of a constant vector to a tangent field near p.
Vec tangent_field(const AmbientSpace& space, const Vec& y, const Vec& v) {
    return LocalGeometry(space, y).tangent(v);
}

Vec horizontal_part(const SubmersionModel& sub, const Vec& y, const Vec& v) {
    const Vec vert = vertical_unit(sub, y);
    const Mat g = metric_tensor(sub.total, y);
    return v - vert.dot(g * v) * vert;
}

Vec vertical_part(const SubmersionModel& sub, const Vec& y, const Vec& v) {
    const Vec vert = vertical_unit(sub, y);
    const Mat g = metric_tensor(sub.total, y);
    return vert.dot(g * v) * vert;
}

}  // namespace

std::string_view to_string(SubmersionKind kind) {
    switch (kind) {
        case SubmersionKind::Hopf: return "HOPF";
        case SubmersionKind::HeisenbergProj: return "HEISENBERG_PROJ";
        case SubmersionKind::SasakiProj: return "SASAKI_PROJ";
    }
    return "?";
}

SubmersionKind submersion_kind_from_string(std::string_view name) {
    for (auto k : {SubmersionKind::Hopf, SubmersionKind::HeisenbergProj, SubmersionKind::SasakiProj})
        if (to_string(k) == name) return k;
    throw Error(ErrorCode::ConfigError, "unknown submersion kind '" + std::string(name) + "'");
}

SubmersionModel SubmersionModel::hopf(double c) {
    return {AmbientSpace::round_sphere(3, c), AmbientSpace::fs_sphere(c), SubmersionKind::Hopf, 1};
}

SubmersionModel SubmersionModel::hopf_berger(double lambda, double c) {
    return {AmbientSpace::berger_sphere(lambda, c), AmbientSpace::fs_sphere(c),
            SubmersionKind::Hopf, 1};
}

SubmersionModel SubmersionModel::heisenberg_proj(int n) {
    return {AmbientSpace::heisenberg(n), AmbientSpace::euclidean(2 * n),
            SubmersionKind::HeisenbergProj, 1};
}

SubmersionModel SubmersionModel::sasaki_proj(double r, double c) {
    return {AmbientSpace::sasaki_bundle(r, c), AmbientSpace::round_sphere(2, c),
            SubmersionKind::SasakiProj, 1};
}

Vec project_point(const SubmersionModel& sub, const Vec& p) {
    require_on_space(sub.total, p);
    switch (sub.kind) {
        case SubmersionKind::Hopf: {
            // (sqrt c / 2) (2 Re z1 conj z2, 2 Im z1 conj z2, |z1|^2 - |z2|^2)
            const double s = 0.5 * std::sqrt(sub.total.curvature);
            Vec b(3);
            b(0) = s * 2.0 * (p(0) * p(2) + p(1) * p(3));
            b(1) = s * 2.0 * (p(1) * p(2) - p(0) * p(3));
            b(2) = s * (p(0) * p(0) + p(1) * p(1) - p(2) * p(2) - p(3) * p(3));
            return b;
        }
        case SubmersionKind::HeisenbergProj:
            return p.head(sub.base.embed_dim);
        case SubmersionKind::SasakiProj:
            return p.head<3>();
    }
    return Vec();
}

Mat projection_jacobian(const SubmersionModel& sub, const Vec& p) {
    require_same_total(sub, p);
    const int nb = sub.base.embed_dim, nt = sub.total.embed_dim;
    Mat d = Mat::Zero(nb, nt);
    switch (sub.kind) {
        case SubmersionKind::Hopf: {
            const double s = 0.5 * std::sqrt(sub.total.curvature);
            d.row(0) << p(2), p(3), p(0), p(1);
            d.row(1) << -p(3), p(2), p(1), -p(0);
            d.row(0) *= 2.0 * s;
            d.row(1) *= 2.0 * s;
            d.row(2) << p(0), p(1), -p(2), -p(3);
            d.row(2) *= 2.0 * s;
            break;
        }
        case SubmersionKind::HeisenbergProj:
        case SubmersionKind::SasakiProj:
            for (int i = 0; i < nb; ++i) d(i, i) = 1.0;
            break;
    }
    return d;
}

Vec push_forward(const SubmersionModel& sub, const Vec& p, const Vec& v) {
    return projection_jacobian(sub, p) * v;
}

Vec vertical_unit(const SubmersionModel& sub, const Vec& p) {
    require_same_total(sub, p);
    const Vec raw = vertical_raw(sub, p);
    const double n = std::sqrt(raw.dot(metric_tensor(sub.total, p) * raw));
    if (!(n > 0.0)) throw Error(ErrorCode::ConstraintViolation, "degenerate fiber direction");
    return raw / n;
}

SplitVector split(const SubmersionModel& sub, const Vec& p, const Vec& v) {
    require_same_total(sub, p);
    const Vec vert = vertical_part(sub, p, v);
    return {v - vert, vert};
}

Vec horizontal_lift(const SubmersionModel& sub, const Vec& p, const Vec& w) {
    require_on_space(sub.total, p);
    if (w.size() != sub.base.embed_dim)
        throw Error(ErrorCode::ConstraintViolation, "base vector has wrong dimension");
    if (sub.kind == SubmersionKind::HeisenbergProj) {
        // sum a_j X_j + b_j Y_j
        const int m = sub.total.complex_dim;
        Vec out = Vec::Zero(sub.total.embed_dim);
        for (int j = 0; j < 2 * m; ++j) out += w(j) * heisenberg_frame(sub.total, p, j);
        return out;
    }
    // Least squares through d(pi) restricted to the horizontal subspace.
    const LocalGeometry geo(sub.total, p);
    const Mat& basis = geo.tangent_basis();
    Mat hb(basis.rows(), basis.cols());
    for (int k = 0; k < basis.cols(); ++k) hb.col(k) = horizontal_part(sub, p, basis.col(k));
    const Mat d = projection_jacobian(sub, p) * hb;
    const Vec coeff = d.completeOrthogonalDecomposition().solve(w);
    return horizontal_part(sub, p, hb * coeff);
}

double fiber_period(const SubmersionModel& sub) {
    return sub.kind == SubmersionKind::HeisenbergProj ? 1.0 : 2.0 * std::numbers::pi;
}

Vec fiber_action(const SubmersionModel& sub, const Vec& p, double t) {
    require_same_total(sub, p);
    switch (sub.kind) {
        case SubmersionKind::Hopf:
            return std::cos(t) * p + std::sin(t) * hopf_j(p);
        case SubmersionKind::HeisenbergProj: {
            Vec q = p;
            q(q.size() - 1) += t;
            return q;
        }
        case SubmersionKind::SasakiProj: {
            // Rotation of u inside T_p S^2.
            const Eigen::Vector3d pp = p.head<3>(), u = p.tail<3>();
            const Eigen::Vector3d w = pp.cross(u) / pp.norm();
            Vec q = p;
            q.tail<3>() = std::cos(t) * u + std::sin(t) * w;
            return q;
        }
    }
    return p;
}

Vec fiber_point(const SubmersionModel& sub, const Vec& b) {
    require_on_space(sub.base, b);
    switch (sub.kind) {
        case SubmersionKind::Hopf: {
            const double radius = 1.0 / std::sqrt(sub.total.curvature);
            const Vec n = b / b.norm();
            Vec x(4);
            if (n(2) > -0.5) {
                // z1 real and positive, conj z2 = R (n0 + i n1) / (2 cos(alpha/2))
                const double ch = std::sqrt(0.5 * (1.0 + n(2)));
                x << radius * ch, 0.0, radius * n(0) / (2.0 * ch), -radius * n(1) / (2.0 * ch);
            } else {
                // z2 real and positive, z1 = R (n0 + i n1) / (2 sin(alpha/2))
                const double sh = std::sqrt(0.5 * (1.0 - n(2)));
                x << radius * n(0) / (2.0 * sh), radius * n(1) / (2.0 * sh), radius * sh, 0.0;
            }
            return project_to_space(sub.total, x);
        }
        case SubmersionKind::HeisenbergProj: {
            Vec x = Vec::Zero(sub.total.embed_dim);
            x.head(b.size()) = b;
            return x;
        }
        case SubmersionKind::SasakiProj: {
            const Eigen::Vector3d pp = b.head<3>();
            const Eigen::Vector3d n = pp.normalized();
            int axis = 0;
            for (int i = 1; i < 3; ++i)
                if (std::abs(n(i)) < std::abs(n(axis))) axis = i;
            Eigen::Vector3d e = Eigen::Vector3d::Unit(axis);
            e -= e.dot(n) * n;
            Vec x(6);
            x.head<3>() = pp;
            x.tail<3>() = sub.total.radius * e.normalized();
            return x;
        }
    }
    return Vec();
}

std::vector<Vec> fiber_sample(const SubmersionModel& sub, const Vec& b, int count) {
    if (count < 2) throw Error(ErrorCode::InvalidArgument, "fiber_sample needs count >= 2");
    const Vec x0 = fiber_point(sub, b);
    const double period = fiber_period(sub);
    std::vector<Vec> out;
    out.reserve(count);
    for (int k = 0; k < count; ++k) out.push_back(fiber_action(sub, x0, period * k / count));
    return out;
}

Vec fiber_mean_curvature(const SubmersionModel& sub, const Vec& p) {
    require_on_space(sub.total, p);
    // Five-point stencil on the fiber curve t -> fiber_action(p, t).
    const double h = 1e-3;
    const Vec fm2 = fiber_action(sub, p, -2 * h), fm1 = fiber_action(sub, p, -h);
    const Vec fp1 = fiber_action(sub, p, h), fp2 = fiber_action(sub, p, 2 * h);
    const Vec vel = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
    const Vec acc = (-fm2 + 16.0 * fm1 - 30.0 * p + 16.0 * fp1 - fp2) / (12.0 * h * h);
    const LocalGeometry geo(sub.total, p);
    const Vec cov = geo.tangent(acc + geo.christoffel(vel, vel));
    const double speed2 = geo.inner(vel, vel);
    return (cov - geo.inner(cov, vel) / speed2 * vel) / speed2;
}

Vec oneill_A(const SubmersionModel& sub, const Vec& p, const Vec& e, const Vec& f) {
    require_on_space(sub.total, p);
    require_tangent(sub.total, p, e);
    require_tangent(sub.total, p, f);
    const Vec he = split(sub, p, e).horizontal;
    const VectorField hf = [&](const Vec& y) {
        return horizontal_part(sub, y, tangent_field(sub.total, y, f));
    };
    const VectorField vf = [&](const Vec& y) {
        return vertical_part(sub, y, tangent_field(sub.total, y, f));
    };
    const Vec a = covariant_derivative(sub.total, hf, {p, he});
    const Vec b = covariant_derivative(sub.total, vf, {p, he});
    return vertical_part(sub, p, a) + horizontal_part(sub, p, b);
}

Vec oneill_T(const SubmersionModel& sub, const Vec& p, const Vec& e, const Vec& f) {
    require_on_space(sub.total, p);
    require_tangent(sub.total, p, e);
    require_tangent(sub.total, p, f);
    const Vec ve = split(sub, p, e).vertical;
    const VectorField hf = [&](const Vec& y) {
        return horizontal_part(sub, y, tangent_field(sub.total, y, f));
    };
    const VectorField vf = [&](const Vec& y) {
        return vertical_part(sub, y, tangent_field(sub.total, y, f));
    };
    const Vec a = covariant_derivative(sub.total, vf, {p, ve});
    const Vec b = covariant_derivative(sub.total, hf, {p, ve});
    return horizontal_part(sub, p, a) + vertical_part(sub, p, b);
}

double fiber_tolerance(SubmersionKind kind) {
    return kind == SubmersionKind::HeisenbergProj ? 1e-8 : 1e-6;
}

FiberAudit audit_fibers(const SubmersionModel& sub, int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    FiberAudit audit;
    audit.kind = sub.kind;
    audit.samples = samples;
    audit.tolerance = fiber_tolerance(sub.kind);
    for (int s = 0; s < samples; ++s) {
        const Vec p = random_point(sub.total, rng);
        const Vec h = fiber_mean_curvature(sub, p);
        audit.max_mean_curvature =
            std::max(audit.max_mean_curvature, LocalGeometry(sub.total, p).norm(h));
    }
    audit.minimal = audit.max_mean_curvature <= audit.tolerance;
    return audit;
}

}  // namespace mcflab

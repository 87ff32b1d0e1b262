#include "mcflab/spaces.hpp"

#include <algorithm>
#include <cmath>

namespace mcflab {

namespace {

struct Tally {
    std::vector<ConnectionTableItem> items;

    void add(const std::string& name, double residual) {
        auto it = std::find_if(items.begin(), items.end(),
                               [&](const ConnectionTableItem& i) { return i.name == name; });
        if (it == items.end()) {
            items.push_back({name, 0.0, false});
            it = items.end() - 1;
        }
        it->max_residual = std::max(it->max_residual, residual);
    }

    ConnectionTableReport finish(int samples) {
        ConnectionTableReport report;
        report.samples = samples;
        report.pass = true;
        for (auto& item : items) {
            item.pass = item.max_residual <= kConnectionTableTolerance;
            report.pass = report.pass && item.pass;
            report.max_residual = std::max(report.max_residual, item.max_residual);
        }
        report.items = std::move(items);
        return report;
    }
};

ConnectionTableReport heisenberg_table(const AmbientSpace& space, int samples,
                                       std::mt19937_64& rng) {
    const int m = space.complex_dim;
    const int frames = 2 * m + 1;
    const int v_index = 2 * m;
    Tally tally;
    std::normal_distribution<double> normal;
    for (int s = 0; s < samples; ++s) {
        const Vec x = random_point(space, rng);
        const LocalGeometry geo(space, x);
        auto frame = [&](int i) { return heisenberg_frame(space, x, i); };
        for (int a = 0; a < frames; ++a) {
            for (int b = 0; b < frames; ++b) {
                const VectorField field = [&space, b](const Vec& y) {
                    return heisenberg_frame(space, y, b);
                };
                const Vec lhs = covariant_derivative(space, field, {x, frame(a)});
                Vec rhs = Vec::Zero(space.embed_dim);
                std::string row = "zero pairs";
                const bool a_is_x = a < m, a_is_y = a >= m && a < v_index;
                const bool b_is_x = b < m, b_is_y = b >= m && b < v_index;
                if (a_is_x && b == a + m) {
                    rhs = 0.5 * frame(v_index);
                    row = "nabla_X Y = 1/2 V";
                } else if (a_is_y && b == a - m) {
                    rhs = -0.5 * frame(v_index);
                    row = "nabla_Y X = -1/2 V";
                } else if ((a_is_x && b == v_index) || (a == v_index && b_is_x)) {
                    const int j = a_is_x ? a : b;
                    rhs = -0.5 * frame(j + m);
                    row = "nabla_X V = nabla_V X = -1/2 Y";
                } else if ((a_is_y && b == v_index) || (a == v_index && b_is_y)) {
                    const int j = a_is_y ? a : b;
                    rhs = 0.5 * frame(j - m);
                    row = "nabla_Y V = nabla_V Y = 1/2 X";
                } else if (a == v_index && b == v_index) {
                    row = "nabla_V V = 0";
                }
                tally.add(row, geo.norm(lhs - rhs));
            }
        }
        // Horizontal form of the same table: nabla_Z V = nabla_V Z = -1/2 J Z.
        Vec coeffs(frames - 1);
        for (int i = 0; i < coeffs.size(); ++i) coeffs(i) = normal(rng);
        Vec z = Vec::Zero(space.embed_dim);
        for (int i = 0; i < frames - 1; ++i) z += coeffs(i) * frame(i);
        const VectorField vfield = [&space](const Vec& y) {
            return heisenberg_frame(space, y, 2 * space.complex_dim);
        };
        const VectorField zfield = [&space, coeffs](const Vec& y) {
            Vec out = Vec::Zero(space.embed_dim);
            for (int i = 0; i < coeffs.size(); ++i) out += coeffs(i) * heisenberg_frame(space, y, i);
            return out;
        };
        const Vec jz = heisenberg_j(space, x, z);
        tally.add("nabla_Z V = -1/2 J Z",
                  geo.norm(covariant_derivative(space, vfield, {x, z}) + 0.5 * jz));
        tally.add("nabla_V Z = -1/2 J Z",
                  geo.norm(covariant_derivative(space, zfield, {x, frame(v_index)}) + 0.5 * jz));
    }
    return tally.finish(samples);
}

// Smooth tangent field on S^2(c), extended to R^3 by the radial projector.
struct BaseField {
    Eigen::Matrix3d a;
    Eigen::Vector3d b;

    [[nodiscard]] Eigen::Vector3d operator()(const Eigen::Vector3d& p) const {
        const Eigen::Vector3d w = a * p + b;
        return w - w.dot(p) / p.squaredNorm() * p;
    }
};

Eigen::Vector3d base_covariant(const BaseField& x_field, const BaseField& y_field,
                               const Eigen::Vector3d& p) {
    const Eigen::Vector3d dir = x_field(p);
    const double h = kFieldStep;
    const Eigen::Vector3d d = (-y_field(p + 2 * h * dir) + 8.0 * y_field(p + h * dir) -
                               8.0 * y_field(p - h * dir) + y_field(p - 2 * h * dir)) /
                              (12.0 * h);
    return d - d.dot(p) / p.squaredNorm() * p;
}

ConnectionTableReport sasaki_table(const AmbientSpace& space, int samples, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    const double c = space.curvature;
    const double r = space.radius;
    auto random_field = [&]() {
        BaseField f;
        for (int i = 0; i < 3; ++i) {
            f.b(i) = normal(rng);
            for (int j = 0; j < 3; ++j) f.a(i, j) = normal(rng);
        }
        return f;
    };
    auto to_vec = [](const Eigen::Vector3d& v) {
        Vec out(3);
        out = v;
        return out;
    };
    auto hlift_field = [&space, to_vec](const BaseField& f) {
        return VectorField([&space, f, to_vec](const Vec& y) {
            return sasaki_horizontal_lift(space, y, to_vec(f(y.head<3>())));
        });
    };
    auto tlift_field = [&space, to_vec](const BaseField& f) {
        return VectorField([&space, f, to_vec](const Vec& y) {
            return sasaki_tangent_lift(space, y, to_vec(f(y.head<3>())));
        });
    };

    Tally tally;
    for (int s = 0; s < samples; ++s) {
        const Vec x = random_point(space, rng);
        const LocalGeometry geo(space, x);
        const Eigen::Vector3d p = x.head<3>();
        const Vec u = x.tail<3>();
        const BaseField xf = random_field(), yf = random_field();
        const Vec X = to_vec(xf(p)), Y = to_vec(yf(p));
        const Vec nabla_xy = to_vec(base_covariant(xf, yf, p));
        const Vec xh = sasaki_horizontal_lift(space, x, X);
        const Vec xt = sasaki_tangent_lift(space, x, X);

        const Vec lhs1 = covariant_derivative(space, hlift_field(yf), {x, xh});
        const Vec rhs1 = sasaki_horizontal_lift(space, x, nabla_xy) -
                         0.5 * sasaki_tangent_lift(space, x, base_sphere_curvature(c, X, Y, u));
        tally.add("1: nabla_Xh Yh", geo.norm(lhs1 - rhs1));

        const Vec lhs2 = covariant_derivative(space, tlift_field(yf), {x, xh});
        const Vec rhs2 = sasaki_tangent_lift(space, x, nabla_xy) +
                         0.5 * sasaki_horizontal_lift(space, x, base_sphere_curvature(c, u, Y, X));
        tally.add("2: nabla_Xh Yt", geo.norm(lhs2 - rhs2));

        const Vec lhs3 = covariant_derivative(space, hlift_field(yf), {x, xt});
        const Vec rhs3 =
            0.5 * sasaki_horizontal_lift(space, x, base_sphere_curvature(c, u, X, Y));
        tally.add("3: nabla_Xt Yh", geo.norm(lhs3 - rhs3));

        const Vec lhs4 = covariant_derivative(space, tlift_field(yf), {x, xt});
        const Vec rhs4 = -(u.dot(Y) / (r * r)) * xt;
        tally.add("4: nabla_Xt Yt", geo.norm(lhs4 - rhs4));
    }
    return tally.finish(samples);
}

}  // namespace

ConnectionTableReport validate_connection_tables(const AmbientSpace& space, int samples,
                                                 std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    switch (space.kind) {
        case SpaceKind::Heisenberg:
            return heisenberg_table(space, samples, rng);
        case SpaceKind::SasakiBundle:
            return sasaki_table(space, samples, rng);
        default:
            throw Error(ErrorCode::UnsupportedSpace,
                        "no connection table for " + std::string(to_string(space.kind)));
    }
}

}  // namespace mcflab

#include "mcflab/spaces.hpp"

#include "mcflab/dual.hpp"

#include <cmath>
#include <sstream>

namespace mcflab {

namespace {

// Metric tensor of the Cartesian model, row-major N x N, on any scalar type.
template <class T>
void metric_kernel(const AmbientSpace& s, const T* x, T* g) {
    const int n = s.embed_dim;
    for (int i = 0; i < n * n; ++i) g[i] = T(0.0);
    switch (s.kind) {
        case SpaceKind::Euclidean:
        case SpaceKind::RoundSphere:
        case SpaceKind::FsSphere:
            for (int i = 0; i < n; ++i) g[i * n + i] = T(1.0);
            break;
        case SpaceKind::BergerSphere: {
            // I + (lambda - 1) (Jx)(Jx)^T / |x|^2
            const T jx[4] = {-x[1], x[0], -x[3], x[2]};
            T r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
            T scale = T(s.variation - 1.0) / r2;
            for (int i = 0; i < 4; ++i) {
                for (int j = 0; j < 4; ++j) g[i * 4 + j] = scale * jx[i] * jx[j];
                g[i * 4 + i] += T(1.0);
            }
            break;
        }
        case SpaceKind::Heisenberg: {
            // dx^2 + dy^2 + theta (x) theta, theta = dz + 1/2 sum (y_j dx_j - x_j dy_j)
            const int m = s.complex_dim;
            T theta[kMaxDim];
            for (int j = 0; j < m; ++j) {
                theta[j] = T(0.5) * x[m + j];
                theta[m + j] = T(-0.5) * x[j];
            }
            theta[2 * m] = T(1.0);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) g[i * n + j] = theta[i] * theta[j];
            for (int i = 0; i < 2 * m; ++i) g[i * n + i] += T(1.0);
            break;
        }
        case SpaceKind::SasakiBundle: {
            // |a|^2 + |b + c <a,u> p|^2 for a tangent vector (a, b) at (p, u).
            const T* p = x;
            const T* u = x + 3;
            const T c(s.curvature);
            T p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    g[i * 6 + j] = c * c * p2 * u[i] * u[j];
                    g[i * 6 + (j + 3)] = c * u[i] * p[j];
                    g[(i + 3) * 6 + j] = c * p[i] * u[j];
                }
                g[i * 6 + i] += T(1.0);
                g[(i + 3) * 6 + (i + 3)] = T(1.0);
            }
            break;
        }
    }
}

Mat eval_metric(const AmbientSpace& s, const Vec& x) {
    const int n = s.embed_dim;
    double buf[kMaxDim * kMaxDim];
    metric_kernel<double>(s, x.data(), buf);
    Mat g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = buf[i * n + j];
    return g;
}

// Returns (d/da)(d/db) G at x for seed directions a and b, plus the first
// derivatives along a and b.
struct MetricDerivs {
    Mat along_a;
    Mat along_b;
    Mat mixed;
};

MetricDerivs eval_metric_derivs(const AmbientSpace& s, const Vec& x, const Vec& a, const Vec& b) {
    const int n = s.embed_dim;
    HyperDual xs[kMaxDim];
    for (int i = 0; i < n; ++i) xs[i] = HyperDual(x(i), a(i), b(i), 0.0);
    HyperDual buf[kMaxDim * kMaxDim];
    metric_kernel<HyperDual>(s, xs, buf);
    MetricDerivs out{Mat(n, n), Mat(n, n), Mat(n, n)};
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            out.along_a(i, j) = buf[i * n + j].d1;
            out.along_b(i, j) = buf[i * n + j].d2;
            out.mixed(i, j) = buf[i * n + j].d12;
        }
    }
    return out;
}

Vec unit(int n, int i) {
    Vec e = Vec::Zero(n);
    e(i) = 1.0;
    return e;
}

void check_positive(double value, const char* name) {
    if (!(value > 0.0) || !std::isfinite(value))
        throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be positive");
}

double sq(double v) { return v * v; }

}  // namespace

std::string_view to_string(SpaceKind kind) {
    switch (kind) {
        case SpaceKind::Euclidean: return "EUCLIDEAN";
        case SpaceKind::RoundSphere: return "ROUND_SPHERE";
        case SpaceKind::BergerSphere: return "BERGER_SPHERE";
        case SpaceKind::FsSphere: return "FS_SPHERE";
        case SpaceKind::Heisenberg: return "HEISENBERG";
        case SpaceKind::SasakiBundle: return "SASAKI_BUNDLE";
    }
    return "UNKNOWN";
}

SpaceKind space_kind_from_string(std::string_view name) {
    for (auto k : {SpaceKind::Euclidean, SpaceKind::RoundSphere, SpaceKind::BergerSphere,
                   SpaceKind::FsSphere, SpaceKind::Heisenberg, SpaceKind::SasakiBundle}) {
        if (to_string(k) == name) return k;
    }
    throw Error(ErrorCode::ConfigError, "unknown space kind '" + std::string(name) + "'");
}

AmbientSpace AmbientSpace::euclidean(int n) {
    if (n < 1 || n > kMaxDim) throw Error(ErrorCode::InvalidArgument, "euclidean dimension");
    AmbientSpace s;
    s.kind = SpaceKind::Euclidean;
    s.dim = n;
    s.embed_dim = n;
    return s;
}

AmbientSpace AmbientSpace::round_sphere(int n, double c) {
    if (n < 1 || n + 1 > kMaxDim) throw Error(ErrorCode::InvalidArgument, "sphere dimension");
    check_positive(c, "c");
    AmbientSpace s;
    s.kind = SpaceKind::RoundSphere;
    s.dim = n;
    s.embed_dim = n + 1;
    s.curvature = c;
    return s;
}

AmbientSpace AmbientSpace::berger_sphere(double lambda, double c) {
    check_positive(lambda, "lambda");
    check_positive(c, "c");
    AmbientSpace s;
    s.kind = SpaceKind::BergerSphere;
    s.dim = 3;
    s.embed_dim = 4;
    s.curvature = c;
    s.variation = lambda;
    return s;
}

AmbientSpace AmbientSpace::fs_sphere(double c) {
    check_positive(c, "c");
    AmbientSpace s;
    s.kind = SpaceKind::FsSphere;
    s.dim = 2;
    s.embed_dim = 3;
    s.curvature = c;
    return s;
}

AmbientSpace AmbientSpace::heisenberg(int n) {
    if (n < 1 || 2 * n + 1 > kMaxDim) throw Error(ErrorCode::InvalidArgument, "heisenberg n");
    AmbientSpace s;
    s.kind = SpaceKind::Heisenberg;
    s.dim = 2 * n + 1;
    s.embed_dim = 2 * n + 1;
    s.complex_dim = n;
    return s;
}

AmbientSpace AmbientSpace::sasaki_bundle(double r, double c) {
    check_positive(r, "r");
    check_positive(c, "c");
    AmbientSpace s;
    s.kind = SpaceKind::SasakiBundle;
    s.dim = 3;
    s.embed_dim = 6;
    s.curvature = c;
    s.radius = r;
    return s;
}

int AmbientSpace::constraint_count() const { return embed_dim - dim; }

double AmbientSpace::sphere_radius() const {
    switch (kind) {
        case SpaceKind::RoundSphere:
        case SpaceKind::BergerSphere:
            return 1.0 / std::sqrt(curvature);
        case SpaceKind::FsSphere:
            return 0.5 / std::sqrt(curvature);
        case SpaceKind::SasakiBundle:
            return 1.0 / std::sqrt(curvature);
        default:
            throw Error(ErrorCode::UnsupportedSpace, "space has no sphere radius");
    }
}

Vec constraint_values(const AmbientSpace& s, const Vec& x) {
    switch (s.kind) {
        case SpaceKind::RoundSphere:
        case SpaceKind::BergerSphere:
        case SpaceKind::FsSphere: {
            Vec out(1);
            out(0) = x.squaredNorm() - sq(s.sphere_radius());
            return out;
        }
        case SpaceKind::SasakiBundle: {
            auto p = x.head<3>();
            auto u = x.tail<3>();
            Vec out(3);
            out(0) = p.squaredNorm() - 1.0 / s.curvature;
            out(1) = p.dot(u);
            out(2) = u.squaredNorm() - sq(s.radius);
            return out;
        }
        default:
            return Vec(0);
    }
}

Mat constraint_jacobian(const AmbientSpace& s, const Vec& x) {
    const int n = s.embed_dim;
    switch (s.kind) {
        case SpaceKind::RoundSphere:
        case SpaceKind::BergerSphere:
        case SpaceKind::FsSphere: {
            Mat c(1, n);
            c.row(0) = 2.0 * x.transpose();
            return c;
        }
        case SpaceKind::SasakiBundle: {
            Mat c = Mat::Zero(3, 6);
            c.block<1, 3>(0, 0) = 2.0 * x.head<3>().transpose();
            c.block<1, 3>(1, 0) = x.tail<3>().transpose();
            c.block<1, 3>(1, 3) = x.head<3>().transpose();
            c.block<1, 3>(2, 3) = 2.0 * x.tail<3>().transpose();
            return c;
        }
        default:
            return Mat(0, n);
    }
}

double constraint_hessian(const AmbientSpace& s, int i, const Vec& v, const Vec& w) {
    switch (s.kind) {
        case SpaceKind::RoundSphere:
        case SpaceKind::BergerSphere:
        case SpaceKind::FsSphere:
            return 2.0 * v.dot(w);
        case SpaceKind::SasakiBundle:
            if (i == 0) return 2.0 * v.head<3>().dot(w.head<3>());
            if (i == 1) return v.head<3>().dot(w.tail<3>()) + v.tail<3>().dot(w.head<3>());
            return 2.0 * v.tail<3>().dot(w.tail<3>());
        default:
            return 0.0;
    }
}

Vec project_to_space(const AmbientSpace& s, const Vec& x) {
    switch (s.kind) {
        case SpaceKind::RoundSphere:
        case SpaceKind::BergerSphere:
        case SpaceKind::FsSphere: {
            const double nrm = x.norm();
            if (nrm == 0.0) throw Error(ErrorCode::ConstraintViolation, "cannot project origin");
            return x * (s.sphere_radius() / nrm);
        }
        case SpaceKind::SasakiBundle: {
            Vec out = x;
            Eigen::Vector3d p = x.head<3>();
            Eigen::Vector3d u = x.tail<3>();
            if (p.norm() == 0.0) throw Error(ErrorCode::ConstraintViolation, "zero base point");
            p *= s.sphere_radius() / p.norm();
            u -= u.dot(p) / p.squaredNorm() * p;
            if (u.norm() == 0.0) throw Error(ErrorCode::ConstraintViolation, "zero fiber vector");
            u *= s.radius / u.norm();
            out.head<3>() = p;
            out.tail<3>() = u;
            return out;
        }
        default:
            return x;
    }
}

void require_on_space(const AmbientSpace& s, const Vec& x, double tol) {
    if (x.size() != s.embed_dim) {
        std::ostringstream os;
        os << "point has " << x.size() << " coordinates, model needs " << s.embed_dim;
        throw Error(ErrorCode::ConstraintViolation, os.str());
    }
    const Vec r = constraint_values(s, x);
    for (int i = 0; i < r.size(); ++i) {
        if (!(std::abs(r(i)) <= tol * std::max(1.0, x.squaredNorm()))) {
            std::ostringstream os;
            os << "constraint " << i << " residual " << r(i) << " on " << to_string(s.kind);
            throw Error(ErrorCode::ConstraintViolation, os.str());
        }
    }
}

void require_tangent(const AmbientSpace& s, const Vec& x, const Vec& v, double tol) {
    if (v.size() != s.embed_dim) throw Error(ErrorCode::ConstraintViolation, "vector size");
    const Mat c = constraint_jacobian(s, x);
    // The Sasaki formula accepts tangent lifts along u (third constraint) since
    // those have zero length under the lift metric.
    const int rows = s.kind == SpaceKind::SasakiBundle ? 2 : static_cast<int>(c.rows());
    for (int i = 0; i < rows; ++i) {
        const double defect = std::abs(c.row(i).dot(v)) / std::max(1.0, c.row(i).norm());
        if (defect > tol * std::max(1.0, v.norm())) {
            std::ostringstream os;
            os << "vector not tangent (constraint " << i << " defect " << defect << ")";
            throw Error(ErrorCode::ConstraintViolation, os.str());
        }
    }
}

Mat metric_tensor(const AmbientSpace& s, const Vec& x) { return eval_metric(s, x); }

double metric_at(const AmbientSpace& s, const Vec& x, const Vec& v, const Vec& w) {
    require_on_space(s, x);
    require_tangent(s, x, v);
    require_tangent(s, x, w);
    if (s.kind == SpaceKind::SasakiBundle) {
        Eigen::Vector3d p = x.head<3>(), u = x.tail<3>();
        Eigen::Vector3d a = v.head<3>(), a2 = w.head<3>();
        Eigen::Vector3d b = v.tail<3>() + s.curvature * a.dot(u) * p;
        Eigen::Vector3d b2 = w.tail<3>() + s.curvature * a2.dot(u) * p;
        return a.dot(a2) + b.dot(b2) - b.dot(u) * b2.dot(u) / sq(s.radius);
    }
    return v.dot(eval_metric(s, x) * w);
}

double metric_norm(const AmbientSpace& s, const Vec& x, const Vec& v) {
    return std::sqrt(std::max(0.0, metric_at(s, x, v, v)));
}

LocalGeometry::LocalGeometry(const AmbientSpace& space, const Vec& x) : space_(space), x_(x) {
    const int n = space.embed_dim;
    g_ = eval_metric(space, x);
    g_inv_ = g_.ldlt().solve(Mat::Identity(n, n));
    const bool flat_metric = space.kind == SpaceKind::Euclidean || space.kind == SpaceKind::RoundSphere ||
                             space.kind == SpaceKind::FsSphere;
    for (int k = 0; k < n; ++k) {
        if (flat_metric) {
            dg_[k] = Mat::Zero(n, n);
            continue;
        }
        const Vec e = unit(n, k);
        dg_[k] = eval_metric_derivs(space, x, e, Vec::Zero(n)).along_a;
    }
    jac_ = constraint_jacobian(space, x);
    projector_ = Mat::Identity(n, n);
    Mat raw_basis;
    if (jac_.rows() > 0) {
        const Mat schur = jac_ * g_inv_ * jac_.transpose();
        schur_inv_ = schur.ldlt().solve(Mat::Identity(schur.rows(), schur.cols()));
        projector_ -= g_inv_ * jac_.transpose() * schur_inv_ * jac_;
        Eigen::JacobiSVD<Mat> svd(jac_, Eigen::ComputeFullV);
        raw_basis = svd.matrixV().rightCols(n - jac_.rows());
    } else {
        raw_basis = Mat::Identity(n, n);
    }
    // G-orthonormalize: B L^-T with B^T G B = L L^T.
    const Mat gram = raw_basis.transpose() * g_ * raw_basis;
    Eigen::LLT<Mat> llt(gram);
    const Mat l = llt.matrixL();
    basis_ = raw_basis * l.transpose().triangularView<Eigen::Upper>().solve(
                             Mat::Identity(gram.rows(), gram.cols()));
}

double LocalGeometry::norm(const Vec& v) const { return std::sqrt(std::max(0.0, inner(v, v))); }

Vec LocalGeometry::christoffel(const Vec& v, const Vec& w) const {
    const int n = space_.embed_dim;
    if (space_.kind == SpaceKind::Euclidean || space_.kind == SpaceKind::RoundSphere ||
        space_.kind == SpaceKind::FsSphere)
        return Vec::Zero(n);
    Mat dgv = Mat::Zero(n, n), dgw = Mat::Zero(n, n);
    Vec t(n);
    for (int k = 0; k < n; ++k) {
        dgv += v(k) * dg_[k];
        dgw += w(k) * dg_[k];
        t(k) = v.dot(dg_[k] * w);
    }
    return 0.5 * g_inv_ * (dgv * w + dgw * v - t);
}

Vec LocalGeometry::levi_civita(const Vec& dF, const Vec& v, const Vec& F) const {
    return projector_ * (dF + christoffel(v, F));
}

Vec LocalGeometry::constraint_second_form(const Vec& v, const Vec& w) const {
    const int n = space_.embed_dim;
    if (jac_.rows() == 0) return Vec::Zero(n);
    Vec rhs = jac_ * christoffel(v, w);
    for (int i = 0; i < rhs.size(); ++i) rhs(i) -= constraint_hessian(space_, i, v, w);
    return g_inv_ * jac_.transpose() * (schur_inv_ * rhs);
}

Vec LocalGeometry::geodesic_acceleration(const Vec& v) const {
    return -christoffel(v, v) + constraint_second_form(v, v);
}

Vec covariant_derivative(const AmbientSpace& space, const VectorField& field,
                         const TangentVector& direction) {
    const Vec& x = direction.base;
    const Vec& v = direction.comp;
    LocalGeometry geo(space, x);
    const Vec f0 = field(x);
    if (f0.size() != space.embed_dim)
        throw Error(ErrorCode::StencilError, "field has wrong dimension");
    const double vn = v.norm();
    if (vn == 0.0) return Vec::Zero(space.embed_dim);
    const Vec d = v / vn;
    const double h = kFieldStep;
    // Fourth-order central stencil along the direction.
    const Vec df = (-field(x + 2 * h * d) + 8.0 * field(x + h * d) - 8.0 * field(x - h * d) +
                    field(x - 2 * h * d)) /
                   (12.0 * h) * vn;
    if (!df.allFinite()) throw Error(ErrorCode::StencilError, "field not differentiable");
    return geo.levi_civita(df, v, f0);
}

Vec covariant_derivative_along(const AmbientSpace& space, const std::vector<Vec>& path,
                               const std::vector<Vec>& field, double dt, std::size_t index) {
    const std::size_t m = path.size();
    if (m < 3 || field.size() != m || index >= m || !(dt > 0.0))
        throw Error(ErrorCode::StencilError, "need at least three equispaced samples");
    Vec vel, df;
    if (index == 0) {
        vel = (-3.0 * path[0] + 4.0 * path[1] - path[2]) / (2.0 * dt);
        df = (-3.0 * field[0] + 4.0 * field[1] - field[2]) / (2.0 * dt);
    } else if (index == m - 1) {
        vel = (3.0 * path[m - 1] - 4.0 * path[m - 2] + path[m - 3]) / (2.0 * dt);
        df = (3.0 * field[m - 1] - 4.0 * field[m - 2] + field[m - 3]) / (2.0 * dt);
    } else {
        vel = (path[index + 1] - path[index - 1]) / (2.0 * dt);
        df = (field[index + 1] - field[index - 1]) / (2.0 * dt);
    }
    LocalGeometry geo(space, path[index]);
    return geo.levi_civita(df, geo.tangent(vel), field[index]);
}

namespace {

// Ambient curvature R^G(X,Y)Z of (R^N, G) from exact metric derivatives.
Vec ambient_curvature(const AmbientSpace& s, const LocalGeometry& geo, const Vec& X, const Vec& Y,
                      const Vec& Z) {
    const int n = s.embed_dim;
    const Vec& x = geo.point();
    const Mat& g = geo.metric();
    const Mat g_inv = g.ldlt().solve(Mat::Identity(n, n));

    // d/dX of Gamma(Y, Z) with Y, Z held constant.
    auto directional = [&](const Vec& dir, const Vec& a, const Vec& b) {
        std::array<Mat, kMaxDim> dk;   // d_k G
        std::array<Mat, kMaxDim> ddk;  // d_dir d_k G
        Mat d_dir;
        for (int k = 0; k < n; ++k) {
            MetricDerivs md = eval_metric_derivs(s, x, dir, unit(n, k));
            d_dir = md.along_a;
            dk[k] = md.along_b;
            ddk[k] = md.mixed;
        }
        Mat dga = Mat::Zero(n, n), dgb = Mat::Zero(n, n);
        Mat ddga = Mat::Zero(n, n), ddgb = Mat::Zero(n, n);
        Vec t(n), dt(n);
        for (int k = 0; k < n; ++k) {
            dga += a(k) * dk[k];
            dgb += b(k) * dk[k];
            ddga += a(k) * ddk[k];
            ddgb += b(k) * ddk[k];
            t(k) = a.dot(dk[k] * b);
            dt(k) = a.dot(ddk[k] * b);
        }
        const Vec rhs = dga * b + dgb * a - t;
        const Vec drhs = ddga * b + ddgb * a - dt;
        return Vec(0.5 * (-g_inv * d_dir * g_inv * rhs + g_inv * drhs));
    };

    return directional(X, Y, Z) - directional(Y, X, Z) + geo.christoffel(X, geo.christoffel(Y, Z)) -
           geo.christoffel(Y, geo.christoffel(X, Z));
}

}  // namespace

double riemann_at(const AmbientSpace& space, const Vec& x, const Vec& X, const Vec& Y,
                  const Vec& Z, const Vec& W) {
    require_on_space(space, x);
    for (const Vec* v : {&X, &Y, &Z, &W}) require_tangent(space, x, *v);
    switch (space.kind) {
        case SpaceKind::Euclidean:
            return 0.0;
        case SpaceKind::RoundSphere:
            return space.curvature * (Y.dot(Z) * X.dot(W) - X.dot(Z) * Y.dot(W));
        default:
            break;
    }
    LocalGeometry geo(space, x);
    const double ambient = geo.inner(ambient_curvature(space, geo, X, Y, Z), W);
    const Vec ii_xw = geo.constraint_second_form(X, W), ii_yz = geo.constraint_second_form(Y, Z);
    const Vec ii_xz = geo.constraint_second_form(X, Z), ii_yw = geo.constraint_second_form(Y, W);
    return ambient + geo.inner(ii_xw, ii_yz) - geo.inner(ii_xz, ii_yw);
}

double sectional_curvature(const AmbientSpace& space, const Vec& x, const Vec& X, const Vec& Y) {
    const Mat g = metric_tensor(space, x);
    const double area = X.dot(g * X) * Y.dot(g * Y) - sq(X.dot(g * Y));
    if (area <= 0.0) throw Error(ErrorCode::InvalidArgument, "degenerate plane");
    return riemann_at(space, x, X, Y, Y, X) / area;
}

Vec geodesic_shoot(const AmbientSpace& space, const Vec& x0, const Vec& v0, double t) {
    require_on_space(space, x0);
    require_tangent(space, x0, v0);
    const double speed = metric_norm(space, x0, v0);
    if (!(speed > 0.0)) throw Error(ErrorCode::InvalidArgument, "geodesic needs |v| > 0");
    if (t == 0.0) return x0;
    constexpr double kArcStep = 2e-3;
    const double arc = std::abs(t) * speed;
    if (!std::isfinite(arc) || arc > 1e7)
        throw Error(ErrorCode::IntegrationError, "geodesic horizon too long");
    const long steps = std::max(1L, static_cast<long>(std::ceil(arc / kArcStep)));
    const double h = t / static_cast<double>(steps);
    if (std::abs(h) < 1e-300) throw Error(ErrorCode::IntegrationError, "step size underflow");

    Vec x = x0, v = v0;
    auto accel = [&](const Vec& xs, const Vec& vs) {
        return LocalGeometry(space, xs).geodesic_acceleration(vs);
    };
    for (long i = 0; i < steps; ++i) {
        const Vec k1x = v, k1v = accel(x, v);
        const Vec k2x = v + 0.5 * h * k1v, k2v = accel(x + 0.5 * h * k1x, k2x);
        const Vec k3x = v + 0.5 * h * k2v, k3v = accel(x + 0.5 * h * k2x, k3x);
        const Vec k4x = v + h * k3v, k4v = accel(x + h * k3x, k4x);
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        x = project_to_space(space, x);
        v = LocalGeometry(space, x).tangent(v);
        if (!x.allFinite() || !v.allFinite())
            throw Error(ErrorCode::IntegrationError, "geodesic integration diverged");
    }
    return x;
}

Vec heisenberg_frame(const AmbientSpace& space, const Vec& x, int index) {
    if (space.kind != SpaceKind::Heisenberg)
        throw Error(ErrorCode::UnsupportedSpace, "heisenberg frame on " +
                                                     std::string(to_string(space.kind)));
    const int m = space.complex_dim;
    const int n = space.embed_dim;
    Vec e = Vec::Zero(n);
    if (index < m) {
        e(index) = 1.0;
        e(2 * m) = -0.5 * x(m + index);
    } else if (index < 2 * m) {
        e(index) = 1.0;
        e(2 * m) = 0.5 * x(index - m);
    } else {
        e(2 * m) = 1.0;
    }
    return e;
}

Vec heisenberg_j(const AmbientSpace& space, const Vec& x, const Vec& horizontal) {
    const int m = space.complex_dim;
    Vec out = Vec::Zero(space.embed_dim);
    for (int j = 0; j < m; ++j) {
        out += horizontal(j) * heisenberg_frame(space, x, m + j);
        out -= horizontal(m + j) * heisenberg_frame(space, x, j);
    }
    return out;
}

Vec hopf_j(const Vec& x) {
    Vec out(4);
    out << -x(1), x(0), -x(3), x(2);
    return out;
}

Vec sasaki_horizontal_lift(const AmbientSpace& space, const Vec& x, const Vec& base_vec) {
    Vec out(6);
    out.head<3>() = base_vec.head<3>();
    out.tail<3>() = -space.curvature * base_vec.head<3>().dot(x.tail<3>()) * x.head<3>();
    return out;
}

Vec sasaki_tangent_lift(const AmbientSpace& space, const Vec& x, const Vec& base_vec) {
    Vec out = Vec::Zero(6);
    const Eigen::Vector3d u = x.tail<3>();
    out.tail<3>() = base_vec.head<3>() - base_vec.head<3>().dot(u) / sq(space.radius) * u;
    return out;
}

double sasaki_lift_metric(const AmbientSpace& space, const Vec& x, const Vec& X, bool X_tangent,
                          const Vec& Y, bool Y_tangent) {
    if (X_tangent != Y_tangent) return 0.0;
    const double base = X.head<3>().dot(Y.head<3>());
    if (!X_tangent) return base;
    const Eigen::Vector3d u = x.tail<3>();
    return base - X.head<3>().dot(u) * Y.head<3>().dot(u) / sq(space.radius);
}

Vec base_sphere_curvature(double c, const Vec& X, const Vec& Y, const Vec& Z) {
    return c * (Y.dot(Z) * X - X.dot(Z) * Y);
}

Vec random_point(const AmbientSpace& space, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> box(-2.0, 2.0);
    const int n = space.embed_dim;
    Vec x(n);
    switch (space.kind) {
        case SpaceKind::Euclidean:
        case SpaceKind::Heisenberg:
            for (int i = 0; i < n; ++i) x(i) = box(rng);
            return x;
        default:
            for (int i = 0; i < n; ++i) x(i) = normal(rng);
            return project_to_space(space, x);
    }
}

Vec random_tangent(const AmbientSpace& space, const Vec& x, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    LocalGeometry geo(space, x);
    Vec v(space.embed_dim);
    for (int i = 0; i < v.size(); ++i) v(i) = normal(rng);
    v = geo.tangent(v);
    return v / geo.norm(v);
}

}  // namespace mcflab

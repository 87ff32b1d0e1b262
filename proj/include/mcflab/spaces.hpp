#pragma once

#include "mcflab/core.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace mcflab {

enum class SpaceKind { Euclidean, RoundSphere, BergerSphere, FsSphere, Heisenberg, SasakiBundle };

std::string_view to_string(SpaceKind kind);
SpaceKind space_kind_from_string(std::string_view name);

/// One catalog geometry together with its Cartesian model.
///
/// Every kind is realized as a constraint submanifold of R^embed_dim carrying a
/// metric tensor field G(x) defined on a neighborhood of the constraint set. The
/// Riemannian metric of the space is the restriction of G to the tangent spaces,
/// so the Levi-Civita connection is the G-orthogonal tangential part of the
/// Levi-Civita connection of (R^embed_dim, G).
///
///   EUCLIDEAN(n)          R^n, G = I
///   ROUND_SPHERE(n, c)    |x|^2 = 1/c in R^(n+1), G = I
///   FS_SPHERE(c)          |x| = 1/(2 sqrt c) in R^3, G = I (CP^1 with curvature 4c)
///   BERGER_SPHERE(l, c)   |x|^2 = 1/c in R^4, G = I + (l - 1) Jx (Jx)^T / |x|^2
///   HEISENBERG(n)         R^(2n+1), (X_j, Y_j, V) declared orthonormal
///   SASAKI_BUNDLE(r, c)   (p, u) in R^6, |p|^2 = 1/c, <p,u> = 0, |u| = r
struct AmbientSpace {
    SpaceKind kind = SpaceKind::Euclidean;
    int dim = 0;
    int embed_dim = 0;
    double curvature = 1.0;  // c
    double variation = 1.0;  // lambda
    double radius = 1.0;     // r
    int complex_dim = 0;     // n (HEISENBERG)

    static AmbientSpace euclidean(int n);
    static AmbientSpace round_sphere(int n, double c);
    static AmbientSpace berger_sphere(double lambda, double c);
    static AmbientSpace fs_sphere(double c);
    static AmbientSpace heisenberg(int n);
    static AmbientSpace sasaki_bundle(double r, double c);

    [[nodiscard]] int constraint_count() const;
    /// Radius of the embedded sphere for the spherical kinds.
    [[nodiscard]] double sphere_radius() const;
};

/// A tangent vector in the Cartesian representation.
struct TangentVector {
    Vec base;
    Vec comp;
};

inline constexpr double kPointTolerance = 1e-10;
inline constexpr double kTangentTolerance = 1e-10;

// --- constraints --------------------------------------------------------------

Vec constraint_values(const AmbientSpace& space, const Vec& x);
/// Rows are constraint gradients.
Mat constraint_jacobian(const AmbientSpace& space, const Vec& x);
/// Constant Hessian of constraint i evaluated on (v, w).
double constraint_hessian(const AmbientSpace& space, int i, const Vec& v, const Vec& w);

/// Nearest point on the constraint set (radial / Gram-Schmidt retraction).
Vec project_to_space(const AmbientSpace& space, const Vec& x);
/// Throws CONSTRAINT_VIOLATION when x is off the constraint set beyond tolerance.
void require_on_space(const AmbientSpace& space, const Vec& x, double tol = kPointTolerance);
/// Throws CONSTRAINT_VIOLATION when v is not tangent at x.
void require_tangent(const AmbientSpace& space, const Vec& x, const Vec& v,
                     double tol = kTangentTolerance);

// --- metric and connection ------------------------------------------------------

Mat metric_tensor(const AmbientSpace& space, const Vec& x);

/// g_x(v, w). For SASAKI_BUNDLE the tangent-lift formula is applied to the fiber
/// components, so the radial direction along u has zero length.
double metric_at(const AmbientSpace& space, const Vec& x, const Vec& v, const Vec& w);
double metric_norm(const AmbientSpace& space, const Vec& x, const Vec& v);

/// Geometric data frozen at one point: metric, its first derivatives, the
/// ambient Christoffel map and the G-orthogonal tangent projector.
class LocalGeometry {
public:
    LocalGeometry(const AmbientSpace& space, const Vec& x);

    [[nodiscard]] const Vec& point() const { return x_; }
    [[nodiscard]] const Mat& metric() const { return g_; }
    [[nodiscard]] double inner(const Vec& v, const Vec& w) const { return v.dot(g_ * w); }
    [[nodiscard]] double norm(const Vec& v) const;

    /// Ambient Christoffel map Gamma^G(v, w) of (R^N, G).
    [[nodiscard]] Vec christoffel(const Vec& v, const Vec& w) const;
    /// G-orthogonal projection onto T_x M.
    [[nodiscard]] Vec tangent(const Vec& v) const { return projector_ * v; }
    [[nodiscard]] const Mat& projector() const { return projector_; }
    /// G-orthonormal basis of T_x M (columns).
    [[nodiscard]] const Mat& tangent_basis() const { return basis_; }
    /// Covariant derivative of a field given its directional derivative dF = D_v F.
    [[nodiscard]] Vec levi_civita(const Vec& dF, const Vec& v, const Vec& F) const;
    /// Second fundamental form of the constraint set inside (R^N, G).
    [[nodiscard]] Vec constraint_second_form(const Vec& v, const Vec& w) const;
    /// Acceleration of the geodesic through x with velocity v.
    [[nodiscard]] Vec geodesic_acceleration(const Vec& v) const;

private:
    AmbientSpace space_;
    Vec x_;
    Mat g_;
    Mat g_inv_;
    std::array<Mat, kMaxDim> dg_;
    Mat jac_;
    Mat schur_inv_;  // (C G^-1 C^T)^-1
    Mat projector_;
    Mat basis_;
};

using VectorField = std::function<Vec(const Vec&)>;

/// Step of the central stencils used on extended fields.
inline constexpr double kFieldStep = 1e-4;

/// Levi-Civita derivative of an analytic field (defined near the constraint set).
Vec covariant_derivative(const AmbientSpace& space, const VectorField& field,
                         const TangentVector& direction);

/// Covariant derivative along a sampled path: field[k] lives at path[k], samples
/// are equispaced in the path parameter with spacing dt. Returns the derivative
/// at sample `index` with respect to the path parameter.
Vec covariant_derivative_along(const AmbientSpace& space, const std::vector<Vec>& path,
                               const std::vector<Vec>& field, double dt, std::size_t index);

/// R(X,Y,Z,W) = g(R(X,Y)Z, W) with R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y];
/// the round sphere of curvature c has R(X,Y,Y,X) = c for orthonormal X, Y.
double riemann_at(const AmbientSpace& space, const Vec& x, const Vec& X, const Vec& Y,
                  const Vec& Z, const Vec& W);
double sectional_curvature(const AmbientSpace& space, const Vec& x, const Vec& X,
                           const Vec& Y);

/// Geodesic exponential map, RK4 with retraction after every step.
Vec geodesic_shoot(const AmbientSpace& space, const Vec& x, const Vec& v, double t);

// --- model frames -----------------------------------------------------------------

/// Left-invariant frame of HEISENBERG(n): index j < n gives X_{j+1}, n <= j < 2n
/// gives Y_{j-n+1}, j = 2n gives V.
Vec heisenberg_frame(const AmbientSpace& space, const Vec& x, int index);
/// Complex structure on the horizontal distribution: J X_j = Y_j, J Y_j = -X_j.
Vec heisenberg_j(const AmbientSpace& space, const Vec& x, const Vec& horizontal);

/// Hopf complex structure on R^4 = C^2: multiplication by i.
Vec hopf_j(const Vec& x);

/// Horizontal lift of a base vector X at (p, u): (X, -c <X,u> p).
Vec sasaki_horizontal_lift(const AmbientSpace& space, const Vec& x, const Vec& base_vec);
/// Tangent lift of a base vector X at (p, u), projected onto the sphere fiber.
Vec sasaki_tangent_lift(const AmbientSpace& space, const Vec& x, const Vec& base_vec);
/// Metric of the Sasaki bundle evaluated directly on lifts.
double sasaki_lift_metric(const AmbientSpace& space, const Vec& x, const Vec& X, bool X_tangent,
                          const Vec& Y, bool Y_tangent);
/// Curvature operator R(X,Y)Z of the base sphere S^2(c) in R^3.
Vec base_sphere_curvature(double c, const Vec& X, const Vec& Y, const Vec& Z);

// --- table audits -------------------------------------------------------------------

struct ConnectionTableItem {
    std::string name;
    double max_residual = 0.0;
    bool pass = false;
};

struct ConnectionTableReport {
    std::vector<ConnectionTableItem> items;
    double max_residual = 0.0;
    int samples = 0;
    bool pass = false;
};

inline constexpr double kConnectionTableTolerance = 1e-6;

/// Compares the metric-derived Levi-Civita connection with the closed-form
/// tables of HEISENBERG and SASAKI_BUNDLE at random points and frames.
ConnectionTableReport validate_connection_tables(const AmbientSpace& space, int samples = 100,
                                                 std::uint64_t seed = 7);

/// Uniformly random point on the space (bounded box for the non-compact kinds).
Vec random_point(const AmbientSpace& space, std::mt19937_64& rng);
/// Random tangent vector at x with unit metric norm.
Vec random_tangent(const AmbientSpace& space, const Vec& x, std::mt19937_64& rng);

}  // namespace mcflab

#pragma once

#include "mcflab/submersions.hpp"

#include <iosfwd>
#include <optional>

namespace mcflab {

enum class ImmersionKind { Curve, Surface };

/// Triangle corners with integer multiples of the mesh period added to each
/// corner (all zero for meshes without a periodic identification).
struct Triangle {
    std::array<int, 3> v{};
    std::array<int, 3> wrap{0, 0, 0};
};

/// Closed polyline (vertices in loop order) or triangle mesh in an ambient space.
struct DiscreteImmersion {
    AmbientSpace space;
    ImmersionKind kind = ImmersionKind::Curve;
    std::vector<Vec> vertices;
    std::vector<Triangle> triangles;
    /// Translation identifying the two ends of a periodic strip (empty if none).
    /// Must be an isometry of the space (Heisenberg vertical translation).
    Vec period;
    /// Vertex indices of each fiber when the mesh is a lift; cleared by remeshing.
    std::vector<std::vector<int>> fiber_columns;

    [[nodiscard]] int dim() const { return kind == ImmersionKind::Curve ? 1 : 2; }
    [[nodiscard]] int size() const { return static_cast<int>(vertices.size()); }
    /// Position of a triangle corner after applying its wrap.
    [[nodiscard]] Vec corner(const Triangle& t, int k) const;
    /// Max and min edge length (metric length of the chord at the midpoint).
    [[nodiscard]] double mesh_size() const;
    [[nodiscard]] double min_edge() const;
};

/// Checks the constraints, loop/manifold structure and consistent wraps.
/// Throws CONSTRAINT_VIOLATION or MESH_COLLAPSE.
void validate(const DiscreteImmersion& imm);

/// Neighbour vertex together with the period multiple to add to it.
struct Neighbor {
    int index = 0;
    int wrap = 0;
    bool operator==(const Neighbor&) const = default;
};
/// One-ring adjacency of a surface (sorted, deterministic).
std::vector<std::vector<Neighbor>> one_rings(const DiscreteImmersion& imm);

/// Metric length of the chord a -> b measured with G at the midpoint.
double chord_length(const AmbientSpace& space, const Vec& a, const Vec& b);

struct VertexForms {
    Mat tangent_frame;  // columns e_i, orthonormal in the ambient metric
    Mat normal_frame;   // columns xi_alpha
    std::vector<Mat> shape;  // shape[alpha](i, j) = h^alpha_ij
    Vec mean_curvature;      // H = sum_alpha (sum_i h^alpha_ii) xi_alpha
    double norm_A2 = 0.0;
    double norm_H2 = 0.0;
};

struct FundamentalFormsSample {
    std::vector<VertexForms> vertices;

    [[nodiscard]] double max_A2() const;
    [[nodiscard]] double max_H2() const;
};

/// Frames and second fundamental form at every vertex. Curves use the quartic
/// through five consecutive vertices; surfaces a least-squares cubic fit over
/// the two-ring in tangent coordinates. Second derivatives are turned into
/// covariant ones with the ambient connection.
FundamentalFormsSample fundamental_forms(const DiscreteImmersion& imm);
VertexForms vertex_forms(const DiscreteImmersion& imm, int vertex,
                         const std::vector<std::vector<Neighbor>>& rings);

/// Fiber sweep of a closed base curve: base count x fiber_res vertices.
DiscreteImmersion lift_immersion(const SubmersionModel& sub, const DiscreteImmersion& base_imm,
                                 int fiber_res);

/// Largest spread of the projected points of one fiber column (0 for an exact lift).
double invariance_defect(const SubmersionModel& sub, const DiscreteImmersion& total_imm);

/// Base curve traced by a fiber-invariant total surface. Fibers are clustered
/// within `cluster_radius` (default: half the shortest edge). Throws NOT_INVARIANT.
DiscreteImmersion project_immersion(const SubmersionModel& sub, const DiscreteImmersion& total_imm,
                                    std::optional<double> cluster_radius = std::nullopt);

/// Sum over normals of |(J xi_alpha)^T|^2 for given frames at a base point.
double tangency_defect_at(const SubmersionModel& sub, const Vec& b, const Mat& tangent_frame,
                          const Mat& normal_frame);
/// Per-vertex tangency defect of a base immersion. Throws UNSUPPORTED_SPACE.
std::vector<double> tangency_defect(const DiscreteImmersion& imm, const SubmersionModel& sub);

/// margin = a |H|^2 + b - |A|^2
struct PinchingCondition {
    std::string name;
    double a = 0.0;
    double b = 0.0;
};

namespace pinching {
/// Hopf hypersurfaces of S^(2n+1)(c).
PinchingCondition hopf_hypersurface(int n, double c);
/// Same on the Berger-type canonical variation of S^(2n+1).
PinchingCondition hopf_variation(int n, double lambda);
/// S^3-action version on S^(4n+3)(c).
PinchingCondition quaternionic_hypersurface(int n, double c);
/// Canonical variation of the S^3-action version.
PinchingCondition quaternionic_variation(int n, double lambda);
/// Non-existence bound for closed S^3-invariant hypersurfaces.
PinchingCondition quaternionic_nonexistence(int n, double c);
/// Higher codimension: dimension m, codimension k. Two readings of m.
PinchingCondition high_codimension(int m, int k);
/// Hypersurfaces of CP^(2n+1) fibered over HP^n.
PinchingCondition cp_hypersurface(int n);
/// Heisenberg cylinders of dimension m.
PinchingCondition heisenberg_cylinder(int m);
/// Sasaki bundle over S^(n)(c), codimension k.
PinchingCondition sasaki_bundle(int n, int k, double c);
}  // namespace pinching

struct MarginReport {
    std::vector<double> margins;
    double min = 0.0;
};

MarginReport pinching_margin(const FundamentalFormsSample& forms, const PinchingCondition& cond);
double pinching_margin_value(double A2, double H2, const PinchingCondition& cond);

// --- generators -----------------------------------------------------------------

/// Circle of radius r in the plane spanned by the first two axes of EUCLIDEAN(dim).
DiscreteImmersion plane_circle(double radius, int count, int dim = 2);
/// Circle at geodesic radius rho around the north pole of a 2-sphere space
/// (ROUND_SPHERE(2, c) or FS_SPHERE(c)).
DiscreteImmersion geodesic_circle(const AmbientSpace& sphere, double rho, int count);
/// Great circle through the first two axes of ROUND_SPHERE(2, c) or FS_SPHERE(c).
DiscreteImmersion great_circle(const AmbientSpace& sphere, int count);
/// Equatorial great 2-sphere x4 = 0 in ROUND_SPHERE(3, c), icosahedral subdivision.
DiscreteImmersion equatorial_sphere(double c, int subdivisions);
/// (r1 e^{ia}, r2 e^{ib}) torus in ROUND_SPHERE(3, c) with r1^2 + r2^2 = 1/c,
/// optionally radially perturbed by `amplitude` cos(a) cos(b).
DiscreteImmersion clifford_torus(double c, int count_a, int count_b, double r1 = -1.0,
                                 double amplitude = 0.0);
/// Plane in EUCLIDEAN(4) spanned by two axes, as a periodic-free square patch.
DiscreteImmersion coordinate_plane_patch(int axis_u, int axis_v, int count, double extent);

/// Number of samples giving edge length about h on a closed curve of length L.
int samples_for(double length, double h);

// --- text I/O -------------------------------------------------------------------

void write_off(std::ostream& os, const DiscreteImmersion& imm);
DiscreteImmersion read_off(std::istream& is, const AmbientSpace& space);
void write_curve_csv(std::ostream& os, const DiscreteImmersion& imm);
DiscreteImmersion read_curve_csv(std::istream& is, const AmbientSpace& space);
/// vertex, A2, H2 and one margin column per condition.
void write_forms_csv(std::ostream& os, const FundamentalFormsSample& forms,
                     const std::vector<PinchingCondition>& conditions);

}  // namespace mcflab

#pragma once

#include "mcflab/spaces.hpp"

namespace mcflab {

enum class SubmersionKind { Hopf, HeisenbergProj, SasakiProj };

std::string_view to_string(SubmersionKind kind);
SubmersionKind submersion_kind_from_string(std::string_view name);

/// Riemannian submersion with one-dimensional closed (or periodic) fibers.
///
///   HOPF             S^3(c) or BERGER_SPHERE(l, c)  ->  FS_SPHERE(c)
///   HEISENBERG_PROJ  HEISENBERG(n)                  ->  EUCLIDEAN(2n)
///   SASAKI_PROJ      SASAKI_BUNDLE(r, c)            ->  ROUND_SPHERE(2, c)
struct SubmersionModel {
    AmbientSpace total;
    AmbientSpace base;
    SubmersionKind kind = SubmersionKind::Hopf;
    int fiber_dim = 1;

    static SubmersionModel hopf(double c);
    static SubmersionModel hopf_berger(double lambda, double c);
    static SubmersionModel heisenberg_proj(int n = 1);
    static SubmersionModel sasaki_proj(double r, double c);
};

struct SplitVector {
    Vec horizontal;
    Vec vertical;
};

Vec project_point(const SubmersionModel& sub, const Vec& p);
/// Differential of the projection at p (base.embed_dim x total.embed_dim).
Mat projection_jacobian(const SubmersionModel& sub, const Vec& p);
Vec push_forward(const SubmersionModel& sub, const Vec& p, const Vec& v);

/// Unit vertical vector at p. Also defined slightly off the total space, which
/// the O'Neill stencils rely on.
Vec vertical_unit(const SubmersionModel& sub, const Vec& p);

SplitVector split(const SubmersionModel& sub, const Vec& p, const Vec& v);
Vec horizontal_lift(const SubmersionModel& sub, const Vec& p, const Vec& w);

/// Parameter length of one fiber traversal (2 pi for the circle fibers, 1 for
/// the fundamental interval of the Heisenberg line fibers).
double fiber_period(const SubmersionModel& sub);
/// Moves p along its fiber by parameter t (isometric circle or line action).
Vec fiber_action(const SubmersionModel& sub, const Vec& p, double t);
/// Deterministic point of the fiber over the base point b.
Vec fiber_point(const SubmersionModel& sub, const Vec& b);
/// `count` points equispaced along one period of the fiber over b.
std::vector<Vec> fiber_sample(const SubmersionModel& sub, const Vec& b, int count);

/// Mean curvature vector of the fiber through p.
Vec fiber_mean_curvature(const SubmersionModel& sub, const Vec& p);

/// A_E F = V nabla_{HE} HF + H nabla_{HE} VF.
Vec oneill_A(const SubmersionModel& sub, const Vec& p, const Vec& e, const Vec& f);
/// T_E F = H nabla_{VE} VF + V nabla_{VE} HF.
Vec oneill_T(const SubmersionModel& sub, const Vec& p, const Vec& e, const Vec& f);

struct FiberAudit {
    SubmersionKind kind = SubmersionKind::Hopf;
    int samples = 0;
    double max_mean_curvature = 0.0;
    double tolerance = 0.0;
    bool minimal = false;
};

/// Minimal-fiber tolerance used by the audit for each kind.
double fiber_tolerance(SubmersionKind kind);
FiberAudit audit_fibers(const SubmersionModel& sub, int samples = 32, std::uint64_t seed = 17);

}  // namespace mcflab

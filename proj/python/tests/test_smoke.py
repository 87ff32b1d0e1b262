import math

import numpy as np
import pytest

import mcflab


def test_circle_shrinks():
    circle = mcflab.make_family("plane_circle", {"radius": 0.5}, 0.05)
    assert circle.is_curve
    assert circle.vertices.shape[1] == 2
    policy = mcflab.FlowPolicy()
    policy.horizon = 1.0
    policy.sample_interval = 0.01
    policy.target_h = 0.05
    result = mcflab.run_flow(circle, policy)
    assert result["fate"]["outcome"] == "SHRINKS_TO_POINT"
    assert result["fate"]["t_singular"] == pytest.approx(0.125, rel=0.05)
    assert result["trace"]["t"][0] == 0.0


def test_hopf_projection_and_audit():
    hopf = mcflab.SubmersionModel.hopf(1.0)
    p = np.array([1.0, 0.0, 0.0, 0.0])
    b = hopf.project_point(p)
    assert np.linalg.norm(b) == pytest.approx(0.5)
    assert np.linalg.norm(hopf.fiber_mean_curvature(p)) < 1e-6
    verdict = mcflab.fiber_audit(hopf, samples=20)
    assert verdict["pass"]
    assert set(verdict) == {"test", "params", "residuals", "refinement_slopes", "pass"}


def test_lift_round_trip():
    heis = mcflab.SubmersionModel.heisenberg_proj(1)
    base = mcflab.plane_circle(1.0, 32)
    cyl = mcflab.lift_immersion(heis, base, 8)
    assert len(cyl) == 32 * 8
    back = mcflab.project_immersion(heis, cyl)
    assert len(back) == 32
    assert mcflab.projected_hausdorff(heis, cyl, base) < 1e-9


def test_clifford_forms():
    torus = mcflab.clifford_torus(1.0, 80, 80)
    forms = mcflab.fundamental_forms(torus)
    assert np.allclose(forms["A2"], 2.0, rtol=0.05)
    assert forms["H2"].max() < 1e-10


def test_identity_verdict():
    v = mcflab.lift_norm_identity(mcflab.SubmersionModel.heisenberg_proj(1), "heisenberg_cylinder", h=0.1)
    assert v["pass"]
    assert v["residuals"]["levels"][1]["mean_measured"] == pytest.approx(1.5, rel=0.05)


def test_pinching_margin():
    cond = {"preset": "hopf_hypersurface", "n": 3, "c": 1.0}
    assert mcflab.pinching_margin(2.0, 0.0, cond) == pytest.approx(2.0, abs=1e-12)


def test_catalog_and_scenario(tmp_path):
    names = {f["name"] for f in mcflab.catalog()}
    assert {"plane_circle", "heisenberg_cylinder", "sasaki_great_circle_lift"} <= names
    out = mcflab.run_scenario({"scenario": "audit", "samples": 10}, str(tmp_path))
    assert out["exit_code"] == 0
    assert (tmp_path / "verdict.json").exists()
    bad = mcflab.run_scenario({"scenario": "flow", "generator": {"family": "nope"}}, str(tmp_path / "bad"))
    assert bad["exit_code"] == 4


def test_errors_are_raised():
    with pytest.raises(mcflab.McflabError):
        mcflab.make_family("geodesic_circle", {"rho": 10.0}, 0.1)
    with pytest.raises(mcflab.McflabError):
        mcflab.adaptive_dt_bound(0.0, 1.0, 1.0)


def test_sphere_space():
    s = mcflab.AmbientSpace.round_sphere(2, 4.0)
    x = s.project(np.array([1.0, 1.0, 0.0]))
    assert np.linalg.norm(x) == pytest.approx(0.5)
    assert s.to_dict()["kind"] == "ROUND_SPHERE"
    assert mcflab.AmbientSpace.from_dict(s.to_dict()).embed_dim == 3
    assert math.isclose(mcflab.adaptive_dt_bound(0.1, 1.0, 1.0), 0.0025)

import csv
import json

import numpy as np
import pytest

from funcgeom import experiments as ex
from funcgeom.gridspace import make_grid
from funcgeom.suite import run_invariants

RUNNERS = {
    "spectrometer": ex.run_spectrometer,
    "two_slit": ex.run_two_slit,
    "distance_contrast": ex.run_distance_contrast,
    "pauli_chamber": ex.run_pauli_chamber,
    "curvature": ex.run_curvature,
    "geodesic_check": ex.run_geodesic_check,
    "embed_metric": ex.run_embed_metric,
    "delta_scan": ex.run_delta_scan,
    "eigen_covariance": ex.run_eigen_covariance,
}


@pytest.fixture(scope="module")
def reports():
    out = {name: fn() for name, fn in RUNNERS.items()}
    out["invariants"] = run_invariants()
    return out


@pytest.mark.parametrize("name", sorted(RUNNERS) + ["invariants"])
def test_scenario_passes(reports, name):
    rep = reports[name]
    assert rep.scenario == name
    assert rep.checks
    assert rep.passed, [c.to_dict() for c in rep.failures()]


def test_every_check_uses_a_known_tolerance(reports):
    known = set(ex.DEFAULT_TOLERANCES.values())
    for rep in reports.values():
        for c in rep.checks:
            assert c.tolerance in known


def test_report_files(reports, tmp_path):
    rep = reports["spectrometer"]
    paths = rep.write(tmp_path)
    data = json.loads((tmp_path / "spectrometer.json").read_text())
    assert data["schema_version"] == ex.SCHEMA_VERSION
    assert data["passed"] is True
    assert {c["name"] for c in data["checks"]} == {c.name for c in rep.checks}
    with open(tmp_path / "spectrometer_screen.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert set(rows[0]) == {"y", "abs", "tolerance"}
    assert len(paths) == 1 + len(rep.tables)


def test_json_is_strict(reports):
    for rep in reports.values():
        json.loads(rep.to_json(), parse_constant=lambda c: pytest.fail(f"non-finite constant {c}"))


def test_tolerance_override_flips_check():
    rep = ex.run_curvature({"curvature.value": 1e-300})
    assert rep.passed  # exact zero still passes
    rep = ex.run_geodesic_check(trials=1, tolerances={"geodesic.fd": 1e-12})
    assert [c.name for c in rep.failures()] == ["geodesic.fd"]


def test_merged_tolerances_validation():
    with pytest.raises(KeyError):
        ex.merged_tolerances({"nope": 1.0})
    with pytest.raises(ValueError):
        ex.merged_tolerances({"geodesic.fd": 0.0})
    assert ex.merged_tolerances({"geodesic.fd": 1.0})["geodesic.fd"] == 1.0


def test_check_kinds():
    assert ex.Check("a", 1.0, 2.0).passed
    assert not ex.Check("a", 1.0, 2.0, "min").passed
    assert ex.Check("a", 3.0, 2.0, "min").passed


def test_gaussian_packet_normalized():
    g = make_grid(2, 32, 16.0)
    phi = ex.gaussian_packet(g, [1.0, -1.0], 1.0, 0.5)
    assert phi.norm() == pytest.approx(1.0, rel=1e-10)


def test_spectrometer_frequency_guard():
    g = make_grid(1, 16, 16.0)
    with pytest.raises(ValueError):
        ex._frequency_index(g, 0.3)


def test_spectrometer_screen_delta_position():
    # p0 lands on y = p0 / b
    b = 2.0
    rep = ex.run_spectrometer(extent=16 * np.pi, p0=2.0, p1=-3.0, field_scale=b)
    assert rep.passed
    peak = max(rep.tables["screen"], key=lambda r: r["abs"])
    assert peak["y"] == pytest.approx(2.0 / b)


def test_two_slit_collapse_angle(reports):
    jumps = {r["event"]: r for r in reports["two_slit"].tables["jumps"]}
    assert jumps["collapse"]["expected"] == pytest.approx(np.arccos(1 / np.sqrt(2)))
    assert jumps["collapse"]["angle"] == pytest.approx(np.pi / 4, abs=1e-10)
    assert jumps["refraction"]["angle"] > 0.1


def test_distance_contrast_shape(reports):
    rep = reports["distance_contrast"]
    scan = rep.tables["separation_scan"]
    # functional angle saturates below pi/2 while the spatial distance keeps growing
    assert all(r["angle"] <= np.pi / 2 + 1e-12 for r in scan)
    assert scan[-1]["angle"] == pytest.approx(np.pi / 4, abs=1e-10)
    angles = [r["angle"] for r in rep.tables["weight_scan"]]
    assert angles == sorted(angles)


def test_pauli_negative_control(reports):
    c = {c.name: c for c in reports["pauli_chamber"].checks}["pauli.negative_control"]
    assert c.kind == "min" and c.value >= 1e-2


def test_deterministic_invariants():
    assert run_invariants(seed=3).to_json() == run_invariants(seed=3).to_json()

"""Smoke test for the compiled extension.

Build it first, e.g.
    cargo build --release -p beaconnav-py --features extension-module
    cp target/release/libbeaconnav.so python/beaconnav.so
"""

import json
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parents[2]
sys.path.insert(0, str(ROOT / "python"))

import beaconnav  # noqa: E402


def read(rel):
    return (ROOT / rel).read_text()


def test_deploy_flat_square():
    grid = beaconnav.Bathymetry.from_ascii(read("data/fixtures/flat-square.asc"))
    poly = beaconnav.Polygon.from_geojson(read("data/fixtures/flat-square.geojson"))
    d = beaconnav.deploy_beacons(grid, poly, 4, seed=7)
    assert d.converged
    assert len(d.beacon_positions) == 4
    assert sum(d.volumes) == d.v_tot
    assert d.objective <= 0.05 * d.v_tot / 4


def test_route_on_a_chain():
    g = beaconnav.BeaconGraph([(0, 0), (3000, 0), (6000, 0)], 4000)
    assert g.route(0, 2) == ([0, 1, 2], 6000.0)
    assert beaconnav.BeaconGraph([(0, 0), (9000, 0)]).route(0, 1) is None


def test_plan_and_validate():
    domain = beaconnav.Domain.parse(read("domains/uuv-nav.hddl"))
    problem = beaconnav.Problem.parse(read("domains/problems/uuv1.hddl"), domain)
    plan = beaconnav.plan(domain, problem)
    assert [name for name, _ in plan.steps][:2] == ["navigate-to-beacon", "sense-beacon"]
    assert beaconnav.validate(domain, problem, plan) == (True, None)
    again = beaconnav.Plan.from_json(plan.to_json())
    assert again.steps == plan.steps


def test_parse_error_is_raised():
    try:
        beaconnav.Domain.parse("(define (domain")
    except ValueError as e:
        assert "1:" in str(e)
    else:
        raise AssertionError("malformed domain accepted")


def test_simulate_nominal():
    summary, events = beaconnav.simulate(str(ROOT / "data/scenario/nominal.yaml"))
    s = json.loads(summary)
    assert s["mission_success"] and s["replan_count"] == 0
    assert all(json.loads(line)["v"] == 1 for line in events.splitlines())

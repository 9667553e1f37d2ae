"""Study harness: grid sweeps, cell records, dt rules, dof accounting."""

import math

import pytest

from natconv import study
from natconv.analysis import ConvergenceTable
from natconv.linalg import SingularMatrixError
from natconv.solver import TimeScheme
from natconv.study import (
    CAVITY_NORMS,
    MANUFACTURED_NORMS,
    PROJECTION_NORMS,
    StudyConfig,
    count_dofs,
    parse_dt_rule,
    parse_elements,
    run_cell,
    run_study,
    temporal_orders,
    temporal_study,
)

pytestmark = pytest.mark.slowish


# ----------------------------------------------------------- spec parsing

def test_parse_elements_pairs_and_triples():
    assert parse_elements("p1-p1") == (1, 1)
    assert parse_elements("p1-p0") == (1, 0)
    assert parse_elements("P2-P1-P2") == (2, 1, 2)


@pytest.mark.parametrize("bad", ["p1", "p1-p1-p1-p1", "q1-p1", "p1-px", "p0-p1"])
def test_parse_elements_rejects(bad):
    with pytest.raises(ValueError):
        parse_elements(bad)


def test_parse_dt_rule_forms():
    h = 1.0 / 40.0
    tf = math.pi / 2
    assert parse_dt_rule("h", h) == h
    assert parse_dt_rule("h/2", h) == h / 2
    assert parse_dt_rule("2h", h) == 2 * h
    assert parse_dt_rule("0.5h", h) == 0.5 * h
    assert parse_dt_rule("2*h", h) == 2 * h
    assert parse_dt_rule("tf/32", h, tf) == tf / 32
    assert parse_dt_rule("0.01", h) == 0.01


def test_parse_dt_rule_tf_needs_final_time():
    with pytest.raises(ValueError):
        parse_dt_rule("tf/8", 0.1, None)


# ----------------------------------------------------------- dof accounting

def test_dof_counts_at_reporting_size():
    # 161^2 vertices: velocity doubles them, pressure and temperature
    # each add one copy; the quadratic spaces add the 77,760 edges.
    assert count_dofs(160, (1, 1, 1)) == 103_684
    assert count_dofs(160, (2, 1, 2)) == 335_044


# ----------------------------------------------------------- config defaults

def test_resolved_defaults_per_case():
    proj = StudyConfig(case="mp-bur").resolved()
    assert proj.elements == "p1-p1"
    assert proj.norms == PROJECTION_NORMS

    manu = StudyConfig(case="nc-nour").resolved()
    assert manu.elements == "p1-p1-p1"
    assert manu.norms == MANUFACTURED_NORMS

    cav = StudyConfig(case="nc-sq").resolved()
    assert cav.norms == CAVITY_NORMS


def test_resolved_keeps_explicit_choices():
    cfg = StudyConfig(case="mp-bur", elements="p1-p0", norms=("L2_p",)).resolved()
    assert cfg.elements == "p1-p0"
    assert cfg.norms == ("L2_p",)


def test_deep_extends_mesh_sequence_once():
    cfg = StudyConfig(deep=True).resolved()
    assert cfg.mesh_sizes[-1] == 320
    again = cfg.resolved()
    assert again.mesh_sizes.count(320) == 1


# ----------------------------------------------------------- single cells

def test_projection_cell_records():
    cfg = StudyConfig(case="mp-bur")
    recs = run_cell(cfg, 8, "re12-h")
    assert [r.norm for r in recs] == list(PROJECTION_NORMS)
    assert all(r.ok for r in recs)
    assert all(r.error > 0 for r in recs)
    assert recs[0].dofs == count_dofs(8, (1, 1))
    assert recs[0].h == pytest.approx(1.0 / 8.0)


def test_transient_cell_records():
    cfg = StudyConfig(case="nc-nour", dt_rule="tf/4")
    with pytest.warns(UserWarning, match="outside the analyzed range"):
        recs = run_cell(cfg, 6, "re12-h")
    assert [r.norm for r in recs] == list(MANUFACTURED_NORMS)
    assert all(r.ok for r in recs)


def test_failed_cell_keeps_table_shape(monkeypatch):
    def boom(*args, **kwargs):
        raise SingularMatrixError("forced failure")

    monkeypatch.setattr(study, "modified_projection", boom)
    recs = run_cell(StudyConfig(case="mp-bur"), 4, "re12-h")
    assert [r.norm for r in recs] == list(PROJECTION_NORMS)
    assert all(r.error is None for r in recs)
    assert not any(r.ok for r in recs)


def test_element_arity_mismatch_is_config_error():
    with pytest.raises(ValueError):
        run_cell(StudyConfig(case="nc-nour", elements="p1-p1"), 4, "re12-h")
    with pytest.raises(ValueError):
        run_cell(StudyConfig(case="mp-bur", elements="p1-p1-p1"), 4, "re12-h")


# ----------------------------------------------------------- full sweeps

SMALL = StudyConfig(
    case="mp-bur",
    mesh_sizes=(4, 8),
    gamma_policies=("re12-h", "re-h2"),
)


def test_run_study_assembles_full_grid():
    table = run_study(SMALL)
    assert isinstance(table, ConvergenceTable)
    assert len(table.records) == 2 * 2 * len(PROJECTION_NORMS)
    assert table.policies() == ["re12-h", "re-h2"]
    assert table.mesh_sizes() == [4, 8]
    rates = table.rates("re12-h", "L2_u")
    assert rates[0] is None and rates[1] is not None


def test_run_study_is_deterministic():
    a = run_study(SMALL)
    b = run_study(SMALL)
    for ra, rb in zip(a.records, b.records):
        assert (ra.n, ra.policy, ra.norm) == (rb.n, rb.policy, rb.norm)
        assert ra.error == rb.error


def test_worker_count_does_not_change_results():
    serial = run_study(SMALL)
    parallel = run_study(StudyConfig(**{**SMALL.__dict__, "jobs": 2}))
    key = lambda t: (t.policy, t.n, t.norm)
    sa = sorted(serial.records, key=key)
    pa = sorted(parallel.records, key=key)
    assert [(r.policy, r.n, r.norm, r.error) for r in sa] == \
           [(r.policy, r.n, r.norm, r.error) for r in pa]


# ----------------------------------------------------------- temporal study

def test_temporal_study_structure():
    tf = math.pi / 2
    with pytest.warns(UserWarning, match="outside the analyzed range"):
        dts, errors, rates = temporal_study(
            "nc-nour", n=8, dts=(tf / 8, tf / 16), scheme=TimeScheme.BDF2,
            policy="re-h2",
        )
    assert len(dts) == len(errors) == len(rates) == 2
    assert errors[0] > errors[1] > 0
    assert rates[0] is None
    assert rates[1] > 0.5


def test_temporal_orders_shares_one_baseline():
    tf = math.pi / 2
    with pytest.warns(UserWarning, match="outside the analyzed range"):
        results = temporal_orders(
            "nc-nour", n=6, dts=(tf / 4, tf / 8),
            schemes=(TimeScheme.BDF2, TimeScheme.BDF1), policy="re-h2",
        )
    assert set(results) == {"bdf2", "bdf1"}
    for _, errors, rates in results.values():
        assert len(errors) == len(rates) == 2
        assert errors[0] > errors[1] > 0


def test_temporal_study_rejects_non_manufactured():
    with pytest.raises(ValueError):
        temporal_study("mp-bur")
    with pytest.raises(ValueError):
        temporal_study("nc-sq")

"""Error norms are verified against integrals done by hand, rate
extraction against synthetic h^k data, and the CSV writer against its own
parser on randomly generated tables.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from natconv.analysis import (
    ConvergenceTable,
    ErrorRecord,
    centerline_profile,
    convergence_rates,
    emit_table,
    error_norm,
    mean_value,
    parse_table,
    profile_l2_difference,
)
from natconv.fem import FunctionSpace, interpolate
from natconv.mesh import build_uniform_square_mesh


def _p1(n=5):
    return FunctionSpace(build_uniform_square_mesh(n), 1)


def test_error_norm_hand_integrals():
    # f_h = x against exact 0: ||x||_L2 = 1/sqrt(3); H1 adds ||grad x|| = 1
    space = _p1()
    f = interpolate(lambda x, y: x, space)
    zero = lambda x, y: np.zeros_like(x)
    zero_grad = lambda x, y: np.zeros((x.size, 2))
    assert error_norm(f, zero, "L2") == pytest.approx(1 / math.sqrt(3), rel=1e-13)
    expected = math.sqrt(1.0 / 3.0 + 1.0)
    assert error_norm(f, zero, "H1", zero_grad) == pytest.approx(expected, rel=1e-13)


def test_error_norm_vector_field():
    mesh = build_uniform_square_mesh(4)
    space = FunctionSpace(mesh, 1, 2)
    f = interpolate(lambda x, y: np.column_stack([x, 2 * y]), space)
    zero = lambda x, y: np.zeros((x.size, 2))
    # ||(x, 2y)||^2 = 1/3 + 4/3
    assert error_norm(f, zero, "L2") == pytest.approx(math.sqrt(5.0 / 3.0), rel=1e-13)


def test_error_norm_exact_interpolant_is_zero():
    space = _p1()
    f = interpolate(lambda x, y: 2.0 - x + 3 * y, space)
    assert error_norm(f, lambda x, y: 2.0 - x + 3 * y, "L2") < 1e-14


def test_mean_value():
    space = _p1()
    f = interpolate(lambda x, y: x + 10.0, space)
    assert mean_value(f) == pytest.approx(10.5, rel=1e-13)


def test_centered_norm_ignores_constant_shift():
    space = _p1()
    f = interpolate(lambda x, y: x + 42.0, space)
    err = error_norm(f, lambda x, y: x, "L2", center=True)
    assert err < 1e-12
    plain = error_norm(f, lambda x, y: x, "L2")
    assert plain == pytest.approx(42.0, rel=1e-12)


def test_error_norm_validation():
    space = _p1()
    f = interpolate(lambda x, y: x, space)
    with pytest.raises(ValueError):
        error_norm(f, lambda x, y: x, "Linf")
    with pytest.raises(ValueError):
        error_norm(f, lambda x, y: x, "H1")  # gradient missing


def test_convergence_rates_recover_synthetic_order():
    hs = [1 / 10, 1 / 20, 1 / 40, 1 / 80]
    errs = [3.0 * h ** 1.7 for h in hs]
    rates = convergence_rates(hs, errs)
    assert rates[0] is None
    assert all(r == pytest.approx(1.7, abs=1e-12) for r in rates[1:])
    with_fail = convergence_rates(hs, [errs[0], None, errs[2], errs[3]])
    assert with_fail[1] is None and with_fail[2] is None
    assert with_fail[3] == pytest.approx(1.7, abs=1e-12)


def _make_table(ns, policies, norms, errors):
    table = ConvergenceTable(case="mp-bur", elements="p1-p1")
    for p in policies:
        for n in ns:
            for nk in norms:
                table.records.append(ErrorRecord(
                    case="mp-bur", n=n, h=1.0 / n, policy=p, norm=nk,
                    error=errors.get((p, n, nk)),
                ))
    return table


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.sampled_from([10, 20, 40, 80, 160]), min_size=1, max_size=4,
             unique=True),
    st.lists(st.sampled_from(["1e-7", "re12-h", "re-h2"]), min_size=1,
             max_size=3, unique=True),
    st.data(),
)
def test_csv_round_trip(ns, policies, data):
    norms = ["L2_u", "L2_p"]
    errors = {}
    for p in policies:
        for n in ns:
            for nk in norms:
                errors[(p, n, nk)] = data.draw(st.one_of(
                    st.none(),
                    st.floats(1e-8, 1e3, allow_nan=False),
                ))
    table = _make_table(sorted(ns), policies, norms, errors)
    text = emit_table(table, "csv")
    back = parse_table(text)
    assert back.case == table.case and back.elements == table.elements
    assert back.policies() == table.policies()
    assert back.mesh_sizes() == table.mesh_sizes()
    for p in policies:
        for n in ns:
            for nk in norms:
                orig = errors[(p, n, nk)]
                rec = back.cell(n, p, nk)
                if orig is None:
                    assert rec.error is None
                else:
                    # formatted at 2 decimal places in scientific notation
                    assert rec.error == pytest.approx(orig, rel=5.1e-3)


def test_markdown_marks_failed_cells():
    table = _make_table(
        [20, 40], ["re12-h"], ["L2_u"],
        {("re12-h", 20, "L2_u"): 1e-2, ("re12-h", 40, "L2_u"): None},
    )
    text = emit_table(table, "markdown")
    assert "| 1/40 | -- | -- |" in text
    assert "1.00E-02" in text
    with pytest.raises(ValueError):
        emit_table(table, "latex")


def test_table_rates_skip_failures():
    table = _make_table(
        [20, 40, 80], ["re12-h"], ["L2_u"],
        {("re12-h", 20, "L2_u"): 4e-2, ("re12-h", 40, "L2_u"): 2e-2,
         ("re12-h", 80, "L2_u"): 1e-2},
    )
    rates = table.rates("re12-h", "L2_u")
    assert rates[1] == pytest.approx(1.0, abs=1e-12)


def test_parse_rejects_garbage():
    with pytest.raises(ValueError):
        parse_table("just some prose\n")


def test_centerline_profile_and_difference():
    mesh = build_uniform_square_mesh(8)
    space = FunctionSpace(mesh, 1, 2)
    u = interpolate(lambda x, y: np.column_stack([x * 0.0, 3.0 * x + y]), space)
    prof = centerline_profile(u, num_samples=101)
    x = np.linspace(0.0, 1.0, 101)
    assert np.allclose(prof[:, 0], x, atol=1e-15)
    assert np.allclose(prof[:, 1], 3.0 * x + 0.5, atol=1e-12)
    # trapezoid L2 of the difference against a shifted copy
    shifted = prof.copy()
    shifted[:, 1] += 0.5
    assert profile_l2_difference(prof, shifted) == pytest.approx(0.5, rel=1e-12)
    with pytest.raises(ValueError):
        profile_l2_difference(prof, prof[:-1])

import numpy as np
import pytest
from scipy import integrate

from scaleqsl.quadrature import cumulative_simpson, cumulative_trapezoid, simpson


@pytest.mark.parametrize("n", [4, 5, 6, 11, 12])
def test_exact_for_cubics(n):
    t = np.linspace(0, 2, n)
    y = 1 - 2 * t + 3 * t**2 - 0.7 * t**3
    exact = t - t**2 + t**3 - 0.175 * t**4
    np.testing.assert_allclose(cumulative_simpson(y, t[1]), exact, atol=1e-13)


def test_even_nodes_match_composite_simpson():
    t = np.linspace(0, 3, 41)
    y = np.exp(-t) * np.sin(3 * t)
    got = cumulative_simpson(y, t[1])
    for k in (2, 10, 40):
        assert got[k] == pytest.approx(integrate.simpson(y[: k + 1], x=t[: k + 1]), rel=1e-13)


def test_fourth_order_convergence():
    errs = []
    for n in (41, 81, 161):
        t = np.linspace(0, 1, n)
        errs.append(np.max(np.abs(cumulative_simpson(np.cos(5 * t), t[1]) - np.sin(5 * t) / 5)))
    assert errs[0] / errs[1] > 12 and errs[1] / errs[2] > 12


def test_trapezoid_matches_scipy():
    t = np.linspace(0, 1, 17)
    y = t**2
    np.testing.assert_allclose(
        cumulative_trapezoid(y, t[1]), integrate.cumulative_trapezoid(y, t, initial=0), rtol=1e-14
    )


def test_short_arrays_fall_back():
    np.testing.assert_allclose(cumulative_simpson([1.0, 3.0], 0.5), [0, 1.0])
    np.testing.assert_allclose(cumulative_simpson([1.0, 1.0, 1.0], 1.0), [0, 1, 2])


def test_leading_axes():
    t = np.linspace(0, 1, 9)
    y = np.stack([t, t**2, t**3])
    out = cumulative_simpson(y, t[1])
    np.testing.assert_allclose(out[:, -1], [1 / 2, 1 / 3, 1 / 4], atol=1e-14)
    np.testing.assert_allclose(simpson(y, t[1]), out[:, -1])

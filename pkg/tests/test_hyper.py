import math

import mpmath as mp
import numpy as np
import pytest

from hp_oracle import hp_kummer_m, hp_tricomi_u

from ambistop.errors import DomainError, PoleInB
from ambistop.hyper import (
    gamma_signed,
    kummer_m,
    kummer_m_log,
    log_gamma,
    slog_value,
    tricomi_u,
    tricomi_u_log,
)

# frozen with tests/hp_oracle.py at 30 digits
M_1_2_1 = 1.7182818284590452354      # (e - 1)/1, closed form of M(1,2,x)
U_03_17_2 = 0.85459210700892885622


def test_log_gamma_trivials():
    assert log_gamma(1.0) == pytest.approx(0.0, abs=1e-14)
    assert log_gamma(0.5) == pytest.approx(math.log(math.sqrt(math.pi)), abs=1e-13)
    assert log_gamma(5.0) == pytest.approx(math.log(24.0), abs=1e-13)


def test_log_gamma_vs_stdlib():
    for x in np.geomspace(1e-3, 150.0, 200):
        assert abs(log_gamma(float(x)) - math.lgamma(float(x))) < 1e-12 * max(
            1.0, abs(math.lgamma(float(x)))
        )


def test_log_gamma_domain():
    with pytest.raises(DomainError):
        log_gamma(0.0)
    with pytest.raises(DomainError):
        log_gamma(-1.2)


def test_gamma_signed_reflection():
    lg, sg = gamma_signed(-0.934)
    ref = float(mp.gamma(mp.mpf("-0.934")))
    assert sg == -1.0
    assert sg * math.exp(lg) == pytest.approx(ref, rel=1e-13)
    lg2, sg2 = gamma_signed(-1.5)
    assert sg2 == 1.0  # Gamma is positive on (-2, -1)


# ---------------------------------------------------------------------------
# Kummer M
# ---------------------------------------------------------------------------

def test_m_at_zero_and_zero_a():
    assert kummer_m(0.7, 1.9, 0.0).value == 1.0
    assert kummer_m(0.0, 1.9, 3.7).value == 1.0


def test_m_closed_form():
    ev = kummer_m(1.0, 2.0, 1.0)
    assert ev.value == pytest.approx(M_1_2_1, rel=1e-13)
    assert ev.est_rel_error <= 1e-10


def test_m_pole_in_b():
    with pytest.raises(PoleInB):
        kummer_m(0.5, 0.0, 1.0)
    with pytest.raises(PoleInB):
        kummer_m(0.5, -3.0, 1.0)


def test_m_negative_x_rejected():
    with pytest.raises(DomainError):
        kummer_m(0.5, 1.5, -1.0)


def test_m_derivative_contiguous_vs_fd():
    for (a, b, x) in [(1.549, 4.099, 2.0), (0.4, 1.7, 8.0), (-0.7, 6.1, 3.0)]:
        ev = kummer_m(a, b, x)
        h = 1e-5 * max(1.0, x)
        fd = (kummer_m(a, b, x + h).value - kummer_m(a, b, x - h).value) / (2 * h)
        assert ev.derivative_x == pytest.approx(fd, rel=1e-6)


@pytest.mark.parametrize("a,b,x", [
    (1.549, 4.099, 0.3), (1.549, 4.099, 40.0), (-0.934, 7.132, 8.0),
    (0.3, 1.7, 2.0), (2.5, 8.0, 120.0), (-0.575, 24.85, 6.7),
    (1.2, 3.4, 800.0), (0.7, 5.5, 2.5e4),
])
def test_m_against_oracle(a, b, x):
    (lg, sg), err = kummer_m_log(a, b, x)
    ref = hp_kummer_m(a, b, x)
    got = mp.mpf(sg) * mp.e ** mp.mpf(lg)
    rel = abs(float((got - ref) / ref))
    assert rel < 5e-10
    assert err <= 1e-10


# ---------------------------------------------------------------------------
# Tricomi U
# ---------------------------------------------------------------------------

def test_u_closed_form():
    ev = tricomi_u(1.0, 2.0, 4.0)
    assert ev.value == pytest.approx(0.25, rel=1e-11)


def test_u_asymptotic_limit():
    # x^a U(a, b, x) -> 1; at x = 1e6 the next-order term a(1+a-b)/x sets
    # the tolerance scale
    a, b, x = 0.3, 1.7, 1e6
    v = x**a * tricomi_u(a, b, x).value
    assert abs(v - 1.0) < 1e-4
    assert v == pytest.approx(1.0000001199999533534, rel=1e-10)


def test_u_connection_residual():
    # U through Gamma-weighted M's must match the direct evaluation
    a, b, x = 0.3, 1.7, 2.0
    direct = tricomi_u(a, b, x).value
    t1 = math.gamma(1 - b) / math.gamma(a - b + 1) * kummer_m(a, b, x).value
    t2 = math.gamma(b - 1) / math.gamma(a) * x ** (1 - b) \
        * kummer_m(a - b + 1, 2 - b, x).value
    assert direct == pytest.approx(t1 + t2, rel=1e-9)
    assert direct == pytest.approx(U_03_17_2, rel=1e-11)


def test_u_domain():
    with pytest.raises(DomainError):
        tricomi_u(0.5, 1.5, 0.0)
    with pytest.raises(DomainError):
        tricomi_u(0.5, 1.5, -2.0)


def test_u_recurrence_consistency():
    # three-term relation U(a-1) - (2a - b + x) U(a) + a (a - b + 1) U(a+1)
    # vanishes; residual measured against the largest term so points where
    # the relation itself cancels stay well-posed
    rng = np.random.default_rng(3)
    for _ in range(25):
        a = rng.uniform(1.2, 6.0)
        b = rng.uniform(1.1, 9.0)
        x = 10 ** rng.uniform(-1.5, 2.0)
        t0 = -(2 * a - b + x) * tricomi_u(a, b, x).value
        tm = tricomi_u(a - 1.0, b, x).value
        tp = a * (a - b + 1.0) * tricomi_u(a + 1.0, b, x).value
        scale = max(abs(t0), abs(tm), abs(tp))
        assert abs(tm + t0 + tp) <= 1e-8 * scale


def test_u_derivative_contiguous_vs_fd():
    for (a, b, x) in [(1.549, 4.099, 2.0), (0.6, 3.0, 15.0), (-0.5, 7.1, 3.0)]:
        ev = tricomi_u(a, b, x)
        h = 1e-5 * max(1.0, x)
        fd = (tricomi_u(a, b, x + h).value - tricomi_u(a, b, x - h).value) / (2 * h)
        assert ev.derivative_x == pytest.approx(fd, rel=1e-6)


def test_u_monotone_decreasing_for_positive_a():
    for (a, b) in [(0.3, 1.7), (1.549, 4.099), (4.0, 9.0)]:
        xs = np.geomspace(1e-2, 1e3, 30)
        vals = [tricomi_u(a, b, float(x)).value for x in xs]
        assert all(v1 > v2 for v1, v2 in zip(vals, vals[1:]))


@pytest.mark.parametrize("a,b,x", [
    (-0.934, 7.1319, 0.35), (-0.934, 7.1319, 20.0), (-0.934, 7.1319, 300.0),
    (-0.575, 24.85, 6.7), (17.31, 20.62, 39.28), (25.5, 29.02, 12.0),
    (0.3062, 2.6125, 1e5), (1.0001, 3.5, 33.0),
])
def test_u_against_oracle(a, b, x):
    (lg, sg), err = tricomi_u_log(a, b, x)
    ref = hp_tricomi_u(a, b, x)
    got = mp.mpf(sg) * mp.e ** mp.mpf(lg)
    rel = abs(float((got - ref) / ref))
    assert rel < 5e-10
    assert err <= 1e-10


def test_est_rel_error_gate():
    # every accepted evaluation reports its estimate at or under the gate
    for (a, b, x) in [(0.3, 1.7, 2.0), (1.549, 4.099, 25.0), (-0.9, 7.1, 12.0)]:
        assert tricomi_u(a, b, x).est_rel_error <= 1e-10
        assert kummer_m(a, b if b > 0 else 2.2, x).est_rel_error <= 1e-10


def test_slog_value_overflow():
    from ambistop.errors import EvaluationOverflow

    with pytest.raises(EvaluationOverflow):
        slog_value((710.0, 1.0))

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import ABS_LOG_SCHEDULE, E_MINUS_10, SQ2, SQ3
from resonators.capacitance import CapacitanceMatrix, leading_model, realize
from resonators.errors import DimensionMismatch, InvalidDims, InvalidGap
from resonators.frequencies import (PhysicalParams, count_formula, epsilon_of_delta, eta, frequencies_csv,
                                    frequencies_payload, imaginary_parts, omega_one, resonant_frequencies,
                                    span_and_count)
from resonators.geometry import build_arrangement
from resonators.spectra import EigenPair, dense_eigen
from resonators.verification import random_offsets

VOL = 4 * math.pi / 3
params = st.builds(PhysicalParams, delta=st.floats(1e-6, 0.5), v=st.floats(0.1, 10), v_b=st.floats(0.1, 10),
                   R=st.floats(0.1, 10), Lambda=st.floats(0.1, 10), beta=st.floats(0.05, 0.95))
shapes = st.sampled_from([("chain", (3,)), ("chain", (7,)), ("ring", (5,)), ("ring", (8,)),
                          ("grid", (2, 3)), ("grid", (3, 4))])


class TestParams:
    @pytest.mark.parametrize("beta", [0.0, 1.0, 1.5])
    def test_beta_open_interval(self, beta):
        with pytest.raises(InvalidGap):
            PhysicalParams(delta=0.01, Lambda=1.0, beta=beta)

    def test_exactly_one_gap_source(self):
        with pytest.raises(InvalidGap):
            PhysicalParams(delta=0.01)
        with pytest.raises(InvalidGap):
            PhysicalParams(delta=0.01, Lambda=1.0, beta=0.5, eps=0.1)
        with pytest.raises(InvalidGap):
            PhysicalParams(delta=0.01, Lambda=1.0)

    @pytest.mark.parametrize("delta", [0.0, 1.0, -0.1])
    def test_delta_range(self, delta):
        with pytest.raises(InvalidDims):
            PhysicalParams(delta=delta, Lambda=1.0, beta=0.5)


class TestSchedule:
    def test_e10(self):
        s = epsilon_of_delta(PhysicalParams(delta=0.01, Lambda=1.0, beta=0.5))
        assert s.eps == pytest.approx(E_MINUS_10, rel=1e-13)
        assert s.delta_log == pytest.approx(0.1, rel=1e-14)
        assert not s.symbolic

    def test_arbitrary_precision_oracle(self):
        s = epsilon_of_delta(PhysicalParams(delta=1e-3, Lambda=2.0, beta=0.9))
        assert s.abs_log == pytest.approx(ABS_LOG_SCHEDULE, rel=1e-13)
        assert s.delta_log == pytest.approx(1e-3 * ABS_LOG_SCHEDULE, rel=1e-13)

    def test_underflow(self):
        s = epsilon_of_delta(PhysicalParams(delta=1e-4, Lambda=10.0, beta=0.5))
        assert s.symbolic and s.eps is None
        assert s.log_eps == pytest.approx(-1000.0)
        assert s.delta_log == pytest.approx(0.1)

    def test_explicit_eps(self):
        s = epsilon_of_delta(PhysicalParams(delta=0.01, eps=0.02, R=2.0))
        assert s.log_eps == pytest.approx(math.log(0.01))


class TestFrequencies:
    def test_two_sphere_cross_check(self):
        p = PhysicalParams(delta=1e-3, Lambda=1.7, beta=0.6, v_b=1.3, R=0.8)
        f = resonant_frequencies(("chain", 2), p)
        expected = math.sqrt(3 * p.Lambda * p.v_b**2 / (2 * p.R**3)) * p.delta ** (p.beta / 2)
        assert f[-1].re == pytest.approx(expected, rel=1e-12)

    def test_chain4_ratios(self):
        p = PhysicalParams(delta=1e-3, Lambda=1.0, beta=0.5)
        f = resonant_frequencies(("chain", 4), p)
        e = eta(p)
        np.testing.assert_allclose([x.re / e for x in f[1:]], [math.sqrt(2 - SQ2), SQ2, math.sqrt(2 + SQ2)],
                                   rtol=1e-14)

    def test_ring6(self):
        p = PhysicalParams(delta=1e-3, Lambda=2.0, beta=0.4, v_b=0.7, R=1.5)
        f = resonant_frequencies(("ring", 6), p)
        e = math.sqrt(3 * p.Lambda * p.v_b**2 / (4 * p.R**3)) * p.delta ** (p.beta / 2)
        assert eta(p) == pytest.approx(e, rel=1e-14)
        got = [(x.re / e, x.multiplicity) for x in f[1:]]
        np.testing.assert_allclose([g[0] for g in got], [1, SQ3, 2], rtol=1e-12)
        assert [g[1] for g in got] == [2, 2, 1]

    def test_omega_one_unavailable(self):
        f = resonant_frequencies(("chain", 3), PhysicalParams(delta=0.01, Lambda=1.0, beta=0.5))
        assert f[0].re is None and f[0].symbolic and f[0].provenance == "unavailable"

    def test_omega_one_user(self):
        p = PhysicalParams(delta=0.01, Lambda=1.0, beta=0.5)
        f = resonant_frequencies(("chain", 3), p, M_source=5.0)
        assert f[0].re == pytest.approx(math.sqrt(3 * 5.0 * 0.01 / (4 * math.pi)), rel=1e-14)
        assert f[0].re == omega_one(5.0, p)

    def test_omega_one_from_matrix(self):
        C = CapacitanceMatrix(np.array([[3.0, -1.0], [-1.0, 3.0]]))
        f = resonant_frequencies(("chain", 2), PhysicalParams(delta=0.01, eps=0.1), M_source=C)
        assert f[0].re == pytest.approx(omega_one(2.0, PhysicalParams(delta=0.01, eps=0.1)))

    def test_radius_mismatch(self):
        with pytest.raises(DimensionMismatch):
            resonant_frequencies(build_arrangement("chain", 3, 2.0, 0.1), PhysicalParams(delta=0.1, eps=0.1))

    def test_error_order_verbatim(self):
        f = resonant_frequencies(("chain", 3), PhysicalParams(delta=0.01, Lambda=1.0, beta=0.5))
        assert f[1].error_order == "O(sqrt(delta/|log eps|)+delta)"

    @given(p=params, shape=shapes)
    def test_invariants(self, p, shape):
        kind, dims = shape
        f = resonant_frequencies(shape, p, M_source=1.0)
        re = [x.re for x in f]
        assert all(r >= 0 for r in re) and re == sorted(re)
        assert sum(x.multiplicity for x in f) == int(np.prod(dims))
        assert len(f) == count_formula(kind, dims)

    @given(p=params, shape=shapes)
    def test_lambda_scaling(self, p, shape):
        q = PhysicalParams(delta=p.delta, v=p.v, v_b=p.v_b, R=p.R, Lambda=4 * p.Lambda, beta=p.beta)
        a = {f.index: f.re for f in resonant_frequencies(shape, p, M_source=2.0)}
        b = {f.index: f.re for f in resonant_frequencies(shape, q, M_source=2.0)}
        assert a.keys() == b.keys() and a[1] == b[1]
        for i in a:
            if i > 1:
                assert b[i] == pytest.approx(2 * a[i], rel=1e-14)

    def test_subwavelength_limit(self):
        for shape in [("chain", (4,)), ("grid", (2, 3))]:
            top = [resonant_frequencies(shape, PhysicalParams(delta=d, Lambda=1.0, beta=0.5), 1.0)[-1].re
                   for d in (1e-2, 1e-4, 1e-6, 1e-8)]
            assert all(b < a for a, b in zip(top, top[1:])) and top[-1] < top[0] / 10


class TestImaginary:
    def brute(self, C, alpha, p, vol):
        n = len(alpha)
        num = 0.0
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for l in range(n):
                        num += alpha[i] * C[i, j] * C[k, l] * alpha[l]
        den = sum(vol[l] * alpha[l] ** 2 for l in range(n))
        return -p.delta * p.v_b**2 / (8 * math.pi * p.v) * num / den

    @given(seed=st.integers(0, 2**31), n=st.integers(2, 6))
    def test_brute_force(self, seed, n):
        p = PhysicalParams(delta=0.01, Lambda=1.0, beta=0.5, v=1.7, v_b=0.9)
        C = random_offsets(n, seed) + n * np.eye(n)
        vol = [VOL] * n
        pairs = dense_eigen(C)
        got = imaginary_parts(C, pairs, p, vol)
        for g, pair in zip(got, pairs):
            ref = self.brute(C, pair.vector, p, vol)
            # relative to the cancellation-free magnitude of the same sum
            scale = abs(self.brute(np.abs(C), np.abs(pair.vector), p, vol))
            assert abs(g - ref) <= 1e-12 * scale
            assert g <= 0

    def test_zero_sum_vanishes(self):
        C = np.eye(3)
        p = PhysicalParams(delta=0.01, eps=0.1)
        assert imaginary_parts(C, [EigenPair(1.0, np.array([1.0, -1.0, 0.0]))], p, [1, 1, 1]) == [0.0]

    def test_chain4_antisymmetric(self):
        arr = build_arrangement("chain", 4, 1.0, 1e-6)
        mu = random_offsets(4, 11)
        J = np.eye(4)[::-1]
        mu = 0.5 * (mu + J @ mu @ J)
        C = realize(leading_model(arr, mu), 1e-6)
        p = PhysicalParams(delta=1e-3, eps=1e-6)
        im = imaginary_parts(C, dense_eigen(C.entries), p, [VOL] * 4)
        assert abs(im[1]) <= 1e-10 * abs(im[0])
        assert abs(im[3]) <= 1e-10 * abs(im[0])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            imaginary_parts(np.eye(3), [EigenPair(1.0, np.ones(3))], PhysicalParams(delta=0.1, eps=0.1), [1, 1])


class TestSpan:
    p = PhysicalParams(delta=1e-3, Lambda=1.0, beta=0.5)

    def test_chain16(self):
        s = span_and_count(("chain", 16), self.p)
        assert s.count == 16 and s.span_symbolic == "(0, 2eta)" and not s.upper_closed
        assert s.span[1] == pytest.approx(2 * s.eta)

    def test_ring5(self):
        s = span_and_count(("ring", 5), self.p)
        assert s.count == 3 and s.upper_closed and s.span_symbolic == "(0, 2eta]"

    def test_grid28(self):
        s = span_and_count(("grid", (2, 8)), self.p)
        assert s.count == 15 and s.span_symbolic == "(0, 2sqrt(2)eta)"
        assert s.span[1] == pytest.approx(2 * SQ2 * s.eta)

    @pytest.mark.parametrize("kind", ["chain", "ring"])
    @pytest.mark.parametrize("n", range(3, 20))
    def test_count_formula(self, kind, n):
        assert span_and_count((kind, (n,)), self.p).count == count_formula(kind, (n,))

    def test_span_contains_frequencies(self):
        for shape in [("chain", (9,)), ("ring", (8,)), ("grid", (3, 5))]:
            s = span_and_count(shape, self.p)
            top = resonant_frequencies(shape, self.p)[-1].re
            assert 0 < top <= s.span[1] * (1 + 1e-14)


class TestOutput:
    def test_payload(self):
        p = PhysicalParams(delta=1e-4, Lambda=10.0, beta=0.5)
        d = frequencies_payload(p, resonant_frequencies(("chain", 3), p))
        assert d["params"]["eps_symbolic"] is True and "eps" not in d["params"]
        assert d["frequencies"][0]["re"] is None

    def test_csv(self):
        p = PhysicalParams(delta=1e-3, Lambda=1.0, beta=0.5)
        lines = frequencies_csv(resonant_frequencies(("ring", 4), p, 1.0)).splitlines()
        assert lines[0] == "i,re,im,multiplicity,a,error_order"
        assert len(lines) == 4

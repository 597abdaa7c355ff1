import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import SQ2, cycle_laplacian, path_laplacian
from resonators.capacitance import (CapacitanceMatrix, CapacitanceModel, Provenance, as_matrix, average_capacity,
                                    estimate_offsets, generalized, leading_model, model_from_bem, realize,
                                    realize_rho, rho_of)
from resonators.errors import AsymmetricOffsets, DimensionMismatch, GapTooLarge, NotSymmetric
from resonators.geometry import build_arrangement
from resonators.verification import random_offsets


def chain(n, eps=0.1, R=1.0):
    return build_arrangement("chain", n, R, eps)


class TestLeadingModel:
    def test_chain3(self):
        np.testing.assert_array_equal(leading_model(chain(3)).kappa, path_laplacian(3))

    def test_ring4(self):
        expected = [[2, -1, 0, -1], [-1, 2, -1, 0], [0, -1, 2, -1], [-1, 0, -1, 2]]
        np.testing.assert_array_equal(leading_model(build_arrangement("ring", 4, 1.0, 0.1)).kappa, expected)

    def test_grid22_is_four_cycle(self):
        kappa = leading_model(build_arrangement("grid", (2, 2), 1.0, 0.1)).kappa
        # the 2x2 labeling visits the square as 1, 2, 4, 3
        P = np.eye(4)[[0, 1, 3, 2]]
        np.testing.assert_array_equal(P @ kappa @ P.T, cycle_laplacian(4))

    def test_offsets(self):
        mu = random_offsets(3, 1)
        model = leading_model(chain(3), mu)
        np.testing.assert_array_equal(model.mu, mu)
        assert model.length_scale == 1.0

    def test_asymmetric_offsets(self):
        with pytest.raises(AsymmetricOffsets):
            leading_model(chain(3), np.triu(np.ones((3, 3))))

    def test_offset_shape(self):
        with pytest.raises(DimensionMismatch):
            leading_model(chain(3), np.zeros((2, 2)))

    def test_immutable(self):
        model = leading_model(chain(3))
        with pytest.raises(ValueError):
            model.kappa[0, 0] = 5


class TestRealize:
    def test_chain3_e10(self):
        C = realize(leading_model(chain(3)), math.exp(-10)).entries
        assert C[0, 0] == pytest.approx(10 * math.pi, rel=1e-14)
        assert C[0, 1] == pytest.approx(-10 * math.pi, rel=1e-14)
        assert C[1, 1] == pytest.approx(20 * math.pi, rel=1e-14)

    def test_ring4_e1(self):
        C = realize(leading_model(build_arrangement("ring", 4, 1.0, 0.1)), math.exp(-1)).entries
        np.testing.assert_allclose(np.diag(C), 2 * math.pi, rtol=1e-14)
        assert C[0, 1] == pytest.approx(-math.pi) and C[0, 3] == pytest.approx(-math.pi)
        assert C[0, 2] == 0.0

    def test_chain4_eigenvalues(self):
        rho = math.pi * 6 * math.log(10)
        C = realize(leading_model(chain(4)), 1e-6)
        w = np.linalg.eigvalsh(C.entries)
        expected = np.array([0, 2 - SQ2, 2, 2 + SQ2]) * rho
        np.testing.assert_allclose(w, expected, rtol=1e-9, atol=1e-9 * rho)
        assert C.provenance is Provenance.MODEL

    @pytest.mark.parametrize("eps", [1.0, 2.0, 0.0, -1e-3])
    def test_gap_too_large(self, eps):
        with pytest.raises(GapTooLarge):
            realize(leading_model(chain(3)), eps)

    def test_length_scale(self):
        model = leading_model(chain(3, R=2.0))
        assert model.length_scale == 2.0
        assert realize(model, 0.2).meta["rho"] == pytest.approx(math.pi * math.log(10))

    @given(n=st.integers(3, 20), rho=st.floats(1.0, 1e6))
    def test_model_invariants(self, n, rho):
        C = realize_rho(leading_model(chain(n)), rho).entries
        np.testing.assert_allclose(C.sum(axis=1), 0.0, atol=1e-9 * rho)
        assert np.linalg.eigvalsh(C)[0] == pytest.approx(0.0, abs=1e-9 * rho)
        np.testing.assert_array_equal(C, C.T)


class TestGeneralized:
    def test_identity(self):
        G = generalized(CapacitanceMatrix(np.eye(3)), 1.0, 1.0, [1.0, 1.0, 1.0])
        np.testing.assert_array_equal(G.entries, np.eye(3))

    @given(delta=st.floats(1e-6, 0.5), seed=st.integers(0, 1000))
    def test_linear_in_delta(self, delta, seed):
        C = CapacitanceMatrix(random_offsets(4, seed))
        a = generalized(C, delta, 1.3, [1.0] * 4).entries
        b = generalized(C, 2 * delta, 1.3, [1.0] * 4).entries
        np.testing.assert_allclose(b, 2 * a, rtol=1e-15, atol=0)

    def test_eigenvalue_scaling(self):
        C = realize(leading_model(chain(4)), 1e-6)
        rho = C.meta["rho"]
        vol = 4 * math.pi / 3
        G = generalized(C, 1e-3, 1.0, [vol] * 4)
        w = np.linalg.eigvalsh(G.entries)
        assert w[2] == pytest.approx(3e-3 / (4 * math.pi) * 2 * rho, rel=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            generalized(CapacitanceMatrix(np.eye(3)), 1.0, 1.0, [1.0, 1.0])


class TestAverageCapacity:
    def test_laplacian_zero(self):
        assert average_capacity(realize(leading_model(chain(5)), 1e-3)) == pytest.approx(0.0, abs=1e-12)

    def test_identity(self):
        assert average_capacity(CapacitanceMatrix(np.eye(3))) == 1.0


class TestMatrixType:
    def test_check_detects_failures(self):
        bad = CapacitanceMatrix(np.array([[1.0, 0.5], [0.5, 1.0]]))
        report = bad.check()
        assert report.symmetric and report.positive_definite
        assert not report.sign_pattern and not report.ok
        weak = CapacitanceMatrix(np.array([[1.0, -1.5], [-1.5, 1.0]])).check()
        assert not weak.diagonally_dominant and not weak.positive_definite

    def test_json_round_trip(self):
        C = CapacitanceMatrix(random_offsets(3, 5), Provenance.BEM, 1e-9)
        data = json.loads(C.to_json())
        assert data["n"] == 3 and len(data["entries"]) == 9 and data["asymmetry"] == 1e-9
        back = CapacitanceMatrix.from_dict(data)
        np.testing.assert_array_equal(back.entries, C.entries)
        assert back.provenance is Provenance.BEM

    def test_row_major(self):
        C = CapacitanceMatrix(np.array([[1.0, 2.0], [2.0, 5.0]]))
        assert C.to_dict()["entries"] == [1.0, 2.0, 2.0, 5.0]

    def test_csv(self):
        lines = CapacitanceMatrix(np.eye(2)).to_csv().splitlines()
        assert lines[0] == "row,c1,c2" and lines[1] == "1,1.0,0.0"

    def test_from_dict_size(self):
        with pytest.raises(DimensionMismatch):
            CapacitanceMatrix.from_dict({"n": 2, "entries": [1, 2, 3]})

    def test_as_matrix(self):
        assert as_matrix(np.eye(2)).provenance is Provenance.USER
        with pytest.raises(NotSymmetric):
            as_matrix([[1.0, 2.0], [0.0, 1.0]])

    def test_non_square(self):
        with pytest.raises(DimensionMismatch):
            CapacitanceMatrix(np.zeros((2, 3)))


class TestOffsets:
    def test_estimate_recovers_mu(self):
        arr = chain(4, eps=1e-3)
        mu = random_offsets(4, 3)
        C = realize(leading_model(arr, mu), arr.gap)
        np.testing.assert_allclose(estimate_offsets(C, arr), mu, atol=1e-12)
        np.testing.assert_allclose(model_from_bem(C, arr).mu, mu, atol=1e-12)

    def test_rho_of(self):
        assert rho_of(math.exp(-3)) == pytest.approx(3 * math.pi)
        assert rho_of(0.5, 5.0) == pytest.approx(math.pi * math.log(10))

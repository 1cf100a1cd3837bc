import json

import numpy as np
import pytest

from matgcd.control import (IoSystem, distance_to_uncontrollability, is_controllable,
                            monic_witness)
from matgcd.errors import DimensionError, ParameterError
from matgcd.matpoly import MatPoly, dist, mul
from matgcd.odegcd import OdeParams
from matgcd.structmat import build_resultant, default_ell
from matgcd.subspace import recover_cofactors, subspace_gcd

from conftest import scalar
from oracles import near_uncontrollable_siso, scalar_common_root_distance


def planted_system(p, m, n, seed):
    """Monic ``P = C Pbar`` and ``Q = C Qbar`` sharing the left factor ``C = zI + C0``."""
    rng = np.random.default_rng(seed)
    c = MatPoly(np.stack([rng.standard_normal((p, p)), np.eye(p)]))
    pbar = rng.standard_normal((n, p, p))
    pbar[-1] = np.eye(p)
    qbar = rng.standard_normal((n, p, m))
    return IoSystem(mul(c, MatPoly(pbar)), mul(c, MatPoly(qbar)))


def random_system(p, m, n, seed):
    rng = np.random.default_rng(seed)
    pc = rng.standard_normal((n + 1, p, p))
    pc[-1] = np.eye(p)
    return IoSystem(MatPoly(pc), MatPoly(rng.standard_normal((n + 1, p, m))))


def perturbed(sys, scale, seed):
    rng = np.random.default_rng(seed)
    pc = sys.p_poly.coeffs.copy()
    pc[:-1] += scale * rng.standard_normal(pc[:-1].shape)
    qc = sys.q_poly.coeffs + scale * rng.standard_normal(sys.q_poly.coeffs.shape)
    return IoSystem(MatPoly(pc), MatPoly(qc))


def blend(s0, s1, t):
    return IoSystem(MatPoly((1 - t) * s0.p_poly.coeffs + t * s1.p_poly.coeffs),
                    MatPoly((1 - t) * s0.q_poly.coeffs + t * s1.q_poly.coeffs))


def witness_corank(witness, tol=1e-7):
    pair = witness.right_pair()
    s = build_resultant(pair, default_ell(pair.degree, pair.cols)).dense
    sv = np.linalg.svd(s, compute_uv=False)
    return int(np.sum(sv <= tol * sv[0]))


class TestIoSystem:
    def test_monic_required(self):
        with pytest.raises(ParameterError):
            IoSystem(scalar(1.0, 2.0), scalar(1.0))
        with pytest.raises(ParameterError):
            IoSystem(scalar(3.0), scalar(1.0))
        IoSystem(scalar(1.0, 2.0), scalar(1.0), check_monic=False)

    def test_shapes(self):
        with pytest.raises(DimensionError):
            IoSystem(MatPoly(np.ones((2, 2, 3))), MatPoly(np.ones((2, 2, 1))))
        with pytest.raises(DimensionError):
            IoSystem(MatPoly(np.stack([np.zeros((2, 2)), np.eye(2)])),
                     MatPoly(np.ones((1, 3, 1))))
        sys = random_system(2, 3, 2, 0)
        assert (sys.outputs, sys.inputs, sys.degree) == (2, 3, 2)

    def test_dict_roundtrip(self, fixtures_dir):
        data = json.loads((fixtures_dir / "siso_system.json").read_text())
        sys = IoSystem.from_dict(data)
        again = IoSystem.from_dict(json.loads(json.dumps(sys.to_dict())))
        assert again.p_poly.allclose(sys.p_poly) and again.q_poly.allclose(sys.q_poly)
        with pytest.raises(ParameterError, match="'q'"):
            IoSystem.from_dict({"p": data["p"]})

    def test_right_pair_transposes(self):
        sys = random_system(2, 1, 2, 1)
        pair = sys.right_pair()
        np.testing.assert_array_equal(pair.a.coeffs, np.swapaxes(sys.p_poly.coeffs, 1, 2))
        assert pair.b.rows == 1 and pair.b.cols == 2


class TestIsControllable:
    def test_coprime_siso(self):
        ok, margin = is_controllable(IoSystem(scalar(-0.5, 1.0), scalar(1.0)))
        assert ok and margin > 1e-3

    def test_planted_uncontrollable(self):
        for seed in range(5):
            ok, margin = is_controllable(planted_system(2, 1, 2, seed))
            assert not ok and margin <= 1e-10

    def test_scalar_common_root(self):
        p = scalar(*np.convolve([-1.0, 1.0], [2.0, 1.0]))
        q = scalar(*np.convolve([-1.0, 1.0], [0.5, 3.0]))
        assert not is_controllable(IoSystem(p, q))[0]

    def test_generic_systems_controllable(self):
        # statistical: generic data is coprime with probability one
        shapes = [(1, 1, 3), (2, 1, 2), (2, 2, 2), (2, 3, 3), (3, 1, 2)]
        for seed in range(50):
            p, m, n = shapes[seed % len(shapes)]
            assert is_controllable(random_system(p, m, n, 100 + seed))[0]


class TestDistance:
    def test_uncontrollable_input_is_zero(self):
        for seed in range(3):
            r = distance_to_uncontrollability(planted_system(2, 1, 2, seed))
            assert r.distance <= 1e-8
            assert not is_controllable(r.witness)[0]

    def test_siso_matches_oracle(self):
        for seed in range(10):
            p, q = near_uncontrollable_siso(seed)
            r = distance_to_uncontrollability(IoSystem(MatPoly(p), MatPoly(q)))
            assert r.distance == pytest.approx(scalar_common_root_distance(p, q), rel=0.05)

    def test_fixture_system(self, fixtures_dir):
        data = json.loads((fixtures_dir / "siso_system.json").read_text())
        sys = IoSystem.from_dict(data)
        r = distance_to_uncontrollability(sys)
        p = sys.p_poly.coeffs.ravel()
        q = sys.q_poly.padded(3).ravel()
        assert r.distance == pytest.approx(scalar_common_root_distance(p, q), rel=0.05)

    def test_witness_is_uncontrollable(self):
        for seed in range(6):
            sys = perturbed(planted_system(2, 1, 2, 10 + seed), 0.1, 20 + seed)
            assert is_controllable(sys)[0]
            r = distance_to_uncontrollability(sys)
            assert r.gcd.converged and r.distance > 0
            assert not is_controllable(r.witness)[0]
            assert witness_corank(r.witness) >= sys.outputs
            assert r.distance == pytest.approx(dist(sys.right_pair(), r.witness.right_pair()),
                                               rel=1e-12)

    def test_upper_bound_witnesses(self):
        # any planted left factor with fitted cofactors is uncontrollable, so bounds the distance
        for seed in range(5):
            sys = perturbed(planted_system(2, 1, 2, 30 + seed), 0.1, 40 + seed)
            r = distance_to_uncontrollability(sys)
            pair = sys.right_pair()
            rng = np.random.default_rng(50 + seed)
            factors = [subspace_gcd(pair, 1)[0].c]
            factors += [MatPoly(np.stack([rng.standard_normal((2, 2)), np.eye(2)]))
                        for _ in range(5)]
            for c in factors:
                triple, gap = recover_cofactors(pair, c)
                w = IoSystem.from_right_pair(triple.product())
                assert not is_controllable(w)[0]
                assert r.distance <= dist(pair, w.right_pair()) * (1 + 1e-9)

    def test_monotone_toward_planted(self):
        target = planted_system(2, 1, 2, 60)
        start = perturbed(target, 0.3, 61)
        dists = [distance_to_uncontrollability(blend(start, target, t)).distance
                 for t in np.linspace(0, 1, 5)]
        assert dists[-1] <= 1e-8
        assert all(b <= a * (1 + 1e-6) for a, b in zip(dists, dists[1:]))

    def test_monic_witness(self):
        sys = perturbed(planted_system(2, 1, 2, 70), 0.1, 71)
        r = distance_to_uncontrollability(sys)
        assert r.monic_witness is not None
        np.testing.assert_allclose(r.monic_witness.p_poly.leading, np.eye(2), atol=1e-12)
        assert r.monic_distance >= r.distance * (1 - 1e-9)
        assert not is_controllable(r.monic_witness)[0]
        w, d = monic_witness(sys, sys)
        assert d == 0.0 and w.p_poly.allclose(sys.p_poly)

    def test_singular_lead_witness(self):
        sys = random_system(2, 1, 1, 80)
        lead = np.array([[1.0, 0.0], [0.0, 0.0]])
        bad = IoSystem(MatPoly(np.stack([np.eye(2), lead])), sys.q_poly, check_monic=False)
        assert monic_witness(sys, bad) == (None, float("inf"))

    def test_params_forwarded(self):
        sys = perturbed(planted_system(2, 1, 2, 90), 0.1, 91)
        a = distance_to_uncontrollability(sys, OdeParams(tol=1e-6)).distance
        b = distance_to_uncontrollability(sys).distance
        assert a == pytest.approx(b, rel=0.05)

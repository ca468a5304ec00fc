import math

import numpy as np
import pytest

from phaseflow import tensors
from phaseflow.tensors import NormSpec, SymTensor


def test_component_count():
    for d in (1, 2, 3):
        for ell in (1, 2, 3, 4):
            t = SymTensor(d, ell)
            assert len(t.components) == math.comb(d + ell - 1, ell)


def test_apply_direction_examples():
    t = SymTensor(2, 2, {(0, 0): 1.0})
    assert tensors.apply_direction(t, [1.0, 0.0]) == pytest.approx(1.0)

    t = SymTensor(2, 2, {(0, 1): 1.0})
    xi = np.array([1.0, 1.0]) / np.sqrt(2)
    assert tensors.apply_direction(t, xi) == pytest.approx(1.0)

    t = SymTensor(2, 3, {(1, 1, 1): 1.0})
    assert tensors.apply_direction(t, [0.0, -1.0]) == pytest.approx(-1.0)


def test_operatorial_norm_examples():
    t = SymTensor(2, 2, {(0, 0): 1.0, (1, 1): -1.0})
    assert tensors.operatorial_norm(t) == pytest.approx(1.0, abs=1e-9)

    t = SymTensor(2, 2, {(0, 1): 1.0})
    assert tensors.operatorial_norm(t) == pytest.approx(1.0, abs=1e-9)

    t = SymTensor(2, 1, {(0,): 3.0, (1,): 4.0})
    assert tensors.operatorial_norm(t) == pytest.approx(5.0, abs=1e-9)


def test_norm_value_examples():
    assert tensors.norm_value(SymTensor(2, 2, {(0, 1): 1.0}), NormSpec("frobenius")) == pytest.approx(math.sqrt(2))
    assert tensors.norm_value(SymTensor(2, 2, {(0, 0): 1.0, (1, 1): -3.0}), NormSpec("maxcomp")) == pytest.approx(3.0)
    assert tensors.norm_value(SymTensor(2, 2), NormSpec("operatorial")) == pytest.approx(0.0, abs=1e-12)


def test_norm_axioms_random_suite():
    rng = np.random.default_rng(11)
    specs = [NormSpec("frobenius"), NormSpec("maxcomp"), NormSpec("operatorial")]
    for spec in specs:
        for _ in range(200 if spec.kind != "operatorial" else 40):
            a = SymTensor.random_unit(2, 2, rng).scale(rng.uniform(0.1, 3.0))
            b = SymTensor.random_unit(2, 2, rng).scale(rng.uniform(0.1, 3.0))
            c = rng.uniform(-2.0, 2.0)
            na = tensors.norm_value(a, spec, seed=5)
            nb = tensors.norm_value(b, spec, seed=5)
            nab = tensors.norm_value(a.add(b), spec, seed=5)
            nca = tensors.norm_value(a.scale(c), spec, seed=5)
            assert nab <= na + nb + 1e-6
            assert nca == pytest.approx(abs(c) * na, abs=1e-6, rel=1e-6)


def test_operatorial_below_frobenius_order_two():
    rng = np.random.default_rng(7)
    for _ in range(200):
        t = SymTensor.random_unit(2, 2, rng).scale(rng.uniform(0.2, 4.0))
        assert tensors.operatorial_norm(t, seed=2) <= t.frobenius() + 1e-9


def test_directional_evaluation_below_operatorial_norm():
    rng = np.random.default_rng(13)
    for ell in (1, 2, 3):
        for _ in range(25):
            t = SymTensor.random_unit(2, ell, rng)
            norm = tensors.operatorial_norm(t, seed=3)
            for _ in range(8):
                xi = rng.standard_normal(2)
                xi /= np.linalg.norm(xi)
                assert tensors.apply_direction(t, xi) <= norm + 1e-6


def test_operatorial_rotation_invariance():
    rng = np.random.default_rng(17)
    for _ in range(20):
        t = SymTensor.random_unit(2, 2, rng)
        angle = rng.uniform(0, 2 * np.pi)
        c, s = np.cos(angle), np.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        a = np.array([[t.get((0, 0)), t.get((0, 1))], [t.get((0, 1)), t.get((1, 1))]])
        ar = rot @ a @ rot.T
        tr = SymTensor(2, 2, {(0, 0): ar[0, 0], (0, 1): ar[0, 1], (1, 1): ar[1, 1]})
        assert tensors.operatorial_norm(tr, seed=4) == pytest.approx(tensors.operatorial_norm(t, seed=4), abs=1e-6)


def test_negative_definite_operatorial_is_spectral_radius():
    # sup over directions of |T(xi, xi)| must see the dominant eigenvalue
    # even when the form is negative definite; anything else fails homogeneity.
    t = SymTensor(2, 2, {(0, 0): -2.0, (1, 1): -1.0})
    assert tensors.operatorial_norm(t) == pytest.approx(2.0, abs=1e-9)


def test_equivalence_constants_identity():
    lo, hi = tensors.equivalence_constants(NormSpec("frobenius"), NormSpec("frobenius"), 2, 2, budget=1000, seed=0)
    assert lo == pytest.approx(1.0)
    assert hi == pytest.approx(1.0)


def test_equivalence_maxcomp_frobenius_vector():
    # Exact extremizers: equal components give 1/sqrt(2); axis vectors give 1.
    lo, hi = tensors.equivalence_constants(NormSpec("maxcomp"), NormSpec("frobenius"), 2, 1, budget=1500, seed=1)
    assert lo == pytest.approx(1 / math.sqrt(2), rel=0.02)
    assert hi == pytest.approx(1.0, rel=0.02)


def test_equivalence_operatorial_frobenius_matrices():
    # Dense-grid eigenvalue analysis gives [1/sqrt(2), 1]: the low end at
    # equal-magnitude opposite eigenvalues, the high end at rank one.
    lo, hi = tensors.equivalence_constants(NormSpec("operatorial"), NormSpec("frobenius"), 2, 2, budget=1000, seed=2)
    assert lo == pytest.approx(1 / math.sqrt(2), rel=0.02)
    assert hi == pytest.approx(1.0, rel=0.02)


def test_norm_tokens_roundtrip(tmp_path):
    assert tensors.parse_norm_token("operatorial").kind == "operatorial"
    assert tensors.parse_norm_token("frobenius").kind == "frobenius"
    assert tensors.parse_norm_token("maxcomp").kind == "maxcomp"
    path = tmp_path / "weights.csv"
    path.write_text("index,weight\n11,1.0\n12,2.0\n22,3.0\n")
    spec = tensors.parse_norm_token(f"wfrob:{path}")
    assert spec.kind == "wfrob"
    assert spec.weight_for((0, 1)) == 2.0
    assert tensors.norm_token(spec).startswith("wfrob:")


def test_wfrob_requires_positive_weights():
    with pytest.raises(Exception):
        NormSpec("wfrob", weights={(0,): 0.0})


def test_restarts_floor():
    with pytest.raises(Exception):
        tensors.operatorial_norm(SymTensor(2, 2, {(0, 0): 1.0}), restarts=2)

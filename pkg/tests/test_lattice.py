import numpy as np
import pytest

from liouville_gf.lattice import (
    DOWN,
    UP,
    LatticeModel,
    build_hubbard,
    h0_matrix,
    jw_annihilation,
    jw_creation,
    total_number,
)
from liouville_gf.pauli import OperatorSum, anticommutator, commutator, multiply

from dense import annihilation, hubbard_matrix, operator_matrix


def test_jw_examples():
    assert jw_annihilation(0, 1) == OperatorSum.from_terms(1, {"X": 0.5, "Y": 0.5j})
    assert jw_annihilation(1, 2) == OperatorSum.from_terms(2, {"ZX": 0.5, "ZY": 0.5j})
    assert jw_creation(1, 2) == jw_annihilation(1, 2).dagger()
    with pytest.raises(IndexError):
        jw_annihilation(3, 3)


def test_jw_matches_dense_fermions():
    for p in range(4):
        np.testing.assert_allclose(operator_matrix(jw_annihilation(p, 4)), annihilation(p, 4), atol=1e-15)


def test_canonical_anticommutation():
    n = 3
    ident = OperatorSum.identity(n)
    for p in range(n):
        cp = jw_annihilation(p, n)
        assert multiply(cp, cp).prune().term_count == 0
        for q in range(n):
            cq = jw_annihilation(q, n)
            expect = ident if p == q else OperatorSum.zero(n)
            assert anticommutator(cp, cq.dagger()) == expect
            if p != q:
                assert anticommutator(cp, cq).term_count == 0


def test_hubbard_17_terms():
    H = build_hubbard(LatticeModel(4, t=1.0, U=4.0, mu=2.0))
    assert H.n == 8 and H.term_count == 17
    d = H.to_dict()
    assert d["IIIIIIII"] == pytest.approx(-4.0)
    zz = [l for l in d if l.count("Z") == 2 and set(l) <= {"I", "Z"}]
    assert len(zz) == 4 and all(d[l] == pytest.approx(1.0) for l in zz)
    hops = [l for l in d if "X" in l or "Y" in l]
    assert len(hops) == 12 and all(d[l] == pytest.approx(-0.5) for l in hops)


def test_atomic_and_free_examples():
    assert build_hubbard(LatticeModel(1, t=3.0, U=4.0, mu=2.0)) == OperatorSum.from_terms(2, {"II": -1, "ZZ": 1})
    H = build_hubbard(LatticeModel(2, t=1.0, U=0.0, mu=0.0))
    d = H.to_dict()
    assert sorted(d) == ["IIXX", "IIYY", "XXII", "YYII"]
    assert all(abs(abs(w) - 0.5) < 1e-15 for w in d.values())


@pytest.mark.parametrize("params", [(4, 1.0, 4.0, 2.0), (3, 0.7, 2.5, 0.4), (2, 1.0, 0.0, 0.0)])
def test_hubbard_matches_dense_construction(params):
    H = build_hubbard(LatticeModel(*params))
    dense, _ = hubbard_matrix(*params)
    np.testing.assert_allclose(operator_matrix(H), dense, atol=1e-12)


def test_hubbard_symmetries():
    model = LatticeModel(4)
    H = build_hubbard(model)
    assert H.dagger() == H and H.is_hermitian
    assert commutator(H, total_number(H.n)).term_count == 0
    swapped = OperatorSum.from_terms(8, {l[4:] + l[:4]: w for l, w in H.to_dict().items()})
    assert swapped == H


def test_h0_matrix():
    h = h0_matrix(LatticeModel(4, t=1.0, mu=2.0))
    np.testing.assert_array_equal(h, [[-2, -1, 0, 0], [-1, -2, -1, 0], [0, -1, -2, -1], [0, 0, -1, -2]])
    np.testing.assert_array_equal(h0_matrix(LatticeModel(1, mu=2.0)), [[-2.0]])
    ev = np.linalg.eigvalsh(h0_matrix(LatticeModel(4, t=1.0, mu=0.0)))
    golden = (1 + 5**0.5) / 2
    np.testing.assert_allclose(ev, [-golden, -1 / golden, 1 / golden, golden], atol=1e-12)


def test_mode_ordering():
    m = LatticeModel(3)
    assert m.n_qubits == 6
    assert [m.mode(i, UP) for i in range(3)] == [0, 1, 2]
    assert [m.mode(i, DOWN) for i in range(3)] == [3, 4, 5]
    assert all(m.site_spin(m.mode(i, s)) == (i, s) for i in range(3) for s in (UP, DOWN))
    with pytest.raises(ValueError):
        LatticeModel(0)

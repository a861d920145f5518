import numpy as np
import pytest

from oracles import fef_haar_sweep
from teledetect.errors import UsageError
from teledetect.fef import (
    FefConfig,
    FefMethod,
    fef_objective,
    fef_optimize,
    fef_pure,
    fidelity_from_fef,
    fully_entangled_fraction,
    is_useful,
)
from teledetect.linalg import (
    DensityMatrix,
    PureState,
    SubsystemLayout,
    bell_tensor,
    is_ppt,
    max_entangled,
    random_density,
    random_haar_pure,
    random_unitary,
    werner,
)
from teledetect.verdict import Verdict

OPT = FefConfig(force_optimizer=True)
THETA = np.pi / 6


def cos_sin_state(theta=THETA):
    return PureState(np.array([np.cos(theta), 0, 0, np.sin(theta)]), SubsystemLayout.bipartite(2))


def test_fef_pure_examples():
    for d in (2, 3, 5):
        assert fef_pure(max_entangled(d), d).value == pytest.approx(1.0, abs=1e-12)
        zero = PureState(np.eye(1, d * d).ravel(), SubsystemLayout.bipartite(d))
        assert fef_pure(zero, d).value == pytest.approx(1.0 / d, abs=1e-12)
    expected = (np.cos(THETA) + np.sin(THETA)) ** 2 / 2
    assert expected == pytest.approx(0.9330127018922193, abs=1e-15)
    res = fef_pure(cos_sin_state(), 2)
    assert res.value == pytest.approx(expected, abs=1e-12)
    assert res.method is FefMethod.CLOSED_FORM_PURE
    assert fef_optimize(cos_sin_state().density(), 2).value == pytest.approx(expected, abs=1e-8)


def test_fef_pure_unitary_is_a_certificate():
    for d in (2, 3, 4):
        st = random_haar_pure(SubsystemLayout.bipartite(d), d)
        res = fef_pure(st, d)
        assert abs(fef_objective(st.density(), res.optimizer_unitary) - res.value) <= 1e-9


def test_bell_tensor_as_bipartite():
    assert fef_pure(bell_tensor(2), 4).value == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(UsageError):
        fef_pure(bell_tensor(2), 3)


def test_fef_optimize_on_target():
    for d in (2, 3):
        res = fef_optimize(max_entangled(d).density(), d)
        assert res.value == pytest.approx(1.0, abs=1e-8)
        assert res.method is FefMethod.MANIFOLD_ASCENT
        assert res.restarts_used == 33


@pytest.mark.parametrize("p", [0.0, 0.2, 1 / 3, 0.5, 0.8, 1.0])
def test_werner_closed_form_and_sweep_oracle(p):
    rho = werner(p)
    closed = (3 * p + 1) / 4
    assert fef_optimize(rho, 2).value == pytest.approx(closed, abs=1e-6)
    sweep = fef_haar_sweep(rho.matrix, 2, 100_000, seed=int(p * 1000))
    assert sweep <= closed + 1e-6
    # the sweep gets close, so the closed form is not an overestimate from a bad oracle
    assert sweep >= closed - 1e-2


def test_optimizer_matches_closed_form_on_pure_states():
    for d in (2, 3, 4):
        for seed in range(10):
            st = random_haar_pure(SubsystemLayout.bipartite(d), 100 * d + seed)
            assert abs(fef_optimize(st.density(), d).value - fef_pure(st, d).value) <= 1e-6


def test_certificate_reproduces_value():
    for d in (2, 3, 4):
        for seed in range(5):
            rho = random_density(SubsystemLayout.bipartite(d), None, seed)
            res = fef_optimize(rho, d)
            u = res.optimizer_unitary
            assert np.max(np.abs(u.conj().T @ u - np.eye(d))) <= 1e-10
            assert abs(fef_objective(rho, u) - res.value) <= 1e-9
            assert res.value <= 1 + 1e-9


def test_unitary_invariance():
    for d in (2, 3):
        for seed in range(5):
            rho = random_density(SubsystemLayout.bipartite(d), None, seed)
            v = np.kron(random_unitary(d, 50 + seed), np.eye(d))
            rotated = DensityMatrix(v @ rho.matrix @ v.conj().T, rho.layout)
            assert abs(fef_optimize(rho, d).value - fef_optimize(rotated, d).value) <= 1e-6


def test_fef_not_above_sweep_on_random_states():
    # the sweep is a lower bound on F too; the optimizer must not lose to it
    for d, seed in ((2, 0), (3, 1)):
        rho = random_density(SubsystemLayout.bipartite(d), None, seed)
        assert fef_optimize(rho, d).value >= fef_haar_sweep(rho.matrix, d, 20_000, seed) - 1e-12


def test_fidelity_from_fef():
    for d in (2, 3, 7):
        assert fidelity_from_fef(1.0, d) == 1.0
        assert fidelity_from_fef(1.0 / d, d) == pytest.approx(2.0 / (d + 1), abs=1e-15)
    assert fidelity_from_fef(0.5, 2) == 2 / 3
    with pytest.raises(UsageError):
        fidelity_from_fef(1.5, 2)
    with pytest.raises(UsageError):
        fidelity_from_fef(0.5, 1)


def test_usefulness_examples():
    v = is_useful(max_entangled(2).density(), 2)
    assert v.useful is Verdict.USEFUL and v.fidelity == pytest.approx(1.0, abs=1e-12)
    v = is_useful(werner(0.5), 2)
    assert v.useful is Verdict.USEFUL
    assert v.fef.value == pytest.approx(0.625, abs=1e-9)
    assert v.fidelity == (2 * v.fef.value + 1) / 3
    v = is_useful(werner(0.2), 2)
    assert v.useful is Verdict.INCONCLUSIVE
    assert v.fef.value == pytest.approx(0.4, abs=1e-9)
    assert is_ppt(werner(0.2))


def test_pure_inputs_route_to_closed_form():
    st = random_haar_pure(SubsystemLayout.bipartite(3), 4)
    assert fully_entangled_fraction(st, 3).method is FefMethod.CLOSED_FORM_PURE
    assert fully_entangled_fraction(st.density(), 3).method is FefMethod.CLOSED_FORM_PURE
    assert fully_entangled_fraction(st.density(), 3, OPT).method is FefMethod.MANIFOLD_ASCENT
    rho = random_density(SubsystemLayout.bipartite(3), 2, 4)
    assert fully_entangled_fraction(rho, 3).method is FefMethod.MANIFOLD_ASCENT


def test_werner_threshold_bisection():
    lo, hi = 0.0, 1.0
    assert is_useful(werner(lo), 2).useful is Verdict.INCONCLUSIVE
    assert is_useful(werner(hi), 2).useful is Verdict.USEFUL
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        if is_useful(werner(mid), 2, FefConfig(restarts=4)).useful is Verdict.USEFUL:
            hi = mid
        else:
            lo = mid
    assert 1 / 3 - 1e-3 < hi < 1 / 3 + 1e-3


def test_d_range():
    with pytest.raises(UsageError):
        fef_optimize(DensityMatrix(np.eye(81) / 81, SubsystemLayout.bipartite(9)), 9)


def test_parallel_restarts_match_serial():
    rho = random_density(SubsystemLayout.bipartite(3), None, 8)
    a = fef_optimize(rho, 3, FefConfig(restarts=5))
    b = fef_optimize(rho, 3, FefConfig(restarts=5, jobs=2))
    assert a.value == pytest.approx(b.value, abs=1e-12)
    assert a.restarts_used == b.restarts_used == 6

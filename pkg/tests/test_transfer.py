import numpy as np
import pytest

from polyspec.model import (PolymerSpec, PolymerModel, dimer_preset, anderson_preset,
                            sample_configuration)
from polyspec.transfer import (site_matrix, polymer_matrix, polymer_matrix_grid,
                               block_product, find_critical_energies, diagonalizer,
                               irrationality_check, expansion_coeffs, lyapunov,
                               rotation)

SQ2 = 1.0 / np.sqrt(2.0)


def test_site_matrix_values():
    assert np.allclose(site_matrix(0.0, 1.0, 0.0), [[0, -1], [1, 0]])
    assert np.allclose(site_matrix(1.0, 1.0, 0.0), [[1, -1], [1, 0]])
    T = site_matrix(0.0, 2.0, 0.0)
    assert np.allclose(T, [[0, -2], [0.5, 0]])
    assert abs(np.linalg.det(T) - 1.0) < 1e-14
    with pytest.raises(ValueError):
        site_matrix(0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        site_matrix(0.0, -1.0, 1.0)


def test_determinant_one_many_draws():
    rng = np.random.default_rng(0)
    v = rng.normal(size=10000)
    t = rng.uniform(0.2, 3.0, size=10000)
    E = rng.normal(size=10000)
    S = np.empty((10000, 2, 2))
    S[:, 0, 0] = (v - E) / t
    S[:, 0, 1] = -t
    S[:, 1, 0] = 1.0 / t
    S[:, 1, 1] = 0.0
    assert np.abs(np.linalg.det(S) - 1.0).max() < 1e-9
    for i in range(0, 10000, 1000):
        assert np.allclose(site_matrix(v[i], t[i], E[i]), S[i])


def test_polymer_matrix_dimer_identities():
    V = 0.6
    m = dimer_preset(V, 0.5)
    Tp = polymer_matrix(m.plus, V)          # at E = +V
    assert np.allclose(Tp, -np.eye(2), atol=1e-14)
    Tm = polymer_matrix(m.minus, V)
    assert abs(np.trace(Tm) - (4 * V * V - 2)) < 1e-12
    single = PolymerSpec(1, [0.3], [1.2])
    assert np.allclose(polymer_matrix(single, 0.7), site_matrix(0.3, 1.2, 0.7))


def test_polymer_matrix_grid_consistent():
    m = dimer_preset(0.45, 0.5)
    Es = np.linspace(-2, 2, 11)
    G = polymer_matrix_grid(m.plus, Es)
    for i, E in enumerate(Es):
        assert np.allclose(G[i], polymer_matrix(m.plus, E))


def test_block_product_identity_and_single():
    m = dimer_preset(0.5, 0.5)
    cfg = sample_configuration(m, 10, seed=3)
    P, logs = block_product(m, cfg, 0.9, 4, 4)
    assert np.allclose(P, np.eye(2)) and logs == 0.0
    P1, logs1 = block_product(m, cfg, 0.9, 2, 3)
    expected = polymer_matrix(m.plus if cfg.signs[2] else m.minus, 0.9)
    assert np.allclose(P1 * np.exp(logs1), expected, atol=1e-12)


def test_block_product_det_and_critical_boundedness():
    m = dimer_preset(0.5, 0.5)
    cfg = sample_configuration(m, 2000, seed=5)
    P, logs = block_product(m, cfg, 0.5)   # at the critical energy
    # det of the true product is 1: 2*log(scale) + log(det(P)) = 0
    assert abs(2 * logs + np.log(abs(np.linalg.det(P)))) < 1e-7
    # product of conjugated rotations stays bounded: log-scale per block -> 0
    norm_total = logs + np.log(np.linalg.norm(P, 2))
    assert abs(norm_total) / 2000 < 1e-3
    rep = find_critical_energies(m)[-1]
    M = rep.diagonalizer
    cond = np.linalg.cond(M)
    assert np.exp(norm_total) <= cond ** 2 + 1e-6


def test_block_product_det_many_draws():
    # det is preserved after un-scaling; product length kept short enough
    # that the normalized matrix's determinant is still resolvable in float
    rng = np.random.default_rng(6)
    tested = 0
    for _ in range(400):
        V = float(rng.uniform(0.1, 0.95))
        m = dimer_preset(V, float(rng.uniform(0.2, 0.8)))
        cfg = sample_configuration(m, int(rng.integers(1, 40)),
                                   seed=int(rng.integers(1 << 30)))
        E = float(rng.uniform(-2.2, 2.2))
        P, logs = block_product(m, cfg, E)
        if logs > 7.0:  # det error scales as e^{2 logs} * eps, unresolvable past this
            continue
        assert abs(2 * logs + np.log(abs(np.linalg.det(P)))) < 1e-9
        tested += 1
    assert tested >= 200


def test_find_critical_dimer_pair():
    for V in (0.3, 0.5, 0.8):
        reps = find_critical_energies(dimer_preset(V, 0.5))
        energies = [r.energy for r in reps]
        assert len(energies) == 2
        assert abs(energies[0] + V) < 1e-8 and abs(energies[1] - V) < 1e-8
        for r in reps:
            assert r.residual <= 1e-8
            assert r.commutator_norm <= 1e-9


def test_find_critical_random_V_sweep():
    rng = np.random.default_rng(12)
    for V in rng.uniform(0.1, 0.99, size=20):
        reps = find_critical_energies(dimer_preset(float(V), 0.5))
        assert len(reps) == 2
        assert abs(reps[0].energy + V) < 1e-8
        assert abs(reps[1].energy - V) < 1e-8


def test_find_critical_kinds_and_etas():
    reps = find_critical_energies(dimer_preset(SQ2, 0.5))
    plusV = reps[-1]
    assert plusV.kind_plus == "minus_identity"
    assert plusV.kind_minus == "elliptic"
    assert abs(plusV.eta_plus - np.pi) < 1e-9
    assert abs(plusV.eta_minus - 3 * np.pi / 2) < 1e-9
    minusV = reps[0]
    assert minusV.kind_minus == "minus_identity"
    assert abs(minusV.eta_minus - np.pi) < 1e-9
    assert abs(minusV.eta_plus - np.pi / 2) < 1e-9


def test_anderson_has_no_critical_energies():
    for V in (0.4, 0.7, 1.0):
        assert find_critical_energies(anderson_preset(V, 0.5)) == []


def test_diagonalizer_identity_cases():
    # T+ = -I alone: eta_+ = pi regardless of M
    m = dimer_preset(0.6, 0.5)
    Tp = polymer_matrix(m.plus, 0.6)
    Tm = polymer_matrix(m.minus, 0.6)
    M, ep, em = diagonalizer(Tp, Tm)
    assert abs(ep - np.pi) < 1e-10
    assert np.linalg.det(M) > 0
    assert abs(np.linalg.det(M) - 1.0) < 1e-10
    Minv = np.linalg.inv(M)
    assert np.linalg.norm(M @ Tp @ Minv - rotation(ep)) < 1e-8
    assert np.linalg.norm(M @ Tm @ Minv - rotation(em)) < 1e-8


def test_diagonalizer_rejects_noncommuting():
    m = anderson_preset(0.7, 0.5)
    Tp = polymer_matrix(m.plus, 0.2)
    Tm = polymer_matrix(m.minus, 0.2)
    with pytest.raises(ValueError):
        diagonalizer(Tp, Tm)


def test_irrationality_closed_form_vs_bruteforce():
    ep, em, p = np.pi, 3 * np.pi / 2, 0.5
    viol = irrationality_check(ep, em, p, 8)
    assert [k for k, _ in viol] == [4, 8]
    assert all(abs(v - 1.0) < 1e-12 for _, v in viol)
    # brute force |p e^{ik ep} + (1-p) e^{ik em}| for k <= 100
    ep2, em2 = np.pi, 4.428594871176362  # dimer V = 0.6 at E_c = +V
    for k in range(1, 101):
        brute = abs(p * np.exp(1j * k * ep2) + (1 - p) * np.exp(1j * k * em2))
        closed = np.sqrt(max(1 + 2 * p * (1 - p) * (np.cos(k * (ep2 - em2)) - 1), 0))
        assert abs(brute - closed) < 1e-12
    assert irrationality_check(ep2, em2, p, 10000) == []


def test_expansion_coeffs_dimer():
    V = 0.6
    m = dimer_preset(V, 0.5)
    rep = find_critical_energies(m)[-1]
    c = expansion_coeffs(m, rep)
    # d_- from the band dispersion: 1/sqrt(1 - V^2)
    assert abs(c.d_minus - 1.0 / np.sqrt(1 - V * V)) < 1e-7
    # d_+ for the -identity polymer equals tr(M M^T) / (2 det M)
    M = rep.diagonalizer
    d_plus_analytic = np.trace(M @ M.T) / (2 * np.linalg.det(M))
    assert abs(c.d_plus - d_plus_analytic) < 1e-7
    # monotonicity bound d >= sqrt(1 + |c|^2)
    assert c.d_plus >= np.sqrt(1 + abs(c.c_plus) ** 2) - 1e-7
    assert c.d_minus >= np.sqrt(1 + abs(c.c_minus) ** 2) - 1e-7
    # det preservation at the probe
    for a, b in ((c.a_eps_plus, c.b_eps_plus), (c.a_eps_minus, c.b_eps_minus)):
        assert abs(abs(a) ** 2 - abs(b) ** 2 - 1.0) < 1e-10
    with pytest.raises(ValueError):
        expansion_coeffs(m, rep, eps_probe=0.0)


def test_expansion_coeffs_sqrt2():
    m = dimer_preset(SQ2, 0.5)
    rep = find_critical_energies(m)[-1]
    c = expansion_coeffs(m, rep)
    assert abs(c.d_minus - np.sqrt(2)) < 1e-6


def test_rotation_case_pure():
    # at eps = 0 the conjugated matrix is a rotation: |a| = 1, b = 0
    m = dimer_preset(0.6, 0.5)
    rep = find_critical_energies(m)[-1]
    c = expansion_coeffs(m, rep, eps_probe=1e-9)
    assert abs(abs(c.a_eps_minus) - 1.0) < 1e-7
    assert abs(c.b_eps_minus) < 1e-7


def test_lyapunov_shrinks_with_steps_at_critical():
    # V = 0.6 has irrational eta gap, so the critical log-norm offsets take
    # continuum values and the 1/steps trend is strict
    m = dimer_preset(0.6, 0.5)
    vals = [abs(lyapunov(m, 0.6, steps=s, realizations=12, seed=11)[0])
            for s in (10 ** 4, 10 ** 5, 10 ** 6)]
    assert vals[0] > vals[1] > vals[2]


def test_lyapunov_free_chain_and_dichotomy():
    free = anderson_preset(0.0, 0.5)
    g, se = lyapunov(free, 0.7, steps=20000, realizations=4, seed=1)
    assert abs(g) < 1e-3
    m = dimer_preset(0.5, 0.5)
    g0, se0 = lyapunov(m, 0.5, steps=100000, realizations=16, seed=2)
    assert abs(g0) < 3 * se0
    g8, se8 = lyapunov(m, 0.8, steps=100000, realizations=16, seed=3)
    assert g8 > 5 * se8 and g8 > 0
    with pytest.raises(ValueError):
        lyapunov(m, 0.5, steps=1, realizations=4, seed=1)

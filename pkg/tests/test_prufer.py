import numpy as np
import pytest

from polyspec.model import (PolymerSpec, PolymerModel, dimer_preset, anderson_preset,
                            lattice_for_sites, lattice_for_blocks,
                            sample_configuration, build_sequences)
from polyspec.transfer import (find_critical_energies, diagonalizer, polymer_matrix,
                               expansion_coeffs, site_matrix)
from polyspec.eigensolve import build_hamiltonian, dense_oracle
from polyspec.prufer import (angle_map_m, prufer_trace, phase_parts,
                             eigenvalue_count, relative_prufer, phase_shift,
                             oscillatory_sum, free_phase_batch)


def free_model():
    spec = PolymerSpec(1, [0.0], [1.0])
    return PolymerModel(plus=spec, minus=spec, p_plus=0.5)


def test_angle_map_identity():
    th = np.linspace(-7, 7, 101)
    assert np.allclose(angle_map_m(np.eye(2), th), th)


def test_angle_map_diag_value():
    # M = diag(2, 1) at theta = pi/4: angle of (2 cos, sin)(pi/4) = arctan(1/2)
    val = angle_map_m(np.diag([2.0, 1.0]), np.pi / 4)
    assert abs(val - np.arctan(0.5)) < 1e-12


def test_angle_map_pi_shift_and_monotone():
    rng = np.random.default_rng(8)
    for _ in range(100):
        M = rng.normal(size=(2, 2))
        if np.linalg.det(M) <= 0:
            M[0] = -M[0]
        th = rng.uniform(-10, 10, size=10)
        assert np.allclose(angle_map_m(M, th + np.pi) - angle_map_m(M, th), np.pi,
                           atol=1e-9)
    M = rng.normal(size=(2, 2))
    if np.linalg.det(M) <= 0:
        M[0] = -M[0]
    grid = np.linspace(0, 2 * np.pi, 10000)
    vals = angle_map_m(M, grid)
    assert np.all(np.diff(vals) > 0)


def test_angle_map_requires_positive_det():
    with pytest.raises(ValueError):
        angle_map_m(np.diag([1.0, -1.0]), 0.3)


def test_free_chain_trace_quarter_turns():
    seq = lattice_for_sites(free_model(), 12, seed=0)
    tr = prufer_trace(seq, np.eye(2), 0.0, theta0=0.0)
    assert np.allclose(tr.free_angles, np.arange(13) * np.pi / 2, atol=1e-12)
    assert np.allclose(tr.modified_angles, tr.free_angles)
    # increment branch rule
    inc = np.diff(tr.free_angles)
    assert np.all(inc > -np.pi / 2) and np.all(inc < 3 * np.pi / 2)


def test_trace_reconstructs_vector():
    # compare against a direct unnormalized solution recursion
    m = dimer_preset(0.7, 0.5)
    seq = lattice_for_sites(m, 25, seed=2)
    rep = find_critical_energies(m)[-1]
    M = rep.diagonalizer
    E = 0.31
    tr = prufer_trace(seq, M, E, theta0=0.0)
    x, y = 1.0, 0.0  # (t(0) u(0), u(-1))
    vecs = [(x, y)]
    for n in range(seq.num_sites):
        v, t = seq.potentials[n], seq.hoppings[n]
        x, y = ((v - E) * x - t * t * y) / t, x / t
        vecs.append((x, y))
    for n, (x, y) in enumerate(vecs):
        w = M @ np.array([x, y])
        R = np.hypot(*w)
        assert abs(tr.amplitudes[n] - R) <= 1e-8 * max(R, 1e-300)
        target = np.array([np.cos(tr.modified_angles[n]), np.sin(tr.modified_angles[n])])
        assert np.allclose(w / R, target, atol=1e-8)


def test_block_increment_is_eta_mod_2pi():
    m = dimer_preset(0.6, 0.5)
    rep = find_critical_energies(m)[-1]
    seq = lattice_for_blocks(m, 30, seed=9)
    cfg = sample_configuration(m, 30, seed=9)
    tr = prufer_trace(seq, rep.diagonalizer, rep.energy, theta0=0.2)
    nodes = cfg.nodes
    for n in range(30):
        inc = tr.modified_angles[nodes[n + 1]] - tr.modified_angles[nodes[n]]
        eta = rep.eta_plus if cfg.signs[n] else rep.eta_minus
        delta = (inc - eta) % (2 * np.pi)
        assert min(delta, 2 * np.pi - delta) < 1e-9


def test_phase_parts():
    p = phase_parts(3.5 * np.pi)
    assert p.integer_part == 3 and abs(p.fractional_part - 0.5 * np.pi) < 1e-12
    p = phase_parts(-0.25 * np.pi)
    assert p.integer_part == -1 and abs(p.fractional_part - 0.75 * np.pi) < 1e-12
    p = phase_parts(0.0)
    assert p.integer_part == 0 and p.fractional_part == 0.0


def test_winding_count_matches_oracle():
    rng = np.random.default_rng(3)
    for _ in range(40):
        L = int(rng.integers(2, 61))
        V = float(rng.uniform(0.1, 0.95))
        seq = lattice_for_sites(dimer_preset(V, 0.5), L, seed=int(rng.integers(1 << 30)))
        H = build_hamiltonian(seq)
        ref = dense_oracle(H)[0].eigenvalues
        for E in rng.uniform(-3, 3, size=4):
            assert eigenvalue_count(seq, float(E)) == int(np.searchsorted(ref, E))


def test_relative_prufer_basics():
    m = dimer_preset(0.6, 0.5)
    rep = find_critical_energies(m)[-1]
    coeffs = expansion_coeffs(m, rep)
    n_Ec = m.mean(coeffs.d_plus, coeffs.d_minus) / np.pi / m.mean_length
    seq = lattice_for_sites(m, 10000, seed=4)
    xs = np.linspace(-5, 5, 21)
    psi = relative_prufer(seq, rep.diagonalizer, rep.energy, n_Ec, xs)
    assert abs(relative_prufer(seq, rep.diagonalizer, rep.energy, n_Ec, [0.0])[0]) < 1e-12
    assert np.all(np.diff(psi) > 0)  # monotone in x
    assert np.abs(psi - xs).max() < 0.2
    with pytest.raises(ValueError):
        relative_prufer(seq, rep.diagonalizer, rep.energy, 0.0, xs)


def test_relative_prufer_error_shrinks_with_L():
    m = dimer_preset(0.6, 0.5)
    rep = find_critical_energies(m)[-1]
    coeffs = expansion_coeffs(m, rep)
    n_Ec = m.mean(coeffs.d_plus, coeffs.d_minus) / np.pi / m.mean_length
    xs = np.linspace(-4, 4, 9)
    errs = []
    for L in (1000, 10000):
        vals = []
        for r in range(4):
            seq = lattice_for_sites(m, L, seed=100, realization_index=r)
            psi = relative_prufer(seq, rep.diagonalizer, rep.energy, n_Ec, xs)
            vals.append(np.abs(psi - xs).max())
        errs.append(np.median(vals))
    assert errs[1] < errs[0]


def test_phase_shift_at_zero_eps():
    m = dimer_preset(0.6, 0.5)
    rep = find_critical_energies(m)[-1]
    for sign, eta in (("plus", rep.eta_plus), ("minus", rep.eta_minus)):
        for th in (0.0, 0.7, 2.9):
            S, rho = phase_shift(m, rep, sign, 0.0, th)
            assert abs(S - th - eta) < 1e-10
            assert abs(rho - 1.0) < 1e-10
    with pytest.raises(ValueError):
        phase_shift(m, rep, "up", 0.0, 0.0)


def test_phase_shift_first_order():
    m = dimer_preset(0.6, 0.5)
    rep = find_critical_energies(m)[-1]
    coeffs = expansion_coeffs(m, rep)
    thetas = np.linspace(0, np.pi, 8, endpoint=False)
    for sign, eta, d, c in (("plus", rep.eta_plus, coeffs.d_plus, coeffs.c_plus),
                            ("minus", rep.eta_minus, coeffs.d_minus, coeffs.c_minus)):
        resid = []
        for eps in (1e-2, 1e-3):
            S, _ = phase_shift(m, rep, sign, eps, thetas)
            pred = thetas + eta + eps * d - eps * np.imag(c * np.exp(2j * thetas))
            resid.append(np.abs(S - pred).max())
        slope = np.log(resid[0] / resid[1]) / np.log(10.0)
        assert abs(slope - 2.0) < 0.2


def test_phase_shift_amplitude_second_order_in_mean():
    # pointwise rho - 1 = O(eps); the theta-average of log rho is O(eps^2)
    m = dimer_preset(0.6, 0.5)
    rep = find_critical_energies(m)[-1]
    thetas = np.linspace(0, np.pi, 4096, endpoint=False)
    _, rho = phase_shift(m, rep, "minus", 0.01, thetas)
    assert np.abs(rho - 1.0).max() < 0.02
    assert abs(np.log(rho).mean()) < 1e-4


def test_oscillatory_sum_single_term():
    m = dimer_preset(0.6, 0.5)
    rep = find_critical_energies(m)[-1]
    coeffs = expansion_coeffs(m, rep)
    cfg = sample_configuration(m, 10, seed=6)
    theta0 = 0.35
    val = oscillatory_sum(m, rep, cfg, 0.001, theta0, 1)
    c = coeffs.c_plus if cfg.signs[0] else coeffs.c_minus
    assert abs(val - c * np.exp(2j * theta0)) < 1e-12
    with pytest.raises(ValueError):
        oscillatory_sum(m, rep, cfg, 0.001, theta0, 0)
    with pytest.raises(ValueError):
        oscillatory_sum(m, rep, cfg, 0.001, theta0, 11)


def test_oscillatory_sum_zero_coefficient_model():
    # single-site free polymers: M is orthogonal, so c = 0 and the sum vanishes
    fm = free_model()
    T = polymer_matrix(fm.plus, 0.0)       # rotation by pi/2
    M, ep, em = diagonalizer(T, T)
    from polyspec.transfer import CriticalEnergyReport
    rep = CriticalEnergyReport(energy=0.0, kind_plus="elliptic", kind_minus="elliptic",
                               eta_plus=ep, eta_minus=em, diagonalizer=M,
                               commutator_norm=0.0, residual=0.0,
                               irrationality_violations=[])
    cfg = sample_configuration(fm, 50, seed=1)
    val = oscillatory_sum(fm, rep, cfg, 0.0, 0.3, 50)
    assert abs(val) < 1e-8


def test_oscillatory_sum_growth_exponent():
    m = dimer_preset(0.6, 0.5)
    rep = find_critical_energies(m)[-1]
    Ns = [1000, 10000, 100000]
    eps = 0.5 / np.sqrt(Ns[-1])
    slopes = []
    for r in range(50):
        cfg = sample_configuration(m, Ns[-1], seed=31, realization_index=r)
        sums = oscillatory_sum(m, rep, cfg, eps, 0.1, Ns[-1], checkpoints=Ns)
        mags = np.abs(sums)
        slopes.append(np.polyfit(np.log(Ns), np.log(mags), 1)[0])
    assert np.median(slopes) <= 0.6


def test_free_phase_batch_matches_trace():
    m = dimer_preset(0.55, 0.5)
    seq = lattice_for_sites(m, 200, seed=13)
    Es = np.array([[-0.4, 0.2, 1.3]])
    out = free_phase_batch(seq.potentials[:, None], seq.hoppings[:, None], Es)
    for j, E in enumerate(Es[0]):
        tr = prufer_trace(seq, np.eye(2), float(E))
        assert abs(out[0, j] - tr.free_angles[-1]) < 1e-9

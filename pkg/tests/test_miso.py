import numpy as np
import pytest

from ofdmascale.errors import InvalidParam
from ofdmascale.geometry import build_dense_layout, sample_users_disc
from ofdmascale.miso import (BeamSet, miso_gains, miso_sinr, random_orthonormal_beams,
                             solve_op_miso)
from ofdmascale.op_solver import OpInstance, op_objective, solve_op
from ofdmascale.snr_model import ChannelParams

PAR = ChannelParams(alpha=1.5, beta=1.0, r0=0.1, Pcon=1.0)


@pytest.mark.parametrize("M", [1, 2, 4, 8])
def test_beams_unitary(M):
    b = random_orthonormal_beams(M, seed=M)
    assert b.M == M and b.beams.shape == (M, M)
    assert b.unitarity_residual() < 1e-10


def test_single_beam_unit_modulus():
    b = random_orthonormal_beams(1, seed=3)
    assert abs(abs(b.beams[0, 0]) - 1) < 1e-12


def test_beams_isotropic():
    M = 4
    v = np.zeros(M, dtype=complex)
    v[0] = 1.0
    vals = [abs(np.vdot(random_orthonormal_beams(M, s).beams[:, 0], v)) ** 2
            for s in range(10_000)]
    assert np.mean(vals) == pytest.approx(1 / M, abs=0.01)


def test_beams_invalid():
    with pytest.raises(InvalidParam):
        random_orthonormal_beams(0, seed=0)


def test_sinr_single_beam_is_siso():
    rng = np.random.default_rng(0)
    P = rng.random((3, 2, 1))
    g = rng.exponential(size=(3, 4, 2, 1))
    for i in range(3):
        want = P[i, 1, 0] * g[i, 2, 1, 0] / (
            1 + sum(P[j, 1, 0] * g[j, 2, 1, 0] for j in range(3) if j != i))
        assert miso_sinr(P, g, i, 2, 1, 0) == pytest.approx(want, rel=1e-12)


def test_sinr_equal_beams_single_tx():
    q, gv = 0.4, 2.5
    P = np.full((1, 1, 2), q)
    g = np.full((1, 1, 1, 2), gv)
    assert miso_sinr(P, g, 0, 0, 0, 0) == pytest.approx(q * gv / (1 + q * gv))


def test_sinr_noise_only():
    P = np.zeros((2, 1, 2))
    P[0, 0, 1] = 0.7
    g = np.random.default_rng(1).exponential(size=(2, 3, 1, 2))
    assert miso_sinr(P, g, 0, 1, 0, 1) == pytest.approx(0.7 * g[0, 1, 0, 1])


def test_sinr_intra_term_toggle():
    P = np.array([[[0.3, 0.5]]])
    g = np.array([[[[2.0, 7.0]]]])
    printed = miso_sinr(P, g, 0, 0, 0, 0)
    alt = miso_sinr(P, g, 0, 0, 0, 0, intra_beam_indexed=True)
    assert printed == pytest.approx(0.6 / (1 + 0.5 * 2.0))
    assert alt == pytest.approx(0.6 / (1 + 0.5 * 7.0))


def test_miso_gains_shape_and_mean():
    lay = build_dense_layout(2, p=1.0, R=0.3, r0=0.1, seed=0)
    us = sample_users_disc(lay, 3, seed=1)
    beams = [random_orthonormal_beams(2, s) for s in (5, 6)]
    gains = [miso_gains(lay, us, PAR, 4, beams, seed=s) for s in range(300)]
    G = np.stack(gains)
    assert G.shape == (300, 2, 3, 4, 2) and np.all(G > 0)
    # |h phi|^2 is unit-mean exponential for unitary beams
    from ofdmascale.geometry import distance_matrix
    pl = distance_matrix(lay, us) ** (-2 * PAR.alpha)
    ratio = G / pl[None, :, :, None, None]
    assert ratio.mean() == pytest.approx(1.0, abs=0.05)
    with pytest.raises(InvalidParam):
        miso_gains(lay, us, PAR, 1, beams[:1], seed=0)


def _instances():
    rng = np.random.default_rng(40)
    for _ in range(5):
        B, N = int(rng.integers(1, 4)), int(rng.integers(1, 3))
        par = ChannelParams(alpha=float(rng.uniform(1.2, 2)), r0=0.1,
                            Pcon=float(rng.uniform(0.5, 2)))
        yield OpInstance(c=float(rng.uniform(0.1, 0.5)), hK=float(10 ** rng.uniform(3, 5)),
                         B=B, N=N, params=par)


@pytest.mark.parametrize("inst", list(_instances()))
def test_single_beam_matches_siso(inst):
    a = solve_op(inst, seed=3)
    b = solve_op_miso(inst, 1, seed=3)
    assert abs(a.objective - b.objective) <= 1e-9
    np.testing.assert_array_equal(a.powers.p, b.powers.p[:, :, 0])


def test_two_beams_budget_and_symmetry():
    inst = OpInstance(c=0.2, hK=1e4, B=1, N=2, params=PAR)
    s = solve_op_miso(inst, 2)
    assert s.powers.p.shape == (1, 2, 2)
    assert s.powers.p.sum() <= PAR.Pcon + 1e-12
    np.testing.assert_allclose(s.powers.p, s.powers.p[0, 0, 0], rtol=1e-5)


def test_two_beams_vs_half_power_fixture():
    inst = OpInstance(c=0.2, hK=1e4, B=2, N=1, params=PAR)
    two = solve_op_miso(inst, 2).objective
    half = solve_op(OpInstance(c=0.2, hK=1e4, B=2, N=1,
                               params=ChannelParams(alpha=1.5, r0=0.1, Pcon=0.5))).objective
    # four mutually interfering virtual TXs cost more than the doubled stream count gains
    assert two == pytest.approx(13.528794579736816, rel=1e-7)
    assert half == pytest.approx(11.843666743756257, rel=1e-7)
    print(f"OP_MISO(M=2) = {two:.6f}, 2 x OP(half power) = {2 * half:.6f}")

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zenocz.optics import (
    DETOUR,
    DUAL_RAIL,
    LogicalEncoding,
    absorber_channel,
    as_photon,
    beamsplitter,
    decode,
    encode,
    hadamard_equiv,
    loss_channel,
    phase_shifter,
    photon_subsystem,
    qubit_state,
)
from zenocz.quantum_core import apply_channel, apply_operator, state_from

PHOTON = photon_subsystem()
H = 1 / np.sqrt(2)


def photon(**amps):
    return state_from(PHOTON, amps)


def amps(state):
    return dict(zip(PHOTON.levels, state.amplitudes))


class TestBeamsplitter:
    def test_zero_is_identity(self):
        np.testing.assert_array_equal(beamsplitter(0).matrix, np.eye(5))

    def test_quarter_turn_moves_d_to_u(self):
        out = amps(apply_operator(beamsplitter(np.pi / 2), photon(D=1)))
        assert out["U"] == pytest.approx(1, abs=1e-15)
        assert out["D"] == pytest.approx(0, abs=1e-15)

    def test_single_pass(self):
        theta = 0.3
        out = amps(apply_operator(beamsplitter(theta), photon(D=1)))
        assert out["D"] == pytest.approx(np.cos(theta))
        assert out["U"] == pytest.approx(np.sin(theta))

    def test_sign_shift_after_full_turn(self):
        n = 100
        s = photon(D=1)
        bs = beamsplitter(np.pi / n)
        for _ in range(n):
            s = apply_operator(bs, s)
        assert amps(s)["D"] == pytest.approx(-1, abs=1e-10)
        assert abs(amps(s)["U"]) < 1e-10

    def test_leaves_other_levels(self):
        m = beamsplitter(1.1).matrix
        for lvl in ("OUT", "ABS", "LOST"):
            i = PHOTON.index(lvl)
            np.testing.assert_array_equal(m[:, i], np.eye(5)[i])

    @settings(max_examples=100, deadline=None)
    @given(theta=st.floats(-20, 20))
    def test_orthogonal(self, theta):
        m = beamsplitter(theta).matrix
        np.testing.assert_allclose(m.T @ m, np.eye(5), atol=1e-12)
        assert np.linalg.det(m).real == pytest.approx(1, abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(a=st.floats(-10, 10), b=st.floats(-10, 10))
    def test_composition(self, a, b):
        np.testing.assert_allclose(
            (beamsplitter(a) @ beamsplitter(b)).matrix, beamsplitter(a + b).matrix, atol=1e-12
        )


class TestPhaseShifter:
    def test_zero(self):
        np.testing.assert_array_equal(phase_shifter(0).matrix, np.eye(5))

    def test_pi_twice(self):
        p = phase_shifter(np.pi)
        np.testing.assert_allclose((p @ p).matrix, np.eye(5), atol=1e-15)

    def test_pi_on_d(self):
        out = apply_operator(phase_shifter(np.pi), photon(U=H, D=H))
        np.testing.assert_allclose(out.amplitudes, photon(U=H, D=-H).amplitudes, atol=1e-15)

    def test_other_level(self):
        out = amps(apply_operator(phase_shifter(np.pi / 2, "OUT"), photon(OUT=1)))
        assert out["OUT"] == pytest.approx(1j)


class TestLoss:
    def test_zero_is_identity(self):
        ch = loss_channel(0)
        assert len(ch.kraus_ops) == 1
        np.testing.assert_array_equal(ch.kraus_ops[0].matrix, np.eye(5))

    def test_total_loss(self):
        branches = apply_channel(loss_channel(1), photon(D=1))
        lost = sum(b.norm2 for b, c in branches if c == "LOST")
        assert lost == pytest.approx(1, abs=1e-15)
        assert branches[0][0].norm2 == 0

    def test_repeated_loss(self):
        s = photon(D=1)
        ch = loss_channel(0.01)
        for _ in range(100):
            s = apply_channel(ch, s)[0][0]
        assert s.norm2 == pytest.approx(0.99**100, abs=1e-12)
        assert s.norm2 == pytest.approx(0.36603, abs=1e-5)

    def test_out_untouched(self):
        (keep, _), *_ = apply_channel(loss_channel(0.4), photon(OUT=1))
        assert keep.norm2 == 1

    @pytest.mark.parametrize("eps", [-0.1, 1.1, np.nan])
    def test_out_of_range(self, eps):
        with pytest.raises(ValueError):
            loss_channel(eps)


class TestAbsorber:
    def test_single_pass_explosion(self):
        s = apply_operator(beamsplitter(np.pi / 20), photon(D=1))
        branches = apply_channel(absorber_channel(1.0), s)
        absorbed = sum(b.norm2 for b, c in branches if c == "ABSORBED")
        assert absorbed == pytest.approx(np.sin(np.pi / 20) ** 2, abs=1e-15)
        assert absorbed == pytest.approx(0.024472, abs=1e-6)

    def test_zero_is_identity(self):
        ch = absorber_channel(0)
        assert len(ch.kraus_ops) == 1
        np.testing.assert_array_equal(ch.kraus_ops[0].matrix, np.eye(5))

    def test_half(self):
        (keep, _), (gone, cause) = apply_channel(absorber_channel(0.5), photon(U=1))
        assert cause == "ABSORBED"
        assert keep.norm2 == pytest.approx(0.5)
        assert gone.norm2 == pytest.approx(0.5)
        assert amps(gone)["ABS"] == pytest.approx(np.sqrt(0.5))

    def test_transmission_real_by_default(self):
        k0 = absorber_channel(0.36).kraus_ops[0].matrix
        assert k0[PHOTON.index("U"), PHOTON.index("U")] == 0.8

    def test_phase_option(self):
        k0 = absorber_channel(0.36, phase=np.pi / 2).kraus_ops[0].matrix
        assert k0[PHOTON.index("U"), PHOTON.index("U")] == pytest.approx(0.8j)

    def test_d_and_out_untouched(self):
        (keep, _), *_ = apply_channel(absorber_channel(1.0), photon(D=0.6, OUT=0.8))
        assert keep.norm2 == pytest.approx(1)

    @pytest.mark.parametrize("p", [-1e-9, 1.5])
    def test_out_of_range(self, p):
        with pytest.raises(ValueError):
            absorber_channel(p)

    @settings(max_examples=50, deadline=None)
    @given(p=st.floats(0, 1))
    def test_self_composition(self, p):
        k = absorber_channel(p).kraus_ops[0].matrix
        k2 = absorber_channel(1 - (1 - p) ** 2).kraus_ops[0].matrix
        np.testing.assert_allclose(k @ k, k2, atol=1e-10)

    @settings(max_examples=50, deadline=None)
    @given(p=st.floats(0, 1), eps=st.floats(0, 1))
    def test_terminal_levels_are_absorbing(self, p, eps):
        for ch in (absorber_channel(p), loss_channel(eps)):
            total = sum(k.matrix.conj().T @ k.matrix for k in ch.kraus_ops)
            np.testing.assert_allclose(total, np.eye(5), atol=1e-10)
            for lvl in ("ABS", "LOST"):
                i = PHOTON.index(lvl)
                for k in ch.kraus_ops:
                    col = np.array(k.matrix[:, i])
                    col[i] = 0
                    assert not np.any(col)


class TestHadamard:
    def test_on_d(self):
        out = amps(apply_operator(hadamard_equiv(), photon(D=1)))
        assert out["D"] == pytest.approx(H)
        assert out["U"] == pytest.approx(H)

    def test_twice_is_quarter_turn(self):
        h = hadamard_equiv()
        out = amps(apply_operator(h @ h, photon(D=1)))
        assert out["U"] == pytest.approx(1, abs=1e-15)
        assert abs(out["D"]) < 1e-15

    def test_inverse(self):
        h = hadamard_equiv()
        np.testing.assert_allclose((h @ hadamard_equiv(inverse=True)).matrix, np.eye(5), atol=1e-15)

    def test_sandwiched_phase_flips_rails(self):
        # inverse splitter, pi phase on D, forward splitter: an exact bit flip
        op = hadamard_equiv() @ phase_shifter(np.pi) @ hadamard_equiv(inverse=True)
        assert abs(amps(apply_operator(op, photon(D=1)))["U"]) == pytest.approx(1, abs=1e-15)
        assert abs(amps(apply_operator(op, photon(U=1)))["D"]) == pytest.approx(1, abs=1e-15)


class TestEncoding:
    def test_detour_round_trip(self):
        q = qubit_state(0.6, 0.8j, "c")
        p = encode(q, DETOUR)
        assert amps(p)["OUT"] == 0.6 and amps(p)["D"] == 0.8j
        back = decode(p, {"c": DETOUR})
        np.testing.assert_array_equal(back.amplitudes, q.amplitudes)

    def test_dual_rail(self):
        p = encode(qubit_state(1, 0, "c"), DUAL_RAIL)
        assert amps(p)["U"] == 1

    def test_decode_drops_terminal(self):
        p = state_from(photon_subsystem("c"), {"OUT": 0.6, "ABS": 0.8})
        assert decode(p, {"c": DETOUR}).norm2 == pytest.approx(0.36)

    def test_as_photon_rejects_off_rail(self):
        with pytest.raises(ValueError, match="outside"):
            as_photon(photon(U=1), DETOUR, "c")

    def test_bad_encoding(self):
        with pytest.raises(ValueError):
            LogicalEncoding("D", "D")
        with pytest.raises(ValueError):
            LogicalEncoding("ABS", "D")

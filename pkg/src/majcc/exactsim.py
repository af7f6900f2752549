"""Exact dense simulation of small Majorana-mode systems.

Modes are represented through the Jordan-Wigner mapping: mode 2i acts as
sigma_x on qubit i and mode 2i+1 as sigma_y on qubit i, each dressed with
sigma_z on all earlier qubits.  Up to 24 modes (12 qubits) are allowed; the
circuit verifications here need at most 16.

Channels are finite Kraus sums.  Channel equality is decided by applying
both channels to a complete operator basis (matrix units) of the full space
and taking the maximum trace-norm deviation; tolerance 1e-9 unless stated.
Global phases are quotiented out of all unitary comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .algebra import MajoranaMonomial
from .code import CheckResult, ValidationReport

TOL = 1e-9

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)
_I2 = np.eye(2, dtype=complex)


def _kron_all(ops: Sequence[np.ndarray]) -> np.ndarray:
    out = ops[0]
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


class ModeSpace:
    """Dense matrices for n Majorana modes on n/2 qubits."""

    def __init__(self, n_modes: int):
        if n_modes % 2 != 0:
            raise ValueError(f"mode count must be even, got {n_modes}")
        if not 2 <= n_modes <= 24:
            raise ValueError(f"mode count must be in [2, 24], got {n_modes}")
        self.n_modes = n_modes
        self.n_qubits = n_modes // 2
        self.dim = 2 ** self.n_qubits
        self.c: list[np.ndarray] = []
        for m in range(n_modes):
            q = m // 2
            ops = [_SZ] * q + [(_SX if m % 2 == 0 else _SY)] + [_I2] * (self.n_qubits - q - 1)
            self.c.append(_kron_all(ops))
        self.identity = np.eye(self.dim, dtype=complex)

    def product(self, modes: Iterable[int]) -> np.ndarray:
        out = self.identity
        for m in modes:
            out = out @ self.c[m]
        return out

    def monomial_matrix(self, mono: MajoranaMonomial) -> np.ndarray:
        return (1j ** mono.phase) * self.product(sorted(mono.support))

    def linear(self, coeffs: dict[int, complex]) -> np.ndarray:
        """A linear combination of single modes, e.g. (c1 - c2)/sqrt(2)."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for m, a in coeffs.items():
            out = out + a * self.c[m]
        return out


@lru_cache(maxsize=8)
def build_space(n_modes: int) -> ModeSpace:
    """Cached ModeSpace; operators satisfy {c_i,c_j} = 2 d_ij to machine precision."""
    return ModeSpace(n_modes)


def projector(op: np.ndarray, eta: int) -> np.ndarray:
    return (np.eye(op.shape[0]) + eta * op) / 2.0


def exchange_gate(space: ModeSpace, a, b) -> np.ndarray:
    ca = space.c[a] if isinstance(a, int) else a
    cb = space.c[b] if isinstance(b, int) else b
    return (space.identity + ca @ cb) / np.sqrt(2.0)


def t_gate(space: ModeSpace, a: int, b: int) -> np.ndarray:
    theta = np.pi / 8
    return np.cos(theta) * space.identity + np.sin(theta) * (space.c[a] @ space.c[b])


def trace_norm(m: np.ndarray) -> float:
    return float(np.linalg.svd(m, compute_uv=False).sum())


def phase_aligned_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Operator distance minimized over a global phase."""
    inner = np.trace(v.conj().T @ u)
    if abs(inner) < 1e-14:
        return float(np.linalg.norm(u - v))
    phase = inner / abs(inner)
    return float(np.linalg.norm(u / phase - v))


@dataclass
class Channel:
    """A completely positive map given by Kraus operators."""

    kraus: list[np.ndarray]

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        out = np.zeros_like(rho)
        for k in self.kraus:
            out = out + k @ rho @ k.conj().T
        return out

    def then(self, other: "Channel") -> "Channel":
        """``other`` applied after ``self``."""
        return Channel([k2 @ k1 for k1 in self.kraus for k2 in other.kraus])

    def trace_defect(self) -> float:
        dim = self.kraus[0].shape[0]
        s = sum(k.conj().T @ k for k in self.kraus)
        return float(np.linalg.norm(s - np.eye(dim)))


def unitary_channel(u: np.ndarray) -> Channel:
    return Channel([u])


def init_channel(space: ModeSpace, b, c) -> Channel:
    """Prepare modes (b, c) in the eigenstate i b c = +1.

    Measures ibc and applies b on the -1 outcome.
    """
    cb = space.c[b] if isinstance(b, int) else b
    cc = space.c[c] if isinstance(c, int) else c
    op = 1j * cb @ cc
    return Channel([projector(op, +1), cb @ projector(op, -1)])


def transfer_channel(space: ModeSpace, a, b, c) -> Channel:
    """State transfer: init (b,c), measure iab, phase-correct with ac on +1."""
    ca = space.c[a] if isinstance(a, int) else a
    cb = space.c[b] if isinstance(b, int) else b
    cc = space.c[c] if isinstance(c, int) else c
    init = init_channel(space, cb, cc)
    op = 1j * ca @ cb
    meas = Channel([ca @ cc @ projector(op, +1), projector(op, -1)])
    return init.then(meas)


def channel_distance(e1: Channel, e2: Channel, dim: int) -> float:
    """Max trace-norm deviation over the matrix-unit operator basis."""
    worst = 0.0
    for r in range(dim):
        for s in range(dim):
            basis = np.zeros((dim, dim), dtype=complex)
            basis[r, s] = 1.0
            worst = max(worst, trace_norm(e1(basis) - e2(basis)))
    return worst


# -- Fig. 2(a): exchange and phase gates ---------------------------------------


def verify_exchange_and_phase() -> ValidationReport:
    space = build_space(4)
    a, b = 0, 1
    r = exchange_gate(space, a, b)
    s = space.c[a] @ space.c[b]
    checks = [
        CheckResult("R a R+ = -b",
                    np.linalg.norm(r @ space.c[a] @ r.conj().T + space.c[b]) < 1e-10),
        CheckResult("R b R+ = +a",
                    np.linalg.norm(r @ space.c[b] @ r.conj().T - space.c[a]) < 1e-10),
        CheckResult("R unitary",
                    np.linalg.norm(r @ r.conj().T - space.identity) < 1e-10),
        CheckResult("S = R^2 up to global phase",
                    phase_aligned_distance(r @ r, s) < 1e-10),
        CheckResult("S a S+ = -a",
                    np.linalg.norm(s @ space.c[a] @ s.conj().T + space.c[a]) < 1e-10),
        CheckResult("S b S+ = -b",
                    np.linalg.norm(s @ space.c[b] @ s.conj().T + space.c[b]) < 1e-10),
        CheckResult("S^2 is the identity channel",
                    phase_aligned_distance(s @ s, space.identity) < 1e-10),
    ]
    return ValidationReport(checks)


# -- Fig. 2(b,c): state transfer -----------------------------------------------


def verify_transfer_circuit() -> ValidationReport:
    checks = []
    space = build_space(6)
    a, b, c = 0, 1, 2  # three spectator modes complete the space

    transfer = transfer_channel(space, a, b, c)
    expected = init_channel(space, b, c).then(
        unitary_channel(exchange_gate(space, a, c)))
    dist = channel_distance(transfer, expected, space.dim)
    checks.append(CheckResult("transfer = [R_ac] after init(b,c)", dist < TOL,
                              f"distance={dist:.2e}"))
    checks.append(CheckResult("transfer trace-preserving",
                              transfer.trace_defect() < 1e-10))

    # Single-branch case: on a state already in the iab = +1 eigenstate the
    # measurement stage triggers only its +1 branch (with the ac phase
    # correction), and the transfer identity holds on such inputs too.
    op = 1j * space.c[a] @ space.c[b]
    plus = projector(op, +1)
    meas_minus = projector(op, -1)  # the mu = -1 Kraus term of the measurement
    checks.append(CheckResult(
        "mu=-1 measurement branch vanishes on iab=+1 inputs",
        np.linalg.norm(meas_minus @ plus) < 1e-10))
    rho = plus / np.trace(plus)
    d = trace_norm(transfer(rho) - expected(rho))
    checks.append(CheckResult("identity holds on iab=+1 eigenstate", d < TOL))

    # Fig. 2(c): three chained transfers realize the exchange of a1, a2.
    a1, a2, b, c = 0, 1, 2, 3
    chained = (transfer_channel(space, a2, b, c)
               .then(transfer_channel(space, a1, b, a2))
               .then(transfer_channel(space, c, b, a1)))
    expected = init_channel(space, b, c).then(
        unitary_channel(exchange_gate(space, a1, a2)))
    dist = channel_distance(chained, expected, space.dim)
    checks.append(CheckResult("three transfers = [R_a1a2] after init(b,c)",
                              dist < TOL, f"distance={dist:.2e}"))
    return ValidationReport(checks)


# -- Fig. 2(d): T gate from the magic state ------------------------------------


def magic_state_a(space: ModeSpace, c1: int, c2: int, c3: int, c4: int) -> np.ndarray:
    """Density matrix of the T-gate magic state on four modes.

    The +1 eigenstate of i (c1+c2) c4 / sqrt(2) and i (c1-c2) c3 / sqrt(2).
    """
    plus = space.linear({c1: 1 / np.sqrt(2), c2: 1 / np.sqrt(2)})
    minus = space.linear({c1: 1 / np.sqrt(2), c2: -1 / np.sqrt(2)})
    p1 = projector(1j * plus @ space.c[c4], +1)
    p2 = projector(1j * minus @ space.c[c3], +1)
    rho = p1 @ p2
    rho = rho @ rho.conj().T
    return rho / np.trace(rho)


def qubit_encoding(space: ModeSpace, c1: int, c2: int, c3: int, c4: int):
    """Logical qubit in four modes: stabilizer c1c2c3c4, X = ic1c4, Z = ic3c4."""
    stab = space.product([c1, c2, c3, c4])
    sx = 1j * space.c[c1] @ space.c[c4]
    sz = 1j * space.c[c3] @ space.c[c4]
    return stab, sx, sz


def encoded_qubit_amplitudes(space: ModeSpace, rho: np.ndarray,
                             c1: int, c2: int, c3: int, c4: int):
    """Bloch components of the encoded qubit state (assumes stab = +1)."""
    stab, sx, sz = qubit_encoding(space, c1, c2, c3, c4)
    sy = 1j * (sx @ sz)  # right-handed: sx sy = i sz
    return (np.trace(rho @ sx).real, np.trace(rho @ sy).real,
            np.trace(rho @ sz).real, np.trace(rho @ stab).real)


def verify_tgate_circuit() -> ValidationReport:
    checks = []
    space = build_space(6)
    a1, a2, b1, b2, c1, c2 = 0, 1, 2, 3, 4, 5
    inv = 1 / np.sqrt(2)
    c_minus = space.linear({c1: inv, c2: -inv})
    c_plus = space.linear({c1: inv, c2: inv})

    # Phase-gate decompositions quoted for the dotted lines of Fig. 2(d).
    r21 = exchange_gate(space, c2, c1)
    s_a1_cminus = space.c[a1] @ c_minus
    s_a1_c1 = space.c[a1] @ space.c[c1]
    checks.append(CheckResult(
        "S_{a1,c-} = S_{a1,c1} R_{c2,c1}",
        np.linalg.norm(s_a1_cminus - s_a1_c1 @ r21) < 1e-10))
    s_a2_cplus = space.c[a2] @ c_plus
    s_a2_c2 = space.c[a2] @ space.c[c2]
    checks.append(CheckResult(
        "S_{a2,c+} = S_{a2,c2} R_{c2,c1}",
        np.linalg.norm(s_a2_cplus - s_a2_c2 @ r21) < 1e-10))

    circuit = (transfer_channel(space, a2, b2, c_plus)
               .then(transfer_channel(space, a1, b1, c_minus))
               .then(transfer_channel(space, c1, b1, a1))
               .then(transfer_channel(space, c2, b2, a2)))
    expected = (init_channel(space, b2, c2)
                .then(init_channel(space, b1, c1))
                .then(unitary_channel(t_gate(space, a1, a2))))
    dist = channel_distance(circuit, expected, space.dim)
    checks.append(CheckResult("circuit = [T_a1a2] after inits", dist < TOL,
                              f"distance={dist:.2e}"))
    checks.append(CheckResult("circuit trace-preserving",
                              circuit.trace_defect() < 1e-10))

    # The consumed magic state leaves (b1,c1) and (b2,c2) initialized.
    rho = np.eye(space.dim, dtype=complex) / space.dim
    out = circuit(rho)
    for bb, cc, nm in ((b1, c1, "ib1c1"), (b2, c2, "ib2c2")):
        op = 1j * space.c[bb] @ space.c[cc]
        val = np.trace(out @ op).real
        checks.append(CheckResult(f"output has {nm} = +1", abs(val - 1) < 1e-9,
                                  f"value={val:.6f}"))

    # The prepared state is the qubit magic state |A> on (c1, c2, b1, b2):
    # the encoding modes of the four-mode qubit code are m1=c1, m2=c2,
    # m3=b1, m4=b2.
    space4 = build_space(4)
    rho_a = magic_state_a(space4, 0, 1, 2, 3)
    x, y, z, s = encoded_qubit_amplitudes(space4, rho_a, 0, 1, 2, 3)
    target = (np.cos(np.pi / 4), np.sin(np.pi / 4), 0.0, 1.0)
    ok = (abs(x - target[0]) < 1e-9 and abs(y - target[1]) < 1e-9
          and abs(z) < 1e-9 and abs(s - 1) < 1e-9)
    checks.append(CheckResult("A-state = (|0> + e^{i pi/4}|1>)/sqrt(2)", ok,
                              f"bloch=({x:.4f},{y:.4f},{z:.4f}), stab={s:.4f}"))

    t = t_gate(space, a1, a2)
    checks.append(CheckResult("T^2 = R up to global phase",
                              phase_aligned_distance(t @ t, exchange_gate(space, a1, a2)) < 1e-10))
    return ValidationReport(checks)


# -- Fig. 2(e) + Table I: the 8-mode stabilizer measurement --------------------

# Measurement-outcome dependent corrections, keyed by the four ancilla-pair
# outcomes (eta_{8,1}, eta_{2,3}, eta_{4,5}, eta_{6,7}); values are data-mode
# index tuples whose product is the correction U.
TABLE_I = {
    (+1, +1, +1, +1): (),
    (-1, -1, +1, +1): (0, 1),
    (+1, -1, -1, +1): (2, 3),
    (+1, +1, -1, -1): (4, 5),
    (-1, +1, +1, -1): (6, 7),
    (-1, +1, -1, +1): (0, 1, 2, 3),
    (+1, -1, +1, -1): (2, 3, 4, 5),
    (-1, -1, -1, -1): (0, 1, 4, 5),
}

# Per-pair linear correction rule: flipping eta_{2,3} alone injects (c1,c2),
# eta_{4,5} injects (c1..c4), eta_{6,7} injects (c1..c6), eta_{8,1} nothing.
# On the 8 patterns reachable without faults this reproduces Table I modulo
# the measured stabilizer; on fault-produced odd patterns it fixes a
# convention.  Order: (eta81, eta23, eta45, eta67).
PAIR_RULE = ((), (0, 1), (0, 1, 2, 3), (0, 1, 2, 3, 4, 5))


def pair_rule_correction(deviation_bits: Sequence[int]) -> tuple[int, ...]:
    acc: set[int] = set()
    for bit, modes in zip(deviation_bits, PAIR_RULE):
        if bit:
            acc ^= set(modes)
    return tuple(sorted(acc))


@dataclass
class StabMeasBranch:
    upat: tuple[int, int, int, int]
    eta: tuple[int, int, int, int]
    probability: float
    data_op: np.ndarray       # 16x16 operator on the data modes
    stab_outcome: int         # -u1 u2 u3 u4


class StabMeasCircuit:
    """Exact 16-mode model of the 8-mode stabilizer measurement circuit.

    Data modes 0..7 carry c1..c8; modes 8..15 carry ancillas a1..a8.
    Ancilla pairs (a2,a3), (a4,a5), (a6,a7), (a8,a1) start in +1 eigenstates
    of i a a'; parity projections read upsilon_i = c_{2i-1} c_{2i} a_{2i-1}
    a_{2i}; finally the same ancilla pairs are measured to give the etas.
    """

    def __init__(self):
        self.space = build_space(16)
        sp = self.space
        self.data = list(range(8))
        anc = [8 + i for i in range(8)]  # a1..a8
        self.anc = anc
        self.pairs = [(anc[1], anc[2]), (anc[3], anc[4]),
                      (anc[5], anc[6]), (anc[7], anc[0])]  # eta23, eta45, eta67, eta81
        self.proj_ops = [
            sp.product([2 * i, 2 * i + 1, anc[2 * i], anc[2 * i + 1]])
            for i in range(4)
        ]
        self.meas_ops = [1j * sp.c[p] @ sp.c[q] for (p, q) in self.pairs]
        # Ancilla ground state: joint +1 eigenvector of the four pair
        # operators.  Ancilla pair operators act on ancilla qubits only (the
        # Jordan-Wigner strings cancel pairwise below them), so the state is
        # computed on a standalone 8-mode space with the same relative order.
        anc_space = build_space(8)
        pairs_local = [(1, 2), (3, 4), (5, 6), (7, 0)]
        proj = anc_space.identity
        for p, q in pairs_local:
            proj = projector(1j * anc_space.c[p] @ anc_space.c[q], +1) @ proj
        evals, evecs = np.linalg.eigh(proj)
        assert abs(evals[-1] - 1.0) < 1e-9 and abs(evals[-2]) < 1e-9
        phi0 = evecs[:, -1]
        # Isometry data -> data (x) ancilla_ground; column d is |d> (x) |phi0>.
        self.anc_init = np.kron(np.eye(16, dtype=complex), phi0.reshape(16, 1))

    def _initial_block(self) -> np.ndarray:
        return self.anc_init

    def branches(self, fault=None) -> list[StabMeasBranch]:
        """All outcome branches, optionally with one inserted fault.

        ``fault`` is (slot, modes): slot "init" applies the mode product
        before the projections, "mid" between projections and ancilla
        measurements, "end" after the measurements.  Recorded outcomes are
        the true ones; callers model recorded-outcome flips themselves.
        """
        sp = self.space
        blocks = [((), self._initial_block())]
        if fault is not None and fault[0] == "init":
            blocks = [((), sp.product(fault[1]) @ self._initial_block())]
        for i in range(4):
            new = []
            for upat, blk in blocks:
                for u in (+1, -1):
                    new.append((upat + (u,), projector(self.proj_ops[i], u) @ blk))
            blocks = new
        if fault is not None and fault[0] == "mid":
            fmat = sp.product(fault[1])
            blocks = [(upat, fmat @ blk) for upat, blk in blocks]
        out = []
        for upat, blk in blocks:
            etas = [((), blk)]
            for i in range(4):
                new = []
                for epat, b2 in etas:
                    for e in (+1, -1):
                        new.append((epat + (e,), projector(self.meas_ops[i], e) @ b2))
                etas = new
            for epat, b2 in etas:
                if fault is not None and fault[0] == "end":
                    b2 = sp.product(fault[1]) @ b2
                nrm2 = float(np.vdot(b2, b2).real)
                if nrm2 < 1e-18:
                    continue
                eta23, eta45, eta67, eta81 = epat
                out.append(StabMeasBranch(
                    upat=upat,
                    eta=(eta81, eta23, eta45, eta67),
                    probability=nrm2 / 16.0,
                    data_op=self._data_factor(b2),
                    stab_outcome=-upat[0] * upat[1] * upat[2] * upat[3],
                ))
        return out

    def _data_factor(self, block: np.ndarray) -> np.ndarray:
        """Split K = D (x) |phi_anc>; returns D (16x16), raising if entangled.

        ``block`` is dim x r with r = 16 data-input columns; reshaped over
        (data_out, anc_out, data_in) the ancilla index must factor out.
        """
        dimd = 16
        k = block.reshape(dimd, dimd, block.shape[1])  # (data_out, anc_out, data_in)
        g = np.transpose(k, (0, 2, 1)).reshape(dimd * block.shape[1], dimd)
        u, s, vh = np.linalg.svd(g, full_matrices=False)
        if s.size > 1 and s[1] > 1e-9 * max(1.0, s[0]):
            raise AssertionError("branch Kraus does not factor over data x ancilla")
        d = (u[:, 0] * s[0]).reshape(dimd, block.shape[1])
        return d

    def stabilizer_projector(self, eta: int) -> np.ndarray:
        space8 = build_space(8)
        return projector(space8.product(range(8)), eta)


def _eta_abs_correction(eta: tuple[int, int, int, int]) -> tuple[int, ...]:
    """Per-pair linear correction of an absolute eta pattern (order eta81,
    eta23, eta45, eta67); agrees with Table I modulo c1..c8 on the eight
    noiselessly reachable patterns."""
    return pair_rule_correction([1 if e == -1 else 0 for e in eta])


def simulate_stab_meas_circuit(flips: dict | None = None) -> ValidationReport:
    """Verify Fig. 2(e) and all eight rows of Table I, optionally with faults.

    Without ``flips`` this checks, branch by branch, that the recorded
    stabilizer outcome is -u12 u34 u56 u78 and that applying the Table-I
    correction leaves exactly the projection onto the measured eigenspace.

    ``flips`` may contain:

    * ``"upsilon"``: list of projection indices (0..3) whose recorded
      outcome is flipped;
    * ``"eta"``: list of pair indices (order eta81, eta23, eta45, eta67)
      whose recorded outcome is flipped;
    * ``"state"``: (slot, modes) with slot in {"init", "mid", "end"} -- a
      mode-product fault inserted before the projections, between
      projections and ancilla measurements, or after the measurements.

    The report then verifies the deviation structure: the recorded
    stabilizer outcome deviates by the upsilon flips plus the fault's parity
    on the relevant modes, and the net data operation after the standard
    correction equals the clean projection times a predictable residual
    monomial (the per-pair rule applied to the recorded-eta deviations,
    times the data part of the fault).
    """
    if flips is not None:
        return _simulate_with_flips(flips)

    circ = StabMeasCircuit()
    checks: list[CheckResult] = []
    branches = circ.branches()
    total_p = sum(b.probability for b in branches)
    checks.append(CheckResult("branch probabilities sum to 1",
                              abs(total_p - 1.0) < 1e-9, f"sum={total_p:.12f}"))

    unreachable = [b for b in branches
                   if b.eta[0] * b.eta[1] * b.eta[2] * b.eta[3] != +1]
    checks.append(CheckResult("noiseless eta product is +1",
                              not unreachable, f"{len(unreachable)} bad branches"))

    space8 = build_space(8)
    seen_rows = set()
    worst = 0.0
    row_fail = []
    for b in branches:
        u_modes = TABLE_I[b.eta]
        seen_rows.add(b.eta)
        corrected = space8.product(u_modes) @ b.data_op
        target = circ.stabilizer_projector(b.stab_outcome)
        # corrected must be proportional to the projector
        alpha = np.trace(target.conj().T @ corrected) / np.trace(target.conj().T @ target)
        dev = np.linalg.norm(corrected - alpha * target)
        worst = max(worst, dev)
        if dev > 1e-9:
            row_fail.append((b.eta, b.upat, dev))
    checks.append(CheckResult(
        "all 8 Table-I rows restore the clean projection",
        len(seen_rows) == 8 and not row_fail,
        f"rows={len(seen_rows)}, worst deviation={worst:.2e}"))

    # U and U * c1..c8 act identically on the projected data state.
    ok = True
    for eta, modes in TABLE_I.items():
        u1 = space8.product(modes)
        u2 = space8.product(modes) @ space8.product(range(8))
        for s in (+1, -1):
            pi = circ.stabilizer_projector(s)
            if phase_aligned_distance(u1 @ pi, u2 @ pi) > 1e-9:
                ok = False
    checks.append(CheckResult("U equivalent to U * (c1..c8) on the code space", ok))

    # Outcome reconstruction: the projected eigenvalue equals -u1 u2 u3 u4,
    # verified implicitly above; spot-check the marginal distribution on a
    # reference (+1 eigenspace) input: outcome -1 never occurs.
    rho_plus = circ.stabilizer_projector(+1)
    rho_plus = rho_plus / np.trace(rho_plus)
    bad_weight = 0.0
    for b in branches:
        if b.stab_outcome == -1:
            m = space8.product(TABLE_I[b.eta]) @ b.data_op
            bad_weight += float(np.trace(m @ rho_plus @ m.conj().T).real)
    checks.append(CheckResult("stabilizer +1 input never reports -1",
                              bad_weight < 1e-9, f"weight={bad_weight:.2e}"))
    return ValidationReport(checks)


def stab_meas_deviation(fault) -> tuple[list[int], list[int]]:
    """Outcome deviations a mode-product fault causes in the 8-mode circuit.

    Returns (delta_upsilon[4], delta_eta[4]); eta order is (eta81, eta23,
    eta45, eta67).  Init-slot faults hit both the projections and the pair
    measurements, mid-slot faults only the measurements, end-slot none.
    """
    if fault is None:
        return [0, 0, 0, 0], [0, 0, 0, 0]
    slot, modes = fault
    quads = [set([2 * i, 2 * i + 1, 8 + 2 * i, 8 + 2 * i + 1]) for i in range(4)]
    pairs = [{15, 8}, {9, 10}, {11, 12}, {13, 14}]  # eta81, eta23, eta45, eta67
    fm = set(modes)
    # Modes appearing an even number of times cancel; callers pass sets.
    dups = [len(fm & q) % 2 for q in quads] if slot == "init" else [0] * 4
    dets = [len(fm & p) % 2 for p in pairs] if slot in ("init", "mid") else [0] * 4
    return dups, dets


def _simulate_with_flips(flips: dict) -> ValidationReport:
    known = {"upsilon", "eta", "state"}
    if not set(flips) <= known:
        raise ValueError(f"unknown flip keys {set(flips) - known}")
    ups = list(flips.get("upsilon", []))
    etas = list(flips.get("eta", []))
    if any(not 0 <= i < 4 for i in ups) or any(not 0 <= k < 4 for k in etas):
        raise ValueError("upsilon/eta indices must be in 0..3")
    fault = flips.get("state")
    if fault is not None:
        slot, modes = fault
        if slot not in ("init", "mid", "end"):
            raise ValueError(f"unknown fault slot {slot!r}")
        if any(not 0 <= m < 16 for m in modes):
            raise ValueError("fault modes must be in 0..15")

    circ = StabMeasCircuit()
    sp8 = build_space(8)
    checks: list[CheckResult] = []

    branches = circ.branches(fault=fault)
    total_p = sum(b.probability for b in branches)
    checks.append(CheckResult("branch probabilities sum to 1",
                              abs(total_p - 1.0) < 1e-9, f"sum={total_p:.12f}"))

    dups, dets = stab_meas_deviation(fault)
    fault_data: set[int] = set()
    if fault is not None:
        fault_data = {m for m in fault[1] if m < 8}
    # Net residual after the experimenter's correction: the per-pair rule on
    # the total eta deviation (fault-induced plus recorded flips) times the
    # data part of the fault.
    eta_dev_bits = [(dets[k] + (1 if k in etas else 0)) % 2 for k in range(4)]
    resid = set(pair_rule_correction(eta_dev_bits)) ^ fault_data
    resid_op = sp8.product(sorted(resid))

    worst = 0.0
    failed = []
    rec_outcomes = {}
    rho_plus = circ.stabilizer_projector(+1)
    rho_plus = rho_plus / np.trace(rho_plus)
    for b in branches:
        rec_eta = tuple(-b.eta[k] if k in etas else b.eta[k] for k in range(4))
        # -prod(upsilon) as reconstructed from the recorded upsilons.
        rec_out = b.stab_outcome * (-1) ** len(ups)
        # True projection eigenvalue: the branch outcome already contains the
        # fault-induced upsilon deviations, so undo them.
        s_true = b.stab_outcome * (-1) ** sum(dups)
        u_rec = sp8.product(_eta_abs_correction(rec_eta))
        corrected = u_rec @ b.data_op
        pred = resid_op @ circ.stabilizer_projector(s_true)
        alpha = np.trace(pred.conj().T @ corrected) / np.trace(pred.conj().T @ pred)
        dev = float(np.linalg.norm(corrected - alpha * pred))
        worst = max(worst, dev)
        if dev > 1e-8:
            failed.append((b.upat, b.eta, dev))
        m = u_rec @ b.data_op
        w = float(np.trace(m @ rho_plus @ m.conj().T).real)
        rec_outcomes[rec_out] = rec_outcomes.get(rec_out, 0.0) + w
    checks.append(CheckResult(
        "net data action = clean projection x predicted residual",
        not failed, f"worst deviation={worst:.2e}, {len(failed)} branches off"))

    # On a +1 input: an init-slot fault shifts the recorded outcome by its
    # full parity (odd data support flips the eigenvalue and the honest
    # readout; odd ancilla support flips the readout alone); mid/end faults
    # never touch this round's record.
    fault_parity = 0
    if fault is not None and fault[0] == "init":
        fault_parity = len(fault[1]) % 2
    expected_rec = (-1) ** (fault_parity + len(ups))
    got = max(rec_outcomes, key=rec_outcomes.get) if rec_outcomes else 0
    checks.append(CheckResult(
        "recorded outcome deviation matches parity bookkeeping",
        abs(rec_outcomes.get(expected_rec, 0.0) - 1.0) < 1e-9 and got == expected_rec,
        f"recorded outcome weights={rec_outcomes}"))
    return ValidationReport(checks)


# -- Sec. VI: Y-state distillation ---------------------------------------------


def y_state(space: ModeSpace, a: int, b: int, c: int, d: int) -> np.ndarray:
    """+1 eigenstate of i c_a c_c and i c_b c_d (the Y-type magic state)."""
    p1 = projector(1j * space.c[a] @ space.c[c], +1)
    p2 = projector(1j * space.c[b] @ space.c[d], +1)
    rho = p1 @ p2
    rho = rho @ rho.conj().T
    return rho / np.trace(rho)


class DistillationCircuit:
    """Fig. 6(b): two Y copies, exchanges of the b and d modes, two parity
    projections; accepted when both outcomes are +1."""

    def __init__(self):
        self.space = build_space(8)
        sp = self.space
        # copy 1 on modes (a1,b1,c1,d1) = (0,1,2,3); copy 2 on (4,5,6,7)
        self.m1 = (0, 1, 2, 3)
        self.m2 = (4, 5, 6, 7)
        self.exchange = exchange_gate(sp, 1, 5) @ exchange_gate(sp, 3, 7)
        self.q1 = sp.product(self.m1)
        self.q2 = sp.product(self.m2)

    def input_state(self, flip1: bool, flip2: bool) -> np.ndarray:
        sp = self.space
        rho = y_state(sp, *self.m1) @ y_state(sp, *self.m2)
        rho = rho / np.trace(rho)
        # The raw-state error flips i a c and i b d together (staying in the
        # abcd = +1 subspace): apply the two-mode operator a b.
        if flip1:
            f = sp.product([0, 1])
            rho = f @ rho @ f.conj().T
        if flip2:
            f = sp.product([4, 5])
            rho = f @ rho @ f.conj().T
        return rho

    def outcome_probabilities(self, flip1: bool, flip2: bool) -> dict:
        sp = self.space
        rho = self.input_state(flip1, flip2)
        rho = self.exchange @ rho @ self.exchange.conj().T
        out = {}
        for s1 in (+1, -1):
            for s2 in (+1, -1):
                pi = projector(self.q1, s1) @ projector(self.q2, s2)
                post = pi @ rho @ pi.conj().T
                out[(s1, s2)] = float(np.trace(post).real)
        return out

    def accepted_output_error(self, flip1: bool, flip2: bool) -> tuple[float, float]:
        """(accept probability, error of copy 1 given accept).

        Copy 1 is read out against the Y state at its post-circuit location.
        """
        sp = self.space
        rho = self.input_state(flip1, flip2)
        rho = self.exchange @ rho @ self.exchange.conj().T
        pi = projector(self.q1, +1) @ projector(self.q2, +1)
        post = pi @ rho @ pi.conj().T
        p = float(np.trace(post).real)
        if p < 1e-15:
            return 0.0, 0.0
        post = post / np.trace(post)
        # Undo the exchanges to read copy 1 in its original frame.
        inv = self.exchange.conj().T
        post = inv @ post @ inv.conj().T
        fid_op = y_state(sp, *self.m1)
        # fidelity of the reduced copy-1 state with Y
        val = float(np.trace(post @ fid_op).real) * 4.0  # rank-4 ambient projector
        return p, 1.0 - min(1.0, val)


def verify_distillation(p: float = 0.1) -> ValidationReport:
    checks = []
    circ = DistillationCircuit()

    probs = circ.outcome_probabilities(False, False)
    checks.append(CheckResult("clean copies always accepted",
                              abs(probs[(+1, +1)] - 1.0) < 1e-9,
                              f"p(+,+)={probs[(+1, +1)]:.6f}"))
    for flips in ((True, False), (False, True)):
        probs = circ.outcome_probabilities(*flips)
        checks.append(CheckResult(
            f"single flip {flips} forces both outcomes to -1",
            abs(probs[(-1, -1)] - 1.0) < 1e-9,
            f"p(-,-)={probs[(-1, -1)]:.6f}"))
    probs = circ.outcome_probabilities(True, True)
    pa, err = circ.accepted_output_error(True, True)
    checks.append(CheckResult("double flip accepted but wrong",
                              abs(probs[(+1, +1)] - 1.0) < 1e-9 and err > 1 - 1e-9,
                              f"accept={probs[(+1, +1)]:.4f}, err={err:.4f}"))
    pa, err = circ.accepted_output_error(False, False)
    checks.append(CheckResult("clean output exact", err < 1e-9, f"err={err:.2e}"))

    # Exact conditional error from the verified truth table.
    accept = (1 - p) ** 2 + p ** 2
    cond = p ** 2 / accept
    expected = p ** 2 / (1 - 2 * p + 2 * p ** 2)
    checks.append(CheckResult(
        "conditional error equals p^2/(1-2p+2p^2)",
        abs(cond - expected) < 1e-12,
        f"p={p}: {cond:.6f}"))
    return ValidationReport(checks)


def distillation_monte_carlo(p: float, accepted_target: int, seed: int = 7) -> tuple[float, int]:
    """Sample the distillation classically using the verified truth table.

    Returns (empirical conditional error, accepted count).  Flips are
    independent per copy with probability p; both-flipped inputs pass
    undetected, single flips are always rejected.
    """
    rng = np.random.default_rng(seed)
    accepted = 0
    wrong = 0
    while accepted < accepted_target:
        batch = max(1024, int((accepted_target - accepted) * 1.2 / ((1 - p) ** 2 + p ** 2)))
        f1 = rng.random(batch) < p
        f2 = rng.random(batch) < p
        acc = f1 == f2
        accepted += int(acc.sum())
        wrong += int((f1 & f2).sum())
    return wrong / accepted, accepted


def verify_duplication() -> ValidationReport:
    """One clean Y copy plus a fiducial second copy duplicates into Y x Y.

    The fiducial initialization and the outcome-dependent phase corrections
    are found by search over pair eigenstates and two-mode corrections; the
    check asserts a combination exists that works for every outcome.
    """
    circ = DistillationCircuit()
    sp = circ.space
    y1 = y_state(sp, *circ.m1)
    target = y1 @ y_state(sp, *circ.m2)

    pair_inits = {
        "ia2b2": (4, 5), "ia2d2": (4, 7), "ib2c2": (5, 6), "ic2d2": (6, 7),
    }
    # Outcome corrections are products of single-mode phase operations (the
    # fault-tolerant primitive), up to two per copy.
    copy1_ops = [()] + [(m,) for m in circ.m1] + [
        (circ.m1[i], circ.m1[j]) for i in range(4) for j in range(i + 1, 4)]
    copy2_ops = [()] + [(m,) for m in circ.m2] + [
        (circ.m2[i], circ.m2[j]) for i in range(4) for j in range(i + 1, 4)]
    corrections = [t1 + t2 for t1 in copy1_ops for t2 in copy2_ops]

    def init_pair(name_pair, sign):
        (x, y) = name_pair
        return projector(1j * sp.c[x] @ sp.c[y], sign)

    for (na, pa), (nb, pb) in [(a, b) for a in pair_inits.items()
                               for b in pair_inits.items() if a[0] < b[0]]:
        if set(pa) & set(pb):
            continue
        for sa in (+1, -1):
            for sb in (+1, -1):
                pi0 = init_pair(pa, sa) @ init_pair(pb, sb)
                rho0 = y1 @ pi0 @ pi0.conj().T
                tr = np.trace(rho0)
                if abs(tr) < 1e-12:
                    continue
                rho0 = rho0 / tr
                rho = circ.exchange @ rho0 @ circ.exchange.conj().T
                ok_all = True
                for s1 in (+1, -1):
                    for s2 in (+1, -1):
                        pi = projector(circ.q1, s1) @ projector(circ.q2, s2)
                        post = pi @ rho @ pi.conj().T
                        w = float(np.trace(post).real)
                        if w < 1e-12:
                            continue
                        post = post / np.trace(post)
                        good = False
                        for corr in corrections:
                            u = sp.product(corr)
                            cand = u @ post @ u.conj().T
                            if trace_norm(cand - target / np.trace(target)) < 1e-8:
                                good = True
                                break
                        if not good:
                            ok_all = False
                if ok_all:
                    return ValidationReport([CheckResult(
                        "duplication yields two Y copies",
                        True,
                        f"init {na}={sa}, {nb}={sb} with outcome corrections")])
    return ValidationReport([CheckResult("duplication yields two Y copies", False,
                                         "no initialization/correction found")])

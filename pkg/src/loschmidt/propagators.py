"""One-period Floquet unitaries: kicked tops, coupled tops, kicked Ising chain,
and generic gate sequences.

A :class:`Propagator` is an ordered factor list; ``factors[0]`` acts first on
the state (i.e. it is the rightmost factor of the written operator product).
Rotation factors are built by exact eigendecomposition of the generator, twist
factors stay diagonal in the S_z basis.  Propagators are immutable and pure to
apply, so ensemble evolution over independent realizations is embarrassingly
parallel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spins import QuantumState, SpinSpace, build_spin_ops

__all__ = [
    "DIM_CAP",
    "Propagator",
    "KickedTopSpec",
    "DoubleTopSpec",
    "KickedIsingSpec",
    "kicked_top_step",
    "double_top_step",
    "kicked_ising_step",
    "gate_sequence",
    "qft_sequence",
    "hadamard_gate",
    "controlled_phase_gate",
    "evolve",
    "project_propagator",
]

DIM_CAP = 16384  # default dense-dimension cap; desk-scale runs all fit


# ---------------------------------------------------------------------------
# factors


def _column_phases(phases, psi):
    # broadcast a phase vector over a vector or a (dim, k) block of columns
    return phases[:, None] * psi if psi.ndim == 2 else phases * psi


class DiagonalPhase:
    """Unimodular diagonal factor."""

    def __init__(self, phases: np.ndarray):
        self.phases = np.asarray(phases, dtype=complex)
        self.dim = self.phases.shape[0]

    def apply(self, psi):
        return _column_phases(self.phases, psi)

    def apply_dagger(self, psi):
        return _column_phases(self.phases.conj(), psi)

    def dense(self):
        return np.diag(self.phases)


class BasisExp:
    """exp(-i theta G) for Hermitian G given by its eigensystem (lam, V)."""

    def __init__(self, V: np.ndarray, lam: np.ndarray, theta: float):
        self.V = V
        self.lam = np.asarray(lam, dtype=float)
        self.theta = float(theta)
        self.phases = np.exp(-1j * self.theta * self.lam)
        self.dim = V.shape[0]

    def apply(self, psi):
        return self.V @ _column_phases(self.phases, self.V.conj().T @ psi)

    def apply_dagger(self, psi):
        return self.V @ _column_phases(self.phases.conj(), self.V.conj().T @ psi)

    def dense(self):
        return (self.V * self.phases) @ self.V.conj().T


class SubsystemFactor:
    """Factor acting on one slot of a bipartite space of shape (n_c, n_e)."""

    def __init__(self, sub, slot: str, shape: tuple[int, int]):
        if slot not in ("c", "e"):
            raise ValueError("slot must be 'c' or 'e'")
        self.sub = sub
        self.slot = slot
        self.shape = shape
        self.dim = shape[0] * shape[1]
        self._diag = sub.phases if isinstance(sub, DiagonalPhase) else None
        self._u = None if self._diag is not None else sub.dense()

    def _apply(self, psi, dagger):
        m = psi.reshape(self.shape)
        if self._diag is not None:
            d = self._diag.conj() if dagger else self._diag
            out = d[:, None] * m if self.slot == "c" else m * d[None, :]
        else:
            u = self._u.conj().T if dagger else self._u
            out = u @ m if self.slot == "c" else m @ u.T
        return out.reshape(self.dim)

    def apply(self, psi):
        return self._apply(psi, dagger=False)

    def apply_dagger(self, psi):
        return self._apply(psi, dagger=True)

    def dense(self):
        u = np.diag(self._diag) if self._diag is not None else self._u
        if self.slot == "c":
            return np.kron(u, np.eye(self.shape[1]))
        return np.kron(np.eye(self.shape[0]), u)


class QubitGate:
    """2x2 unitary on one qubit of an L-qubit register (qubit 0 most significant)."""

    def __init__(self, u: np.ndarray, target: int, n_qubits: int):
        self.u = np.asarray(u, dtype=complex)
        self.target = target
        self.n = n_qubits
        self.dim = 2**n_qubits

    def _apply(self, psi, u):
        t = psi.reshape((2,) * self.n)
        t = np.tensordot(u, t, axes=([1], [self.target]))
        t = np.moveaxis(t, 0, self.target)
        return t.reshape(self.dim)

    def apply(self, psi):
        return self._apply(psi, self.u)

    def apply_dagger(self, psi):
        return self._apply(psi, self.u.conj().T)

    def dense(self):
        mats = [np.eye(2, dtype=complex)] * self.n
        mats[self.target] = self.u
        out = mats[0]
        for m in mats[1:]:
            out = np.kron(out, m)
        return out


class SiteLayer:
    """The same 2x2 unitary applied to every site of an L-qubit register."""

    def __init__(self, u: np.ndarray, n_qubits: int):
        self.u = np.asarray(u, dtype=complex)
        self.n = n_qubits
        self.dim = 2**n_qubits

    def _apply(self, psi, u):
        t = psi.reshape((2,) * self.n)
        for j in range(self.n):
            t = np.moveaxis(np.tensordot(u, t, axes=([1], [j])), 0, j)
        return t.reshape(self.dim)

    def apply(self, psi):
        return self._apply(psi, self.u)

    def apply_dagger(self, psi):
        return self._apply(psi, self.u.conj().T)

    def dense(self):
        out = np.array([[1.0 + 0j]])
        for _ in range(self.n):
            out = np.kron(out, self.u)
        return out


class DenseFactor:
    def __init__(self, U: np.ndarray):
        self.U = np.asarray(U, dtype=complex)
        self.dim = self.U.shape[0]

    def apply(self, psi):
        return self.U @ psi

    def apply_dagger(self, psi):
        return self.U.conj().T @ psi

    def dense(self):
        return self.U


# ---------------------------------------------------------------------------
# propagator


@dataclass
class Propagator:
    """Ordered factor list; ``factors[0]`` is applied to the state first."""

    factors: list
    dim: int
    label: str = ""
    _dense: np.ndarray | None = field(default=None, repr=False)

    def apply(self, psi: np.ndarray) -> np.ndarray:
        for f in self.factors:
            psi = f.apply(psi)
        return psi

    def apply_dagger(self, psi: np.ndarray) -> np.ndarray:
        for f in reversed(self.factors):
            psi = f.apply_dagger(psi)
        return psi

    def dense(self) -> np.ndarray:
        if self._dense is None:
            out = np.eye(self.dim, dtype=complex)
            for f in self.factors:
                out = f.dense() @ out
            self._dense = out
        return self._dense

    def unitarity_defect(self) -> float:
        u = self.dense()
        return float(np.max(np.abs(u.conj().T @ u - np.eye(self.dim))))


def project_propagator(U: Propagator, basis: np.ndarray, label: str | None = None) -> Propagator:
    """Restrict a propagator to the invariant subspace spanned by `basis` columns."""
    sub = basis.conj().T @ U.dense() @ basis
    return Propagator([DenseFactor(sub)], dim=basis.shape[1],
                      label=label or f"{U.label}|sub")


# ---------------------------------------------------------------------------
# kicked-top family


_KT_ALIASES = {
    "KT": "KTdef", "KT_rot": "KT1def", "KT_freeze_chaotic": "KT2def",
    "KT_freeze_regular": "KT3def", "KT_goe_sym": "ktopGOEsym",
    "KT_goe_nosym": "ktopGOEnosym", "KT_gue_freeze": "ktopguefreeze",
}


@dataclass(frozen=True)
class KickedTopSpec:
    """Single kicked-top variant with twist strength alpha, rotation angle
    gamma, perturbation strength eps and spin S.

    Variants (canonical config keys, aliases in parentheses):
      KTdef          (KT)                 rot_y(gamma) . twist_z(alpha+eps)
      KT1def         (KT_rot)             rot_y(gamma+eps) . twist_z(alpha)
      KT2def         (KT_freeze_chaotic)  twist_z(alpha) . rot_y(pi/2) . exp(-i eps (Sx^2-Sz^2)/2S)
      KT3def         (KT_freeze_regular)  twist_z(alpha) . rot_x(eps)
      ktopGOEsym     (KT_goe_sym)         P^1/2 rot_y(pi/2.4) P^1/2 rot_x(eps)
      ktopGOEnosym   (KT_goe_nosym)       P rot_y(pi/2.4) rot_x(eps)
      ktopguefreeze  (KT_gue_freeze)      P rot_y(pi/2.4) exp(-i 10 Sx^2/2S - i(1+eps)Sx)
    with P = exp(-i alpha Sz^2/2S - i Sz).
    """

    variant: str
    S: float
    alpha: float = 0.0
    gamma: float = np.pi / 2
    eps: float = 0.0

    def canonical(self) -> str:
        v = _KT_ALIASES.get(self.variant, self.variant)
        if v not in ("KTdef", "KT1def", "KT2def", "KT3def",
                     "ktopGOEsym", "ktopGOEnosym", "ktopguefreeze"):
            raise ValueError(f"unknown kicked-top variant {self.variant!r}")
        return v


def _twist_phases(space: SpinSpace, coeff: float) -> np.ndarray:
    # exp(-i coeff * Sz^2 / (2S)) in the Sz basis
    return np.exp(-1j * coeff * space.m**2 / (2.0 * space.S))


def _rot(space: SpinSpace, axis: str, angle: float) -> BasisExp:
    w, v = space.axis_eig(axis)
    return BasisExp(v, w, angle)


def _check_cap(dim: int, cap: int | None):
    cap = DIM_CAP if cap is None else cap
    if dim > cap:
        raise ValueError(f"dimension {dim} exceeds cap {cap}")


def kicked_top_step(spec: KickedTopSpec, space: SpinSpace | None = None, *,
                    dim_cap: int | None = None) -> Propagator:
    """One-period propagator of the requested kicked-top variant."""
    if space is None:
        space = build_spin_ops(spec.S)
    _check_cap(space.N, dim_cap)
    v = spec.canonical()
    S, m = space.S, space.m
    if v == "KTdef":
        factors = [DiagonalPhase(_twist_phases(space, spec.alpha + spec.eps)),
                   _rot(space, "y", spec.gamma)]
    elif v == "KT1def":
        factors = [DiagonalPhase(_twist_phases(space, spec.alpha)),
                   _rot(space, "y", spec.gamma + spec.eps)]
    elif v == "KT2def":
        gen = (space.Sx @ space.Sx - space.Sz @ space.Sz) / (2.0 * S)
        lam, vec = np.linalg.eigh(gen)
        factors = [BasisExp(vec, lam, spec.eps),
                   _rot(space, "y", np.pi / 2),
                   DiagonalPhase(_twist_phases(space, spec.alpha))]
    elif v == "KT3def":
        factors = [_rot(space, "x", spec.eps),
                   DiagonalPhase(_twist_phases(space, spec.alpha))]
    elif v in ("ktopGOEsym", "ktopGOEnosym"):
        p_phase = np.exp(-1j * (spec.alpha * m**2 / (2.0 * S) + m))
        rot = _rot(space, "y", np.pi / 2.4)
        if v == "ktopGOEsym":
            half = DiagonalPhase(np.sqrt(p_phase))
            factors = [_rot(space, "x", spec.eps), half, rot, half]
        else:
            factors = [_rot(space, "x", spec.eps), rot, DiagonalPhase(p_phase)]
    elif v == "ktopguefreeze":
        p_phase = np.exp(-1j * (spec.alpha * m**2 / (2.0 * S) + m))
        lam_x, vec_x = space.axis_eig("x")
        # generator 10 Sx^2/(2S) + (1 + eps) Sx, diagonal in the Sx eigenbasis
        gen_eigs = 10.0 * lam_x**2 / (2.0 * S) + (1.0 + spec.eps) * lam_x
        factors = [BasisExp(vec_x, gen_eigs, 1.0),
                   _rot(space, "y", np.pi / 2.4),
                   DiagonalPhase(p_phase)]
    return Propagator(factors, dim=space.N, label=f"{v}(S={space.S}, eps={spec.eps})")


# ---------------------------------------------------------------------------
# coupled double tops


@dataclass(frozen=True)
class DoubleTopSpec:
    """Two coupled kicked tops sharing spin S.

    Variants:
      2KTdef (chaotic_coupled)   coupling(kappa) . rot_y^c(pi/2) . rot_y^e(pi/2)
                                 . exp(-i eps S V),
                                 V = [(Sx_c^2 - Sz_c^2) + (Sx_e^2 - Sz_e^2)]/(2 S^2)
      3KTdef (regular_coupled)   rot_y^c(g_c) . rot_y^e(g_e)
                                 . exp(-i eps Sz_c^2 Sz_e^2 / S^3)
      4KTdef (coupling_perturbed) U_c U_e exp(-i (kappa+eps) Sz_c Sz_e / S),
                                 U_k = rot_y(g_k) . twist_z(alpha_k)
    """

    variant: str
    S: float
    kappa: float = 0.0
    eps: float = 0.0
    alpha_c: float = 0.0
    alpha_e: float = 0.0
    gamma_c: float = np.pi / 2
    gamma_e: float = np.pi / 2

    def canonical(self) -> str:
        alias = {"chaotic_coupled": "2KTdef", "regular_coupled": "3KTdef",
                 "coupling_perturbed": "4KTdef"}
        v = alias.get(self.variant, self.variant)
        if v not in ("2KTdef", "3KTdef", "4KTdef"):
            raise ValueError(f"unknown double-top variant {self.variant!r}")
        return v


def double_top_step(spec: DoubleTopSpec, space: SpinSpace | None = None, *,
                    dim_cap: int | None = None) -> Propagator:
    """One-period propagator of two coupled kicked tops on H_c (x) H_e."""
    if space is None:
        space = build_spin_ops(spec.S)
    n = space.N
    _check_cap(n * n, dim_cap)
    shape = (n, n)
    S, m = space.S, space.m
    v = spec.canonical()

    def coupling(coeff, power=1):
        phases = np.exp(-1j * coeff * np.outer(m**power, m**power)).reshape(n * n)
        return DiagonalPhase(phases)

    if v == "2KTdef":
        gen = (space.Sx @ space.Sx - space.Sz @ space.Sz) / (2.0 * S)
        lam, vec = np.linalg.eigh(gen)
        pert_c = SubsystemFactor(BasisExp(vec, lam, spec.eps), "c", shape)
        pert_e = SubsystemFactor(BasisExp(vec, lam, spec.eps), "e", shape)
        factors = [pert_c, pert_e,
                   SubsystemFactor(_rot(space, "y", np.pi / 2), "e", shape),
                   SubsystemFactor(_rot(space, "y", np.pi / 2), "c", shape),
                   coupling(spec.kappa)]
    elif v == "3KTdef":
        factors = [coupling(spec.eps / S**3, power=2),
                   SubsystemFactor(_rot(space, "y", spec.gamma_e), "e", shape),
                   SubsystemFactor(_rot(space, "y", spec.gamma_c), "c", shape)]
    else:  # 4KTdef
        factors = [coupling((spec.kappa + spec.eps) / S),
                   SubsystemFactor(DiagonalPhase(_twist_phases(space, spec.alpha_e)), "e", shape),
                   SubsystemFactor(_rot(space, "y", spec.gamma_e), "e", shape),
                   SubsystemFactor(DiagonalPhase(_twist_phases(space, spec.alpha_c)), "c", shape),
                   SubsystemFactor(_rot(space, "y", spec.gamma_c), "c", shape)]
    return Propagator(factors, dim=n * n, label=f"{v}(S={space.S}, eps={spec.eps})")


# ---------------------------------------------------------------------------
# kicked Ising chain


@dataclass(frozen=True)
class KickedIsingSpec:
    """Kicked Ising chain: L spins 1/2, periodic boundaries, tilted field."""

    L: int
    J_z: float
    h_x: float
    h_z: float

    def __post_init__(self):
        if self.L < 2:
            raise ValueError("kicked Ising chain needs L >= 2")


def _single_site_field(h_x: float, h_z: float) -> np.ndarray:
    # exp(-i (h_x sigma_x + h_z sigma_z)) evaluated in closed form
    theta = np.hypot(h_x, h_z)
    if theta == 0.0:
        return np.eye(2, dtype=complex)
    nx, nz = h_x / theta, h_z / theta
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    return np.cos(theta) * np.eye(2) - 1j * np.sin(theta) * (nx * sx + nz * sz)


def kicked_ising_step(spec: KickedIsingSpec, *, dim_cap: int | None = None) -> Propagator:
    """U = exp(-i J_z sum sigma_z sigma_z) exp(-i sum (h_x sigma_x + h_z sigma_z)).

    The coupling factor is diagonal in the computational basis; the field
    factor is a tensor power of one single-site 2x2 unitary.
    """
    L = spec.L
    dim = 2**L
    _check_cap(dim, dim_cap)
    idx = np.arange(dim)
    bits = (idx[:, None] >> np.arange(L - 1, -1, -1)) & 1  # site 0 most significant
    s = 1.0 - 2.0 * bits  # sigma_z eigenvalues +-1
    zz = np.sum(s * np.roll(s, -1, axis=1), axis=1)  # periodic
    factors = [SiteLayer(_single_site_field(spec.h_x, spec.h_z), L),
               DiagonalPhase(np.exp(-1j * spec.J_z * zz))]
    return Propagator(factors, dim=dim, label=f"KI(L={L})")


# ---------------------------------------------------------------------------
# gate sequences


class GateSequence(Propagator):
    """Composite of elementary gates U(T) = U_T ... U_2 U_1 with prefix access."""

    def __init__(self, gates: list[Propagator]):
        dims = {g.dim for g in gates}
        if len(dims) > 1:
            raise ValueError("gates must share one dimension")
        dim = dims.pop() if dims else 1
        factors = [f for g in gates for f in g.factors]
        super().__init__(factors, dim=dim, label=f"gates[{len(gates)}]")
        self.gates = list(gates)

    def prefix(self, t: int) -> "GateSequence":
        """U(t) = U_t ... U_1 for 0 <= t <= T."""
        if not (0 <= t <= len(self.gates)):
            raise IndexError("prefix length out of range")
        return GateSequence(self.gates[:t])

    def partial(self, t: int, t0: int) -> Propagator:
        """U(t, t0) = U_t ... U_{t0+1}; identity when t == t0."""
        if t < t0:
            raise ValueError("need t >= t0")
        return GateSequence(self.gates[t0:t])


def gate_sequence(gates: list[Propagator]) -> GateSequence:
    """Compose gates as U(T) = U_T ... U_2 U_1 (first list entry acts first)."""
    return GateSequence(gates)


def hadamard_gate(target: int, n_qubits: int) -> Propagator:
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    return Propagator([QubitGate(h, target, n_qubits)], dim=2**n_qubits,
                      label=f"H{target}")


def _bit_values(n_qubits: int) -> np.ndarray:
    idx = np.arange(2**n_qubits)
    return (idx[:, None] >> np.arange(n_qubits - 1, -1, -1)) & 1


def controlled_phase_gate(j: int, k: int, theta: float, n_qubits: int,
                          flip_target: bool = False) -> Propagator:
    """Diagonal two-qubit gate diag(1,1,1,e^(i theta)) on qubits (j, k).

    With ``flip_target`` the diagonal additionally carries (-1)^bit_k, a
    traceless companion used by the decorrelated transform sequence.
    """
    bits = _bit_values(n_qubits)
    phases = np.exp(1j * theta * bits[:, j] * bits[:, k]).astype(complex)
    if flip_target:
        phases = phases * (1.0 - 2.0 * bits[:, k])
    return Propagator([DiagonalPhase(phases)], dim=2**n_qubits,
                      label=f"B{j}{k}" + ("'" if flip_target else ""))


def _phase_flip_gate(targets, n_qubits: int) -> Propagator:
    bits = _bit_values(n_qubits)
    phases = np.ones(2**n_qubits)
    for q in targets:
        phases = phases * (1.0 - 2.0 * bits[:, q])
    return Propagator([DiagonalPhase(phases.astype(complex))], dim=2**n_qubits,
                      label=f"Z{tuple(targets)}")


def _swap_gate(a: int, b: int, n_qubits: int) -> Propagator:
    dim = 2**n_qubits
    bits = _bit_values(n_qubits)
    weights = 1 << np.arange(n_qubits - 1, -1, -1)
    sw = bits.copy()
    sw[:, [a, b]] = sw[:, [b, a]]
    perm = sw @ weights
    u = np.zeros((dim, dim), dtype=complex)
    u[perm, np.arange(dim)] = 1.0
    return Propagator([DenseFactor(u)], dim=dim, label=f"SWAP{a}{b}")


def qft_sequence(n_qubits: int, improved: bool = False) -> GateSequence:
    """Quantum Fourier transform as a gate list.

    Standard form: n Hadamards plus n(n-1)/2 two-qubit phase gates
    B_{jk} = diag(1,1,1,e^(i pi / 2^(k-j))), then a swap layer, so the product
    equals the DFT matrix exactly.  The ``improved`` variant folds a traceless
    phase flip into every B gate (compensated once per block), which
    decorrelates the partial products without changing the total unitary.
    """
    gates: list[Propagator] = []
    for j in range(n_qubits):
        gates.append(hadamard_gate(j, n_qubits))
        flipped = []
        for k in range(j + 1, n_qubits):
            theta = np.pi / 2 ** (k - j)
            gates.append(controlled_phase_gate(j, k, theta, n_qubits,
                                               flip_target=improved))
            flipped.append(k)
        if improved and flipped:
            gates.append(_phase_flip_gate(flipped, n_qubits))
    for a in range(n_qubits // 2):
        gates.append(_swap_gate(a, n_qubits - 1 - a, n_qubits))
    return gate_sequence(gates)


# ---------------------------------------------------------------------------
# evolution


def evolve(state: QuantumState, U: Propagator, steps: int) -> list[QuantumState]:
    """Trajectory [psi(0), psi(1), ..., psi(steps)] under repeated application."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    psi = state.amplitudes
    out = [state]
    for _ in range(steps):
        psi = U.apply(psi)
        out.append(QuantumState(psi, state.space))
    return out

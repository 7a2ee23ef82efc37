"""Spin-S operator algebra, quantum states and bipartite density-matrix tools.

Everything lives in the S_z eigenbasis ordered m = -S..S (ascending), which
keeps twist kernels exactly diagonal.  Values are immutable after
construction and all operations are pure functions, so concurrent reads are
safe.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

__all__ = [
    "SpinSpace",
    "QuantumState",
    "DensityMatrix",
    "BipartiteLayout",
    "build_spin_ops",
    "coherent_state",
    "random_state",
    "symmetry_basis",
    "project_symmetry_subspace",
    "cat_state",
    "partial_trace",
    "pure_density",
    "save_state",
    "load_state",
]

NORM_TOL = 1e-12
TRACE_DRIFT_TOL = 1e-8
PSD_TOL = 1e-10


@dataclass
class SpinSpace:
    """Spin magnitude S, dimension N = 2S+1 and dense spin matrices."""

    S: float
    N: int
    Sx: np.ndarray
    Sy: np.ndarray
    Sz: np.ndarray
    m: np.ndarray  # Sz eigenvalues, ascending
    _axis_cache: dict = field(default_factory=dict, repr=False)

    @property
    def hbar(self) -> float:
        """Effective Planck constant 1/S of the kicked-top family."""
        return 1.0 / self.S

    def axis_eig(self, axis: str):
        """Eigenvalues/vectors of Sx or Sy (cached; exact tridiagonal solve).

        Used for exact exponentiation of rotation generators; avoids the
        series-truncation error that would pollute freeze plateaus.
        """
        if axis not in self._axis_cache:
            n = self.N
            if axis == "x":
                # Sx is real symmetric tridiagonal in the Sz basis.
                off = np.real(np.diagonal(self.Sx, offset=1)).copy()
                w, v = eigh_tridiagonal(np.zeros(n), off, lapack_driver="stebz")
                vecs = v.astype(complex)
            elif axis == "y":
                # D Sy D^dag with D = diag(i^k) is real symmetric tridiagonal.
                off = np.imag(np.diagonal(self.Sy, offset=1)).copy()
                w, v = eigh_tridiagonal(np.zeros(n), off, lapack_driver="stebz")
                d = 1j ** np.arange(n)
                vecs = (d.conj()[:, None]) * v
            else:
                raise ValueError(f"unknown axis {axis!r}")
            self._axis_cache[axis] = (w, np.ascontiguousarray(vecs))
        return self._axis_cache[axis]


@dataclass(frozen=True)
class QuantumState:
    """Unit-norm complex amplitude vector tagged with its Hilbert space."""

    amplitudes: np.ndarray
    space: str = ""

    def __post_init__(self):
        nrm = np.linalg.norm(self.amplitudes)
        if abs(nrm - 1.0) > 1e-10:
            raise ValueError(f"state norm {nrm} deviates from 1 beyond tolerance")

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def overlap(self, other: "QuantumState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def _normalized(vec: np.ndarray, space: str = "") -> QuantumState:
    nrm = np.linalg.norm(vec)
    if nrm == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return QuantumState(np.asarray(vec, dtype=complex) / nrm, space)


@dataclass
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix."""

    matrix: np.ndarray
    _purity: float | None = field(default=None, repr=False)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        tr = np.trace(self.matrix).real
        drift = abs(tr - 1.0)
        if drift > TRACE_DRIFT_TOL:
            raise ValueError(f"density-matrix trace drift {drift:.3e} exceeds {TRACE_DRIFT_TOL}")
        if drift > 0:
            self.matrix = self.matrix / tr

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def purity(self) -> float:
        if self._purity is None:
            self._purity = float(np.sum(np.abs(self.matrix) ** 2))
        return self._purity

    def validate(self, psd_tol: float = PSD_TOL) -> None:
        h = np.max(np.abs(self.matrix - self.matrix.conj().T))
        if h > 1e-10:
            raise ValueError(f"density matrix not Hermitian within 1e-10 (dev {h:.2e})")
        w = np.linalg.eigvalsh(self.matrix)
        if w.min() < -psd_tol:
            raise ValueError(f"negative eigenvalue {w.min():.3e} below -{psd_tol}")


@dataclass(frozen=True)
class BipartiteLayout:
    """Index bookkeeping for H_c (x) H_e; flat index = j * n_e + nu."""

    n_c: int
    n_e: int

    @property
    def dim(self) -> int:
        return self.n_c * self.n_e

    def flat(self, j: int, nu: int) -> int:
        if not (0 <= j < self.n_c and 0 <= nu < self.n_e):
            raise IndexError("subsystem index out of range")
        return j * self.n_e + nu

    def split(self, k: int) -> tuple[int, int]:
        if not (0 <= k < self.dim):
            raise IndexError("flat index out of range")
        return divmod(k, self.n_e)


def build_spin_ops(S) -> SpinSpace:
    """Dense spin matrices for magnitude S (half-integer, S > 0).

    S_z = diag(-S..S); the ladder operators follow
    (S+)_{m+1,m} = sqrt(S(S+1) - m(m+1)).
    """
    twoS = 2 * S
    if abs(twoS - round(twoS)) > 1e-12 or S <= 0:
        raise ValueError(f"S must be a positive half-integer, got {S}")
    S = round(twoS) / 2.0
    n = int(round(twoS)) + 1
    m = np.arange(n, dtype=float) - S
    c = np.sqrt(S * (S + 1.0) - m[:-1] * (m[:-1] + 1.0))  # <m+1|S+|m>
    Sp = np.zeros((n, n), dtype=complex)
    Sp[np.arange(1, n), np.arange(n - 1)] = c
    Sm = Sp.conj().T
    Sx = (Sp + Sm) / 2.0
    Sy = (Sp - Sm) / 2j
    Sz = np.diag(m).astype(complex)
    return SpinSpace(S=S, N=n, Sx=Sx, Sy=Sy, Sz=Sz, m=m)


def coherent_state(space: SpinSpace, theta: float, phi: float) -> QuantumState:
    """SU(2) coherent state |theta, phi> centered at that sphere point.

    c_m = binom(2S, S+m)^(1/2) cos^(S+m)(theta/2) sin^(S-m)(theta/2) e^(-i m phi);
    log-binomials keep this stable for large S.
    """
    if not (0.0 <= theta <= np.pi):
        raise ValueError("theta must lie in [0, pi]")
    S, m = space.S, space.m
    twoS = int(round(2 * S))
    k = m + S  # 0..2S
    logbin = gammaln(twoS + 1) - gammaln(k + 1) - gammaln(twoS - k + 1)
    co, si = np.cos(theta / 2.0), np.sin(theta / 2.0)
    with np.errstate(divide="ignore"):
        logc = 0.5 * logbin \
            + (S + m) * (np.log(co) if co > 0 else -np.inf) \
            + (S - m) * (np.log(si) if si > 0 else -np.inf)
    amps = np.where(np.isneginf(logc), 0.0, np.exp(logc - logc.max()))
    amps = amps.astype(complex) * np.exp(-1j * m * phi)
    return _normalized(amps, space=f"spin:{S}")


def random_state(dim: int, seed) -> QuantumState:
    """Normalized vector of iid complex Gaussian amplitudes (deterministic in seed)."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = np.random.default_rng(seed)
    vec = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return _normalized(vec)


def symmetry_basis(space: SpinSpace, subspace: str) -> np.ndarray:
    """Orthonormal basis (columns) of the EE/OO/OE invariant subspace.

    Subspaces of the gamma = pi/2 kicked top for even S:
      EE: |0>, (|2m> + |-2m>)/sqrt2            dim S/2 + 1
      OO: (|2m-1> - |-(2m-1)>)/sqrt2           dim S/2
      OE: (|2m> - |-2m>)/sqrt2,
          (|2m-1> + |-(2m-1)>)/sqrt2           dim S
    """
    S = space.S
    if abs(S - round(S)) > 1e-12 or int(round(S)) % 2 != 0:
        raise ValueError("symmetry subspaces are defined for even integer S only")
    Si = int(round(S))
    n = space.N

    def basis_vec(pairs):
        v = np.zeros(n, dtype=complex)
        for m_val, w in pairs:
            v[int(m_val + Si)] = w
        return v

    cols = []
    r = 1.0 / np.sqrt(2.0)
    if subspace == "EE":
        cols.append(basis_vec([(0, 1.0)]))
        for m in range(1, Si // 2 + 1):
            cols.append(basis_vec([(2 * m, r), (-2 * m, r)]))
    elif subspace == "OO":
        for m in range(1, Si // 2 + 1):
            cols.append(basis_vec([(2 * m - 1, r), (-(2 * m - 1), -r)]))
    elif subspace == "OE":
        for m in range(1, Si // 2 + 1):
            cols.append(basis_vec([(2 * m, r), (-2 * m, -r)]))
        for m in range(1, Si // 2 + 1):
            cols.append(basis_vec([(2 * m - 1, r), (-(2 * m - 1), r)]))
    else:
        raise ValueError(f"unknown subspace {subspace!r}; expected EE, OO or OE")
    return np.column_stack(cols)


def project_symmetry_subspace(state: QuantumState, space: SpinSpace, subspace: str) -> QuantumState:
    """Normalized projection of `state` onto the chosen invariant subspace."""
    B = symmetry_basis(space, subspace)
    coeff = B.conj().T @ state.amplitudes
    nrm = np.linalg.norm(coeff)
    if nrm < 1e-14:
        raise ValueError(f"state has zero component in the {subspace} subspace")
    return QuantumState(B @ (coeff / nrm), space=f"{state.space}:{subspace}")


def cat_state(space_c: SpinSpace, space_e: SpinSpace, packet1, packet2, env_packet) -> QuantumState:
    """(|psi_c1> + |psi_c2>) (x) |psi_e> normalized with the exact overlap."""
    if tuple(packet1) == tuple(packet2):
        raise ValueError("cat state requires two distinct packets")
    p1 = coherent_state(space_c, *packet1).amplitudes
    p2 = coherent_state(space_c, *packet2).amplitudes
    env = coherent_state(space_e, *env_packet).amplitudes
    overlap = np.vdot(p1, p2)
    central = (p1 + p2) / np.sqrt(2.0 * (1.0 + overlap.real))
    return QuantumState(np.kron(central, env), space=f"cat:{space_c.S}x{space_e.S}")


def pure_density(state: QuantumState) -> DensityMatrix:
    v = state.amplitudes
    return DensityMatrix(np.outer(v, v.conj()))


def partial_trace(rho: DensityMatrix, layout: BipartiteLayout, keep: str = "central") -> DensityMatrix:
    """Reduced density matrix; preserves trace and Hermiticity."""
    if rho.dim != layout.dim:
        raise ValueError(f"density matrix dim {rho.dim} != layout dim {layout.dim}")
    r = rho.matrix.reshape(layout.n_c, layout.n_e, layout.n_c, layout.n_e)
    if keep in ("central", "c"):
        red = np.einsum("ajbj->ab", r)
    elif keep in ("environment", "e"):
        red = np.einsum("jajb->ab", r)
    else:
        raise ValueError(f"keep must be 'central' or 'environment', got {keep!r}")
    return DensityMatrix(red)


def partial_trace_pure(vec: np.ndarray, layout: BipartiteLayout, keep: str = "central") -> np.ndarray:
    """Reduced matrix of a pure state without forming the full density matrix."""
    psi = vec.reshape(layout.n_c, layout.n_e)
    if keep in ("central", "c"):
        return psi @ psi.conj().T
    if keep in ("environment", "e"):
        return psi.T @ psi.conj()
    raise ValueError(f"keep must be 'central' or 'environment', got {keep!r}")


# ---------------------------------------------------------------------------
# serialization: columnar binary (.npz) and JSON with interleaved re/im


def _header(kind, dim, basis, params):
    return {"kind": kind, "dim": int(dim), "basis": basis, "params": params or {}}


def save_state(path, obj, *, basis: str = "Sz:m_ascending", params: dict | None = None) -> None:
    """Write a state or density matrix to .npz (binary) or .json."""
    path = str(path)
    if isinstance(obj, QuantumState):
        kind, data = "state", obj.amplitudes
    elif isinstance(obj, DensityMatrix):
        kind, data = "density", obj.matrix
    else:
        raise TypeError("save_state accepts QuantumState or DensityMatrix")
    head = _header(kind, data.shape[0], basis, params)
    if path.endswith(".json"):
        flat = np.ravel(data, order="C")
        inter = np.empty(2 * flat.size)
        inter[0::2], inter[1::2] = flat.real, flat.imag
        with open(path, "w") as fh:
            json.dump({"header": head, "re_im": inter.tolist()}, fh)
    else:
        np.savez(path if path.endswith(".npz") else path + ".npz",
                 header=json.dumps(head), re=np.ascontiguousarray(data.real),
                 im=np.ascontiguousarray(data.imag))


def load_state(path):
    """Inverse of :func:`save_state`; returns (object, header dict)."""
    path = str(path)
    if path.endswith(".json"):
        with open(path) as fh:
            blob = json.load(fh)
        head = blob["header"]
        inter = np.asarray(blob["re_im"])
        flat = inter[0::2] + 1j * inter[1::2]
        dim = head["dim"]
        data = flat.reshape((dim, dim)) if head["kind"] == "density" else flat
    else:
        with np.load(path) as npz:
            head = json.loads(str(npz["header"]))
            data = npz["re"] + 1j * npz["im"]
    if head["kind"] == "density":
        return DensityMatrix(data), head
    return QuantumState(data), head

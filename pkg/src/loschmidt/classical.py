"""Classical echo dynamics: map zoo, trajectory-ensemble fidelity, Lyapunov
spectra, correlation integrals and the dephasing (semiclassical) fidelity.

Torus maps use double precision with explicit mod-1 wrapping; the experiments
are statistical, so bit-exact reversibility is not attempted.  Trajectory
propagation is data-parallel over points and deterministic for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

__all__ = [
    "KickedTopMap",
    "SawtoothMap",
    "Cat4DMap",
    "CAT_DOUBLY_HYPERBOLIC",
    "CAT_LOXODROMIC",
    "classical_kicked_top_map",
    "sawtooth_map",
    "cat4d_map",
    "TrajectoryEnsemble",
    "uniform_sphere",
    "sphere_gaussian_ensemble",
    "box_ensemble",
    "classical_fidelity",
    "LyapunovSpectrum",
    "lyapunov_spectrum",
    "classical_correlation_integral",
    "cascade_prediction",
    "dephasing_fidelity",
    "classical_lr_fidelity",
    "kicked_top_fixed_points",
]


# ---------------------------------------------------------------------------
# maps


class KickedTopMap:
    """Area-preserving sphere map: twist about z by (alpha + eps) z, then
    rotation about y by gamma (same order the quantum factors act)."""

    kind = "kicked-top-sphere"
    dim = 3

    def __init__(self, alpha: float, gamma: float, eps: float = 0.0):
        self.alpha, self.gamma, self.eps = alpha, gamma, eps
        self.beta = alpha + eps

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        return self.step(pts)

    def step(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
        ang = self.beta * z
        c, s = np.cos(ang), np.sin(ang)
        x1, y1 = x * c - y * s, x * s + y * c
        cg, sg = np.cos(self.gamma), np.sin(self.gamma)
        out = np.stack([x1 * cg + z * sg, y1, -x1 * sg + z * cg], axis=1)
        out /= np.linalg.norm(out, axis=1, keepdims=True)
        return out

    def inverse_step(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
        cg, sg = np.cos(self.gamma), np.sin(self.gamma)
        x1, z0 = x * cg - z * sg, x * sg + z * cg
        ang = self.beta * z0
        c, s = np.cos(ang), np.sin(ang)
        out = np.stack([x1 * c + y * s, -x1 * s + y * c, z0], axis=1)
        out /= np.linalg.norm(out, axis=1, keepdims=True)
        return out

    def jacobian(self, pts: np.ndarray) -> np.ndarray:
        """Per-point 3x3 tangent maps (ambient representation)."""
        pts = np.atleast_2d(pts)
        n = pts.shape[0]
        x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
        ang = self.beta * z
        c, s = np.cos(ang), np.sin(ang)
        jt = np.zeros((n, 3, 3))
        jt[:, 0, 0], jt[:, 0, 1] = c, -s
        jt[:, 0, 2] = -self.beta * (x * s + y * c)
        jt[:, 1, 0], jt[:, 1, 1] = s, c
        jt[:, 1, 2] = self.beta * (x * c - y * s)
        jt[:, 2, 2] = 1.0
        cg, sg = np.cos(self.gamma), np.sin(self.gamma)
        rot = np.array([[cg, 0.0, sg], [0.0, 1.0, 0.0], [-sg, 0.0, cg]])
        return np.einsum("ab,nbc->nac", rot, jt)


class SawtoothMap:
    """p' = p + K (theta - pi), theta' = theta + p' (mod 2 pi); p lives on
    [-pi L, pi L) for finite L and on the infinite cylinder for L = None."""

    kind = "sawtooth"
    dim = 2

    def __init__(self, K: float, L: float | None = 1):
        self.K, self.L = K, L

    def __call__(self, pts):
        return self.step(pts)

    def _wrap_p(self, p):
        if self.L is None or np.isinf(self.L):
            return p
        span = 2.0 * np.pi * self.L
        return (p + np.pi * self.L) % span - np.pi * self.L

    def step(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        theta, p = pts[:, 0], pts[:, 1]
        p1 = self._wrap_p(p + self.K * (theta - np.pi))
        th1 = (theta + p1) % (2.0 * np.pi)
        return np.stack([th1, p1], axis=1)

    def inverse_step(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        th1, p1 = pts[:, 0], pts[:, 1]
        theta = (th1 - p1) % (2.0 * np.pi)
        p = self._wrap_p(p1 - self.K * (theta - np.pi))
        return np.stack([theta, p], axis=1)

    def jacobian(self, pts: np.ndarray) -> np.ndarray:
        n = np.atleast_2d(pts).shape[0]
        j = np.array([[1.0 + self.K, 1.0], [self.K, 1.0]])  # d(th',p')/d(th,p)
        return np.broadcast_to(j, (n, 2, 2)).copy()

    def lyapunov_exact(self) -> float:
        tr = 2.0 + self.K
        return float(np.log((tr + np.sqrt(tr**2 - 4.0)) / 2.0))


CAT_DOUBLY_HYPERBOLIC = np.array([
    [2, -2, -1, 0],
    [-2, 3, 1, 0],
    [-1, 2, 2, 1],
    [2, -2, 0, 1]], dtype=float)

CAT_LOXODROMIC = np.array([
    [0, 1, 0, 0],
    [0, 1, 1, 0],
    [1, -1, 1, 1],
    [-1, -1, -2, 0]], dtype=float)


class Cat4DMap:
    """4-volume preserving automorphism of the 4-torus, x' = C x (mod 1),
    optionally followed by the shear kick x1 += eps sin(2 pi x3)."""

    kind = "cat4d"
    dim = 4

    def __init__(self, matrix: np.ndarray, eps: float = 0.0):
        self.C = np.asarray(matrix, dtype=float)
        if abs(abs(np.linalg.det(self.C)) - 1.0) > 1e-9:
            raise ValueError("cat map matrix must have unit determinant")
        self.Cinv = np.linalg.inv(self.C)
        self.eps = eps

    def __call__(self, pts):
        return self.step(pts)

    def step(self, pts: np.ndarray) -> np.ndarray:
        out = (np.atleast_2d(pts) @ self.C.T) % 1.0
        if self.eps:
            out[:, 0] = (out[:, 0] + self.eps * np.sin(2.0 * np.pi * out[:, 2])) % 1.0
        return out

    def inverse_step(self, pts: np.ndarray) -> np.ndarray:
        out = np.atleast_2d(pts).copy()
        if self.eps:
            out[:, 0] = (out[:, 0] - self.eps * np.sin(2.0 * np.pi * out[:, 2])) % 1.0
        return (out @ self.Cinv.T) % 1.0

    def jacobian(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        n = pts.shape[0]
        j = np.broadcast_to(self.C, (n, 4, 4)).copy()
        if self.eps:
            x3 = (pts @ self.C.T)[:, 2] % 1.0
            shear = np.tile(np.eye(4), (n, 1, 1))
            shear[:, 0, 2] = 2.0 * np.pi * self.eps * np.cos(2.0 * np.pi * x3)
            j = np.einsum("nab,nbc->nac", shear, j)
        return j


class KickedTopFreezeMap:
    """Sphere map of the residual-perturbation top: rotation about x by eps,
    then twist about z by alpha z (the unperturbed motion is the pure twist)."""

    kind = "kicked-top-freeze"
    dim = 3

    def __init__(self, alpha: float, eps: float = 0.0):
        self.alpha, self.eps = alpha, eps

    def __call__(self, pts):
        return self.step(pts)

    def _rot_x(self, pts, angle):
        x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
        c, s = np.cos(angle), np.sin(angle)
        return np.stack([x, y * c - z * s, y * s + z * c], axis=1)

    def _twist(self, pts, sign=1.0):
        x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
        ang = sign * self.alpha * z
        c, s = np.cos(ang), np.sin(ang)
        return np.stack([x * c - y * s, x * s + y * c, z], axis=1)

    def step(self, pts):
        out = self._twist(self._rot_x(np.atleast_2d(pts), self.eps))
        return out / np.linalg.norm(out, axis=1, keepdims=True)

    def inverse_step(self, pts):
        out = self._rot_x(self._twist(np.atleast_2d(pts), sign=-1.0), -self.eps)
        return out / np.linalg.norm(out, axis=1, keepdims=True)


def classical_kicked_top_map(alpha: float, gamma: float, eps: float = 0.0) -> KickedTopMap:
    return KickedTopMap(alpha, gamma, eps)


def sawtooth_map(K: float, L: float | None = 1) -> SawtoothMap:
    return SawtoothMap(K, L)


def cat4d_map(which: str = "doubly-hyperbolic", eps: float = 0.0) -> Cat4DMap:
    mats = {"doubly-hyperbolic": CAT_DOUBLY_HYPERBOLIC, "loxodromic": CAT_LOXODROMIC}
    return Cat4DMap(mats[which], eps)


# ---------------------------------------------------------------------------
# ensembles


@dataclass
class TrajectoryEnsemble:
    """Weighted phase-space point set with an optional density descriptor."""

    points: np.ndarray
    weights: np.ndarray | None = None
    density: object = None           # callable rho(points) for Gaussian type
    support: object = None           # (lo, hi) arrays for characteristic type
    descriptor: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        n = self.points.shape[0]
        if self.weights is None:
            self.weights = np.full(n, 1.0 / n)
        else:
            self.weights = np.asarray(self.weights, dtype=float)
            if np.any(self.weights < 0):
                raise ValueError("weights must be nonnegative")
            self.weights = self.weights / self.weights.sum()

    def save(self, path) -> None:
        np.savez(path, points=self.points, weights=self.weights,
                 descriptor=repr(self.descriptor))


def uniform_sphere(n: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    z = rng.uniform(-1.0, 1.0, n)
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    r = np.sqrt(1.0 - z**2)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def sphere_gaussian_ensemble(theta0: float, phi0: float, S: float, n: int,
                             seed) -> TrajectoryEnsemble:
    """Samples of the square-normalized coherent-packet density on the sphere.

    rho(theta, phi) = sqrt(2S/pi) exp(-S[(theta-theta0)^2
                     + (phi-phi0)^2 sin^2 theta]); points are drawn from
    rho^2 (a probability density), which makes the overlap estimator exact.
    """
    rng = np.random.default_rng(seed)
    sd_t = 1.0 / np.sqrt(4.0 * S)
    sd_p = 1.0 / (np.sqrt(4.0 * S) * np.sin(theta0))
    th = rng.normal(theta0, sd_t, n)
    ph = rng.normal(phi0, sd_p, n)
    pts = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1)

    def density(p):
        p = np.atleast_2d(p)
        z = np.clip(p[:, 2], -1.0, 1.0)
        theta = np.arccos(z)
        phi = np.arctan2(p[:, 1], p[:, 0])
        dphi = (phi - phi0 + np.pi) % (2.0 * np.pi) - np.pi
        arg = (theta - theta0) ** 2 + dphi**2 * np.sin(theta) ** 2
        return np.sqrt(2.0 * S / np.pi) * np.exp(-S * arg)

    return TrajectoryEnsemble(points=pts, density=density,
                              descriptor={"type": "gaussian-sphere",
                                          "theta0": theta0, "phi0": phi0, "S": S})


def box_ensemble(lo, hi, n: int, seed) -> TrajectoryEnsemble:
    """Characteristic-set density: uniform samples of a coordinate box."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(lo, hi, size=(n, lo.shape[0]))
    return TrajectoryEnsemble(points=pts, support=(lo, hi),
                              descriptor={"type": "box", "lo": lo.tolist(),
                                          "hi": hi.tolist()})


# ---------------------------------------------------------------------------
# classical fidelity


def classical_fidelity(map0, map_eps, ensemble: TrajectoryEnsemble, tmax: int,
                       chunk: int = 250_000):
    """F_cl(t) for t = 0..tmax with standard errors.

    Characteristic-set densities: forward-perturbed then backward-unperturbed
    propagation, return-fraction estimator.  Gaussian densities: overlap of
    the initial density with the echo points, importance-weighted (the points
    are distributed as rho^2, so F = E[rho(echo(y))/rho(y)]).  Points are
    processed in chunks to keep the echo loop cache-resident.
    """
    pts0 = ensemble.points
    n = pts0.shape[0]
    if ensemble.support is None and ensemble.density is None:
        raise ValueError("ensemble needs either a support box or a density")
    char = ensemble.support is not None
    if char:
        lo, hi = ensemble.support
    acc = np.zeros(tmax + 1)
    acc2 = np.zeros(tmax + 1)
    for start in range(0, n, chunk):
        blk = pts0[start:start + chunk]
        fwd = blk.copy()
        rho0 = None if char else ensemble.density(blk)
        for t in range(1, tmax + 1):
            fwd = map_eps.step(fwd)
            echo = fwd
            for _ in range(t):
                echo = map0.inverse_step(echo)
            if char:
                inside = np.all((echo >= lo) & (echo < hi), axis=1)
                acc[t] += float(np.sum(inside))
                acc2[t] += float(np.sum(inside))
            else:
                ratio = ensemble.density(echo) / rho0
                acc[t] += float(np.sum(ratio))
                acc2[t] += float(np.sum(ratio**2))
    F = acc / n
    F[0] = 1.0
    var = np.maximum(acc2 / n - F**2, 0.0)
    se = np.sqrt(var / n)
    se[0] = 0.0
    return F, se


# ---------------------------------------------------------------------------
# Lyapunov spectra


@dataclass
class LyapunovSpectrum:
    exponents: np.ndarray        # descending per-step rates
    history: np.ndarray          # running estimates, shape (n_checks, d)
    converged: bool

    def positive(self, tol: float = 1e-6) -> np.ndarray:
        return self.exponents[self.exponents > tol]


def lyapunov_spectrum(mp, n_steps: int = 2000, n_transient: int = 100,
                      seed=0, x0: np.ndarray | None = None) -> LyapunovSpectrum:
    """QR-reorthogonalized tangent propagation along one trajectory."""
    rng = np.random.default_rng(seed)
    if x0 is None:
        if mp.dim == 3:
            x0 = uniform_sphere(1, rng)[0]
        else:
            x0 = rng.uniform(0.0, 1.0, mp.dim)
            if mp.kind == "sawtooth":
                x0 = np.array([rng.uniform(0, 2 * np.pi), rng.uniform(-1, 1)])
    x = np.atleast_2d(np.asarray(x0, dtype=float))
    for _ in range(n_transient):
        x = mp.step(x)
    d = mp.dim
    q = np.eye(d)
    sums = np.zeros(d)
    history = []
    for k in range(1, n_steps + 1):
        j = mp.jacobian(x)[0]
        q, r = np.linalg.qr(j @ q)
        diag = np.diagonal(r)
        q = q * np.sign(np.where(diag == 0, 1.0, diag))
        sums += np.log(np.abs(np.where(diag == 0, 1.0, diag)))
        x = mp.step(x)
        if k % max(1, n_steps // 50) == 0:
            history.append(sums / k)
    exps = np.sort(sums / n_steps)[::-1]
    hist = np.array(history)
    converged = True
    if hist.shape[0] >= 3:
        tail = hist[-hist.shape[0] // 3:]
        lead = np.sort(tail, axis=1)[:, ::-1][:, 0]
        ref = abs(exps[0]) if abs(exps[0]) > 1e-12 else 1.0
        converged = bool(np.ptp(lead) / ref < 0.01) if ref > 1e-9 else True
    return LyapunovSpectrum(exponents=exps, history=hist, converged=converged)


# ---------------------------------------------------------------------------
# correlation integrals and transport coefficient


def classical_correlation_integral(mp, v, n_points: int = 10**5, tmax: int = 200,
                                   seed=0, plateau_window: tuple = (30, 120)):
    """C_cl(t) and running transport sums over the uniform invariant measure.

    Returns (C, sigma_windowed, sigma_variance, sigma_cl) where ``sigma_cl``
    is the plateau of the variance-based estimator
    (<Sigma_t^2> - <Sigma_t>^2) / 2t averaged over ``plateau_window``.
    """
    if mp.dim == 3:
        pts = uniform_sphere(n_points, seed)
    else:
        rng = np.random.default_rng(seed)
        pts = rng.uniform(0.0, 1.0, size=(n_points, mp.dim))
    v0 = v(pts)
    vbar = float(np.mean(v0))
    C = np.empty(tmax + 1)
    C[0] = float(np.mean(v0 * v0)) - vbar**2
    cum = v0.copy()
    sigma_var = np.zeros(tmax + 1)
    x = pts
    for t in range(1, tmax + 1):
        x = mp.step(x)
        vt = v(x)
        C[t] = float(np.mean(v0 * vt)) - vbar * float(np.mean(vt))
        sigma_var[t] = (float(np.mean(cum**2)) - float(np.mean(cum)) ** 2) / (2.0 * t)
        cum = cum + vt
    sigma_win = np.zeros(tmax + 1)
    run = 0.0
    for t in range(1, tmax + 1):
        sigma_win[t] = C[0] / 2.0 + run
        run += C[t]
    w0, w1 = plateau_window
    w1 = min(w1, tmax)
    sigma_cl = float(np.mean(sigma_var[w0:w1 + 1]))
    return C, sigma_win, sigma_var, sigma_cl


def cascade_prediction(spectrum: LyapunovSpectrum, nu_widths, gamma_widths,
                       eps: float, t):
    """Multi-exponent echo decay F(t) ~ prod_{j: t_j < t} exp(-lam_j (t - t_j))
    with onset times t_j = (1/lam_j) log(nu_j / (eps gamma_j))."""
    t = np.asarray(t, dtype=float)
    lams = spectrum.positive()
    nus = np.broadcast_to(np.asarray(nu_widths, dtype=float), lams.shape)
    gams = np.broadcast_to(np.asarray(gamma_widths, dtype=float), lams.shape)
    log_f = np.zeros_like(t)
    onsets = []
    for lam, nu, gam in zip(lams, nus, gams):
        tj = np.log(nu / (eps * gam)) / lam
        onsets.append(tj)
        log_f = log_f - lam * np.clip(t - tj, 0.0, None)
    return np.exp(log_f), np.array(onsets)


# ---------------------------------------------------------------------------
# dephasing representation


def dephasing_fidelity(map0, v, theta0: float, phi0: float, S: float, eps: float,
                       tmax: int, n_samples: int = 4000, seed=0, hbar: float | None = None):
    """Semiclassical fidelity amplitude from unperturbed trajectories:
    f(t) = < exp(-i (eps/hbar) sum_{t' < t} v(x_{t'})) > over Wigner samples.

    The Wigner function of a spin coherent packet is sampled as a Gaussian
    around (theta0, phi0); the discrete-time sum replaces the action integral
    for kicked maps.  Returns (f, stderr).
    """
    hbar = 1.0 / S if hbar is None else hbar
    rng = np.random.default_rng(seed)
    sd = 1.0 / np.sqrt(2.0 * S)
    th = rng.normal(theta0, sd, n_samples)
    ph = rng.normal(phi0, sd / np.sin(theta0), n_samples)
    pts = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1)
    phase = np.zeros(n_samples)
    f = np.empty(tmax + 1, dtype=complex)
    se = np.empty(tmax + 1)
    f[0], se[0] = 1.0, 0.0
    x = pts
    for t in range(1, tmax + 1):
        phase = phase + v(x)          # v along the unperturbed orbit, t' = t-1
        x = map0.step(x)
        z = np.exp(-1j * (eps / hbar) * phase)
        f[t] = z.mean()
        se[t] = np.sqrt((np.var(z.real) + np.var(z.imag)) / n_samples)
    return f, se


# ---------------------------------------------------------------------------
# linear-response laws and helpers


def classical_lr_fidelity(kind: tuple[str, str], constants: dict, eps: float, t):
    """Short-time classical fidelity laws.

    kind = (dynamics, density) with dynamics in {chaotic, regular} and density
    in {continuous, discontinuous}:
      chaotic/continuous    1 - eps^2 C^2 exp(2 lam |t|)
      regular/continuous    1 - eps^2 C^2 t^2
      chaotic/discontinuous 1 - |eps| C exp(lam |t|)
      regular/discontinuous 1 - |eps| C |t|
    """
    t = np.abs(np.asarray(t, dtype=float))
    dyn, dens = kind
    c = constants.get("C", 1.0)
    lam = constants.get("lam_max", 0.0)
    if dens == "continuous":
        growth = np.exp(2.0 * lam * t) if dyn == "chaotic" else t**2
        return 1.0 - eps**2 * c**2 * growth
    if dens == "discontinuous":
        growth = np.exp(lam * t) if dyn == "chaotic" else t
        return 1.0 - abs(eps) * c * growth
    raise ValueError("density must be 'continuous' or 'discontinuous'")


def kicked_top_fixed_points(mp: KickedTopMap, guesses) -> np.ndarray:
    """Period-1 points of the sphere map located by root search from guesses."""
    found = []
    for g in np.atleast_2d(guesses):
        th0 = np.arccos(np.clip(g[2], -1, 1))
        ph0 = np.arctan2(g[1], g[0])

        def residual(q):
            th, ph = q
            r = np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
            return (mp.step(r[None, :])[0] - r)

        sol = least_squares(residual, x0=[th0, ph0], xtol=1e-14, ftol=1e-14)
        if sol.cost < 1e-16:
            th, ph = sol.x
            found.append([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
    return np.array(found)

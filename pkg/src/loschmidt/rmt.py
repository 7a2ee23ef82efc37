"""Random-matrix echo engine.

Model: H_eps = H_0 + eps V with the H_0 spectrum unfolded to unit mean level
spacing at the band center (linear rescaling only), so the Heisenberg time is
t_H = 1 and evolution over time t uses exp(-2 pi i H t).  Off-diagonal matrix
elements of V have unit variance; (2 pi eps)^2 is the natural perturbation
parameter of all linear-response formulas.

Realizations draw from a seeded, splittable random stream; the ensemble mean
is an associative reduction, so results are reproducible for a fixed seed and
run count regardless of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import dblquad
from scipy.special import k1

from .echo import EchoSeries
from .spins import BipartiteLayout, partial_trace_pure
from .theory import b2_double_integral

__all__ = [
    "RmtSpec",
    "ScatteringSpec",
    "sample_spectrum",
    "sample_perturbation",
    "sample_pair",
    "mc_fidelity",
    "lr_fidelity",
    "exact_fidelity",
    "freeze_longtime",
    "commutator_freeze",
    "echo_purity_lr",
    "purity_decay_lr",
    "mc_purity",
    "scattering_fidelity",
    "kt_to_rmt_eps",
]

_EULER_GAMMA = 0.5772156649015329

H0_CLASSES = ("GOE", "GUE", "Poisson")
V_CLASSES = ("GOE", "GUE", "GOE-deleted-diagonal", "GUE-deleted-diagonal",
             "antisymmetric-imaginary", "banded-commutator")


@dataclass(frozen=True)
class RmtSpec:
    """Ensemble descriptor for Monte Carlo echo runs."""

    N: int
    h0_class: str = "GOE"
    v_class: str = "GOE"
    eps: float = 0.0
    n_runs: int = 100
    seed: int = 0
    initial_state_class: str = "central-random-span"
    span: int = 20
    bandwidth: int | None = None

    def __post_init__(self):
        if self.N < 8:
            raise ValueError("N must be at least 8")
        if self.h0_class not in H0_CLASSES:
            raise ValueError(f"h0_class must be one of {H0_CLASSES}")
        if self.v_class not in V_CLASSES:
            raise ValueError(f"v_class must be one of {V_CLASSES}")
        if self.v_class == "banded-commutator":
            if not self.bandwidth or not (1 <= self.bandwidth < self.N):
                raise ValueError("banded-commutator needs 1 <= bandwidth < N")


def _unfold_linear(levels: np.ndarray) -> np.ndarray:
    """Linear rescaling to unit mean spacing in the central quarter."""
    e = np.sort(levels)
    n = e.shape[0]
    lo, hi = int(round(n * 0.375)), int(round(n * 0.625))
    spacing = (e[hi] - e[lo]) / (hi - lo)
    center = 0.5 * (e[(n - 1) // 2] + e[n // 2])
    return (e - center) / spacing


def sample_spectrum(n: int, h0_class: str, rng) -> np.ndarray:
    """Unfolded H_0 spectrum with unit central mean spacing."""
    if h0_class == "Poisson":
        levels = np.cumsum(rng.exponential(1.0, size=n))
    else:
        # tridiagonal beta-ensemble; overall scale cancels in the unfolding
        beta = 1.0 if h0_class == "GOE" else 2.0
        diag = rng.standard_normal(n) * np.sqrt(2.0 / beta)
        k = np.arange(n - 1, 0, -1, dtype=float)
        off = np.sqrt(rng.chisquare(beta * k) / beta)
        from scipy.linalg import eigvalsh_tridiagonal
        levels = eigvalsh_tridiagonal(diag, off, lapack_driver="stebz")
    return _unfold_linear(levels)


def sample_perturbation(n: int, v_class: str, rng, bandwidth: int | None = None,
                        energies: np.ndarray | None = None) -> np.ndarray:
    """Perturbation matrix with unit-variance off-diagonal elements."""
    if v_class.startswith("GOE"):
        a = rng.standard_normal((n, n))
        v = (a + a.T) / np.sqrt(2.0)
        if v_class.endswith("deleted-diagonal"):
            np.fill_diagonal(v, 0.0)
        return v.astype(complex)
    if v_class.startswith("GUE"):
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        v = (a + a.conj().T) / 2.0
        if v_class.endswith("deleted-diagonal"):
            np.fill_diagonal(v, 0.0)
        return v
    if v_class == "antisymmetric-imaginary":
        a = rng.standard_normal((n, n))
        a = (a - a.T) / np.sqrt(2.0)
        return 1j * a
    if v_class == "banded-commutator":
        if energies is None:
            raise ValueError("banded-commutator needs the H0 energies")
        w = rng.standard_normal((n, n))
        w = (w + w.T) / np.sqrt(2.0)
        mask = np.abs(np.subtract.outer(np.arange(n), np.arange(n))) <= bandwidth
        w = np.where(mask, w, 0.0)
        return 1j * w * np.subtract.outer(energies, energies)
    raise ValueError(f"unknown perturbation class {v_class!r}")


def sample_pair(spec: RmtSpec, rng=None):
    """One (unfolded spectrum, perturbation matrix) realization."""
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    e0 = sample_spectrum(spec.N, spec.h0_class, rng)
    v = sample_perturbation(spec.N, spec.v_class, rng, spec.bandwidth, energies=e0)
    return e0, v


def _initial_state(spec: RmtSpec, rng) -> np.ndarray:
    n = spec.N
    psi = np.zeros(n, dtype=complex)
    if spec.initial_state_class == "central-random-span":
        k = spec.span
        lo = (n - k) // 2
        c = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        psi[lo:lo + k] = c / np.linalg.norm(c)
    elif spec.initial_state_class == "eigenstate":
        psi[n // 2] = 1.0
    elif spec.initial_state_class == "full-random":
        c = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        psi = c / np.linalg.norm(c)
    else:
        raise ValueError(f"unknown initial state class {spec.initial_state_class!r}")
    return psi


def _run_f(e0, v, eps, psi, times):
    """f(t) on a grid for one realization (t in Heisenberg units)."""
    h = np.diag(e0) + eps * v
    w, q = np.linalg.eigh(h)
    c = q.conj().T @ psi
    phases_eps = np.exp(-2j * np.pi * np.outer(w, times))
    evolved = q @ (phases_eps * c[:, None])
    bra = np.exp(-2j * np.pi * np.outer(e0, times)) * psi[:, None]
    return np.sum(bra.conj() * evolved, axis=0)


def mc_fidelity(spec: RmtSpec, times=None, tmax: float = 2.0, dt: float = 0.05,
                v_classes: tuple | None = None):
    """Ensemble-averaged fidelity amplitude and fidelity with standard errors.

    Returns an :class:`EchoSeries` (times in units of t_H) whose ``f_stderr``
    is the standard error of the mean amplitude; ``metadata['F_stderr']``
    carries the one for the fidelity.  If ``v_classes`` lists several
    perturbation classes, each run reuses the same spectrum and initial state
    for every class and a dict of series is returned (paired comparisons).
    """
    if times is None:
        times = np.arange(0.0, tmax + dt / 2, dt)
    times = np.asarray(times, dtype=float)
    classes = v_classes or (spec.v_class,)
    master = np.random.default_rng(spec.seed)
    seeds = master.spawn(spec.n_runs)
    sums = {c: np.zeros(times.shape, dtype=complex) for c in classes}
    sums2 = {c: np.zeros(times.shape) for c in classes}
    sums2_im = {c: np.zeros(times.shape) for c in classes}
    fsum = {c: np.zeros(times.shape) for c in classes}
    fsum2 = {c: np.zeros(times.shape) for c in classes}
    dsum = np.zeros(times.shape, dtype=complex)
    dsum2 = np.zeros(times.shape)
    for rng in seeds:
        e0 = sample_spectrum(spec.N, spec.h0_class, rng)
        psi = _initial_state(spec, rng)
        fs = {}
        for cname in classes:
            v = sample_perturbation(spec.N, cname, rng, spec.bandwidth, energies=e0)
            f = _run_f(e0, v, spec.eps, psi, times)
            fs[cname] = f
            sums[cname] += f
            sums2[cname] += f.real**2
            sums2_im[cname] += f.imag**2
            fsum[cname] += np.abs(f) ** 2
            fsum2[cname] += np.abs(f) ** 4
        if len(classes) == 2:
            d = fs[classes[0]] - fs[classes[1]]
            dsum += d
            dsum2 += d.real**2 + d.imag**2
    out = {}
    nr = spec.n_runs
    for cname in classes:
        fmean = sums[cname] / nr
        var_re = sums2[cname] / nr - fmean.real**2
        var_im = sums2_im[cname] / nr - fmean.imag**2
        f_se = np.sqrt(np.maximum(var_re + var_im, 0.0) / nr)
        Fmean = fsum[cname] / nr
        F_se = np.sqrt(np.maximum(fsum2[cname] / nr - Fmean**2, 0.0) / nr)
        md = {"model": f"rmt-{spec.h0_class}-{cname}", "eps": spec.eps,
              "N": spec.N, "n_runs": nr, "seed": spec.seed,
              "F_stderr": F_se.tolist()}
        if len(classes) == 2:
            dmean = dsum / nr
            dvar = np.maximum(dsum2 / nr - np.abs(dmean) ** 2, 0.0)
            md["pair_diff"] = np.abs(dmean).tolist()
            md["pair_diff_stderr"] = np.sqrt(dvar / nr).tolist()
        out[cname] = EchoSeries(times=times, f=fmean, F=Fmean, f_stderr=f_se,
                                metadata=md)
    return out if v_classes else out[classes[0]]


# ---------------------------------------------------------------------------
# analytic curves


def lr_fidelity(t, eps: float, h0_class: str = "GOE", beta_v: float | None = 1.0,
                exponentiated: bool = False):
    """Linear-response fidelity amplitude.

    <f(t)> = 1 - (2 pi eps)^2 [ t^2/beta_v + t/2 - int int b2 ]; passing
    ``beta_v=None`` drops the t^2 term (zero-diagonal perturbations, freeze).
    With ``exponentiated=True`` the bracket is exponentiated instead, which is
    the uniform approximation valid down to <f> ~ 0.1.
    """
    t = np.asarray(t, dtype=float)
    corr = b2_double_integral(t, h0_class)
    bracket = t / 2.0 - corr
    if beta_v is not None:
        bracket = bracket + t**2 / beta_v
    x = (2.0 * np.pi * eps) ** 2 * bracket
    return np.exp(-x) if exponentiated else 1.0 - x


def _exact_gue(t: float, c2: float) -> float:
    # closed form of the single integral; c = c2 * t / 2 multiplies the exponent
    if t == 0.0:
        return 1.0
    c = c2 * t / 2.0
    s_hi, s_lo = 1.0 + t, abs(1.0 - t)
    if c == 0.0:
        return (s_hi**2 - s_lo**2) / (4.0 * t)
    prim = lambda s: -np.exp(-c * s) * (s / c + 1.0 / c**2)
    return (prim(s_hi) - prim(s_lo)) / (2.0 * t)


def _exact_goe(t: float, c2: float, epsrel: float = 1e-9) -> float:
    # 2D quadrature with v = u sin(s) removing the sqrt(u^2 - v^2) edge
    if t == 0.0:
        return 1.0

    def integrand(s, u):
        # dv = u cos(s) ds cancels sqrt(u^2 - v^2) = u cos(s) exactly
        v = u * np.sin(s)
        a = (2.0 * u + 1.0) * t - t**2 + v**2
        num = (t - u) * (1.0 - t + u) * v * a
        den = (t**2 - v**2) ** 2 * np.sqrt((u + 1.0) ** 2 - v**2)
        if den == 0.0:
            return 0.0
        return num / den * np.exp(-c2 * a / 2.0)

    lo = max(0.0, t - 1.0)
    val, err = dblquad(integrand, lo, t, 0.0, np.pi / 2.0,
                       epsabs=1e-13, epsrel=epsrel)
    f = 2.0 * val
    if err > max(1e-5 * abs(f), 1e-8):
        raise RuntimeError(
            f"GOE quadrature not converged at t={t}: achieved error {2 * err:.3e}")
    return f


def exact_fidelity(beta, eps: float, t):
    """Exact large-N ensemble fidelity amplitude for GOE/GUE H_0 and V.

    GUE evaluates in closed form; GOE by adaptive 2D quadrature with the edge
    singularity removed by the substitution v = u sin(s).  Times in units of
    the Heisenberg time; small times fall back to the linear response, which
    is exact to O(eps^4 t^2) there.
    """
    kind = {1: "GOE", 2: "GUE", "GOE": "GOE", "GUE": "GUE"}[beta]
    c2 = (2.0 * np.pi * eps) ** 2
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(t_arr)
    for i, ti in enumerate(t_arr):
        if kind == "GUE":
            out[i] = _exact_gue(ti, c2)
        elif c2 * (ti**2 + ti / 2.0) < 1e-3:
            # linear response is exact to O(x^2) here, below quadrature noise
            out[i] = lr_fidelity(ti, eps, kind, beta_v=1.0)
        else:
            out[i] = _exact_goe(ti, c2)
    return out if np.ndim(t) else float(out[0])


def freeze_longtime(beta: int, eps: float, t):
    """Post-freeze decay of the fidelity amplitude, tau = 2 pi eps^2 t.

    beta = 2 (GUE spectrum): e^(-pi tau)(1 + pi tau); beta = 1 (GOE):
    pi tau K_1(pi tau); beta = 0 (Poisson): e^(-pi tau).
    """
    tau = 2.0 * np.pi * eps**2 * np.asarray(t, dtype=float)
    z = np.pi * tau
    if beta == 2:
        return np.exp(-z) * (1.0 + z)
    if beta == 0:
        return np.exp(-z)
    if beta != 1:
        raise ValueError("beta must be 0, 1 or 2")
    out = np.empty_like(z)
    small = z < 1e-4
    with np.errstate(invalid="ignore", divide="ignore"):
        zs = z[small]
        log_term = np.where(zs > 0, np.log(zs), 0.0)
        out[small] = np.where(
            zs > 0,
            1.0 - 0.5 * (-log_term + 0.5 + np.log(2.0) - _EULER_GAMMA) * zs**2,
            1.0)
        out[~small] = z[~small] * k1(z[~small])
    return out


def commutator_freeze(b: int, eps: float, t, h0_class: str = "Poisson",
                      w4_moment: float = 3.0):
    """Banded commutator perturbation: plateau and long-time quadratic decay.

    Returns (plateau, curve, t_ehrenfest): plateau = 1 - 2 b eps^2 approached
    on the scale t_H/(2b); the long-time amplitude is 1 - tau^2/2 <Delta^2>
    with <Delta^2> = 2 <|W|^4> (b^3/3 + b^2/2) for uncorrelated spectra.
    """
    if b < 1:
        raise ValueError("bandwidth must be >= 1")
    tau = 2.0 * np.pi * eps**2 * np.asarray(t, dtype=float)
    plateau = 1.0 - 2.0 * b * eps**2
    delta2 = 2.0 * w4_moment * (b**3 / 3.0 + b**2 / 2.0)
    curve = 1.0 - tau**2 / 2.0 * delta2
    return plateau, curve, 1.0 / (2.0 * b)


def echo_purity_lr(n_c: int, n_e: int, eps: float, t, h0_class: str = "GOE"):
    """Linear-response echo purity for strongly coupling H_0:
    F_P = 1 - 4 (2 pi eps)^2 (1 - (n_c + n_e - 2)/(N + 2)) (t^2 + t/2 - iint b2)."""
    t = np.asarray(t, dtype=float)
    N = n_c * n_e
    pref = 4.0 * (1.0 - (n_c + n_e - 2.0) / (N + 2.0))
    corr = t**2 + t / 2.0 - b2_double_integral(t, h0_class)
    return 1.0 - (2.0 * np.pi * eps) ** 2 * pref * corr


def ipr2_random_product(n_c: int, n_e: int) -> float:
    """Ipr_2 of a random product state:
    3/(n_c+2) + 3/(n_e+2) - 9/((n_c+2)(n_e+2))."""
    return 3.0 / (n_c + 2) + 3.0 / (n_e + 2) - 9.0 / ((n_c + 2) * (n_e + 2))


def purity_decay_lr(n_c: int, n_e: int, eps: float, t,
                    initial: str = "product-random"):
    """Linear-response purity growth for separable H_0 (uncorrelated levels).

    product-random: I = 1 - 4 (2 pi eps)^2 { t^2 (1 - Ipr2)
                        + t/2 (1 - (n_c + n_e - 1 - Ipr2)/N) }
    product-basis-state: I = 1 - 2 (2 pi eps)^2 t (1 - (n_c + n_e - 2)/N).
    """
    t = np.asarray(t, dtype=float)
    N = n_c * n_e
    if initial == "product-basis-state":
        return 1.0 - 2.0 * (2.0 * np.pi * eps) ** 2 * t * (1.0 - (n_c + n_e - 2.0) / N)
    if initial != "product-random":
        raise ValueError("initial must be 'product-random' or 'product-basis-state'")
    ipr2 = ipr2_random_product(n_c, n_e)
    return 1.0 - 4.0 * (2.0 * np.pi * eps) ** 2 * (
        t**2 * (1.0 - ipr2) + t / 2.0 * (1.0 - (n_c + n_e - 1.0 - ipr2) / N))


def mc_purity(n_c: int, n_e: int, eps: float, times, n_runs: int, seed: int = 0,
              initial: str = "product-basis-state"):
    """Monte Carlo purity for separable H_0 (two independent Poisson spectra)
    coupled by a full GOE perturbation.  Returns (mean, stderr) arrays."""
    times = np.asarray(times, dtype=float)
    N = n_c * n_e
    layout = BipartiteLayout(n_c, n_e)
    master = np.random.default_rng(seed)
    acc = np.zeros(times.shape)
    acc2 = np.zeros(times.shape)
    for rng in master.spawn(n_runs):
        e_c = np.cumsum(rng.exponential(1.0, size=n_c))
        e_e = np.cumsum(rng.exponential(1.0, size=n_e))
        e0 = _unfold_linear(np.add.outer(e_c, e_e).ravel())
        v = sample_perturbation(N, "GOE", rng)
        w, q = np.linalg.eigh(np.diag(e0) + eps * v)
        if initial == "product-basis-state":
            psi = np.zeros(N, dtype=complex)
            psi[np.argsort(np.abs(e0))[0]] = 1.0
        elif initial == "product-random":
            vc = rng.standard_normal(n_c) + 1j * rng.standard_normal(n_c)
            ve = rng.standard_normal(n_e) + 1j * rng.standard_normal(n_e)
            psi = np.kron(vc / np.linalg.norm(vc), ve / np.linalg.norm(ve))
        else:
            raise ValueError(f"unknown initial {initial!r}")
        c = q.conj().T @ psi
        for k, tk in enumerate(times):
            fwd = q @ (np.exp(-2j * np.pi * w * tk) * c)
            echo = np.exp(2j * np.pi * e0 * tk) * fwd
            rc = partial_trace_pure(echo, layout, "central")
            p = np.sum(np.abs(rc) ** 2)
            acc[k] += p
            acc2[k] += p**2
    mean = acc / n_runs
    se = np.sqrt(np.maximum(acc2 / n_runs - mean**2, 0.0) / n_runs)
    return mean, se


# ---------------------------------------------------------------------------
# scattering fidelity


@dataclass(frozen=True)
class ScatteringSpec:
    """Open-system descriptor: N interior states, M orthonormal channels with
    coupling weights w, scalar absorption gamma_w."""

    N: int
    M: int = 2
    w: tuple = (1e-4, 1e-4)
    gamma_w: float = 0.0
    h0_class: str = "GOE"
    n_runs: int = 200
    seed: int = 0

    def __post_init__(self):
        if len(self.w) != self.M:
            raise ValueError("need one coupling weight per channel")


def scattering_fidelity(spec: ScatteringSpec, eps: float, times,
                        channel: tuple[int, int] = (0, 1),
                        strong_coupling_override: bool = False):
    """Scattering fidelity amplitude from time-domain S-matrix correlations.

    Builds S_ab(t) ~ v_a^dag exp(-2 pi i H_eff t) v_b with
    H_eff = H_0 - i Gamma / 2, Gamma = sum_a w_a v_a v_a^dag + gamma_w, for the
    unperturbed and perturbed (H_0 + eps W) Hamiltonians, then returns the
    ensemble cross-correlation normalized by the two autocorrelations.
    In the weak-coupling regime this equals the closed-system fidelity
    amplitude; outside it a ValueError is raised unless overridden.
    """
    if max(spec.w) > 1e-2 and not strong_coupling_override:
        raise ValueError("couplings outside the weak regime; pass "
                         "strong_coupling_override=True to proceed")
    times = np.asarray(times, dtype=float)
    a, b = channel
    master = np.random.default_rng(spec.seed)
    cross = np.zeros(times.shape, dtype=complex)
    auto0 = np.zeros(times.shape)
    auto1 = np.zeros(times.shape)
    cross2 = np.zeros(times.shape)
    for rng in master.spawn(spec.n_runs):
        e0 = sample_spectrum(spec.N, spec.h0_class, rng)
        wmat = sample_perturbation(spec.N, spec.h0_class, rng)
        g = rng.standard_normal((spec.N, spec.M)) + 1j * rng.standard_normal((spec.N, spec.M))
        vch, _ = np.linalg.qr(g)  # orthonormal channel vectors
        gamma = vch @ (np.asarray(spec.w)[:, None] * vch.conj().T)
        h_eff = np.diag(e0).astype(complex) - 0.5j * (gamma + spec.gamma_w * np.eye(spec.N))
        h_eff_p = h_eff + eps * wmat

        def amplitude(h, va, vb):
            lam, r = np.linalg.eig(h)
            cond = np.linalg.cond(r)
            if cond > 1e12:
                raise RuntimeError(f"H_eff numerically defective (cond {cond:.1e})")
            left = np.linalg.solve(r, vb)
            right = va.conj() @ r
            return (right * left) @ np.exp(-2j * np.pi * np.outer(lam, times))

        s0 = amplitude(h_eff, vch[:, a], vch[:, b])
        s1 = amplitude(h_eff_p, vch[:, a], vch[:, b])
        cross += s0.conj() * s1
        cross2 += np.abs(s0.conj() * s1) ** 2
        auto0 += np.abs(s0) ** 2
        auto1 += np.abs(s1) ** 2
    n = spec.n_runs
    norm = np.sqrt(auto0 * auto1)
    fs = np.where(norm > 0, cross / np.where(norm > 0, norm, 1.0), 1.0)
    var = np.maximum(cross2 / n - np.abs(cross / n) ** 2, 0.0)
    se = np.sqrt(var / n) / np.where(norm > 0, norm / n, 1.0)
    return fs, se


def kt_to_rmt_eps(eps_kt: float, sigma_cl: float, S: float, N: float | None = None):
    """Map a kicked-top perturbation strength to the RMT parameter.

    Generic perturbations: 2 pi eps = S eps_KT sqrt(2 sigma_cl N);
    freeze (residual) perturbations: 2 pi eps = eps_KT sqrt(4 sigma_cl S^3).
    Returns a dict with both conventions, as eps and as 2 pi eps.
    """
    if sigma_cl <= 0:
        raise ValueError("sigma_cl must be positive")
    N = S if N is None else N
    two_pi_generic = S * eps_kt * np.sqrt(2.0 * sigma_cl * N)
    two_pi_freeze = eps_kt * np.sqrt(4.0 * sigma_cl * S**3)
    return {
        "two_pi_eps_generic": two_pi_generic,
        "eps_generic": two_pi_generic / (2.0 * np.pi),
        "two_pi_eps_freeze": two_pi_freeze,
        "eps_freeze": two_pi_freeze / (2.0 * np.pi),
    }

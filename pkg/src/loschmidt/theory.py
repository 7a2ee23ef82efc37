"""Analytic decay laws, plateau formulas, time scales and perturbation borders.

All functions are stateless and vectorized over time/parameter grids.  Unit
conventions: kick period 1, hbar = 1/S for spin models; random-matrix time is
measured in Heisenberg units (t_H = 1).  Laws exposed through the dispatcher
surface return a :class:`LawResult` carrying an explicit validity mask.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import erf, j0, k1

__all__ = [
    "LawResult",
    "FourierModeSet",
    "b2_form_factor",
    "b2_integral",
    "b2_double_integral",
    "fgr_fidelity",
    "perturbative_gaussian",
    "correlation_plateau",
    "chaotic_laws",
    "chaotic_freeze_plateau",
    "chaotic_freeze_t2",
    "chaotic_freeze_postdecay",
    "regular_gaussian",
    "beating_time",
    "ris_powerlaw",
    "avg_cis_powerlaw",
    "avg_cis_kicked_top",
    "regular_laws",
    "freeze_regular",
    "composite_regular",
    "Borders",
    "borders_and_times",
    "bounds_and_noise",
]


@dataclass
class LawResult:
    values: np.ndarray
    valid: np.ndarray
    note: str = ""


# ---------------------------------------------------------------------------
# spectral two-point form factor b2 and its correlation integrals
# (unit mean level spacing, t in Heisenberg units)


def b2_form_factor(tau, kind: str):
    """Two-level form factor b2(tau) for GOE / GUE / Poisson spectra."""
    tau = np.asarray(tau, dtype=float)
    if kind == "GUE":
        return np.where(tau < 1.0, 1.0 - tau, 0.0)
    if kind == "GOE":
        small = 1.0 - 2.0 * tau + tau * np.log1p(2.0 * tau)
        with np.errstate(divide="ignore", invalid="ignore"):
            large = -1.0 + tau * np.log((2.0 * tau + 1.0) / (2.0 * tau - 1.0))
        return np.where(tau < 1.0, small, large)
    if kind in ("Poisson", "poisson"):
        return np.zeros_like(tau)
    raise ValueError(f"unknown spectral kind {kind!r}")


def _goe_primitive_plus(u):
    # antiderivative of tau*log(2 tau + 1) via u = 2 tau + 1, up to constant/4
    return (u**2 / 2.0 - u) * np.log(u) - u**2 / 4.0 + u


def _goe_primitive_minus(v):
    # antiderivative of tau*log(2 tau - 1) via v = 2 tau - 1, up to constant/4
    return (v**2 / 2.0 + v) * np.log(v) - v**2 / 4.0 - v


def b2_integral(t, kind: str):
    """First correlation integral  B(t) = int_0^t b2(tau) d tau  (closed form)."""
    t = np.asarray(t, dtype=float)
    if kind == "GUE":
        return np.where(t < 1.0, t - t**2 / 2.0, 0.5)
    if kind in ("Poisson", "poisson"):
        return np.zeros_like(t)
    if kind != "GOE":
        raise ValueError(f"unknown spectral kind {kind!r}")
    ts = np.minimum(t, 1.0)
    u = 2.0 * ts + 1.0
    small = ts - ts**2 + (_goe_primitive_plus(u) - _goe_primitive_plus(1.0)) / 4.0
    tl = np.maximum(t, 1.0)
    u, v = 2.0 * tl + 1.0, 2.0 * tl - 1.0
    b_at_1 = 1.0 - 1.0 + (_goe_primitive_plus(3.0) - _goe_primitive_plus(1.0)) / 4.0
    with np.errstate(divide="ignore", invalid="ignore"):
        large = (b_at_1 - (tl - 1.0)
                 + (_goe_primitive_plus(u) - _goe_primitive_plus(3.0)) / 4.0
                 - (_goe_primitive_minus(v) - _goe_primitive_minus(1.0)) / 4.0)
    return np.where(t <= 1.0, small, large)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def _gl_int(fn, a, b):
    x = 0.5 * (b - a) * _GL_NODES + 0.5 * (a + b)
    return 0.5 * (b - a) * np.sum(_GL_WEIGHTS * fn(x))


def b2_double_integral(t, kind: str):
    """int_0^t dtau' int_0^tau' b2(tau) dtau, exact for GUE/Poisson, Gauss
    quadrature of the closed-form first integral for GOE."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if kind == "GUE":
        out = np.where(t_arr < 1.0, t_arr**2 / 2.0 - t_arr**3 / 6.0, t_arr / 2.0 - 1.0 / 6.0)
    elif kind in ("Poisson", "poisson"):
        out = np.zeros_like(t_arr)
    elif kind == "GOE":
        out = np.empty_like(t_arr)
        fn = lambda x: b2_integral(x, "GOE")
        for i, ti in enumerate(t_arr):
            if ti <= 1.0:
                out[i] = _gl_int(fn, 0.0, ti)
            else:
                # doubling segments keep the slowly varying tail fully resolved
                edges = [1.0]
                while edges[-1] < ti:
                    edges.append(min(2.0 * edges[-1], ti))
                out[i] = _gl_int(fn, 0.0, 1.0) + sum(
                    _gl_int(fn, a, b) for a, b in zip(edges[:-1], edges[1:]))
    else:
        raise ValueError(f"unknown spectral kind {kind!r}")
    return out if np.ndim(t) else float(out[0])


# ---------------------------------------------------------------------------
# chaotic (mixing) laws


def fgr_fidelity(t, eps: float, sigma_cl: float, hbar: float):
    """Exponential decay F = exp(-t / tau_m), tau_m = hbar^2 / (2 eps^2 sigma)."""
    tau_m = hbar**2 / (2.0 * eps**2 * sigma_cl) if eps != 0 else np.inf
    return np.exp(-np.asarray(t, dtype=float) / tau_m)


def perturbative_gaussian(t, eps: float, sigma_cl: float, hbar: float, N: float):
    """Gaussian decay F = exp(-(t/tau_p)^2), tau_p = sqrt(N/4 sigma) hbar/eps."""
    if eps == 0:
        return np.ones_like(np.asarray(t, dtype=float))
    tau_p = np.sqrt(N / (4.0 * sigma_cl)) * hbar / eps
    return np.exp(-((np.asarray(t, dtype=float) / tau_p) ** 2))


def correlation_plateau(sigma_cl: float, N: float, sectors: int = 1) -> float:
    """Finite-size plateau of the correlation function, Cbar = 4 sigma s / N."""
    return 4.0 * sigma_cl * sectors / N


def chaotic_laws(kind: str, params: dict, t) -> LawResult:
    """Dispatcher: kind in {fgr, perturbative_gaussian, plateau_Cbar}."""
    t = np.asarray(t, dtype=float)
    if params.get("sigma_cl", 1.0) <= 0:
        raise ValueError("sigma_cl must be positive")
    hbar = params.get("hbar", 1.0 / params["S"] if "S" in params else 1.0)
    if kind == "fgr":
        vals = fgr_fidelity(t, params["eps"], params["sigma_cl"], hbar)
        valid = t >= params.get("t_mix", 0.0)
        return LawResult(vals, valid, "valid for t >> t_mix")
    if kind == "perturbative_gaussian":
        vals = perturbative_gaussian(t, params["eps"], params["sigma_cl"], hbar, params["N"])
        return LawResult(vals, np.ones_like(t, dtype=bool))
    if kind == "plateau_Cbar":
        c = correlation_plateau(params["sigma_cl"], params["N"], params.get("sectors", 1))
        vals = np.full_like(t, c)
        return LawResult(vals, np.ones_like(t, dtype=bool))
    raise ValueError(f"unknown chaotic law {kind!r}")


# chaotic freeze (residual perturbation generated by W, classical limit w)


def sphere_generating_function(z):
    """G(z) = <exp(-i z w)> over the unit sphere for w = z_coord^2 / 2.

    Evaluates to sqrt(pi/2z) erf(e^(i pi/4) sqrt(z/2)) e^(-i pi/4)-free form;
    returned as the complex number whose modulus enters the plateau.
    """
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.ones(z.shape, dtype=complex)
    nz = z != 0
    arg = np.exp(1j * np.pi / 4.0) * np.sqrt(z[nz] / 2.0)
    out[nz] = np.sqrt(np.pi / (2.0 * z[nz])) * erf(arg) * np.exp(-1j * np.pi / 4.0)
    return out[0] if scalar else out


def chaotic_freeze_plateau(eps: float, hbar: float, G: Callable = sphere_generating_function,
                           state: str = "cis") -> float:
    """Freeze plateau |G(eps/hbar)|^2 for wave packets, |G|^4 for random states."""
    g2 = float(np.abs(G(eps / hbar)) ** 2)
    if state == "cis":
        return g2
    if state == "ris":
        return g2**2
    raise ValueError("state must be 'cis' or 'ris'")


def chaotic_freeze_t2(eps: float, sigma_r: float, kappa_cl: float, t_H: float) -> float:
    """End of the chaotic freeze plateau,
    t2 = min( sqrt(t_H/sigma) kappa/eps, kappa^2/(sigma eps^2) )."""
    return float(min(np.sqrt(t_H / sigma_r) * kappa_cl / eps,
                     kappa_cl**2 / (sigma_r * eps**2)))


def chaotic_freeze_postdecay(t, eps: float, sigma_r: float, hbar: float, t_H: float,
                             plateau: float = 1.0):
    """Post-plateau decay with renormalized strength eps^2/2: exponential
    before t_H, Gaussian after."""
    t = np.asarray(t, dtype=float)
    rate = eps**4 * sigma_r / (2.0 * hbar**2)
    return np.where(t < t_H, plateau * np.exp(-rate * t),
                    plateau * np.exp(-rate * t**2 / t_H))


# ---------------------------------------------------------------------------
# regular (integrable) laws


def regular_gaussian(t, eps: float, hbar: float, vbar_prime, Lambda):
    """Wave-packet decay F = exp(-(t/tau_r)^2),
    tau_r = (1/eps) sqrt(2 hbar / (v' . Lambda^-1 v'))."""
    vp = np.atleast_1d(np.asarray(vbar_prime, dtype=float))
    Lam = np.atleast_2d(np.asarray(Lambda, dtype=float))
    quad = float(vp @ np.linalg.solve(Lam, vp))
    if quad == 0 or eps == 0:
        return np.ones_like(np.asarray(t, dtype=float))
    tau_r = np.sqrt(2.0 * hbar / quad) / eps
    return np.exp(-((np.asarray(t, dtype=float) / tau_r) ** 2))


def beating_time(eps: float, vbar_prime: float) -> float:
    """One-freedom echo revival time t_b = 2 pi / (v' eps)."""
    return 2.0 * np.pi / (abs(vbar_prime) * eps)


def ris_powerlaw(t, eps: float, hbar: float, d: int):
    """Random-state asymptotic decay F ~ (hbar / (t eps))^d (single stationary point)."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        return np.minimum(1.0, (hbar / (t * eps)) ** d)


def avg_cis_powerlaw(t, eps: float, hbar: float, d: int, eta: int):
    """Packet-averaged asymptotics <F> ~ (hbar/(eps^2 t^2))^(d/eta)."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        return np.minimum(1.0, (hbar / (eps**2 * t**2)) ** (d / eta))


def avg_cis_kicked_top(t, eps: float, S: float):
    """Closed form <F>_j ~ sqrt(2 pi) / (eps t sqrt(S)) for the twist-perturbed
    kicked top (zero of order two of the decay-rate function)."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        return np.minimum(1.0, np.sqrt(2.0 * np.pi) / (eps * t * np.sqrt(S)))


def regular_laws(kind: str, params: dict, t) -> LawResult:
    """Dispatcher: kind in {gaussian_cis, beating_time, ris_powerlaw, avg_cis_powerlaw}."""
    t = np.asarray(t, dtype=float)
    hbar = params.get("hbar", 1.0 / params["S"] if "S" in params else 1.0)
    ok = np.ones_like(t, dtype=bool)
    if kind == "gaussian_cis":
        if np.all(np.asarray(params["vbar_prime"]) == 0):
            raise ValueError("gaussian_cis requires vbar_prime != 0")
        return LawResult(regular_gaussian(t, params["eps"], hbar,
                                          params["vbar_prime"], params["Lambda"]), ok)
    if kind == "beating_time":
        tb = beating_time(params["eps"], params["vbar_prime"])
        return LawResult(np.full_like(t, tb), ok)
    if kind == "ris_powerlaw":
        vals = ris_powerlaw(t, params["eps"], hbar, params["d"])
        return LawResult(vals, t * params["eps"] > hbar, "asymptotic t > hbar/eps")
    if kind == "avg_cis_powerlaw":
        vals = avg_cis_powerlaw(t, params["eps"], hbar, params["d"], params["eta"])
        return LawResult(vals, t * params["eps"] > hbar, "asymptotic regime")
    raise ValueError(f"unknown regular law {kind!r}")


# ---------------------------------------------------------------------------
# regular freeze machinery (residual perturbations, action-angle modes)


@dataclass
class FourierModeSet:
    """Fourier modes of the residual generator w(j, theta).

    Each entry (m, w_m) represents the +-m pair of a real observable
    (w_{-m} = conj(w_m)); w_m maps action j to a complex amplitude.
    ``omega`` is the frequency function, ``omega_prime`` its action derivative
    (finite differences if omitted).
    """

    modes: list
    omega: Callable
    omega_prime: Callable | None = None
    d: int = 1
    rbar_derivative: Callable | None = field(default=None, repr=False)

    def omega_d(self, j: float) -> float:
        if self.omega_prime is not None:
            return float(self.omega_prime(j))
        return _richardson_derivative(self.omega, j)

    def w(self, j, theta):
        """Real-space w(j, theta) = sum over +-m pairs."""
        total = np.zeros_like(np.asarray(theta, dtype=float))
        for m, wm in self.modes:
            total = total + 2.0 * np.real(wm(j) * np.exp(1j * m * np.asarray(theta)))
        return total

    def nu_cis(self, j: float) -> float:
        """nu = sum_{m != 0} |w_m|^2 (pairs counted twice)."""
        return float(sum(2.0 * abs(wm(j)) ** 2 for _, wm in self.modes))

    def guard_resonance(self, j: float, tol: float = 1e-12):
        for m, _ in self.modes:
            if abs(m * self.omega(j)) < tol:
                raise ValueError(f"resonant action: m*omega = 0 at j = {j} (m = {m})")

    def rbar(self, j: float) -> float:
        """Renormalized drift rbar(j) = -sum_m m d/dj [ |w_m|^2 m omega(j) ]."""
        if self.rbar_derivative is not None:
            return float(self.rbar_derivative(j))
        total = 0.0
        for m, wm in self.modes:
            g = lambda x, m=m, wm=wm: abs(wm(x)) ** 2 * (m * self.omega(x))
            total += -2.0 * m * _richardson_derivative(g, j)
        return total

    def rbar_prime(self, j: float) -> float:
        return _richardson_derivative(self.rbar, j)


def _richardson_derivative(fn: Callable, x: float, h: float = 1e-5) -> float:
    d1 = (fn(x + h) - fn(x - h)) / (2.0 * h)
    d2 = (fn(x + h / 2.0) - fn(x - h / 2.0)) / h
    return float((4.0 * d2 - d1) / 3.0)


def freeze_regular(kind: str, modes: FourierModeSet, params: dict, t=0.0) -> LawResult:
    """Freeze plateaus, onset/end times and long-time laws for residual
    perturbations of regular dynamics.

    kinds: plateau_lr, plateau_single_mode, plateau_general, plateau_ris,
    t1, t2, longtime, echo_resonance, ris_longtime.
    """
    t = np.asarray(t, dtype=float)
    eps = params.get("eps", 0.0)
    hbar = params.get("hbar", 1.0 / params["S"] if "S" in params else 1.0)
    ok = np.ones_like(t, dtype=bool)

    def const(x):
        return LawResult(np.full_like(t, float(x)), ok)

    if kind == "plateau_lr":
        j = params["j_star"]
        modes.guard_resonance(j)
        return const(1.0 - (eps / hbar) ** 2 * modes.nu_cis(j))
    if kind == "plateau_single_mode":
        j = params["j_star"]
        modes.guard_resonance(j)
        if len(modes.modes) != 1:
            raise ValueError("plateau_single_mode needs exactly one +-m pair")
        _, wm = modes.modes[0]
        return const(j0(2.0 * (eps / hbar) * abs(wm(j))) ** 2)
    if kind == "plateau_general":
        j = params["j_star"]
        modes.guard_resonance(j)
        npts = params.get("n_theta", 2**10)
        if modes.d != 1:
            raise NotImplementedError("plateau_general implemented for d = 1 modes")
        theta = np.linspace(0.0, 2.0 * np.pi, npts, endpoint=False)
        amp = np.mean(np.exp(-1j * (eps / hbar) * modes.w(j, theta)))
        return const(abs(amp) ** 2)
    if kind == "plateau_ris":
        grid = np.asarray(params["action_grid"], dtype=float)
        vals = []
        for j in grid:
            if any(abs(m * modes.omega(j)) < params.get("resonance_tol", 1e-12)
                   for m, _ in modes.modes):
                if params.get("form", "sum") == "integral":
                    raise ValueError("resonant action on grid; use the sum form")
                continue
            theta = np.linspace(0.0, 2.0 * np.pi, params.get("n_theta", 2**10),
                                endpoint=False)
            vals.append(abs(np.mean(np.exp(-1j * (eps / hbar) * modes.w(j, theta)))) ** 2)
        if not vals:
            raise ValueError("no non-resonant actions on the grid")
        mean_cis = np.sum(vals) / len(grid)
        return const(mean_cis**2)
    if kind == "t1":
        j = params["j_star"]
        lam = float(np.atleast_2d(params["Lambda"])[0, 0])
        m0 = max(abs(m) for m, _ in modes.modes)
        om_p = modes.omega_d(j)
        return const(1.0 / np.sqrt(hbar / 4.0 * (m0 * om_p) ** 2 / lam))
    if kind == "longtime":
        j = params["j_star"]
        lam = float(np.atleast_2d(params["Lambda"])[0, 0])
        rp = modes.rbar_prime(j)
        tau_rr = np.sqrt(8.0 * hbar / (rp**2 / lam)) / eps**2
        return LawResult(np.exp(-((t / tau_rr) ** 2)), ok, f"tau_rr={tau_rr:.6g}")
    if kind == "t2":
        j = params["j_star"]
        lam = float(np.atleast_2d(params["Lambda"])[0, 0])
        rp = modes.rbar_prime(j)
        tau_rr = np.sqrt(8.0 * hbar / (rp**2 / lam)) / eps**2
        nu = modes.nu_cis(j)
        return const(min(1.0, (eps / hbar) * np.sqrt(nu)) * tau_rr)
    if kind == "echo_resonance":
        j = params["j_star"]
        return const(2.0 * np.pi / (hbar * abs(modes.omega_d(j))))
    if kind == "ris_longtime":
        c = params.get("const", 1.0)
        t_ran = c * hbar / eps**2
        with np.errstate(divide="ignore"):
            vals = np.minimum(1.0, (t_ran / np.maximum(t, 1e-300)) ** modes.d)
        return LawResult(vals, t > 0, f"t_ran={t_ran:.6g}")
    raise ValueError(f"unknown freeze law {kind!r}")


# ---------------------------------------------------------------------------
# composite regular measures


def composite_regular(kind: str, params: dict, t) -> LawResult:
    """Reduced fidelity, echo purity and cat-state purity laws for regular
    dynamics with product wave-packet initial states.

    kinds: reduced_fid, purity_u, purity_lr, cat_purity, decoherence_time.
    """
    t = np.asarray(t, dtype=float)
    eps = params.get("eps", 0.0)
    hbar = params.get("hbar", 1.0 / params["S"] if "S" in params else 1.0)
    ok = np.ones_like(t, dtype=bool)
    if kind == "reduced_fid":
        vp = np.atleast_1d(np.asarray(params["vbar_prime_c"], dtype=float))
        lam_c = np.atleast_2d(np.asarray(params["Lambda_c"], dtype=float))
        cbar_r = 0.5 * hbar * float(vp @ np.linalg.solve(lam_c, vp))
        return LawResult(np.exp(-(eps / hbar) ** 2 * cbar_r * t**2), ok,
                         f"Cbar_R={cbar_r:.6g}")
    if kind in ("purity_u", "purity_lr", "decoherence_time", "cat_purity"):
        if kind in ("purity_u", "purity_lr"):
            u = _u_matrix(params)
            _require_positive_squeezing(params)
            if kind == "purity_u":
                d_c = u.shape[0]
                vals = np.empty_like(t)
                for i, ti in enumerate(t):
                    vals[i] = 1.0 / np.sqrt(np.linalg.det(np.eye(d_c) + (eps * ti) ** 2 * u))
                return LawResult(vals, ok)
            return LawResult(1.0 - 0.5 * (eps * t) ** 2 * np.trace(_u_matrix(params)),
                             ok, "linear response")
        # cat-state laws
        ce = _cat_coupling(params)
        tau_dec = np.sqrt(hbar / ce) / eps
        if kind == "decoherence_time":
            return LawResult(np.full_like(t, tau_dec), ok)
        fe = np.exp(-((t / tau_dec) ** 2))
        i1 = np.asarray(params["I1"], dtype=float)
        i2 = np.asarray(params["I2"], dtype=float)
        return LawResult((i1 + i2 + 2.0 * fe) / 4.0, ok, f"tau_dec={tau_dec:.6g}")
    raise ValueError(f"unknown composite law {kind!r}")


def _u_matrix(params) -> np.ndarray:
    if "u" in params:
        return np.atleast_2d(np.asarray(params["u"], dtype=float))
    vce = np.atleast_2d(np.asarray(params["vbar_ce"], dtype=float))
    lam_c = np.atleast_2d(np.asarray(params["Lambda_c"], dtype=float))
    lam_e = np.atleast_2d(np.asarray(params["Lambda_e"], dtype=float))
    return np.linalg.solve(lam_c, vce) @ np.linalg.solve(lam_e, vce.T)


def _require_positive_squeezing(params):
    for key in ("Lambda_c", "Lambda_e"):
        if key in params:
            lam = np.atleast_2d(np.asarray(params[key], dtype=float))
            if np.any(np.linalg.eigvalsh(lam) <= 0):
                raise ValueError(f"{key} must be positive definite")


def _cat_coupling(params) -> float:
    if "C_e" in params:
        return float(params["C_e"])
    dv = np.atleast_1d(np.asarray(params["delta_vbar_e"], dtype=float))
    lam_e = np.atleast_2d(np.asarray(params["Lambda_e"], dtype=float))
    return 0.5 * float(dv @ np.linalg.solve(lam_e, dv))


# ---------------------------------------------------------------------------
# borders and time scales


@dataclass
class Borders:
    """All fidelity time scales and perturbation borders for one model point."""

    t_Z: float
    t_E: float
    t_H: float
    t_mix: float
    tau_m: float
    tau_p: float
    tau_r: float
    t_b: float
    eps_p: float
    eps_s: float
    eps_mix: float
    eps_E: float
    eps_r: float
    eps_c: float
    eps_c_purity: float
    regime: str


def borders_and_times(*, hbar: float, eps: float, sigma_cl: float, N: float,
                      d: int = 1, lam: float = 1.0, t_mix: float = 1.0,
                      vbar_prime_quad: float | None = None, Cbar: float | None = None,
                      trace_u: float | None = None, sectors: int = 1,
                      mu: float = 1.0, v_sq: float | None = None,
                      zeno_denom: float | None = None) -> Borders:
    """Evaluate every time scale and epsilon border of the decay-regime atlas.

    ``vbar_prime_quad`` is v' . Lambda^-1 v' at the packet, ``N`` the Hilbert
    dimension (divided by ``sectors`` for the effective Heisenberg time),
    ``mu`` the finite-size plateau exponent, ``v_sq``/``zeno_denom`` the
    moments <V^2> and <[H0,V]^2> entering the Zeno time.
    """
    if min(hbar, sigma_cl, N) <= 0:
        raise ValueError("hbar, sigma_cl and N must be positive")
    n_eff = N / sectors
    t_H = n_eff / 2.0
    t_E = np.log(1.0 / hbar) / lam if lam > 0 else np.inf
    t_Z = hbar * np.sqrt(v_sq / abs(zeno_denom)) if v_sq and zeno_denom else np.nan

    tau_m = hbar**2 / (2.0 * eps**2 * sigma_cl) if eps > 0 else np.inf
    tau_p = np.sqrt(n_eff / (4.0 * sigma_cl)) * hbar / eps if eps > 0 else np.inf
    if vbar_prime_quad:
        tau_r = np.sqrt(2.0 * hbar / vbar_prime_quad) / eps if eps > 0 else np.inf
        t_b = 2.0 * np.pi / (np.sqrt(vbar_prime_quad) * eps) if eps > 0 else np.inf
        eps_c = hbar**1.5 * np.sqrt(vbar_prime_quad / (8.0 * sigma_cl**2))
    else:
        tau_r = t_b = eps_c = np.nan

    eps_p = hbar / np.sqrt(sigma_cl * n_eff)
    eps_s = eps_p * np.sqrt(mu * np.log(n_eff))
    eps_mix = hbar / np.sqrt(2.0 * sigma_cl * t_mix)
    eps_E = hbar * np.sqrt(lam / (2.0 * sigma_cl * np.log(1.0 / hbar)))
    eps_r = hbar * np.sqrt(Cbar) / (2.0 * sigma_cl) if Cbar else np.nan
    eps_cI = hbar**2 * np.sqrt(trace_u) / (4.0 * sigma_cl) if trace_u else np.nan

    if eps < eps_p:
        regime = "perturbative-gaussian"
    elif eps < eps_s:
        regime = "fgr-to-gaussian-crossover"
    elif eps < eps_mix:
        regime = "fgr-exponential"
    else:
        regime = "strong-instant-decay"
    return Borders(t_Z=t_Z, t_E=t_E, t_H=t_H, t_mix=t_mix, tau_m=tau_m, tau_p=tau_p,
                   tau_r=tau_r, t_b=t_b, eps_p=eps_p, eps_s=eps_s, eps_mix=eps_mix,
                   eps_E=eps_E, eps_r=eps_r, eps_c=eps_c, eps_c_purity=eps_cI,
                   regime=regime)


# ---------------------------------------------------------------------------
# bounds and noise laws


def bounds_and_noise(kind: str, params: dict, t) -> LawResult:
    """Stochastic/noise decay laws and rigorous bounds.

    kinds: mandelstam_tamm, white_noise, gate_noise, many_body_classical,
    parabolic_universal_asymptotics.
    """
    t = np.asarray(t, dtype=float)
    if kind == "mandelstam_tamm":
        hbar = params.get("hbar", 1.0)
        phi = params["eps"] * params["deltaV"] * t / hbar
        valid = np.abs(phi) <= np.pi / 2.0
        return LawResult(np.cos(phi) ** 2, valid, "bound valid while |phi| <= pi/2")
    if kind == "white_noise":
        hbar = params.get("hbar", 1.0)
        return LawResult(np.exp(-params["eps"] ** 2 * params["v_sq"] * t / hbar**2),
                         np.ones_like(t, dtype=bool))
    if kind == "gate_noise":
        return LawResult(np.exp(-params["eps"] ** 2 * t), np.ones_like(t, dtype=bool))
    if kind == "many_body_classical":
        beta = 2.0 if params.get("density", "continuous") == "continuous" else 1.0
        a, d, lam = params.get("A", 1.0), params["d"], params["lam_max"]
        arg = a * d * abs(params["eps"]) ** beta * np.exp(beta * lam * t)
        return LawResult(np.exp(-arg), np.ones_like(t, dtype=bool))
    if kind == "parabolic_universal_asymptotics":
        x = np.abs(params["B"] * np.abs(params["eps"]) ** 0.4 * t)
        small = 1.0 - params.get("c_small", 1.0) * x**2.5
        large = np.exp(-x)
        crossover = params.get("crossover", 1.0)
        vals = np.where(x < crossover, small, large)
        valid = (x < 0.5 * crossover) | (x > 2.0 * crossover)
        return LawResult(vals, valid, "crossover region unspecified")
    raise ValueError(f"unknown bound/noise law {kind!r}")

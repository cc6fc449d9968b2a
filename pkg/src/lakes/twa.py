"""Semiclassical truncated-Wigner sweeps of a two-component scalar field.

Two coupled real fields live on an L x L torus: a fast field phi_a whose
quadratic coefficient K is swept from large negative (phi_a condensed) to
large positive (phi_b condensed), and a slow field phi_b.  The potential
density is

    V = K phi_a^2 / 2 + lambda_a phi_a^4 / 24
        + (h_x phi_a^2 - h_z) phi_b^2 / 2 + lambda_b phi_b^4 / 24

with kinetic density (Delta_a Pi_a^2 + Delta_b Pi_b^2) / 2 and gradient
density (f_a (grad phi_a)^2 + f_b (grad phi_b)^2) / 2.  Initial conditions
are Wigner samples of the uncoupled single-site ground state, relaxed while
the gradient couplings ramp on.  The first-order counterdiabatic drive is
the classical generator A = Delta_a alpha Int phi_a Pi_a, a state-dependent
force that pushes phi_a toward zero without touching phi_b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from lakes.errors import BurnInUnstable, DegenerateQuadratic

DEFAULT_LAMBDA_F = 1.0  # in units of h_x; calibrated to deplete the a-sector in quenches


@dataclass(frozen=True)
class TwaParams:
    """Couplings of the two-field lattice model; defaults follow h_x."""

    h_x: float = 1.0
    h_z: float = None
    delta_a: float = None
    delta_b: float = None
    f_a: float = None
    f_b: float = None
    lambda_a: float = None
    lambda_b: float = None
    hbar: float = 1.0
    L: int = 10
    n_samples: int = 1000
    seed: int = 0

    def __post_init__(self):
        defaults = {
            "h_z": self.h_x / 5.0,
            "delta_a": 0.05 * self.h_x,
            "f_a": 0.1 * self.h_x,
            "f_b": 0.01 * self.h_x,
            "lambda_a": 100.0 * self.h_x,
            "lambda_b": 0.05 * self.h_x,
        }
        for name, value in defaults.items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, value)
        if self.delta_b is None:
            object.__setattr__(self, "delta_b", 0.001 * self.h_z)
        for name in ("h_x", "h_z", "delta_a", "delta_b", "f_a", "f_b",
                     "lambda_a", "lambda_b", "hbar"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def k_final(self):
        return 20.0 * self.h_x

    @property
    def k_start(self):
        return -20.0 * self.h_x


@dataclass
class FieldEnsemble:
    """Per-sample field configurations; arrays are (n_samples, L, L)."""

    phi_a: np.ndarray
    pi_a: np.ndarray
    phi_b: np.ndarray
    pi_b: np.ndarray
    K: float

    def __post_init__(self):
        shapes = {a.shape for a in (self.phi_a, self.pi_a, self.phi_b, self.pi_b)}
        if len(shapes) != 1:
            raise ValueError(f"inconsistent field shapes {shapes}")

    def check_finite(self, context=""):
        for name in ("phi_a", "pi_a", "phi_b", "pi_b"):
            bad = ~np.isfinite(getattr(self, name))
            if bad.any():
                sample = int(np.argwhere(bad)[0][0])
                raise BurnInUnstable(f"{name} diverged at sample {sample} {context}")

    def copy(self):
        return FieldEnsemble(self.phi_a.copy(), self.pi_a.copy(),
                             self.phi_b.copy(), self.pi_b.copy(), self.K)


def _laplacian(f):
    return (np.roll(f, 1, axis=-1) + np.roll(f, -1, axis=-1)
            + np.roll(f, 1, axis=-2) + np.roll(f, -1, axis=-2) - 4.0 * f)


def _grad_sq(f):
    dx = np.roll(f, -1, axis=-1) - f
    dy = np.roll(f, -1, axis=-2) - f
    return dx * dx + dy * dy


def total_energy(ens, p, f_scale=1.0):
    """Energy per sample (summed over the torus)."""
    kin = 0.5 * (p.delta_a * ens.pi_a**2 + p.delta_b * ens.pi_b**2)
    grad = 0.5 * f_scale * (p.f_a * _grad_sq(ens.phi_a) + p.f_b * _grad_sq(ens.phi_b))
    pot = (0.5 * ens.K * ens.phi_a**2 + p.lambda_a / 24.0 * ens.phi_a**4
           + 0.5 * (p.h_x * ens.phi_a**2 - p.h_z) * ens.phi_b**2
           + p.lambda_b / 24.0 * ens.phi_b**4)
    return (kin + grad + pot).sum(axis=(-2, -1))


def _forces(ens, p, K, f_scale=1.0):
    fa = -(K * ens.phi_a + p.lambda_a / 6.0 * ens.phi_a**3
           + p.h_x * ens.phi_a * ens.phi_b**2) + f_scale * p.f_a * _laplacian(ens.phi_a)
    fb = -((p.h_x * ens.phi_a**2 - p.h_z) * ens.phi_b
           + p.lambda_b / 6.0 * ens.phi_b**3) + f_scale * p.f_b * _laplacian(ens.phi_b)
    return fa, fb


def equations_of_motion(ens, p, K, drive=None):
    """Time derivatives (dphi_a, dpi_a, dphi_b, dpi_b) at parameter value K.

    ``drive`` is None or a dict {"alpha": float, "lambda_f": float,
    "k_dot": float}; the drive term adds the linear scaling flow
    dphi_a += eps phi_a, dpi_a -= eps pi_a with
    eps = k_dot * lambda_f * delta_a * alpha.
    """
    fa, fb = _forces(ens, p, K)
    dphi_a = p.delta_a * ens.pi_a
    dpi_a = fa
    dphi_b = p.delta_b * ens.pi_b
    dpi_b = fb
    if drive is not None:
        eps = drive["k_dot"] * drive["lambda_f"] * p.delta_a * drive["alpha"]
        dphi_a = dphi_a + eps * ens.phi_a
        dpi_a = dpi_a - eps * ens.pi_a
    return dphi_a, dpi_a, dphi_b, dpi_b


@njit(parallel=True, cache=True)
def _verlet_kernel(pa, Pa, pb, Pb, dt, K, da, db, fa_c, fb_c, la, lb,
                   hx, hz, eps, f_scale):
    n, L, M = pa.shape
    s = math.exp(0.5 * dt * eps)
    for k in prange(n):
        for half in range(2):
            # half kick from forces at the current field values
            for i in range(L):
                ip = i + 1 if i + 1 < L else 0
                im = i - 1 if i >= 1 else L - 1
                for j in range(M):
                    jp = j + 1 if j + 1 < M else 0
                    jm = j - 1 if j >= 1 else M - 1
                    a = pa[k, i, j]
                    b = pb[k, i, j]
                    lap_a = (pa[k, ip, j] + pa[k, im, j] + pa[k, i, jp]
                             + pa[k, i, jm] - 4.0 * a)
                    lap_b = (pb[k, ip, j] + pb[k, im, j] + pb[k, i, jp]
                             + pb[k, i, jm] - 4.0 * b)
                    Pa[k, i, j] += 0.5 * dt * (
                        -(K * a + la / 6.0 * a**3 + hx * a * b * b)
                        + f_scale * fa_c * lap_a)
                    Pb[k, i, j] += 0.5 * dt * (
                        -((hx * a * a - hz) * b + lb / 6.0 * b**3)
                        + f_scale * fb_c * lap_b)
            if half == 0:
                # exact drive flow, drift, exact drive flow
                for i in range(L):
                    for j in range(M):
                        phi = pa[k, i, j] * s
                        mom = Pa[k, i, j] / s
                        phi = (phi + dt * da * mom) * s
                        pa[k, i, j] = phi
                        Pa[k, i, j] = mom / s
                        pb[k, i, j] += dt * db * Pb[k, i, j]


def _verlet_step(ens, p, dt, K_mid, eps=0.0, f_scale=1.0):
    """One symplectic step: half kick, exact drive flow, drift, flow, half kick.

    The drive generator eps (phi d/dphi - Pi d/dPi) is a pure scaling with
    exact flow phi -> e^{eps} phi, Pi -> e^{-eps} Pi; applying it exactly on
    both sides of the drift keeps the composition symplectic.
    """
    _verlet_kernel(ens.phi_a, ens.pi_a, ens.phi_b, ens.pi_b, dt, K_mid,
                   p.delta_a, p.delta_b, p.f_a, p.f_b, p.lambda_a, p.lambda_b,
                   p.h_x, p.h_z, eps, f_scale)


def single_site_ground(p, sector, mass, n_grid=2001, span=None):
    """1D ground state of H = -(hbar^2 delta/2) d^2 + mass phi^2/2 + lam phi^4/24.

    Returns (grid, psi) with psi real, normalized on the grid.
    """
    delta = p.delta_a if sector == "a" else p.delta_b
    lam = p.lambda_a if sector == "a" else p.lambda_b
    if span is None:
        # cover the classical minima plus several zero-point widths
        phi0 = np.sqrt(max(0.0, -6.0 * mass / lam)) if lam > 0 else 0.0
        curv = abs(mass) + 0.5 * lam * phi0**2
        width = np.sqrt(p.hbar) * (delta / max(curv, 1e-12)) ** 0.25
        span = phi0 + 8.0 * width + 1.0
    grid = np.linspace(-span, span, n_grid)
    h = grid[1] - grid[0]
    v = 0.5 * mass * grid**2 + lam / 24.0 * grid**4
    kin = p.hbar**2 * delta / (2.0 * h * h)
    diag = v + 2.0 * kin
    off = np.full(n_grid - 1, -kin)
    from scipy.linalg import eigh_tridiagonal
    _, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
    psi = vecs[:, 0]
    psi /= np.sqrt((psi**2).sum() * h)
    if psi[np.argmax(np.abs(psi))] < 0:
        psi = -psi
    return grid, psi


def gaussian_fit(grid, psi, half="full"):
    """Moment-matched Gaussian of a 1D wavefunction; returns (mu, sigma, fidelity).

    ``half="positive"`` restricts to phi > 0 first (one well of a symmetric
    double-well cat state).  sigma is the standard deviation of |psi|^2; the
    fidelity is the overlap with the Gaussian wavefunction of that density.
    """
    h = grid[1] - grid[0]
    density = psi**2
    if half == "positive":
        density = np.where(grid > 0, density, 0.0)
        psi_fit = np.where(grid > 0, psi, 0.0)
    else:
        psi_fit = psi
    norm = density.sum() * h
    density = density / norm
    psi_fit = psi_fit / np.sqrt(norm)
    mu = (grid * density).sum() * h
    sigma = np.sqrt(((grid - mu) ** 2 * density).sum() * h)
    gauss = (2.0 * np.pi * sigma**2) ** -0.25 * np.exp(-((grid - mu) ** 2) / (4.0 * sigma**2))
    fidelity = abs((gauss * psi_fit).sum() * h)
    return mu, sigma, fidelity


def sample_initial_ensemble(p, burn_in=None, settle=None, dt=0.05, ramp_only=False):
    """Wigner-sample the uncoupled single-site ground state, then relax.

    Each site draws (phi_a, Pi_a, phi_b, Pi_b) from the Gaussian fit of the
    numerically computed single-site ground state at K = k_start; for the
    double-well a-sector each sample picks one global well sign.  The
    gradient couplings then ramp linearly from zero over ``burn_in``
    (default 50/h_x) followed by ``settle`` (default 10/h_x) at full
    strength, all at fixed K.
    """
    if burn_in is None:
        burn_in = 50.0 / p.h_x
    if settle is None:
        settle = 10.0 / p.h_x
    K = p.k_start
    grid_a, psi_a = single_site_ground(p, "a", K)
    mu_a, sig_a, fid_a = gaussian_fit(grid_a, psi_a, half="positive")
    phi_a_sq = ((grid_a * psi_a) ** 2).sum() * (grid_a[1] - grid_a[0])
    mass_b = p.h_x * phi_a_sq - p.h_z
    grid_b, psi_b = single_site_ground(p, "b", mass_b)
    mu_b, sig_b, fid_b = gaussian_fit(grid_b, psi_b)

    rng = np.random.default_rng(p.seed)
    shape = (p.n_samples, p.L, p.L)
    sign = rng.choice([-1.0, 1.0], size=(p.n_samples, 1, 1))
    # Gaussian wavefunction of width sigma has Wigner widths (sigma, hbar/2sigma)
    ens = FieldEnsemble(
        phi_a=sign * mu_a + sig_a * rng.standard_normal(shape),
        pi_a=(p.hbar / (2.0 * sig_a)) * rng.standard_normal(shape),
        phi_b=mu_b + sig_b * rng.standard_normal(shape),
        pi_b=(p.hbar / (2.0 * sig_b)) * rng.standard_normal(shape),
        K=K,
    )
    ens.fit_info = {"mu_a": mu_a, "sigma_a": sig_a, "fidelity_a": fid_a,
                    "mu_b": mu_b, "sigma_b": sig_b, "fidelity_b": fid_b}
    e0 = np.abs(total_energy(ens, p, f_scale=0.0)).max()
    n_ramp = max(1, int(round(burn_in / dt)))
    for step in range(n_ramp):
        f_scale = (step + 0.5) / n_ramp
        _verlet_step(ens, p, dt, K, f_scale=f_scale)
    if not ramp_only:
        for _ in range(max(1, int(round(settle / dt)))):
            _verlet_step(ens, p, dt, K)
    ens.check_finite("during burn-in")
    energy = total_energy(ens, p)
    runaway = np.abs(energy) > 100.0 * max(e0, 1.0)
    if runaway.any():
        raise BurnInUnstable(f"energy diverged at sample {int(np.argmax(runaway))}")
    return ens


def classical_alpha(p, ens, K):
    """Drive coefficient minimizing the ensemble fluctuation of the residual.

    With A = alpha delta_a Int phi_a Pi_a, the residual G = dH/dK + {H, A}
    has per-site densities g0 = phi_a^2 / 2 and
    g1 = delta_a (phi_a dV/dphi_a - delta_a Pi_a^2); alpha minimizes the
    ensemble mean square of the mean-subtracted g0 + alpha g1 (the mean is
    the diagonal part, which no gauge potential can remove).  Returns
    (alpha, degenerate_flag).
    """
    fa, _ = _forces(ens, p, K)
    g0 = 0.5 * ens.phi_a**2
    g1 = p.delta_a * (-ens.phi_a * fa - p.delta_a * ens.pi_a**2)
    dg0 = g0 - g0.mean(axis=0)
    dg1 = g1 - g1.mean(axis=0)
    denom = (dg1 * dg1).mean()
    if denom < 1e-30:
        return 0.0, True
    return float(-(dg0 * dg1).mean() / denom), False


def order_parameter(ens, p, r=(5, 0), sector="a"):
    """Lattice- and ensemble-averaged off-site mode correlator.

    The mode operator uses the final-sweep on-site harmonic frequency:
    a = (kappa / 4 delta)^{1/4} (phi + i Pi / sqrt(kappa / delta)) with
    kappa = 20 h_x for the a-sector and h_z for the b-sector.  Returns
    (value, standard_error) with the error estimated from the per-sample
    lattice averages.
    """
    if sector == "a":
        kappa, delta, phi, pi = p.k_final, p.delta_a, ens.phi_a, ens.pi_a
    else:
        kappa, delta, phi, pi = p.h_z, p.delta_b, ens.phi_b, ens.pi_b
    scale = np.sqrt(kappa / delta)
    a = np.sqrt(scale / 2.0) * (phi + 1j * pi / scale)
    shifted = np.roll(np.roll(a, -r[0], axis=-1), -r[1], axis=-2)
    per_sample = (np.conj(shifted) * a).mean(axis=(-2, -1))
    value = per_sample.mean()
    n = per_sample.shape[0]
    se = np.sqrt(per_sample.real.var(ddof=1) / n + 1j * 0) + \
        1j * np.sqrt(per_sample.imag.var(ddof=1) / n)
    return complex(value), complex(se)


def condensed_limits(p):
    """Mean-field condensate magnitudes of the two order parameters.

    a-sector: phi_a frozen at the K = k_start minimum, measured with the
    final-sweep mode operator; b-sector: phi_b at its K = k_final minimum.
    """
    phi_a_sq = 6.0 * (-p.k_start) / p.lambda_a
    phi_b_sq = 6.0 * p.h_z / p.lambda_b
    lim_a = phi_a_sq * np.sqrt(p.k_final / (4.0 * p.delta_a))
    lim_b = phi_b_sq * np.sqrt(p.h_z / (4.0 * p.delta_b))
    return lim_a, lim_b


def run_twa_sweep(p, T_values, lambda_f=0.0, dt=0.05, r=(5, 0),
                  alpha_table=None, initial=None, alpha_stride=10):
    """Sweep K linearly from -20 h_x to 20 h_x for each total time T.

    ``lambda_f`` scales the classical drive (0 = undriven, in units of h_x
    as quoted for the published tuning); ``alpha_table`` is an optional
    K -> alpha callable, otherwise alpha is re-fit from the evolving
    ensemble every ``alpha_stride`` steps.  Returns a list of result dicts.
    """
    if initial is None:
        initial = sample_initial_ensemble(p, dt=dt)
    results = []
    for T in T_values:
        ens = initial.copy()
        n_steps = max(1, int(round(T / dt)))
        step_dt = T / n_steps
        k_dot = (p.k_final - p.k_start) / T
        lam = lambda_f * p.h_x
        alpha = 0.0
        for step in range(n_steps):
            K_mid = p.k_start + k_dot * (step + 0.5) * step_dt
            if lam != 0.0:
                if alpha_table is not None:
                    alpha = float(alpha_table(K_mid))
                elif step % alpha_stride == 0:
                    alpha, _ = classical_alpha(p, ens, K_mid)
                eps = k_dot * lam * p.delta_a * alpha
            else:
                eps = 0.0
            # stiff drives (fast sweeps, large lambda_f) need substeps to
            # keep the squeeze per step small; eps == 0 stays single-step
            n_sub = max(1, int(np.ceil(abs(eps) * step_dt / 0.1)))
            for _ in range(n_sub):
                _verlet_step(ens, p, step_dt / n_sub, K_mid, eps=eps)
        ens.K = p.k_final
        ens.check_finite(f"at T={T}")
        op_a, se_a = order_parameter(ens, p, r, "a")
        op_b, se_b = order_parameter(ens, p, r, "b")
        results.append({
            "T": float(T),
            "order_a": op_a, "se_a": se_a,
            "order_b": op_b, "se_b": se_b,
            "final_energy": float(total_energy(ens, p).mean()),
            "ensemble": ens,
        })
    return results

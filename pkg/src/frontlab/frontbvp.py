"""Traveling-front boundary-value solvers.

Newton solvers on [0, L] with the invasion-box boundary conditions (odd
derivatives zero at 0, even derivatives zero at L), fourth-order finite
differences:

* free-speed fronts with an integral phase condition (bistable / pushed),
* fixed-speed pulled fronts through a farfield-core decomposition
  q = chi_- u_- + w + chi_+ (a xi + b) e^{-eta xi} with a strongly
  localized core w, whose leading-edge coefficient a changes sign at the
  pushed-to-pulled transition,
* parameter continuation and transition detection,
* discretized spectra of the linearization in exponential weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eig as dense_eig
from scipy.sparse.linalg import eigs as sparse_eigs, spsolve

from ._fd import BC_INVASION, Discretization
from .errors import (EigFailure, JacobianSingular, NoConvergence, NoSignChange,
                     StepFailure, TailBelowNoise, WeakCoreDecay)

__all__ = ["FrontProfile", "FarfieldCoreDecomp", "FrontSpectrum",
           "solve_front_newton", "solve_pulled_front", "detect_transition",
           "continue_front", "front_spectrum", "front_decay_rate"]

TOL_BVP = 1e-10


@dataclass
class FrontProfile:
    x: np.ndarray
    values: np.ndarray          # (N, n)
    speed: float
    wake_state: np.ndarray | None
    L: float
    n: int
    fd_order: int = 4
    residual: float = 0.0
    nu_tail: complex | None = None
    tail_class: str | None = None

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def amplitude(self) -> np.ndarray:
        return np.sqrt((self.values ** 2).sum(axis=0))

    def interface(self, frac: float = 0.5) -> float:
        """Position where the amplitude last crosses frac * wake amplitude."""
        amp = self.amplitude()
        ref = np.linalg.norm(self.wake_state) if self.wake_state is not None \
            else amp.max()
        lev = frac * ref
        above = np.nonzero(amp >= lev)[0]
        if len(above) == 0 or above[-1] == len(amp) - 1:
            return float(self.x[-1])
        i = above[-1]
        s = (lev - amp[i]) / (amp[i + 1] - amp[i])
        return float(self.x[i] + s * (self.x[i + 1] - self.x[i]))


@dataclass
class FarfieldCoreDecomp:
    core: np.ndarray
    a: float
    b: float
    eta_lin: float
    cut_center: float
    cut_halfwidth: float
    core_tail_rate: float = math.nan


@dataclass
class FrontSpectrum:
    weight_eta: float
    eigenvalues: np.ndarray
    leading: complex
    leading_vector: np.ndarray | None = None


def _default_guess(model, x: np.ndarray, c: float | None = None,
                   width: float | None = None) -> np.ndarray:
    """Logistic front connecting the wake state to zero.  When the frame
    speed is known, the leading-edge decay rate is matched to the slowest
    stable spatial root of the dispersion relation at lambda = 0, which
    keeps Newton away from the trivial solution."""
    wake = model.wake_state
    if wake is None:
        raise ValueError(f"model {model.name} has no wake state; supply a guess")
    kappa = None
    if width is not None:
        kappa = 1.0 / width
    elif c is not None:
        try:
            from .polymat import ComovingDispersion
            roots = ComovingDispersion(model.symbol(), c).nu_roots(0.0)
            stable = roots[roots.real < -1e-9]
            if len(stable):
                kappa = float(-stable.real.max())
        except Exception:
            kappa = None
    if kappa is None or not np.isfinite(kappa):
        kappa = 0.25
    kappa = min(max(kappa, 0.05), 3.0)
    prof = 1.0 / (1.0 + np.exp(kappa * (x - 0.5 * x[-1])))
    return np.asarray(wake, float).reshape(-1, 1) * prof[None, :]


def _phase_row(disc: Discretization, component: int = 0,
               halfwidth: float = 5.0) -> np.ndarray:
    lo, hi = 0.5 * disc.L - halfwidth, 0.5 * disc.L + halfwidth
    row = np.zeros(disc.model.dim * disc.n)
    sel = (disc.x >= lo) & (disc.x <= hi)
    row[component * disc.n: (component + 1) * disc.n][sel] = disc.h
    return row


def _recenter(U: np.ndarray, model, x: np.ndarray, target: float) -> np.ndarray:
    """Integer-cell shift moving the mid-amplitude interface to ``target``,
    zero-filling downstream and wake-filling upstream."""
    amp = np.sqrt((U * U).sum(axis=0))
    ref = np.linalg.norm(model.wake_state) if model.wake_state is not None \
        else amp.max()
    above = np.nonzero(amp >= 0.5 * ref)[0]
    if len(above) == 0:
        return U
    h = x[1] - x[0]
    shift = int(round((x[above[-1]] - target) / h))
    if shift == 0:
        return U
    V = U.copy()
    if shift > 0:
        V[:, :-shift] = U[:, shift:]
        V[:, -shift:] = 0.0
    else:
        s = -shift
        V[:, s:] = U[:, :-s]
        fill = model.wake_state if model.wake_state is not None else U[:, [0]]
        V[:, :s] = np.asarray(fill, float).reshape(-1, 1)
    return V


def _evolved_seed(model, L: float, n: int, c: float, fd_order: int,
                  t_relax: float = 40.0) -> np.ndarray:
    """Short comoving IMEX run from step data, recentered at L/2: a seed on
    the front's attractor, out of the trivial state's Newton basin."""
    from .simulate import InitialCondition, SimConfig, run_comoving
    cfg = SimConfig(L=L, n_grid=n, dt=0.05, t_end=t_relax,
                    ic=InitialCondition("step", 1.0, 0.45 * L),
                    sample_dt=1.0, fd_order=fd_order)
    state, _, _ = run_comoving(model, c, cfg)
    x = (np.arange(n) + 0.5) * (L / n)
    return _recenter(state, model, x, 0.5 * L)


def solve_front_newton(model, L: float, n: int = 2048,
                       phase_value: float | None = None,
                       unknown_speed: bool = True,
                       c: float | None = None,
                       guess: np.ndarray | None = None,
                       c_guess: float | None = None,
                       tol: float = TOL_BVP, max_iter: int = 60,
                       fd_order: int = 4, evolve_seed: str = "auto") -> FrontProfile:
    """Newton solve of P(d) u + c u' + f(u) = 0 on the invasion box.

    With unknown speed the system is bordered by the integral phase
    condition over [L/2 - 5, L/2 + 5]; with fixed speed the collocation
    system is square (the boundary conditions pin the translate).  The
    trivial state attracts Newton from poor data, so by default a failed
    or collapsed solve is retried from a seed produced by a short comoving
    time integration ("auto"; "never"/"always" override).
    """
    disc = Discretization(model, L, n, bc=BC_INVASION, order=fd_order)
    N = model.dim
    if unknown_speed:
        cc = c_guess if c_guess is not None else (c if c is not None else 1.0)
    else:
        if c is None:
            raise ValueError("fixed-speed solve needs c")
        cc = float(c)
    if guess is None:
        if evolve_seed == "always":
            U = _evolved_seed(model, L, n, cc, fd_order)
        else:
            U = _default_guess(model, disc.x, c=cc)
    else:
        U = np.asarray(guess, dtype=float).reshape(N, n).copy()
    prow = _phase_row(disc)
    if phase_value is None:
        wake = model.wake_state
        if wake is not None:
            phase_value = 0.5 * float(np.asarray(wake).reshape(-1)[0])
        else:
            phase_value = float(prow @ U.reshape(-1)) / 10.0  # pin the guess
    p_target = phase_value * 10.0  # M (L+ - L-)

    def attempt(U0, c0):
        u, cval, rn = _newton_front(disc, U0.reshape(-1), c0, unknown_speed,
                                    prow, p_target, tol, max_iter)
        return u, cval, rn

    collapsed = None
    try:
        u, cc_out, rn = attempt(U, cc)
        wake_norm = (np.linalg.norm(model.wake_state)
                     if model.wake_state is not None else 1.0)
        if np.abs(u).max() < 1e-3 * max(wake_norm, 1e-12):
            collapsed = "converged to the trivial state"
    except NoConvergence as exc:
        collapsed = str(exc)
    if collapsed is not None:
        if guess is not None or evolve_seed == "never":
            raise NoConvergence(f"front Newton failed: {collapsed}")
        U = _evolved_seed(model, L, n, cc, fd_order)
        u, cc_out, rn = attempt(U, cc)
        if np.abs(u).max() < 1e-3:
            raise NoConvergence("front Newton collapsed to the trivial state "
                                "even from an evolved seed")

    prof = FrontProfile(x=disc.x, values=u.reshape(N, n), speed=float(cc_out),
                        wake_state=model.wake_state, L=float(L), n=n,
                        fd_order=fd_order, residual=float(rn))
    try:
        front_decay_rate(prof, model=model)
    except TailBelowNoise:
        pass
    return prof


def _newton_front(disc, u, cc, unknown_speed, prow, p_target, tol, max_iter):
    """Bordered Newton iteration.

    Free speed: unknowns (u, c), rows (collocation, phase).  Fixed speed:
    the translate is exponentially weakly pinned whenever the two leading
    spatial decay rates differ, so the plain square system drifts; instead
    the phase row is kept and balanced by a scalar slack force at a single
    wake node, which regularizes the bordered matrix.  The converged slack
    is exactly the residual of the unmodified equation and must pass the
    tolerance, so nothing is swept under the rug.
    """
    N = disc.model.dim
    D1 = sp.kron(np.eye(N), disc.D(1), format="csr")
    if not unknown_speed:
        # fixed random border: guaranteed O(1/sqrt(n)) overlap with the
        # adjoint near-null vector, whose support wanders model by model
        rng = np.random.default_rng(20240817)
        e_col = rng.standard_normal(N * disc.n)
        e_col /= np.abs(e_col).max()
    s = 0.0  # slack (fixed speed) -- reused as dc accumulator otherwise

    def residual(uvec, aux):
        r = disc.linear_operator(cc if not unknown_speed else aux) @ uvec \
            + disc.nonlinear(uvec)
        if unknown_speed:
            return np.concatenate([r, [prow @ uvec - p_target]])
        return np.concatenate([r + aux * e_col, [prow @ uvec - p_target]])

    aux = cc if unknown_speed else s
    r = residual(u, aux)
    rn = np.abs(r).max()
    for it in range(max_iter):
        scale = 1.0 + np.abs(u).max()
        if rn < tol * scale and (unknown_speed or abs(aux) < tol * scale):
            return u, (aux if unknown_speed else cc), rn + (0 if unknown_speed else abs(aux))
        A = disc.linear_operator(cc if not unknown_speed else aux) \
            + disc.nonlinear_jacobian(u)
        bcol = (D1 @ u) if unknown_speed else e_col
        try:
            M = sp.bmat([[A, sp.csr_matrix(bcol.reshape(-1, 1))],
                         [sp.csr_matrix(prow[None, :]),
                          sp.csr_matrix((1, 1))]], format="csc")
            step = spsolve(M, r)
        except RuntimeError as exc:
            raise JacobianSingular(f"linear solve failed: {exc}")
        du, daux = step[:-1], step[-1]
        if not np.isfinite(du).all() or not np.isfinite(daux):
            raise JacobianSingular("non-finite Newton step")
        alpha = 1.0
        while alpha >= 1e-4:
            u_try = u - alpha * du
            aux_try = aux - alpha * daux
            r_try = residual(u_try, aux_try)
            rn_try = np.abs(r_try).max()
            if rn_try < (1.0 - 1e-4 * alpha) * rn or rn_try < tol:
                break
            alpha *= 0.5
        else:
            raise NoConvergence("front Newton line search stalled",
                                iterations=it, residual=rn)
        u, aux, r, rn = u_try, aux_try, r_try, rn_try
    raise NoConvergence("front Newton did not converge",
                        iterations=max_iter, residual=rn)


def _smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def _cutoffs(x: np.ndarray, center: float, halfwidth: float):
    chi_p = _smoothstep((x - (center - halfwidth)) / (2.0 * halfwidth))
    return 1.0 - chi_p, chi_p


def solve_pulled_front(model, c_lin: float, eta_lin: float, L: float,
                       n: int = 2048, guess: np.ndarray | None = None,
                       tol: float = TOL_BVP, max_iter: int = 60,
                       fd_order: int = 4):
    """Fixed-speed pulled-front solve in farfield-core variables.

    Unknowns are the strongly localized core w and the leading-edge
    coefficients (a, b) of chi_+ (a xi + b) e^{-eta xi}; strong localization
    is imposed by two discrete orthogonality conditions against the
    e^{-eta xi} and xi e^{-eta xi} modes over the right 10% of the grid
    (one condition per farfield degree of freedom; the fixed speed and
    boundary conditions pin the translate, so no phase condition is
    needed).  Returns (FrontProfile of q, FarfieldCoreDecomp).
    """
    if model.dim != 1:
        raise ValueError("farfield-core pulled solves are implemented for scalar models")
    disc = Discretization(model, L, n, bc=BC_INVASION, order=fd_order)
    x = disc.x
    wake = float(np.asarray(model.wake_state).reshape(-1)[0])
    center, halfwidth = 0.5 * L, 5.0
    chi_m, chi_p = _cutoffs(x, center, halfwidth)
    efac = np.exp(-eta_lin * x)
    mode_b = chi_p * efac
    mode_a = chi_p * x * efac

    # seed: free-speed solve for the bulk shape (its speed differs from
    # c_lin only by the finite-size correction, but its far tail is
    # oscillatory, so only a one-point leading-edge estimate of (a, b) is
    # trustworthy; the localization rows determine the exact split)
    if guess is None:
        pre = solve_front_newton(model, L, n=n, unknown_speed=True,
                                 c_guess=c_lin, fd_order=fd_order)
        q0 = pre.values[0]
    else:
        q0 = np.asarray(guess, dtype=float).reshape(-1)
    i_star = int(np.searchsorted(x, center + halfwidth + 2.0))
    a = float(q0[i_star] * math.exp(eta_lin * x[i_star]) / x[i_star])
    b = 0.0
    w = q0 - chi_m * wake - (a * x + b) * efac * chi_p

    # strong-localization rows: orthogonality against the two farfield
    # modes on a window past the cutoff ramp, where they are still
    # numerically alive (the far right of the grid holds only roundoff
    # once eta * L is large); QR-orthonormalized for conditioning.  The
    # core decay-rate check below uses an earlier, disjoint window: on the
    # constraint window itself the orthogonalization mixes rates.
    rate_lo = center + halfwidth + 1.0
    rate_hi = rate_lo + max(6.0, 3.0 / eta_lin)
    win_lo = rate_hi + 1.0
    win_hi = min(0.93 * L, win_lo + max(10.0, 4.0 / eta_lin))
    if win_hi - win_lo < 2.0:
        raise ValueError("domain too short for the farfield-core windows; "
                         "increase L")
    win = (x >= win_lo) & (x <= win_hi)
    cols = np.column_stack([efac[win], x[win] * efac[win]])
    Q, _ = np.linalg.qr(cols)
    r1 = np.zeros(len(x))
    r2 = np.zeros(len(x))
    r1[win], r2[win] = Q[:, 0], Q[:, 1]

    Lmat = disc.linear_operator(c_lin)
    # phase row pins the translate; on the strongly localized subspace the
    # collocation rows have a one-dimensional cokernel, so the extra row is
    # consistent -- a random-bordered slack makes the square system
    # nonsingular and its converged value measures genuine insolvability
    prow = _phase_row(disc)
    p_target = 0.5 * wake * 10.0
    rng = np.random.default_rng(20240817)
    e_rand = rng.standard_normal(n)
    e_rand /= np.abs(e_rand).max()

    def q_of(z):
        w_, a_, b_ = z[:-3], z[-3], z[-2]
        return chi_m * wake + w_ + (a_ * x + b_) * efac * chi_p

    def residual(z):
        q = q_of(z)
        r = Lmat @ q + disc.nonlinear(q) + z[-1] * e_rand
        return np.concatenate([r, [prow @ q - p_target,
                                   r1 @ z[:-3], r2 @ z[:-3]]])

    z = np.concatenate([w, [a, b, 0.0]])
    r = residual(z)
    rn = np.abs(r).max()
    for it in range(max_iter):
        if rn < tol * (1.0 + np.abs(z).max()) and abs(z[-1]) < tol * (1.0 + np.abs(z).max()):
            break
        q = q_of(z)
        B = Lmat + disc.nonlinear_jacobian(q)
        col_a = (B @ mode_a).reshape(-1, 1)
        col_b = (B @ mode_b).reshape(-1, 1)
        M = sp.bmat([
            [B, sp.csr_matrix(col_a), sp.csr_matrix(col_b),
             sp.csr_matrix(e_rand.reshape(-1, 1))],
            [sp.csr_matrix(prow[None, :]),
             sp.csr_matrix([[float(prow @ mode_a), float(prow @ mode_b), 0.0]])],
            [sp.csr_matrix(r1[None, :]), sp.csr_matrix((1, 3))],
            [sp.csr_matrix(r2[None, :]), sp.csr_matrix((1, 3))],
        ], format="csc")
        step = spsolve(M, r)
        if not np.isfinite(step).all():
            raise JacobianSingular("non-finite Newton step in pulled solve")
        alpha = 1.0
        while alpha >= 1e-4:
            z_try = z - alpha * step
            r_try = residual(z_try)
            rn_try = np.abs(r_try).max()
            if rn_try < (1.0 - 1e-4 * alpha) * rn or rn_try < tol:
                break
            alpha *= 0.5
        else:
            raise NoConvergence("pulled-front Newton stalled", iterations=it,
                                residual=rn)
        z, r, rn = z_try, r_try, rn_try
    else:
        raise NoConvergence("pulled-front Newton did not converge",
                            iterations=max_iter, residual=rn)

    w, a, b = z[:-3], float(z[-3]), float(z[-2])
    q = q_of(z)
    if np.abs(q).max() < 0.3 * abs(wake):
        raise NoConvergence("pulled-front solve collapsed to the trivial state",
                            residual=rn)
    rate = _tail_rate(x, np.abs(w), lo=rate_lo, hi=rate_hi,
                      floor=max(1e-13, 1e-11 * np.abs(w).max()))
    if not (rate is not None and rate > 1.05 * eta_lin):
        exc = WeakCoreDecay(
            f"core decays at rate {rate} <= 1.05 * eta_lin = {1.05 * eta_lin:.4f}: "
            "wrong eta_lin or pushed regime", tail_rate=rate, eta=eta_lin)
        exc.decomp = (w, a, b)
        exc.grid = x
        raise exc
    prof = FrontProfile(x=x, values=q[None, :], speed=float(c_lin),
                        wake_state=model.wake_state, L=float(L), n=n,
                        fd_order=fd_order, residual=float(rn))
    decomp = FarfieldCoreDecomp(core=w, a=a, b=b, eta_lin=float(eta_lin),
                                cut_center=center, cut_halfwidth=halfwidth,
                                core_tail_rate=rate)
    try:
        front_decay_rate(prof, model=model)
    except TailBelowNoise:
        pass
    return prof, decomp


def _tail_rate(x: np.ndarray, amp: np.ndarray, lo: float, hi: float,
               floor: float = 1e-13):
    sel = (x >= lo) & (x <= hi) & (amp > floor)
    if sel.sum() < 10:
        return None
    coef = np.polyfit(x[sel], np.log(amp[sel]), 1)
    return float(-coef[0])


def front_decay_rate(profile: FrontProfile, model=None,
                     noise_floor: float = 1e-13) -> complex:
    """Log-linear fit of the leading-edge tail; oscillation-aware via the
    spacing of sign changes.  Classifies the front Steep/Generic by
    comparing against the two slowest stable spatial roots at lambda = 0
    when the model is supplied; stores the result on the profile."""
    amp = profile.amplitude()
    x = profile.x
    i0 = int(np.searchsorted(x, profile.interface(0.2)))
    tail = slice(i0, len(x))
    sel = amp[tail] > noise_floor
    xs, vs = x[tail][sel], amp[tail][sel]
    if len(xs) < 30:
        raise TailBelowNoise(f"only {len(xs)} tail points above {noise_floor}")
    # drop the last few points: boundary layer of the odd mirror
    xs, vs = xs[:-6], vs[:-6]
    if len(xs) < 30:
        raise TailBelowNoise("tail too short after boundary trim")
    re_rate = np.polyfit(xs, np.log(vs), 1)[0]
    # oscillation: zero crossings of the dominant component
    comp = profile.values[0][tail][sel][:-6]
    signs = np.sign(comp)
    flips = np.nonzero(np.diff(signs) != 0)[0]
    im_rate = 0.0
    if len(flips) >= 3:
        spacing = np.diff(xs[flips]).mean()
        if spacing > 0:
            im_rate = math.pi / spacing
    nu_tail = complex(re_rate, im_rate)
    profile.nu_tail = nu_tail
    if model is not None:
        from .polymat import ComovingDispersion
        dr = ComovingDispersion(model.symbol(), profile.speed)
        roots = dr.nu_roots(0.0)
        stable = np.sort_complex(roots[roots.real < -1e-9])
        if len(stable) >= 2:
            nu_minus, nu_plus = stable[0], stable[-1]
            steep = abs(nu_tail.real - nu_minus.real) < abs(nu_tail.real - nu_plus.real)
            profile.tail_class = "Steep" if steep else "Generic"
    return nu_tail


def detect_transition(family: Callable[[float], object], bracket: tuple,
                      L: float = 40.0, n: int = 1600, tol_mu: float = 1e-10,
                      max_iter: int = 40, speed_fn=None):
    """Secant iteration on the leading-edge coefficient a(mu) = 0 of the
    pulled-front decomposition: locates the pushed-to-pulled transition.

    ``speed_fn(mu) -> (c_lin, eta_lin)`` defaults to the marginal
    double-root computation of the spreading module.
    """
    from .spreading import linear_spreading_speed

    def data(mu):
        model = family(mu)
        if speed_fn is not None:
            c_lin, eta = speed_fn(mu)
        else:
            sr = linear_spreading_speed(model)
            c_lin, eta = sr.c_lin, sr.eta_lin
        _, dec = solve_pulled_front(model, c_lin, eta, L, n=n)
        return dec.a, c_lin

    mu0, mu1 = bracket
    a0, _ = data(mu0)
    a1, _ = data(mu1)
    if a0 * a1 > 0:
        raise NoSignChange(f"a({mu0}) = {a0:.3e} and a({mu1}) = {a1:.3e} "
                           "have the same sign")
    for _ in range(max_iter):
        mu2 = mu1 - a1 * (mu1 - mu0) / (a1 - a0)
        if not (min(mu0, mu1) <= mu2 <= max(mu0, mu1)):
            mu2 = 0.5 * (mu0 + mu1)
        a2, c2 = data(mu2)
        if a0 * a2 <= 0:
            mu1, a1 = mu2, a2
        else:
            mu0, a0 = mu2, a2
        if abs(mu1 - mu0) < tol_mu * (1.0 + abs(mu1)) or a2 == 0.0:
            break
    mu_star = mu2
    model = family(mu_star)
    if speed_fn is not None:
        c_lin, eta = speed_fn(mu_star)
    else:
        sr = linear_spreading_speed(model)
        c_lin, eta = sr.c_lin, sr.eta_lin
    prof, dec = solve_pulled_front(model, c_lin, eta, L, n=n)
    return mu_star, prof, dec


def continue_front(family: Callable[[float], object], seed: FrontProfile,
                   path: Sequence[float], arclength: bool = False,
                   n: int | None = None, **solve_kw) -> list[FrontProfile]:
    """Predictor-corrector continuation of a free-speed front along a model
    parameter, one profile per path point; failed corrections bisect the
    parameter step and raise StepFailure (with the partial branch attached)
    at the minimal step."""
    pts = list(path)
    if not pts:
        return [seed]
    n = n or seed.n
    out: list[FrontProfile] = []
    hist: list[tuple[float, FrontProfile]] = []

    def predict(mu):
        if len(hist) < 2:
            src = hist[-1][1] if hist else seed
            return src.values, src.speed
        (m1, p1), (m2, p2) = hist[-2], hist[-1]
        if m1 == m2:
            return p2.values, p2.speed
        t = (mu - m2) / (m2 - m1)
        vals = p2.values + (p2.values - p1.values) * t
        cc = p2.speed + (p2.speed - p1.speed) * t
        return vals, cc

    def advance(mu, depth=0):
        vals, cc = predict(mu)
        try:
            prof = solve_front_newton(family(mu), seed.L, n=n, guess=vals,
                                      c_guess=cc, **solve_kw)
        except NoConvergence:
            if depth >= 30 or not hist:
                raise StepFailure(f"front continuation failed at mu={mu}",
                                  parameter=mu, branch=out)
            mid = 0.5 * (hist[-1][0] + mu)
            if abs(mu - mid) < 1e-12 * (1.0 + abs(mu)):
                raise StepFailure(f"front continuation failed at mu={mu}",
                                  parameter=mu, branch=out)
            advance(mid, depth + 1)
            return advance(mu, depth + 1)
        hist.append((mu, prof))
        return prof

    for mu in pts:
        out.append(advance(mu))
    return out


def front_spectrum(model, profile: FrontProfile, eta: float,
                   n_eigs: int = 12, dense_cutoff: int = 2600,
                   target: complex = 0.0, ramp_start: float = 2.0,
                   ramp_width: float = 2.0) -> FrontSpectrum:
    """Eigenvalues of the weight-conjugated linearization about the front.

    The weight is one-sided, omega = exp(eta * ell(xi)) with a smooth
    softplus ramp ell(xi) ~ 0 on the wake side and ~ xi - ramp_start in the
    leading edge; the conjugated matrix is formed entrywise to avoid
    overflowing intermediate scalings.  Dense solve up to ``dense_cutoff``,
    shift-invert Arnoldi near ``target`` above it.
    """
    disc = Discretization(model, profile.L, profile.n, bc=BC_INVASION,
                          order=profile.fd_order)
    U = profile.values
    A = (disc.linear_operator(profile.speed)
         + disc.nonlinear_jacobian(U.reshape(-1))).tocoo()
    ell = ramp_width * np.logaddexp(0.0, (disc.x - ramp_start) / ramp_width)
    ell_full = np.tile(ell, model.dim)
    data = A.data * np.exp(eta * (ell_full[A.row] - ell_full[A.col]))
    M = sp.coo_matrix((data, (A.row, A.col)), shape=A.shape).tocsc()
    dim = M.shape[0]
    try:
        if dim <= dense_cutoff:
            vals, vecs = dense_eig(M.toarray())
        else:
            k = min(max(n_eigs, 6), dim - 2)
            vals, vecs = sparse_eigs(M, k=k, sigma=target)
    except Exception as exc:
        raise EigFailure(f"eigenvalue solve failed: {exc}")
    order = np.argsort(-vals.real)
    vals = vals[order]
    vecs = vecs[:, order]
    top = vals[:n_eigs]
    return FrontSpectrum(weight_eta=float(eta), eigenvalues=top,
                         leading=complex(top[0]),
                         leading_vector=vecs[:, 0])

"""Linear spreading speeds from marginal pinched double roots.

The spreading speed is the frame speed at which the rightmost pinched
double root of the comoving dispersion relation sits on the imaginary
axis.  We bracket in c, bisect on Re lambda of the tracked rightmost
pinched root, and report the marginal data (speed, frequency, spatial
decay rate, wavenumbers, effective diffusivity) together with weighted
essential-spectrum cross checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .doubleroot import (DOUBLE_DOUBLE, SIMPLE, DoubleRoot, check_pinching,
                         effective_diffusivity, find_double_roots,
                         newton_double_root)
from .errors import (BracketInvalid, DegenerateFamily, NonePinched, NoSolutions,
                     StableState, TrackingLost)
from .polymat import ComovingDispersion, MatrixPolynomial, essential_spectrum

__all__ = ["SpreadingResult", "rightmost_pinched", "linear_spreading_speed",
           "group_velocity_seed", "scalar_marginal_system",
           "wavenumber_predictions", "weighted_max", "speed_family"]

TOL_MARGINAL = 1e-8


@dataclass
class SpreadingResult:
    c_lin: float
    omega_lin: float
    nu_lin: complex
    eta_lin: float
    k_lin: float
    d_eff: complex | None
    source_root: DoubleRoot
    multi_interval: bool = False

    @property
    def k_node(self) -> float:
        return self.omega_lin / self.c_lin if self.omega_lin else 0.0

    def to_record(self) -> dict:
        return {
            "c_lin": self.c_lin,
            "omega_lin": self.omega_lin,
            "nu_lin": [self.nu_lin.real, self.nu_lin.imag],
            "eta_lin": self.eta_lin,
            "k_lin": self.k_lin,
            "k_node": self.k_node,
            "d_eff": None if self.d_eff is None else [self.d_eff.real, self.d_eff.imag],
            "multi_interval": self.multi_interval,
            "source_root": self.source_root.to_record(),
        }


def speed_family(base: MatrixPolynomial) -> Callable[[float], ComovingDispersion]:
    """Memoized c -> ComovingDispersion for one symbol."""
    cache: dict[float, ComovingDispersion] = {}

    def fam(c: float) -> ComovingDispersion:
        if c not in cache:
            cache[c] = ComovingDispersion(base, c)
        return cache[c]

    return fam


def rightmost_pinched(dr: ComovingDispersion, fast: bool = False) -> DoubleRoot:
    """The pinched double root of maximal Re lambda.

    Candidates are tested by decreasing real part and the first pinched one
    wins, so pinching checks run only until the verdict is settled.
    Conjugate-pair ties resolve to the member with Im lambda >= 0 (the
    sort order puts it first)."""
    try:
        roots = find_double_roots(dr)
    except DegenerateFamily:
        dr = dr.squarefree()
        roots = find_double_roots(dr)
    n_steps = 60 if fast else 160
    # order by decreasing Re lambda, breaking near-ties (conjugate pairs)
    # towards Im lambda >= 0
    roots = sorted(roots, key=lambda r: -r.lam.real)
    order = []
    i = 0
    while i < len(roots):
        j = i + 1
        tol = 1e-7 * (1.0 + abs(roots[i].lam.real))
        while j < len(roots) and roots[i].lam.real - roots[j].lam.real <= tol:
            j += 1
        order += sorted(roots[i:j], key=lambda r: -r.lam.imag)
        i = j
    checked = []
    for r in order:
        if r.classification == "Degenerate":
            checked.append(r)
            continue
        v = check_pinching(dr, r, n_steps=n_steps)
        checked.append(v)
        if v.is_pinched:
            return v
    raise NonePinched("no pinched double root found", roots=checked)


def weighted_max(dr: ComovingDispersion, eta: float,
                 k_grid: Sequence[float] | None = None) -> float:
    """max Re of the essential spectrum in the weight e^{eta x}."""
    if k_grid is None:
        k_grid = np.linspace(-12.0, 12.0, 481)
    return essential_spectrum(dr, eta, k_grid).max_re


def group_velocity_seed(base: MatrixPolynomial,
                        k_grid: Sequence[float] | None = None):
    """Most unstable spectral point at c = 0 and the comoving frame that
    turns it into a double root: returns (c0, seed DoubleRoot at speed c0).
    """
    if k_grid is None:
        k_grid = np.linspace(-12.0, 12.0, 961)
    dr0 = ComovingDispersion(base, 0.0)
    spec = essential_spectrum(dr0, 0.0, k_grid)
    if spec.max_re <= 0:
        raise StableState("essential spectrum at c = 0 is nonpositive")
    i, j = np.unravel_index(np.argmax(spec.lambdas.real), spec.lambdas.shape)
    ks = np.asarray(k_grid, dtype=float)

    def branch_re(k):
        roots = dr0.lambda_roots(1j * k)
        return roots[np.argmin(np.abs(roots - spec.lambdas[i, j]))]

    # local quadratic polish of the maximum of Re lambda over k
    k_star = ks[i]
    h = ks[1] - ks[0]
    for _ in range(40):
        f0, fp_, fm = (branch_re(k_star).real, branch_re(k_star + h).real,
                       branch_re(k_star - h).real)
        denom = fp_ - 2 * f0 + fm
        if denom >= 0 or abs(denom) < 1e-300:
            break
        step = 0.5 * h * (fm - fp_) / denom
        k_star += np.clip(step, -h, h)
        if abs(step) < 1e-13 * (1 + abs(k_star)):
            break
        h = max(min(h, abs(step) * 4), 1e-7)
    lam_star = branch_re(k_star)
    hh = 1e-6 * (1.0 + abs(k_star))
    dlam = (branch_re(k_star + hh) - branch_re(k_star - hh)) / (2 * hh)
    c0 = float(-dlam.imag)
    dr_c0 = ComovingDispersion(base, c0)
    seed = newton_double_root(dr_c0, lam_star + c0 * 1j * k_star, 1j * k_star)
    return c0, seed


def _reduced_family(fam):
    """Wrap a dispersion family so degenerate members are square-free
    reduced transparently."""

    def fn(c):
        dr = fam(c)
        try:
            from .doubleroot import _family_is_degenerate
            if _family_is_degenerate(dr):
                return dr.squarefree()
        except Exception:
            pass
        return dr

    return fn


def _conjugate_root(dr, root: DoubleRoot) -> DoubleRoot:
    """The conjugate-pair partner (real symbols only)."""
    return newton_double_root(dr, root.lam.conjugate(), root.nu.conjugate())


def _marginal_newton(dr_fn, c0: float, seed: DoubleRoot, max_iter: int = 40):
    """Polish a nearly marginal double root to machine precision in the
    frame speed: Newton on the four real equations d = 0, d_nu = 0 with
    lambda = i w, unknowns (c, w, Re nu, Im nu).

    Uses d_c(lambda, nu) = d_0(lambda - c nu, nu), so that
    dd/dc = -nu d_lambda and d(d_nu)/dc = -d_lambda - nu d_{lambda nu}.
    For double double roots d_lambda vanishes and the plain system is
    singular; there a Gauss-Newton iteration on the extended system
    (d, d_nu, d_lambda) = 0 takes over.
    """
    extended = seed.classification == DOUBLE_DOUBLE
    x = np.array([c0, seed.lam.imag, seed.nu.real, seed.nu.imag])
    for _ in range(max_iter):
        c, w, nr, ni = x
        dr = dr_fn(c)
        lam = 1j * w
        nu = complex(nr, ni)
        d = dr.eval_poly(lam, nu)
        dn = dr.eval_poly(lam, nu, dnu=1)
        dl = dr.eval_poly(lam, nu, dlam=1)
        mag = dr.magnitude(lam, nu)
        rows = [d, dn, dl] if extended else [d, dn]
        F = np.concatenate([[r.real, r.imag] for r in rows])
        if np.abs(F).max() < 1e-13 * mag:
            root = newton_double_root(dr, lam, nu)
            return float(c), root
        dln = dr.eval_poly(lam, nu, dlam=1, dnu=1)
        dnn = dr.eval_poly(lam, nu, dnu=2)
        dll = dr.eval_poly(lam, nu, dlam=2)
        # complex sensitivities of each row to (c, w, nr, ni)
        cols = [[-nu * dl, 1j * dl, dn, 1j * dn],
                [-dl - nu * dln, 1j * dln, dnn, 1j * dnn]]
        if extended:
            cols.append([-nu * dll, 1j * dll, dln, 1j * dln])
        J = np.empty((2 * len(cols), 4))
        for i, row in enumerate(cols):
            for j in range(4):
                J[2 * i, j] = row[j].real
                J[2 * i + 1, j] = row[j].imag
        if extended:
            step, *_ = np.linalg.lstsq(J, F, rcond=None)
        else:
            step = np.linalg.solve(J, F)
        if not np.isfinite(step).all():
            raise NoSolutions("marginal Newton produced a non-finite step")
        nstep = np.abs(step).max()
        if nstep > 0.5 * (1 + np.abs(x).max()):
            step *= 0.5 * (1 + np.abs(x).max()) / nstep
        x = x - step
    raise NoSolutions("marginal double-root Newton did not converge")


def _rightmost_re(fam, c, cache, fast=True):
    if c not in cache:
        try:
            cache[c] = rightmost_pinched(fam(c), fast=fast)
        except NonePinched:
            cache[c] = None
    root = cache[c]
    if root is None:
        raise NonePinched(f"no pinched double root at c={c}")
    return root.lam.real


def linear_spreading_speed(family, c_bracket=None, n_scan: int = 9,
                           tol: float = TOL_MARGINAL) -> SpreadingResult:
    """Bisection/Brent on c for Re lambda_*(c) = 0, where lambda_* belongs
    to the rightmost pinched double root.

    ``family`` is a MatrixPolynomial, a ModelSpec-like object with a
    .symbol() method, or a callable c -> ComovingDispersion.  Without a
    bracket, the lower end comes from the group-velocity frame and the
    upper end from doubling until the rightmost pinched root is stable.
    """
    if hasattr(family, "symbol"):
        family = family.symbol()
    if isinstance(family, MatrixPolynomial):
        base = family
        fam = speed_family(base)
    else:
        base, fam = None, family

    cache: dict[float, DoubleRoot | None] = {}

    if c_bracket is None:
        if base is None:
            raise BracketInvalid("need an explicit bracket for a bare family callable")
        c0, seed = group_velocity_seed(base)
        if abs(c0) < 1e-4:
            # tiny group velocities are finite-difference noise (exact zero
            # for even symbols, where lambda(k) can branch at the maximum);
            # the exact zero frame also avoids a near-degenerate leading
            # nu-coefficient in partly non-diffusive systems
            c0 = 0.0
        g_lo = _rightmost_re(fam, c0, cache)
        if g_lo <= 0:
            raise BracketInvalid(
                f"group-velocity frame c0={c0} is not absolutely unstable")
        c_lo = c0
        scale = max(1.0, weighted_max(ComovingDispersion(base, 0.0), 0.0))
        m = base.order // 2
        c_hi = c_lo + 4.0 * scale ** ((2 * m - 1) / (2 * m))
        for _ in range(60):
            if _rightmost_re(fam, c_hi, cache) < 0:
                break
            c_hi = c_lo + 2 * (c_hi - c_lo)
        else:
            raise BracketInvalid("could not stabilize the rightmost pinched root "
                                 f"by increasing c up to {c_hi}")
    else:
        c_lo, c_hi = c_bracket
        if not (_rightmost_re(fam, c_lo, cache) > 0 > _rightmost_re(fam, c_hi, cache)):
            raise BracketInvalid(
                f"Re lambda_* must be positive at c={c_lo} and negative at c={c_hi}")

    # coarse scan: count sign changes, keep the fastest marginal interval
    cs = np.linspace(c_lo, c_hi, n_scan)
    gs = [_rightmost_re(fam, c, cache) for c in cs]
    changes = [i for i in range(len(cs) - 1) if gs[i] > 0 >= gs[i + 1]
               or gs[i] <= 0 < gs[i + 1]]
    multi = len(changes) > 1
    if changes:
        i_last = max(i for i in changes if gs[i] > 0 >= gs[i + 1])
        a, b = cs[i_last], cs[i_last + 1]
    else:
        a, b = c_lo, c_hi

    # bisection only needs to reach the Newton basin of the marginal
    # double-root system, which then polishes c to machine precision
    while b - a > max(1e-4 * (1.0 + abs(b)), 4e-6):
        mid = 0.5 * (a + b)
        if _rightmost_re(fam, mid, cache) > 0:
            a = mid
        else:
            b = mid
    seed = cache[a]
    dr_fn = _reduced_family(fam)
    try:
        c_star, root = _marginal_newton(dr_fn, a, seed)
    except (NoSolutions, np.linalg.LinAlgError):
        # fall back to plain bisection at full depth (multiple double roots)
        c_star = brentq(lambda c: _rightmost_re(fam, c, cache), a, b,
                        xtol=1e-12, rtol=8.9e-16)
        root = rightmost_pinched(fam(c_star))
    dr_star = dr_fn(c_star)
    # conjugate-branch convention: report omega >= 0
    if root.lam.imag < -tol:
        root = _conjugate_root(dr_star, root)
    root = check_pinching(dr_star, root)
    if not root.is_pinched:
        raise TrackingLost(
            f"polished marginal root at c={c_star} lost its pinching verdict")
    # no pinched root may sit strictly to the right of the marginal one
    confirm = rightmost_pinched(dr_star, fast=True)
    if confirm.lam.real > tol:
        raise TrackingLost(
            f"a faster pinched root (Re lambda = {confirm.lam.real:.3e}) "
            f"appeared at c = {c_star}")
    if abs(root.lam.real) > tol:
        raise NoSolutions(f"marginal root residual {root.lam.real} exceeds {tol}")
    d_eff = None
    if root.classification == SIMPLE:
        d_eff = effective_diffusivity(dr_star, root).d_eff
    nu = root.nu
    return SpreadingResult(
        c_lin=float(c_star),
        omega_lin=float(root.lam.imag),
        nu_lin=nu,
        eta_lin=float(-nu.real),
        k_lin=float(nu.imag),
        d_eff=d_eff,
        source_root=root,
        multi_interval=multi,
    )


def scalar_marginal_system(base: MatrixPolynomial, grid_n: int = 12,
                           box: float = 4.0) -> list[tuple[float, float, complex]]:
    """Direct marginal double-root system for scalar symbols: solve

        Im S'(nu) = 0,    Re S'(nu) Re nu - Re S(nu) = 0,

    S = P + J, by multi-start Newton over a grid in (Re nu < 0, Im nu >= 0);
    then c = -Re S'(nu), omega = Im S(nu) + c Im nu.  Pinching is NOT
    asserted; candidates with c > 0 are returned sorted by decreasing c.
    """
    if base.dim != 1:
        raise ValueError("scalar_marginal_system requires N = 1")
    coeffs = np.array([c[0, 0] for c in base.coeffs], dtype=float)
    coeffs[0] += base.jac0[0, 0]

    def S(nu, der=0):
        c = coeffs.copy()
        for _ in range(der):
            c = c[1:] * np.arange(1, len(c))
        return np.polyval(c[::-1], nu)

    def F(x):
        nu = complex(x[0], x[1])
        s1 = S(nu, 1)
        return np.array([s1.imag, s1.real * nu.real - S(nu).real])

    sols = []
    for re0 in np.linspace(-box, -0.05, grid_n):
        for im0 in np.linspace(0.0, box, grid_n):
            x = np.array([re0, im0])
            ok = False
            for _ in range(80):
                f = F(x)
                if np.abs(f).max() < 1e-12 * (1 + np.abs(coeffs).max()):
                    ok = True
                    break
                J = _num_jac(F, x)
                try:
                    dx = np.linalg.solve(J, f)
                except np.linalg.LinAlgError:
                    break
                if not np.isfinite(dx).all():
                    break
                ndx = np.abs(dx).max()
                if ndx > 1.0:
                    dx *= 1.0 / ndx
                x = x - dx
                if np.abs(x).max() > 50:
                    break
            if not ok or x[0] >= 0:
                continue
            nu = complex(x[0], abs(x[1]))
            c = -S(nu, 1).real
            if c <= 0:
                continue
            om = S(nu).imag + c * nu.imag
            if any(abs(nu - s[2]) < 1e-6 * (1 + abs(nu)) for s in sols):
                continue
            sols.append((float(c), float(om), nu))
    if not sols:
        raise NoSolutions("no marginal double-root candidates on the grid")
    sols.sort(key=lambda t: -t[0])
    return sols


def _num_jac(F, x, h=1e-7):
    n = len(x)
    J = np.empty((n, n))
    f0 = F(x)
    for j in range(n):
        xp = x.copy()
        xp[j] += h * (1 + abs(x[j]))
        J[:, j] = (F(xp) - f0) / (h * (1 + abs(x[j])))
    return J


def wavenumber_predictions(sr: SpreadingResult) -> dict:
    """Leading-edge wavenumber k_lin = Im nu_lin and the node-conservation
    prediction k_node = omega_lin / c_lin."""
    if sr.c_lin <= 0:
        raise ValueError("wavenumber predictions need c_lin > 0")
    return {"k_lin": sr.k_lin, "k_node": sr.k_node}

"""Linear symbol of a parabolic system and its dispersion relation.

The symbol is a matrix polynomial P(nu) = sum_j P_j nu^j of even degree 2m,
kept separate from the linearization J = f'(0).  In a frame moving with
speed c the dispersion relation is

    d_c(lambda, nu) = det( P(nu) + c nu I + J - lambda I ),

a bivariate polynomial of degree N in lambda and at most 2mN in nu.  We
recover its coefficients once per frame by evaluating the determinant on a
tensor grid of scaled roots of unity and inverting the (perfectly
conditioned) Fourier interpolation; all root finding and differentiation
then operates on the exact polynomial representation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DegenerateFamily, DegenerateLeadingCoefficient

__all__ = [
    "MatrixPolynomial",
    "ComovingDispersion",
    "SpectrumCurve",
    "eval_dispersion",
    "nu_roots",
    "essential_spectrum",
    "wellposedness_report",
]


@dataclass(frozen=True)
class MatrixPolynomial:
    """The symbol P(nu) as a list of real N x N coefficients P_0..P_2m plus
    the linearization matrix J = f'(0), stored separately so the same symbol
    serves several linearization points."""

    coeffs: tuple
    jac0: np.ndarray

    def __post_init__(self):
        coeffs = tuple(np.atleast_2d(np.asarray(c, dtype=float)) for c in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "jac0", np.atleast_2d(np.asarray(self.jac0, dtype=float)))
        n = self.jac0.shape[0]
        if self.jac0.shape != (n, n):
            raise ValueError("J must be square")
        if len(coeffs) % 2 == 0:
            raise ValueError("need 2m+1 coefficients, P_0..P_2m with 2m even")
        for c in coeffs:
            if c.shape != (n, n):
                raise ValueError("all coefficients must be N x N")

    @property
    def order(self) -> int:
        """2m, the degree of the symbol."""
        return len(self.coeffs) - 1

    @property
    def dim(self) -> int:
        return self.jac0.shape[0]

    def eval(self, nu: complex) -> np.ndarray:
        """P(nu), without J."""
        acc = np.zeros((self.dim, self.dim), dtype=complex)
        for c in reversed(self.coeffs):
            acc = acc * nu + c
        return acc

    def reflected(self) -> "MatrixPolynomial":
        """The symbol of the x -> -x transformed system."""
        return MatrixPolynomial(
            tuple((-1.0) ** j * c for j, c in enumerate(self.coeffs)), self.jac0
        )


def wellposedness_report(mp: MatrixPolynomial, K: float | None = None, n_k: int = 400,
                         exempt_nondiffusive: bool = False) -> dict:
    """Sampled check that max Re spec(P(ik) + J) is bounded above and decays
    like -delta k^{2m} beyond |k| = K.

    The reference leaves K free; we take K = 10 * (1 + a spectral-radius
    estimate of the low-order data).  When the leading coefficient is
    singular (components without diffusion) the tail-decay test only applies
    to the diffusive block unless ``exempt_nondiffusive`` is set, in which
    case boundedness alone is required.
    """
    lead = mp.coeffs[-1]
    scale = 1.0 + max(np.linalg.norm(c, 2) for c in mp.coeffs) + np.linalg.norm(mp.jac0, 2)
    if K is None:
        K = 10.0 * scale
    ks = np.linspace(-K, K, n_k)
    re_max = np.empty_like(ks)
    for i, k in enumerate(ks):
        A = mp.eval(1j * k) + mp.jac0
        re_max[i] = np.linalg.eigvals(A).real.max()
    bounded = float(re_max.max())

    lead_eigs = np.linalg.eigvals(lead)
    sign = (-1.0) ** (mp.order // 2)
    # parabolicity: (-1)^m * d_2m negative definite-ish in spectrum
    diffusive = np.abs(lead_eigs) > 1e-12 * (1 + np.abs(lead_eigs).max())
    delta = None
    tail_ok = True
    if diffusive.all():
        delta = min((sign * lead_eigs.real)[diffusive].min(), 0.0)
        delta = -delta  # decay rate estimate from leading coefficient
        k_tail = np.array([K, 1.5 * K, 2.0 * K])
        for k in k_tail:
            A = mp.eval(1j * k) + mp.jac0
            if np.linalg.eigvals(A).real.max() > -0.5 * delta * k ** mp.order:
                tail_ok = False
    elif not exempt_nondiffusive:
        tail_ok = False
    return {
        "max_re": bounded,
        "K": K,
        "delta": delta,
        "tail_ok": tail_ok,
        "ok": tail_ok and np.isfinite(bounded),
        "nondiffusive_components": int((~diffusive).sum()),
    }


def _fft_interp_coeffs(values: np.ndarray, radius: float) -> np.ndarray:
    """Coefficients of a polynomial from its values on radius * roots of
    unity (1D along the last axis).

    coeff_k = (1/n) sum_q v_q w^{-qk} / R^k, i.e. a forward FFT with 1/n.
    """
    n = values.shape[-1]
    coeff = np.fft.fft(values, axis=-1) / n
    coeff /= radius ** np.arange(n)
    return coeff


def _trim_trailing(C: np.ndarray, axis: int, rel: float = 1e-11) -> np.ndarray:
    mags = np.abs(C).max(axis=1 - axis)
    tol = rel * max(mags.max(), 1e-300)
    deg = len(mags) - 1
    while deg > 0 and mags[deg] <= tol:
        deg -= 1
    return C[:deg + 1, :] if axis == 0 else C[:, :deg + 1]


@dataclass
class SpectrumCurve:
    """Essential spectrum samples in the weight eta: for each wavenumber k
    the N temporal eigenvalues, continuity-matched across k."""

    weight_eta: float
    k: np.ndarray
    lambdas: np.ndarray  # shape (len(k), N)
    max_re: float

    def to_rows(self):
        for i, k in enumerate(self.k):
            yield (k, *self.lambdas[i].real, *self.lambdas[i].imag)


class ComovingDispersion:
    """d_c(lambda, nu) = det(P(nu) + c nu I + J - lambda I) as an exact
    bivariate polynomial; all evaluations, derivatives, and slice roots come
    from the interpolated coefficient matrix C[i, j] of lambda^i nu^j."""

    def __init__(self, base: MatrixPolynomial, speed: float,
                 _coeff: np.ndarray | None = None, _reduced: bool = False):
        self.base = base
        self.speed = float(speed)
        self.is_reduced = _reduced
        if _coeff is not None:
            self._C = _coeff
        else:
            self._C = self._interpolate()
        self._C = _trim_trailing(self._C, axis=1)
        self._scale = max(np.abs(self._C).max(), 1e-300)

    # -- construction -------------------------------------------------

    def _det(self, lam: complex, nu: complex) -> complex:
        mp = self.base
        A = mp.eval(nu) + mp.jac0 + (self.speed * nu - lam) * np.eye(mp.dim)
        return np.linalg.det(A)

    def _interpolate(self) -> np.ndarray:
        mp = self.base
        n_lam = mp.dim + 1
        n_nu = mp.order * mp.dim + 1
        for radius in (1.5, 3.0, 0.75, 6.0):
            lam_nodes = radius * np.exp(2j * np.pi * np.arange(n_lam) / n_lam)
            nu_nodes = radius * np.exp(2j * np.pi * np.arange(n_nu) / n_nu)
            vals = np.empty((n_lam, n_nu), dtype=complex)
            for p, lam in enumerate(lam_nodes):
                for q, nu in enumerate(nu_nodes):
                    vals[p, q] = self._det(lam, nu)
            C = _fft_interp_coeffs(vals, radius)
            C = _fft_interp_coeffs(C.T, radius).T  # rows: lambda powers
            if self._verify(C):
                return C
        raise DegenerateLeadingCoefficient(
            "bivariate interpolation failed verification at all node radii"
        )

    def _verify(self, C: np.ndarray, n_pts: int = 6, rtol: float = 1e-10) -> bool:
        rng = np.random.default_rng(12345)
        pts = rng.standard_normal((n_pts, 4))
        for row in pts:
            lam = complex(row[0], row[1])
            nu = complex(row[2], row[3])
            direct = self._det(lam, nu)
            poly = _polyval2(C, lam, nu)
            if abs(direct - poly) > rtol * (1.0 + abs(direct)):
                return False
        return True

    # -- basic data ----------------------------------------------------

    @property
    def coeff_matrix(self) -> np.ndarray:
        return self._C

    @property
    def nu_degree(self) -> int:
        return self._C.shape[1] - 1

    @property
    def lambda_degree(self) -> int:
        return self._C.shape[0] - 1

    def with_speed(self, speed: float) -> "ComovingDispersion":
        return ComovingDispersion(self.base, speed)

    # -- evaluation -----------------------------------------------------

    def eval(self, lam: complex, nu: complex) -> complex:
        """Direct determinant evaluation (total function)."""
        return self._det(lam, nu)

    def eval_poly(self, lam: complex, nu: complex, dlam: int = 0, dnu: int = 0) -> complex:
        """Evaluate the interpolated polynomial or a mixed derivative."""
        key = (dlam, dnu)
        cache = getattr(self, "_dcache", None)
        if cache is None:
            cache = self._dcache = {}
        C = cache.get(key)
        if C is None:
            C = self._C
            for _ in range(dlam):
                C = _polyder(C, axis=0)
            for _ in range(dnu):
                C = _polyder(C, axis=1)
            cache[key] = C
        return _polyval2(C, lam, nu)

    def magnitude(self, lam: complex, nu: complex) -> float:
        """sum_ij |C_ij| |lam|^i |nu|^j, a backward-error normalization."""
        return float(_polyval2(np.abs(self._C), abs(lam), abs(nu)).real) + 1e-300

    # -- slice roots -----------------------------------------------------

    def nu_coeffs(self, lam: complex) -> np.ndarray:
        """Coefficients of nu -> d_c(lam, nu), low to high."""
        powers = lam ** np.arange(self._C.shape[0])
        return powers @ self._C

    def nu_roots(self, lam: complex, polish: int = 3) -> np.ndarray:
        c = self.nu_coeffs(lam)
        scale = np.abs(c).max()
        if abs(c[-1]) <= 1e-12 * (scale + 1e-300):
            raise DegenerateLeadingCoefficient(
                f"leading nu-coefficient vanished at lambda={lam}"
            )
        roots = np.roots(c[::-1])
        # Newton polish against the exact polynomial
        for _ in range(polish):
            val = np.polyval(c[::-1], roots)
            der = np.polyval(np.polyder(c[::-1]), roots)
            ok = np.abs(der) > 1e-300
            step = np.zeros_like(roots)
            step[ok] = val[ok] / der[ok]
            cap = np.abs(step) < 0.1 * (1.0 + np.abs(roots))
            roots[ok & cap] -= step[ok & cap]
        return roots

    def lambda_coeffs(self, nu: complex) -> np.ndarray:
        powers = nu ** np.arange(self._C.shape[1])
        return self._C @ powers

    def lambda_roots(self, nu: complex) -> np.ndarray:
        c = self.lambda_coeffs(nu)
        return np.roots(c[::-1])

    # -- degenerate-family reduction --------------------------------------

    def squarefree(self) -> "ComovingDispersion":
        """Square-free reduction of d_c in nu.

        Repeated factors (e.g. a realified complex-scalar equation at
        parameter values where the two copies decouple identically) make the
        resultant of (d, d_nu) vanish identically; dividing out the repeated
        content restores isolated double roots.  The reduced polynomial is
        reconstructed monic-in-nu from the distinct roots on a lambda
        circle, relying on the leading nu-coefficient being
        lambda-independent (true for parabolic symbols).
        """
        n_lam = 2 * (self.lambda_degree + 1) + 1
        radius = 1.37  # no special role, just off the root loci
        lam_nodes = radius * np.exp(2j * np.pi * (np.arange(n_lam) + 0.21) / n_lam)
        distinct = []
        for lam in lam_nodes:
            # unpolished roots: Newton steps drift on multiple roots, while
            # raw companion-eigenvalue cluster means stay accurate
            roots = self.nu_roots(lam, polish=0)
            distinct.append(_cluster_points(roots, 1e-5 * (1.0 + np.abs(roots).max())))
        counts = {len(r) for r in distinct}
        if len(counts) != 1:
            raise DegenerateFamily(
                "distinct nu-root count varies across lambda samples; cannot reduce"
            )
        d_sf = counts.pop()
        if d_sf == self.nu_degree:
            return self
        vals = np.empty((n_lam, d_sf + 1), dtype=complex)
        for p, roots in enumerate(distinct):
            vals[p] = np.polynomial.polynomial.polyfromroots(roots)
        # interpolate each monic coefficient in lambda over the circle;
        # nodes carry a phase offset, undone after the FFT inversion
        node0 = lam_nodes[0] / radius
        C = np.empty((n_lam, d_sf + 1), dtype=complex)
        for j in range(d_sf + 1):
            coeff = np.fft.fft(vals[:, j]) / n_lam
            coeff *= node0 ** (-np.arange(n_lam, dtype=float))
            coeff /= radius ** np.arange(n_lam)
            C[:, j] = coeff
        C = _trim_trailing(C, axis=0)
        if C.shape[0] > self.lambda_degree + 1:
            C = C[: self.lambda_degree + 1, :]
        red = ComovingDispersion(self.base, self.speed, _coeff=C, _reduced=True)
        # verify on fresh points against clustered direct roots
        rng = np.random.default_rng(7)
        for _ in range(4):
            lam = complex(*rng.standard_normal(2))
            roots = _cluster_points(self.nu_roots(lam), 1e-5)
            poly = np.polynomial.polynomial.polyfromroots(roots)
            got = red.nu_coeffs(lam)
            if len(got) != len(poly) or np.abs(got - poly).max() > 1e-6 * (1 + np.abs(poly).max()):
                raise DegenerateFamily("square-free reconstruction failed verification")
        return red


def _polyval2(C: np.ndarray, lam: complex, nu: complex) -> complex:
    lam_pow = lam ** np.arange(C.shape[0])
    nu_pow = nu ** np.arange(C.shape[1])
    return lam_pow @ C @ nu_pow


def _polyder(C: np.ndarray, axis: int) -> np.ndarray:
    n = C.shape[axis]
    if n <= 1:
        return np.zeros_like(C.take([0], axis=axis))
    idx = np.arange(1, n)
    if axis == 0:
        return C[1:, :] * idx[:, None]
    return C[:, 1:] * idx[None, :]


def _cluster_points(pts: np.ndarray, tol: float, relative: bool = False) -> np.ndarray:
    """Greedy clustering of complex points; returns cluster means.  With
    ``relative`` the tolerance scales with each point's own magnitude, so a
    single large outlier cannot swallow well-separated small points."""
    pts = np.asarray(pts)
    used = np.zeros(len(pts), dtype=bool)
    out = []
    for i in range(len(pts)):
        if used[i]:
            continue
        radius = tol * (1.0 + abs(pts[i])) if relative else tol
        close = np.abs(pts - pts[i]) <= radius
        grab = close & ~used
        out.append(pts[grab].mean())
        used |= grab
    return np.array(out)


# -- module-level operations ------------------------------------------------


def eval_dispersion(dr: ComovingDispersion, lam: complex, nu: complex) -> complex:
    """det(P(nu) + c nu I + J - lambda I), by direct determinant."""
    return dr.eval(lam, nu)


def nu_roots(dr: ComovingDispersion, lam: complex) -> np.ndarray:
    """All spatial roots of nu -> d_c(lam, nu), with multiplicity."""
    return dr.nu_roots(lam)


def essential_spectrum(dr: ComovingDispersion, eta: float,
                       k_grid: Sequence[float]) -> SpectrumCurve:
    """Weighted essential spectrum: the N roots lambda of
    d_c(lambda, ik - eta) for each sampled k, continuity-matched across k."""
    ks = np.asarray(k_grid, dtype=float)
    if ks.size == 0 or not np.isfinite(ks).all():
        raise ValueError("k_grid must be nonempty and finite")
    N = dr.base.dim
    lams = np.empty((ks.size, N), dtype=complex)
    for i, k in enumerate(ks):
        roots = dr.lambda_roots(1j * k - eta)
        if i == 0:
            lams[0] = np.sort_complex(roots)
            continue
        cost = np.abs(roots[None, :] - lams[i - 1][:, None])  # [prev, new]
        _, cols = linear_sum_assignment(cost)
        lams[i] = roots[cols]
    return SpectrumCurve(weight_eta=eta, k=ks, lambdas=lams,
                         max_re=float(lams.real.max()))

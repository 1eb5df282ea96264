"""Registry of example systems u_t = P(dx) u + f(u).

Each ModelSpec carries the symbol coefficients, the linearization J = f'(0)
at the unstable zero state, vectorized kinetics f and Jacobian f', an
optional wake state, and evaluators for the known closed-form reference
values (speeds, frequencies, wavenumbers) that serve as test oracles.

Conventions
-----------
* The unstable state is always u = 0 (models are shifted accordingly).
* f is the pointwise kinetics with f(0) = 0 and f'(0) = J.  For models
  whose nonlinearity sits under a derivative (Cahn-Hilliard), the PDE is
  u_t = P(dx) u + J u + dx^p f(u) with ``nonlin_deriv = p`` and f'(0) = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import NotApplicable, ParameterOutOfRange, UnknownModel
from .polymat import ComovingDispersion, MatrixPolynomial

__all__ = ["ModelSpec", "get_model", "list_models", "reference_values",
           "quartic_marginal", "quartic_region2", "fhn_marginal",
           "coupled_mode_refs", "forced_cgl_leading_order"]


@dataclass
class ModelSpec:
    name: str
    params: dict
    pcoeffs: tuple
    jac0: np.ndarray
    f: Callable
    fprime: Callable
    realified: bool = False
    nonlin_deriv: int = 0
    wake_state: np.ndarray | None = None
    notes: str = ""

    @property
    def dim(self) -> int:
        return self.jac0.shape[0]

    @property
    def order(self) -> int:
        return len(self.pcoeffs) - 1

    def symbol(self) -> MatrixPolynomial:
        return MatrixPolynomial(self.pcoeffs, self.jac0)

    def dispersion(self, c: float) -> ComovingDispersion:
        return ComovingDispersion(self.symbol(), c)

    def nonlin(self, U: np.ndarray) -> np.ndarray:
        """The explicitly-integrated part: f(u) - J u, or, for models with a
        derivative-wrapped nonlinearity, f itself (the wrapping derivative is
        applied by the discretization)."""
        if self.nonlin_deriv:
            return self.f(U)
        return self.f(U) - np.einsum("ab,b...->a...", self.jac0, U)

    def nonlin_prime(self, U: np.ndarray) -> np.ndarray:
        fp = self.fprime(U)
        if self.nonlin_deriv:
            return fp
        return fp - self.jac0[:, :, None]

    def linearized(self) -> "ModelSpec":
        """Same symbol and J, kinetics replaced by their linearization."""
        J = self.jac0

        def f_lin(U):
            if self.nonlin_deriv:
                return np.zeros_like(U)
            return np.einsum("ab,b...->a...", J, U)

        def fp_lin(U):
            shape = (self.dim, self.dim) + U.shape[1:]
            out = np.zeros(shape)
            if not self.nonlin_deriv:
                out[:] = J[:, :, None]
            return out

        return replace(self, name=self.name + "_linear", f=f_lin, fprime=fp_lin,
                       wake_state=None)


def _scalar(fun, dfun):
    """Wrap scalar u -> f(u) callables into the (N, ...) convention."""

    def f(U):
        return np.asarray(fun(np.asarray(U)[0]))[None, ...]

    def fp(U):
        return np.asarray(dfun(np.asarray(U)[0]))[None, None, ...]

    return f, fp


def _p_scalar(*vals):
    return tuple(np.array([[v]], dtype=float) for v in vals)


Z2 = np.zeros((2, 2))


# -- individual builders -----------------------------------------------------


def _fkpp(params):
    f, fp = _scalar(lambda u: u * (1 - u), lambda u: 1 - 2 * u)
    return ModelSpec("fkpp", params, _p_scalar(0, 0, 1), np.array([[1.0]]),
                     f, fp, wake_state=np.array([1.0]))


def _nagumo(params):
    a = params["a"]
    if a <= 0:
        raise ParameterOutOfRange("nagumo requires a > 0")
    f, fp = _scalar(lambda u: u * (1 - u) * (u + a),
                    lambda u: -3 * u ** 2 + 2 * (1 - a) * u + a)
    return ModelSpec("nagumo", params, _p_scalar(0, 0, 1), np.array([[a]]),
                     f, fp, wake_state=np.array([1.0]))


def _bistable(params):
    a = params["a"]
    if not 0 < a < 1:
        raise ParameterOutOfRange("bistable requires 0 < a < 1")
    f, fp = _scalar(lambda u: u * (1 - u) * (u - a),
                    lambda u: -3 * u ** 2 + 2 * (1 + a) * u - a)
    return ModelSpec("bistable", params, _p_scalar(0, 0, 1), np.array([[-a]]),
                     f, fp, wake_state=np.array([1.0]))


def _cubic_quintic(params):
    al = params["alpha"]
    wake = math.sqrt((al + math.sqrt(al ** 2 + 4)) / 2)
    f, fp = _scalar(lambda u: u + al * u ** 3 - u ** 5,
                    lambda u: 1 + 3 * al * u ** 2 - 5 * u ** 4)
    return ModelSpec("cubic_quintic", params, _p_scalar(0, 0, 1),
                     np.array([[1.0]]), f, fp, wake_state=np.array([wake]))


def _kpp_pitchfork(params):
    mu = params["mu"]
    if mu >= 1:
        raise ParameterOutOfRange("kpp_pitchfork requires mu < 1")

    def fun(u):
        return -u * (u + 1) * (u - 1) * ((u - 1) ** 2 - mu)

    def dfun(u):
        # d/du of -(u^3-u)((u-1)^2 - mu)
        p = u ** 3 - u
        dp = 3 * u ** 2 - 1
        q = (u - 1) ** 2 - mu
        dq = 2 * (u - 1)
        return -(dp * q + p * dq)

    wake = 1 - math.sqrt(mu) if mu > 0 else 1.0
    f, fp = _scalar(fun, dfun)
    return ModelSpec("kpp_pitchfork", params, _p_scalar(0, 0, 1),
                     np.array([[1.0 - mu]]), f, fp,
                     wake_state=np.array([wake]))


def _quartic(params):
    a, b = params["a"], params["b"]
    if not (b > 0 if a >= 0 else a * a / 4 + b > 0):
        raise ParameterOutOfRange(
            "quartic state is stable: need b > 0 (a >= 0) or a^2/4 + b > 0 (a < 0)")
    f, fp = _scalar(lambda u: b * u, lambda u: b * np.ones_like(u))
    return ModelSpec("quartic", params, _p_scalar(0, 0, a, 0, -1),
                     np.array([[b]]), f, fp)


def _sh(params):
    eps, gamma = params["eps"], params["gamma"]
    if eps == 0:
        raise ParameterOutOfRange("sh requires eps != 0")
    f, fp = _scalar(lambda u: eps ** 2 * u + gamma * u ** 2 - u ** 3,
                    lambda u: eps ** 2 + 2 * gamma * u - 3 * u ** 2)
    return ModelSpec("sh", params, _p_scalar(-1, 0, -2, 0, -1),
                     np.array([[eps ** 2]]), f, fp)


def _ch(params):
    ubar, gamma = params["ubar"], params["gamma"]
    alin = 1 + 2 * gamma * ubar - 3 * ubar ** 2
    if alin <= 0:
        raise ParameterOutOfRange(
            "ch state is stable: need 1 + 2 gamma ubar - 3 ubar^2 > 0 "
            "(|ubar| < 1/sqrt(3) when gamma = 0)")
    g2 = gamma - 3 * ubar
    # u_t = -(u_xx + alin u + g2 u^2 - u^3)_xx; sign of the wrapping -dxx
    # is folded into f
    f, fp = _scalar(lambda u: -(g2 * u ** 2 - u ** 3),
                    lambda u: -(2 * g2 * u - 3 * u ** 2))
    return ModelSpec("ch", params, _p_scalar(0, 0, -alin, 0, -1),
                     np.array([[0.0]]), f, fp, nonlin_deriv=2)


def _cgl_kinetics(om, gamma, beta):
    def f(U):
        u, v = U[0], U[1]
        s = u * u + v * v
        fu = (1 + gamma) * u - om * v - (u - beta * v) * s
        fv = om * u + (1 - gamma) * v - (v + beta * u) * s
        return np.stack([fu, fv])

    def fp(U):
        u, v = U[0], U[1]
        s = u * u + v * v
        a11 = (1 + gamma) - s - (u - beta * v) * 2 * u
        a12 = -om + beta * s - (u - beta * v) * 2 * v
        a21 = om - beta * s - (v + beta * u) * 2 * u
        a22 = (1 - gamma) - s - (v + beta * u) * 2 * v
        return np.stack([np.stack([a11, a12]), np.stack([a21, a22])])

    return f, fp


def _cgl(params):
    al, om, beta = params["alpha"], params["omega"], params["beta"]
    f, fp = _cgl_kinetics(om, 0.0, beta)
    return ModelSpec("cgl", params,
                     (Z2, Z2, np.array([[1.0, -al], [al, 1.0]])),
                     np.array([[1.0, -om], [om, 1.0]]), f, fp, realified=True)


def _forced_cgl(params):
    al, om, gamma, beta = (params["alpha"], params["omega"], params["gamma"],
                           params["beta"])
    f, fp = _cgl_kinetics(om, gamma, beta)
    return ModelSpec("forced_cgl", params,
                     (Z2, Z2, np.array([[1.0, -al], [al, 1.0]])),
                     np.array([[1.0 + gamma, -om], [om, 1.0 - gamma]]),
                     f, fp, realified=True)


def _fhn(params):
    a, eps, gamma = params["a"], params["eps"], params["gamma"]
    if a >= 0 or eps <= 0:
        raise ParameterOutOfRange("fhn requires a < 0 (unstable origin) and eps > 0")

    def f(U):
        u, v = U[0], U[1]
        return np.stack([u * (1 - u) * (u - a) - v, eps * (u - gamma * v)])

    def fp(U):
        u, v = U[0], U[1]
        one = np.ones_like(u)
        return np.stack([
            np.stack([-3 * u ** 2 + 2 * (1 + a) * u - a, -one]),
            np.stack([eps * one, -eps * gamma * one]),
        ])

    return ModelSpec("fhn", params,
                     (Z2, Z2, np.array([[1.0, 0.0], [0.0, 0.0]])),
                     np.array([[-a, -1.0], [eps, -eps * gamma]]), f, fp,
                     notes="second component is non-diffusive")


def _coupled_mode(params):
    g, d = params["gamma"], params["delta"]
    e1, e2, io = params["eps1"], params["eps2"], params["iota"]
    if not abs(d) < 1:
        raise ParameterOutOfRange("coupled_mode requires |delta| < 1")

    def f(U):
        u, v = U[0], U[1]
        s = u * u + v * v
        return np.stack([
            (1 + g) * u + e1 * v - u * s + io * (u * u - v * v),
            (1 - g) * v + e2 * u - v * s + io * u * v,
        ])

    def fp(U):
        u, v = U[0], U[1]
        s = u * u + v * v
        return np.stack([
            np.stack([(1 + g) - s - 2 * u * u + 2 * io * u,
                      e1 * np.ones_like(u) - 2 * u * v - 2 * io * v]),
            np.stack([e2 * np.ones_like(u) - 2 * u * v + io * v,
                      (1 - g) - s - 2 * v * v + io * u]),
        ])

    return ModelSpec("coupled_mode", params,
                     (Z2, Z2, np.array([[1.0 + d, 0.0], [0.0, 1.0 - d]])),
                     np.array([[1.0 + g, e1], [e2, 1.0 - g]]), f, fp)


def _fkpp_diff(params):
    al, d = params["alpha"], params["d"]
    if d <= 0:
        raise ParameterOutOfRange("fkpp_diff requires d > 0")

    def f(U):
        u, v = U[0], U[1]
        return np.stack([u * (1 - u) + al * v, np.zeros_like(v)])

    def fp(U):
        u, v = U[0], U[1]
        one = np.ones_like(u)
        return np.stack([np.stack([1 - 2 * u, al * one]),
                         np.stack([0 * one, 0 * one])])

    return ModelSpec("fkpp_diff", params,
                     (Z2, Z2, np.array([[1.0, 0.0], [0.0, d]])),
                     np.array([[1.0, al], [0.0, 0.0]]), f, fp,
                     wake_state=np.array([1.0, 0.0]))


def _lotka_volterra(params):
    a, b, d, r = params["a"], params["b"], params["d"], params["r"]
    if not (0 < b < 1):
        raise ParameterOutOfRange(
            "lotka_volterra: invaded state (1, 0) is unstable only for 0 < b < 1")
    # shifted so the invaded state (u, v) = (1, 0) is the origin: U = u - 1

    def f(U):
        u, v = U[0], U[1]
        return np.stack([(1 + u) * (-u - a * v),
                         r * v * (1 - b - b * u - v)])

    def fp(U):
        u, v = U[0], U[1]
        return np.stack([
            np.stack([-1 - 2 * u - a * v, -a * (1 + u)]),
            np.stack([-r * b * v, r * (1 - b - b * u - 2 * v)]),
        ])

    return ModelSpec("lotka_volterra", params,
                     (Z2, Z2, np.array([[1.0, 0.0], [0.0, d]])),
                     np.array([[-1.0, -a], [0.0, r * (1 - b)]]), f, fp,
                     wake_state=np.array([-1.0, 1.0]),
                     notes="stored shifted; invaded state (1,0) maps to 0")


_REGISTRY = {
    "fkpp": (_fkpp, {}),
    "nagumo": (_nagumo, {"a": 0.2}),
    "bistable": (_bistable, {"a": 0.3}),
    "cubic_quintic": (_cubic_quintic, {"alpha": 1.0}),
    "kpp_pitchfork": (_kpp_pitchfork, {"mu": 0.03}),
    "quartic": (_quartic, {"a": -2.0, "b": -0.84}),
    "sh": (_sh, {"eps": 0.4, "gamma": 0.0}),
    "ch": (_ch, {"ubar": 0.0, "gamma": 0.0}),
    "cgl": (_cgl, {"alpha": 1.0, "omega": 0.0, "beta": 0.0}),
    "forced_cgl": (_forced_cgl, {"alpha": 0.001, "omega": 0.0, "gamma": 0.002,
                                 "beta": 0.0}),
    "fhn": (_fhn, {"a": -0.2, "eps": 0.01, "gamma": 0.0}),
    "coupled_mode": (_coupled_mode, {"gamma": 0.8, "delta": -0.9, "eps1": 0.0,
                                     "eps2": 0.0, "iota": 0.0}),
    "fkpp_diff": (_fkpp_diff, {"alpha": 1.0, "d": 2.0}),
    "lotka_volterra": (_lotka_volterra, {"a": 2.0, "b": 0.5, "d": 1.0, "r": 1.0}),
}


def list_models():
    return sorted(_REGISTRY)


def get_model(name: str, **overrides) -> ModelSpec:
    if name not in _REGISTRY:
        raise UnknownModel(f"unknown model {name!r}; known: {', '.join(list_models())}")
    builder, defaults = _REGISTRY[name]
    params = dict(defaults)
    unknown = set(overrides) - set(defaults)
    if unknown:
        raise ParameterOutOfRange(
            f"{name} has no parameter(s) {sorted(unknown)}; knows {sorted(defaults)}")
    params.update(overrides)
    return builder(params)


# -- closed-form reference evaluators ----------------------------------------


def quartic_marginal(a: float, b: float) -> dict:
    """Marginal pinched double root of u_t = -u_xxxx + a u_xx + b u.

    Region I (a > 0, 0 < b < a^2/12): stationary leading edge; region IV
    (a > 0, b > a^2/12, or a < 0, b > -a^2/4): oscillatory.  Returns the
    branch with omega >= 0 and Im nu >= 0 (its conjugate is implied).
    """
    regI = a > 0 and 0 < b < a * a / 12
    regIV = (a > 0 and b > a * a / 12) or (a < 0 and b > -a * a / 4)
    if regI:
        s = math.sqrt(a * a - 12 * b)
        nu = -math.sqrt((a - s) / 6)
        c = 2 / (3 * math.sqrt(6)) * (2 * a + s) * math.sqrt(a - s)
        return {"region": "I", "c_lin": c, "omega_lin": 0.0,
                "nu": complex(nu, 0.0), "d_eff": complex(s, 0.0)}
    if regIV:
        s7 = math.sqrt(7 * a * a + 24 * b)
        nr = -math.sqrt(a + s7) / (2 * math.sqrt(6))
        ni = math.sqrt(-3 * a + s7) / (2 * math.sqrt(2))
        c = 2 / (3 * math.sqrt(6)) * (-2 * a + s7) * math.sqrt(a + s7)
        om = (-3 * a + s7) ** 1.5 * math.sqrt(a + s7) / (8 * math.sqrt(3))
        return {"region": "IV", "c_lin": c, "omega_lin": om,
                "nu": complex(nr, ni)}
    raise NotApplicable(f"(a, b) = ({a}, {b}) is not in region I or IV")


def quartic_region2(a: float, b: float) -> dict:
    """The faster, non-pinched real double root in region I parameters."""
    if not (a > 0 and 0 < b < a * a / 12):
        raise NotApplicable("region II data requires a > 0, 0 < b < a^2/12")
    s = math.sqrt(a * a - 12 * b)
    nu = -math.sqrt((a + s) / 6)
    c = 2 / (3 * math.sqrt(6)) * (2 * a - s) * math.sqrt(a + s)
    return {"c_lin": c, "nu": complex(nu, 0.0)}


def fhn_marginal(a: float, eps: float) -> dict:
    """Spreading speed and spatial root for the gamma = 0 FitzHugh-Nagumo
    linearization (the explicitly solvable case)."""
    if a >= 0 or a * a <= 3 * eps:
        raise NotApplicable("fhn closed form requires a < 0, a^2 > 3 eps")
    s = math.sqrt(a * a - 3 * eps)
    nu = -math.sqrt((-a + 2 * s) / 3)
    c = math.sqrt(3) * (-a + s) / math.sqrt(-a + 2 * s)
    return {"c_lin": c, "nu": complex(nu, 0.0), "omega_lin": 0.0}


def coupled_mode_refs(gamma: float, delta: float) -> dict:
    """Componentwise speeds, the cross double root, and Q_ddr membership."""
    if gamma * delta >= 0:
        raise NotApplicable("cross double root requires gamma * delta < 0")
    c_u = 2 * math.sqrt((1 + delta) * (1 + gamma))
    c_v = 2 * math.sqrt((1 - delta) * (1 - gamma))
    c_ddr = (gamma - delta) / math.sqrt(-gamma * delta)
    nu_ddr = math.sqrt(-gamma / delta)
    q = (gamma + delta + 2 * gamma * delta) * (gamma + delta - 2 * gamma * delta)
    return {"c_u": c_u, "c_v": c_v, "c_lin": max(c_u, c_v), "c_ddr": c_ddr,
            "nu_ddr": nu_ddr, "in_Q_ddr": q < 0}


def forced_cgl_leading_order(alpha: float, omega: float, gamma: float) -> dict:
    """Leading-order spreading data for weak forcing/dispersion/detuning.

    With (alpha, omega, gamma) all O(eps), the marginal double root near
    (lambda, nu) = (0, -1), c = 2 splits into an oscillatory case (D > 0)
    and a locked case (D < 0), D = (alpha + omega)^2 - gamma^2:

        D > 0:  c = 2 + O(eps^2),              omega_lin = sqrt(D) + O(eps^2)
        D < 0:  c = 2 + sqrt(-D) + O(eps^2),   omega_lin = 0,
                Re nu = -1 + (alpha^2 + gamma^2 - omega^2)/(2 sqrt(-D))
    """
    D = (alpha + omega) ** 2 - gamma ** 2
    if D > 0:
        return {"case": 1, "c_lin": 2.0, "omega_lin": math.sqrt(D),
                "nu_im": alpha * (alpha + omega) / math.sqrt(D)}
    if D < 0:
        return {"case": 2, "c_lin": 2.0 + math.sqrt(-D), "omega_lin": 0.0,
                "nu_re": -1.0 + (alpha ** 2 + gamma ** 2 - omega ** 2)
                / (2 * math.sqrt(-D))}
    raise NotApplicable("degenerate boundary D = 0")


def reference_values(spec: ModelSpec) -> list:
    """Closed-form quantities applicable at the model's current parameters,
    as (name, value) pairs.  Raises NotApplicable if none apply."""
    p = spec.params
    out = []

    def grab(fn, *args, prefix=""):
        try:
            res = fn(*args)
        except NotApplicable:
            return
        for key, val in res.items():
            out.append((prefix + key, val))

    if spec.name == "fkpp":
        out += [("c_lin", 2.0), ("omega_lin", 0.0), ("nu", -1 + 0j),
                ("d_eff", 1 + 0j)]
    elif spec.name == "nagumo":
        a = p["a"]
        out += [("c_lin", 2 * math.sqrt(a)), ("eta_lin", math.sqrt(a)),
                ("a_transition", 0.5)]
        if a < 0.5:
            out.append(("c_pushed", (1 + 2 * a) / math.sqrt(2)))
    elif spec.name == "bistable":
        out.append(("c_front", (1 - 2 * p["a"]) / math.sqrt(2)))
    elif spec.name == "cubic_quintic":
        al = p["alpha"]
        out += [("c_lin", 2.0), ("alpha_transition", 2 / math.sqrt(3))]
        if al >= 2 / math.sqrt(3):
            out.append(("c_pushed", (-al + 2 * math.sqrt(4 + al ** 2)) / math.sqrt(3)))
    elif spec.name == "kpp_pitchfork":
        out.append(("c_lin", 2 * math.sqrt(1 - p["mu"])))
    elif spec.name == "quartic":
        grab(quartic_marginal, p["a"], p["b"])
        grab(quartic_region2, p["a"], p["b"], prefix="II_")
    elif spec.name == "sh":
        a, b = -2.0, -1.0 + p["eps"] ** 2
        grab(quartic_marginal, a, b)
        e = p["eps"]
        out += [("c_lin_series", 4 * e + e ** 3 - 9 / 8 * e ** 5),
                ("k_series", 1 + e ** 2 / 8 - 13 / 128 * e ** 4)]
    elif spec.name == "ch":
        alin = 1 + 2 * p["gamma"] * p["ubar"] - 3 * p["ubar"] ** 2
        grab(quartic_marginal, -alin, 0.0)
    elif spec.name == "cgl":
        al, om, beta = p["alpha"], p["omega"], p["beta"]
        r = math.sqrt(1 + al ** 2)
        out += [("c_lin", 2 * r), ("omega_lin", al + om),
                ("nu", complex(-1, al) / r), ("d_eff", complex(1, al)),
                ("eta_lin", 1 / r)]
        if al != beta:
            out += [("k_s_minus", (r - math.sqrt(1 + beta ** 2)) / (al - beta)),
                    ("k_s_plus", (r + math.sqrt(1 + beta ** 2)) / (al - beta))]
    elif spec.name == "forced_cgl":
        grab(forced_cgl_leading_order, p["alpha"], p["omega"], p["gamma"])
    elif spec.name == "fhn":
        if p["gamma"] != 0:
            raise NotApplicable("fhn closed forms only at gamma = 0")
        grab(fhn_marginal, p["a"], p["eps"])
    elif spec.name == "coupled_mode":
        grab(coupled_mode_refs, p["gamma"], p["delta"])
    elif spec.name == "fkpp_diff":
        out += [("c_lin_u", 2.0)]
    elif spec.name == "lotka_volterra":
        out.append(("c_lin_v", 2 * math.sqrt(p["d"] * p["r"] * (1 - p["b"]))))
    if not out:
        raise NotApplicable(f"no reference formulas apply to {spec.name} at {p}")
    return out

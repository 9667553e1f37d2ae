"""Benchmark case definitions: exact fields, sources, boundary data.

Four configurations are bundled:

  mp-bur   steady lid-driven recirculation with polynomial exact fields,
           used to study the penalized Stokes projection
  mp-nc    projection study against a stored fine-grid cavity solution
  nc-nour  transient manufactured convection solution with trigonometric
           fields, full Dirichlet data taken from the exact traces
  nc-sq    differentially heated square cavity driven to steady state

All manufactured sources below are derived from the exact fields by
differentiating the strong equations; the test suite cross-checks them
against finite-difference differentiation of the fields, so a slip in any
term here fails loudly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .mesh import SideTag

_SQ2 = math.sqrt(2.0)


@dataclass(frozen=True)
class PhysicalParams:
    Ra: float
    Pr: float
    Re: float

    def __post_init__(self):
        if min(self.Ra, self.Pr, self.Re) <= 0:
            raise ValueError("Ra, Pr and Re must all be positive")

    @classmethod
    def from_rayleigh(cls, Ra: float, Pr: float) -> "PhysicalParams":
        """Convective scaling: Re = sqrt(Ra / Pr)."""
        return cls(Ra=Ra, Pr=Pr, Re=math.sqrt(Ra / Pr))

    @property
    def buoyancy_coefficient(self) -> float:
        return self.Ra / (self.Pr * self.Re ** 2)

    @property
    def diffusivity(self) -> float:
        return 1.0 / (self.Re * self.Pr)


@dataclass(frozen=True)
class GammaPolicy:
    """Penalty weight as a function of mesh size and Reynolds number.

    value = const                     when const is set
    value = Re**re_exp * h**h_exp     otherwise
    """

    name: str
    const: Optional[float] = None
    re_exp: float = 0.0
    h_exp: float = 0.0

    def value(self, h: float, Re: float) -> float:
        if self.const is not None:
            return self.const
        return Re ** self.re_exp * h ** self.h_exp


GAMMA_POLICIES = {
    "1e-7": GammaPolicy("1e-7", const=1e-7),
    "re13-h23": GammaPolicy("re13-h23", re_exp=1.0 / 3.0, h_exp=2.0 / 3.0),
    "re12-h": GammaPolicy("re12-h", re_exp=0.5, h_exp=1.0),
    "re-h2": GammaPolicy("re-h2", re_exp=1.0, h_exp=2.0),
}


def gamma_value(policy: GammaPolicy | str, h: float, Re: float) -> float:
    if isinstance(policy, str):
        policy = GAMMA_POLICIES[policy]
    return policy.value(h, Re)


@dataclass(frozen=True)
class DirichletSpec:
    sides: tuple[SideTag, ...]
    value: Callable  # (x, y, t) -> (npts,) scalar or (npts, 2) vector


@dataclass(frozen=True, eq=False)
class Case:
    name: str
    params: PhysicalParams
    steady: bool
    t_final: Optional[float]
    study: str  # "projection" or "transient"
    velocity: Optional[Callable] = None  # (x, y, t) -> (npts, 2)
    velocity_grad: Optional[Callable] = None  # (x, y, t) -> (npts, 2, 2)
    pressure: Optional[Callable] = None  # (x, y, t) -> (npts,)
    temperature: Optional[Callable] = None
    temperature_grad: Optional[Callable] = None
    momentum_source: Optional[Callable] = None  # None means zero
    heat_source: Optional[Callable] = None
    velocity_bc: Optional[DirichletSpec] = None
    temperature_bc: tuple[DirichletSpec, ...] = ()
    initial_temperature: Optional[Callable] = None  # (x, y) -> (npts,)

    @property
    def has_exact(self) -> bool:
        return self.velocity is not None


_ALL_SIDES = (SideTag.LEFT, SideTag.RIGHT, SideTag.BOTTOM, SideTag.TOP)


def burggraf_case(Re: float = 1.0, chi: float = 8.0) -> Case:
    """Steady polynomial recirculation in the unit square.

    The flow derives from the stream function chi * g(x) * h(y) with
    g(x) = x^5/5 - x^4/2 + x^3/3 and h(y) = y^4 - y^2; the top wall slides
    with u1(x, 1) = 2 chi (x^4 - 2 x^3 + x^2) and the other walls are
    fixed.  The matching pressure is normalized to zero mean, and the body
    force (0, f2) below makes the pair an exact steady solution.
    """
    params = PhysicalParams(Ra=1.0, Pr=1.0, Re=Re)

    def g(x):
        return x ** 5 / 5 - x ** 4 / 2 + x ** 3 / 3

    def g1(x):
        return x ** 4 - 2 * x ** 3 + x ** 2

    def g2(x):
        return 4 * x ** 3 - 6 * x ** 2 + 2 * x

    def g3(x):
        return 12 * x ** 2 - 12 * x + 2

    def g4(x):
        return 24 * x - 12

    def hf(y):
        return y ** 4 - y ** 2

    def h1(y):
        return 4 * y ** 3 - 2 * y

    def h2(y):
        return 12 * y ** 2 - 2

    def h3(y):
        return 24 * y

    def velocity(x, y, t=0.0):
        return np.column_stack([chi * g1(x) * h1(y), -chi * g2(x) * hf(y)])

    def velocity_grad(x, y, t=0.0):
        out = np.empty((np.size(x), 2, 2))
        out[:, 0, 0] = chi * g2(x) * h1(y)
        out[:, 0, 1] = chi * g1(x) * h2(y)
        out[:, 1, 0] = -chi * g3(x) * hf(y)
        out[:, 1, 1] = -chi * g2(x) * h1(y)
        return out

    def p_raw(x, y):
        return (chi / Re) * (h3(y) * g(x) + g2(x) * h1(y)) \
            + 0.5 * chi ** 2 * g1(x) ** 2 * (hf(y) * h2(y) - h1(y) ** 2)

    # zero-mean shift, exact for this polynomial via a 20-point tensor rule
    gl_x, gl_w = np.polynomial.legendre.leggauss(20)
    gx = 0.5 * (gl_x + 1.0)
    gw = 0.5 * gl_w
    X, Y = np.meshgrid(gx, gx, indexing="ij")
    W = np.outer(gw, gw)
    p_mean = float(np.sum(W * p_raw(X, Y)))

    def pressure(x, y, t=0.0):
        return p_raw(np.asarray(x), np.asarray(y)) - p_mean

    def momentum_source(x, y, t=0.0):
        f2 = (chi / Re) * (24 * g(x) + 2 * g2(x) * h2(y) + g4(x) * hf(y)) \
            + chi ** 2 * (
                hf(y) * h1(y) * (g2(x) ** 2 - g1(x) * g3(x))
                + 0.5 * g1(x) ** 2 * (hf(y) * h3(y) - h1(y) * h2(y))
            )
        return np.column_stack([np.zeros_like(np.asarray(x, dtype=float)), f2])

    return Case(
        name="mp-bur",
        params=params,
        steady=True,
        t_final=None,
        study="projection",
        velocity=velocity,
        velocity_grad=velocity_grad,
        pressure=pressure,
        momentum_source=momentum_source,
        velocity_bc=DirichletSpec(_ALL_SIDES, velocity),
    )


def nourgaliev_case(Ra: float = 1e6, Pr: float = 0.71,
                    t_final: float = math.pi / 2) -> Case:
    """Transient manufactured convection with travelling trigonometric fields."""
    params = PhysicalParams.from_rayleigh(Ra, Pr)
    Re = params.Re
    kappa = params.buoyancy_coefficient
    g1c, g2c = 0.1, 0.1
    p_bar, th_bar = 0.0, 1.0
    dP0, dTh0, dU0 = 0.1, 1.0, 1.0
    a_p, a_u, a_t = 0.05, 0.4, 0.1

    def phases(x, y, t):
        return np.asarray(x) + g1c * t, np.asarray(y) + g2c * t

    def amp_u(t):
        return dU0 + a_u * math.sin(t)

    def amp_th(t):
        return dTh0 + a_t * math.sin(t)

    def amp_p(t):
        return dP0 + a_p * math.sin(t)

    def velocity(x, y, t):
        a, b = phases(x, y, t)
        U = amp_u(t)
        return np.column_stack([U * np.cos(a) * np.sin(b),
                                -U * np.sin(a) * np.cos(b)])

    def velocity_grad(x, y, t):
        a, b = phases(x, y, t)
        U = amp_u(t)
        out = np.empty((np.size(a), 2, 2))
        out[:, 0, 0] = -U * np.sin(a) * np.sin(b)
        out[:, 0, 1] = U * np.cos(a) * np.cos(b)
        out[:, 1, 0] = -U * np.cos(a) * np.cos(b)
        out[:, 1, 1] = U * np.sin(a) * np.sin(b)
        return out

    def temperature(x, y, t):
        a, b = phases(x, y, t)
        return th_bar + amp_th(t) * np.cos(a) * np.sin(b)

    def temperature_grad(x, y, t):
        a, b = phases(x, y, t)
        Th = amp_th(t)
        return np.column_stack([-Th * np.sin(a) * np.sin(b),
                                Th * np.cos(a) * np.cos(b)])

    def pressure(x, y, t):
        a, b = phases(x, y, t)
        return p_bar + amp_p(t) * np.sin(a) * np.cos(b)

    def momentum_source(x, y, t):
        a, b = phases(x, y, t)
        U, P = amp_u(t), amp_p(t)
        ca, sa, cb, sb = np.cos(a), np.sin(a), np.cos(b), np.sin(b)
        u1 = U * ca * sb
        u2 = -U * sa * cb
        f1 = (a_u * math.cos(t) * ca * sb
              - U * g1c * sa * sb + U * g2c * ca * cb
              - U * u1 * sa * sb + U * u2 * ca * cb
              + P * ca * cb
              + (2.0 / Re) * u1)
        f2 = (-a_u * math.cos(t) * sa * cb
              - U * g1c * ca * cb + U * g2c * sa * sb
              - U * u1 * ca * cb + U * u2 * sa * sb
              - P * sa * sb
              + (2.0 / Re) * u2
              - kappa * temperature(x, y, t))
        return np.column_stack([f1, f2])

    def heat_source(x, y, t):
        a, b = phases(x, y, t)
        Th, U = amp_th(t), amp_u(t)
        ca, sa, cb, sb = np.cos(a), np.sin(a), np.cos(b), np.sin(b)
        u1 = U * ca * sb
        u2 = -U * sa * cb
        return (a_t * math.cos(t) * ca * sb
                - Th * g1c * sa * sb + Th * g2c * ca * cb
                - Th * u1 * sa * sb + Th * u2 * ca * cb
                + 2.0 * params.diffusivity * Th * ca * sb)

    return Case(
        name="nc-nour",
        params=params,
        steady=False,
        t_final=t_final,
        study="transient",
        velocity=velocity,
        velocity_grad=velocity_grad,
        pressure=pressure,
        temperature=temperature,
        temperature_grad=temperature_grad,
        momentum_source=momentum_source,
        heat_source=heat_source,
        velocity_bc=DirichletSpec(_ALL_SIDES, velocity),
        temperature_bc=(DirichletSpec(_ALL_SIDES, temperature),),
        initial_temperature=lambda x, y: temperature(x, y, 0.0),
    )


def cavity_case(Ra: float = 1e4, Pr: float = 0.71) -> Case:
    """Differentially heated cavity: hot left wall, cold right wall.

    No-slip walls, theta = +1/2 at x = 0 and -1/2 at x = 1, adiabatic top
    and bottom.  Starts from rest with the conduction temperature profile
    and is marched to steady state.
    """
    params = PhysicalParams.from_rayleigh(Ra, Pr)

    def no_slip(x, y, t):
        return np.zeros((np.size(x), 2))

    def hot(x, y, t):
        return np.full(np.size(x), 0.5)

    def cold(x, y, t):
        return np.full(np.size(x), -0.5)

    return Case(
        name="nc-sq",
        params=params,
        steady=True,
        t_final=None,
        study="transient",
        velocity_bc=DirichletSpec(_ALL_SIDES, no_slip),
        temperature_bc=(
            DirichletSpec((SideTag.LEFT,), hot),
            DirichletSpec((SideTag.RIGHT,), cold),
        ),
        initial_temperature=lambda x, y: 0.5 - np.asarray(x, dtype=float),
    )


def make_case(name: str) -> Case:
    key = name.lower()
    if key == "mp-bur":
        return burggraf_case()
    if key == "nc-nour":
        return nourgaliev_case()
    if key == "nc-sq":
        return cavity_case()
    if key == "mp-nc":
        base = cavity_case()
        return Case(
            name="mp-nc",
            params=base.params,
            steady=True,
            t_final=None,
            study="projection",
            velocity_bc=base.velocity_bc,
            temperature_bc=base.temperature_bc,
            initial_temperature=base.initial_temperature,
        )
    raise ValueError(f"unknown case {name!r}; "
                     "choose from mp-bur, mp-nc, nc-nour, nc-sq")

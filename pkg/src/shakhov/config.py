"""Flat ``key = value`` run configuration."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction

from .operator import ModelParams

CFL = 0.9
STABILITY_FRACTION = 0.5
IC_KINDS = ("equilibrium", "maxwellian", "heat_flux", "mixed")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InitialCondition:
    """Parameterized initial data.

    ``maxwellian``: local Maxwellian with rho, U_1, T each ``1 + a sin(k x)``
    (``U_1 = a sin(k x)``); ``heat_flux``: ``f = a * ebar_6 * cos(k x)``;
    ``mixed``: both. ``k = 2 pi mode / L``; a homogeneous run uses ``x = 0``.
    """

    kind: str = "heat_flux"
    amplitude: float = 1e-2
    mode: int = 1


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams = field(default_factory=ModelParams)
    n_v: int = 24
    v_max: float = 8.0
    n_cells: int = 1
    domain_length: float = 2 * math.pi
    dt: float = 0.01
    t_end: float = 10.0
    output_every: int = 10
    ic: InitialCondition = field(default_factory=InitialCondition)
    enforce_third_moment_zero: bool = False
    output_path: str = "diagnostics.csv"
    seed: int = 0

    @property
    def dx(self) -> float:
        """Cell width; a homogeneous run integrates over unit volume."""
        return self.domain_length / self.n_cells if self.n_cells > 1 else 1.0

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def dt_bound(self) -> tuple[float, str]:
        """Largest admissible ``dt`` and the name of the binding constraint.

        The relaxation bound uses ``tau`` at the global equilibrium, which is
        ``tau0``; the solver re-checks the local ``tau`` every step.
        """
        bound, name = STABILITY_FRACTION * self.params.tau0, f"relaxation stability dt <= {STABILITY_FRACTION}*tau"
        if self.n_cells > 1:
            cfl = CFL * (self.domain_length / self.n_cells) / self.v_max
            if cfl < bound:
                bound, name = cfl, f"CFL dt <= {CFL}*dx/v_max"
        return bound, name

    def validate(self) -> "SimConfig":
        if self.n_v % 2 or self.n_v < 8:
            raise ConfigError(f"n_v must be even and >= 8, got {self.n_v}")
        if not self.v_max >= 4:
            raise ConfigError(f"v_max must be >= 4, got {self.v_max}")
        if self.n_cells < 1:
            raise ConfigError(f"n_cells must be >= 1, got {self.n_cells}")
        if not self.domain_length > 0:
            raise ConfigError("domain_length must be > 0")
        if not self.dt > 0:
            raise ConfigError("dt must be > 0")
        if not self.t_end > 0:
            raise ConfigError("t_end must be > 0")
        if self.output_every < 1:
            raise ConfigError("output_every must be >= 1")
        if self.ic.kind not in IC_KINDS:
            raise ConfigError(f"ic.kind must be one of {IC_KINDS}, got {self.ic.kind!r}")
        bound, name = self.dt_bound()
        if self.dt > bound:
            raise ConfigError(f"dt = {self.dt} violates {name} (bound {bound:.6g})")
        return self


_PARAM_KEYS = ("pr", "tau0", "eta", "w")
_IC_KEYS = {"ic.kind": "kind", "ic.amplitude": "amplitude", "ic.mode": "mode"}
_TOP_KEYS = tuple(
    f.name for f in fields(SimConfig) if f.name not in ("params", "ic")
)
KEYS = _PARAM_KEYS + _TOP_KEYS + tuple(_IC_KEYS)


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return float(Fraction(text))


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_CONVERTERS = {
    "n_v": int, "n_cells": int, "output_every": int, "seed": int, "ic.mode": int,
    "enforce_third_moment_zero": _parse_bool, "output_path": str, "ic.kind": str,
}


def parse_config(text: str) -> SimConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Raises ``ConfigError`` naming the unknown key, the line of an unparsable
    value, or the violated invariant.
    """
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _CONVERTERS.get(key, _parse_float)(val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: cannot parse value for {key!r}: {exc}") from None
    try:
        params = ModelParams(**{k: values.pop(k) for k in _PARAM_KEYS if k in values})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    ic = InitialCondition(**{_IC_KEYS[k]: values.pop(k) for k in list(_IC_KEYS) if k in values})
    return SimConfig(params=params, ic=ic, **values).validate()


def render_config(config: SimConfig) -> str:
    p, ic = config.params, config.ic
    lines = [f"pr = {p.pr!r}", f"tau0 = {p.tau0!r}", f"eta = {p.eta!r}", f"w = {p.w!r}"]
    for name in _TOP_KEYS:
        val = getattr(config, name)
        lines.append(f"{name} = {str(val).lower() if isinstance(val, bool) else repr(val) if isinstance(val, float) else val}")
    lines += [f"ic.kind = {ic.kind}", f"ic.amplitude = {ic.amplitude!r}", f"ic.mode = {ic.mode}"]
    return "\n".join(lines) + "\n"


def with_overrides(config: SimConfig, **kwargs) -> SimConfig:
    return replace(config, **kwargs).validate()

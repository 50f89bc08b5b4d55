"""Scenario files and their geometric realizations.

A scenario is a strict key-value (TOML) description of one of four concrete
set-ups on the sphere:

  radial-band   single-anchor cone potential; transport rays are meridian
                arcs crossing a latitude band, with a closed-form density
  two-band      the same potential with two contiguous band cylinders,
                exercising additivity/merging
  discrete-lp   atomic measures fed to the Kantorovich dual solver
  tilted-disk   a synthetic slice whose normal is tilted against the ray
                direction; used for Jacobian-formula tests, no potential

Unknown keys are rejected so typos never silently change a run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ParseError, ValidationError
from .manifold import ManifoldParams, distance, exp_map, log_map, s_K
from .measures import DiscreteMeasure, Potential, solve_kantorovich_dual
from .rays import CylinderSet, cone_direction_field

KINDS = ("radial-band", "two-band", "discrete-lp", "tilted-disk")

_TOP_KEYS = {"name", "kind", "seed", "manifold", "params"}
_MANIFOLD_KEYS = {"n", "K"}
_PARAM_KEYS = {
    "radial-band": {"r1", "r2", "n_base"},
    "two-band": {"r1", "r2", "r3", "n_base"},
    "discrete-lp": {"mu", "nu"},
    "tilted-disk": {"theta", "r", "h_minus", "h_plus"},
}


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: str
    manifold: ManifoldParams
    params: dict = field(default_factory=dict)
    seed: int = 42


def _reject_unknown(table: dict, allowed: set, where: str) -> None:
    unknown = set(table) - allowed
    if unknown:
        raise ParseError(f"unknown field(s) {sorted(unknown)} in {where}")


def load_scenario(path) -> Scenario:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError as e:
        raise ParseError(f"scenario file not found: {path}") from e
    except tomllib.TOMLDecodeError as e:
        raise ParseError(f"scenario file {path}: {e}") from e

    _reject_unknown(raw, _TOP_KEYS, "scenario")
    for key in ("name", "kind"):
        if key not in raw:
            raise ParseError(f"missing required field {key!r}")
    kind = raw["kind"]
    if kind not in KINDS:
        raise ParseError(f"unknown kind {kind!r}; expected one of {KINDS}")

    mtab = raw.get("manifold", {})
    _reject_unknown(mtab, _MANIFOLD_KEYS, "[manifold]")
    for key in ("n", "K"):
        if key not in mtab:
            raise ParseError(f"missing required field manifold.{key}")
    try:
        manifold = ManifoldParams(int(mtab["n"]), float(mtab["K"]))
    except ValueError as e:
        raise ValidationError(str(e)) from e

    params = dict(raw.get("params", {}))
    _reject_unknown(params, _PARAM_KEYS[kind], f"[params] for kind {kind!r}")
    seed = int(raw.get("seed", 42))

    scn = Scenario(str(raw["name"]), kind, manifold, params, seed)
    validate_scenario(scn)
    return scn


def validate_scenario(scn: Scenario) -> None:
    m = scn.manifold
    p = scn.params
    if scn.kind in ("radial-band", "two-band"):
        if m.n != 2:
            raise ValidationError(f"{scn.kind} scenarios are defined on S^2 only")
        edges = ["r1", "r2"] if scn.kind == "radial-band" else ["r1", "r2", "r3"]
        for key in edges:
            if key not in p:
                raise ValidationError(f"missing params.{key}")
        vals = [float(p[k]) for k in edges]
        if not all(a < b for a, b in zip(vals, vals[1:])):
            raise ValidationError(f"band order: need {' < '.join(edges)}, got {vals}")
        if not (0.0 < vals[0] and vals[-1] < m.diameter):
            raise ValidationError(
                f"band must satisfy 0 < colatitudes < {m.diameter} (one hemisphere)"
            )
        n_base = int(p.get("n_base", 64))
        if n_base < 3:
            raise ValidationError("n_base must be >= 3")
    elif scn.kind == "discrete-lp":
        for side in ("mu", "nu"):
            atoms = p.get(side)
            if not atoms:
                raise ValidationError(f"missing or empty params.{side}")
            for row in atoms:
                if len(row) != 3:
                    raise ValidationError(
                        f"params.{side} rows must be [colat, lon, mass]"
                    )
                colat, _, mass = map(float, row)
                if not (0.0 <= colat <= m.diameter):
                    raise ValidationError(f"colatitude {colat} outside [0, diameter]")
                if mass <= 0:
                    raise ValidationError("masses must be positive")
    elif scn.kind == "tilted-disk":
        for key in ("theta", "r"):
            if key not in p:
                raise ValidationError(f"missing params.{key}")
        theta, r = float(p["theta"]), float(p["r"])
        if not (0.0 <= theta < np.pi / 2.0):
            raise ValidationError(f"tilt theta must lie in [0, pi/2), got {theta}")
        if not (0.0 < r < m.diameter):
            raise ValidationError(f"apex distance r must lie in (0, diameter), got {r}")
        h_minus = float(p.get("h_minus", -r / 4.0))
        h_plus = float(p.get("h_plus", 0.9 * r))
        if not (h_minus < 0.0 < h_plus):
            raise ValidationError(f"window must satisfy h- < 0 < h+, got [{h_minus}, {h_plus}]")
        if not h_plus < r:
            raise ValidationError(f"need t_max = h+ < r, got h+={h_plus}, r={r}")


def pole(m: ManifoldParams) -> np.ndarray:
    """Reference pole N = radius * e_last; colatitudes are measured from it."""
    N = np.zeros(m.n + 1)
    N[-1] = m.radius
    return N


def point_at(m: ManifoldParams, colat: float, lon: float) -> np.ndarray:
    """Point at given colatitude from the pole, longitude in the (e0, e1) plane."""
    a = np.sqrt(m.K) * colat
    x = np.zeros(m.n + 1)
    x[0] = np.sin(a) * np.cos(lon)
    x[1] = np.sin(a) * np.sin(lon)
    x[-1] = np.cos(a)
    return m.radius * x


def colatitude(x: np.ndarray, m: ManifoldParams) -> float:
    return distance(x, pole(m), m)


def _radial_potential(m: ManifoldParams) -> Potential:
    """u(x) = -d(apex, x) with the apex at the pole's antipode, so
    u = colatitude - diameter and rays flow outward along meridians."""
    apex = -pole(m)
    return Potential(np.atleast_2d(apex), np.zeros(1), m)


def _band_cylinder(scn: Scenario, u: Potential, r_lo: float, r_hi: float) -> CylinderSet:
    m = scn.manifold
    n_base = int(scn.params.get("n_base", 64))
    r_c = 0.5 * (r_lo + r_hi)
    w = r_hi - r_lo
    lons = 2.0 * np.pi * np.arange(n_base) / n_base
    base = np.array([point_at(m, r_c, lo) for lo in lons])
    apex = -pole(m)
    dirs = np.array([log_map(b, apex, m).vec / distance(b, apex, m) for b in base])
    circumference = 2.0 * np.pi * s_K(r_c, m.K)
    lo_hi = (r_lo, r_hi)

    def member(x: np.ndarray) -> bool:
        return r_lo <= colatitude(x, m) <= r_hi

    return CylinderSet(
        base=base,
        directions=dirs,
        h_minus=-w / 2.0,
        h_plus=w / 2.0,
        level=r_c - m.diameter,
        manifold=m,
        potential=u,
        base_weights=np.full(n_base, circumference / n_base),
        direction_field=cone_direction_field(u),
        membership=member,
        axis=pole(m),
        colat_range=lo_hi,
        oracle_density=lambda t: s_K(r_c + t, m.K) / s_K(r_c, m.K),
        ray_window=(-r_c, m.diameter - r_c),
    )


def make_tilted_slice(
    m: ManifoldParams, theta: float, r: float, h_minus: float, h_plus: float
) -> CylinderSet:
    """Single-point slice at apex distance r whose normal is tilted by theta
    against the toward-apex ray direction."""
    apex = pole(m)
    y = point_at(m, r, 0.0)
    d = log_map(y, apex, m).vec / r  # toward the apex; flow contracts r
    perp = np.zeros(m.n + 1)
    perp[1] = 1.0  # unit tangent at y orthogonal to the meridian plane
    normal = np.cos(theta) * d + np.sin(theta) * perp
    anchor_field = cone_direction_field(Potential(np.atleast_2d(apex), np.zeros(1), m))
    return CylinderSet(
        base=np.atleast_2d(y),
        directions=np.atleast_2d(d),
        h_minus=h_minus,
        h_plus=h_plus,
        level=0.0,
        manifold=m,
        normals=np.atleast_2d(normal),
        base_weights=np.array([1.0]),
        direction_field=anchor_field,
        ray_window=(-(m.diameter - r), r),
    )


def _atoms_to_measure(rows, m: ManifoldParams) -> DiscreteMeasure:
    pts = np.array([point_at(m, float(c), float(lo)) for c, lo, _ in rows])
    masses = np.array([float(w) for _, _, w in rows])
    return DiscreteMeasure(pts, masses)


def materialize(scn: Scenario) -> tuple[Optional[Potential], list[CylinderSet]]:
    """Realize the scenario: its potential (when one exists) and a cylinder
    cover of its transport region."""
    m = scn.manifold
    p = scn.params
    if scn.kind == "radial-band":
        u = _radial_potential(m)
        return u, [_band_cylinder(scn, u, float(p["r1"]), float(p["r2"]))]
    if scn.kind == "two-band":
        u = _radial_potential(m)
        r1, r2, r3 = (float(p[k]) for k in ("r1", "r2", "r3"))
        return u, [_band_cylinder(scn, u, r1, r2), _band_cylinder(scn, u, r2, r3)]
    if scn.kind == "discrete-lp":
        mu = _atoms_to_measure(p["mu"], m)
        nu = _atoms_to_measure(p["nu"], m)
        u, _ = solve_kantorovich_dual(mu, nu, m)
        if len(mu.masses) == len(nu.masses) == 1:
            return u, [_single_ray_cylinder(mu.points[0], nu.points[0], u, m)]
        return u, []
    if scn.kind == "tilted-disk":
        theta, r = float(p["theta"]), float(p["r"])
        h_minus = float(p.get("h_minus", -r / 4.0))
        h_plus = float(p.get("h_plus", 0.9 * r))
        return None, [make_tilted_slice(m, theta, r, h_minus, h_plus)]
    raise ValidationError(f"unknown kind {scn.kind!r}")


def _single_ray_cylinder(
    p: np.ndarray, q: np.ndarray, u: Potential, m: ManifoldParams
) -> CylinderSet:
    """Degenerate zero-dimensional base: the single transport ray q -> p of a
    two-atom problem, based at its midpoint."""
    d = distance(p, q, m)
    mid = exp_map(q, 0.5 * log_map(q, p, m).vec, m)
    direction = log_map(mid, p, m).vec / distance(mid, p, m)
    return CylinderSet(
        base=np.atleast_2d(mid),
        directions=np.atleast_2d(direction),
        h_minus=-0.4 * d,
        h_plus=0.4 * d,
        level=u(mid),
        manifold=m,
        potential=u,
        base_weights=np.array([1.0]),
        ray_window=(-0.5 * d, 0.5 * d),
    )

"""Stock scenarios and seeded random field generators.

Everything here produces plain scenario dictionaries (the same JSON layout the
CLI reads), so random fields are expression strings and stay reproducible from
the seed alone.  Random expressions use the rescaled coordinates
``u = (2 x - lo - hi) / (hi - lo)`` so that amplitudes do not depend on the
chart ranges.
"""

from __future__ import annotations

import copy

import numpy as np


def _num(x: float) -> str:
    return f"{x:.6g}"


def _rescaled(coords, ranges) -> list[str]:
    out = []
    for c, (lo, hi) in zip(coords, ranges):
        out.append(f"(2*{c} - {_num(lo + hi)})/{_num(hi - lo)}")
    return out


def random_wave(rng: np.random.Generator, coords, ranges, amp: float) -> str:
    """``a * sin(k . u + phase)`` with |a| <= amp and |k_i| <= 1.5."""
    us = _rescaled(coords, ranges)
    a = amp * rng.uniform(0.3, 1.0) * rng.choice([-1.0, 1.0])
    ks = rng.uniform(-1.5, 1.5, size=len(coords))
    phase = rng.uniform(0.0, 2.0 * np.pi)
    arg = " + ".join(f"{_num(k)}*({u})" for k, u in zip(ks, us))
    return f"{_num(a)}*sin({arg} + {_num(phase)})"


def random_transform(rng, coords, ranges, scale: float = 0.3) -> list:
    """``phi = I + W`` with every entry of ``W`` below ``scale / m``: invertible by dominance."""
    m = len(coords)
    amp = scale / m
    rows = []
    for i in range(m):
        row = []
        for j in range(m):
            w = random_wave(rng, coords, ranges, amp)
            row.append(f"1 + {w}" if i == j else w)
        rows.append(row)
    return rows


def random_contorsion(rng, coords, ranges, amp: float = 0.5) -> list:
    """Raw ``K_{g b m}`` entries; the loader antisymmetrizes in (g, b)."""
    m = len(coords)
    return [[[random_wave(rng, coords, ranges, amp) for _ in range(m)] for _ in range(m)] for _ in range(m)]


def random_theta(rng, coords, ranges, amp: float = 0.8) -> list:
    """Antisymmetric ``theta_{ab}(x)``, the parameter of ``S = exp(theta sigma / 2)``."""
    m = len(coords)
    rows = [["0"] * m for _ in range(m)]
    for a in range(m):
        for b in range(a + 1, m):
            w = random_wave(rng, coords, ranges, amp)
            rows[a][b] = w
            rows[b][a] = f"-({w})"
    return rows


def random_spinor(rng, coords, ranges, k: int, amp: float = 1.0) -> list:
    return [[random_wave(rng, coords, ranges, amp), random_wave(rng, coords, ranges, amp)] for _ in range(k)]


def fill_random(data: dict, seed: int) -> dict:
    """Copy of ``data`` with every omitted random field generated from ``seed``.

    The generators draw in a fixed order (transform, contorsion, spin, spinor)
    from one stream, so a field present in ``data`` still consumes its draws.
    """
    out = copy.deepcopy(data)
    rng = np.random.default_rng(seed)
    coords = data["chart"]["coords"]
    ranges = data["chart"]["ranges"]
    plus, minus = data["signature"]
    k = 2 ** ((plus + minus) // 2)
    drawn = {
        "transform": random_transform(rng, coords, ranges),
        "contorsion": random_contorsion(rng, coords, ranges),
        "spin": random_theta(rng, coords, ranges),
        "spinor": random_spinor(rng, coords, ranges, k),
    }
    for key in ("transform", "spin", "spinor"):
        out.setdefault(key, drawn[key])
    if "contorsion" not in out and "torsion" not in out:
        out["contorsion"] = drawn["contorsion"]
    return out


def _identity(m: int) -> list:
    return [["1" if i == j else "0" for j in range(m)] for i in range(m)]


FLAT = {
    "schema": 1,
    "name": "flat",
    "signature": [2, 0],
    "chart": {"coords": ["x", "y"], "ranges": [[0.0, 1.0], [0.0, 1.0]], "samples": 8},
    "frame": _identity(2),
    "mass": 0.5,
    "expect": {"metric": _identity(2)},
}

POLAR = {
    "schema": 1,
    "name": "polar",
    "signature": [2, 0],
    "chart": {"coords": ["r", "th"], "ranges": [[1.0, 2.0], [0.2, 1.2]], "samples": 8},
    # e_1 = d_r, e_2 = (1/r) d_th
    "frame": [["1", "0"], ["0", "1/r"]],
    "mass": 0.5,
    "expect": {"metric": [["1", "0"], ["0", "r^2"]]},
}

# e_1 = (1/r) d_th, e_2 = 1/(r sin th) d_ph, e_3 = d_r (the -1 direction)
SPHERICAL = {
    "schema": 1,
    "name": "spherical",
    "signature": [2, 1],
    "chart": {"coords": ["r", "th", "ph"], "ranges": [[1.0, 2.0], [0.3, 1.3], [0.0, 1.0]], "samples": 6},
    "frame": [["0", "0", "1"], ["1/r", "0", "0"], ["0", "1/(r*sin(th))", "0"]],
    "mass": 0.5,
    "expect": {"metric": [["-1", "0", "0"], ["0", "r^2", "0"], ["0", "0", "r^2*sin(th)^2"]]},
}

# Identity frame on (r, th, ph) pushed forward by d(r,th,ph)/d(x,y,z) for
# x = r sin th cos ph, y = r sin th sin ph, z = r cos th with eta = diag(1,1,-1).
SPHERICAL_PUSHFORWARD = {
    "schema": 1,
    "name": "spherical-pushforward",
    "signature": [2, 1],
    "chart": {"coords": ["r", "th", "ph"], "ranges": [[1.0, 2.0], [0.3, 1.3], [0.0, 1.0]], "samples": 6},
    "frame": _identity(3),
    "transform": [
        ["sin(th)*cos(ph)", "sin(th)*sin(ph)", "cos(th)"],
        ["cos(th)*cos(ph)/r", "cos(th)*sin(ph)/r", "-sin(th)/r"],
        ["-sin(ph)/(r*sin(th))", "cos(ph)/(r*sin(th))", "0"],
    ],
    "mass": 0.5,
    "expect": {
        "metric": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "-1"]],
        "transformed_metric": [
            ["-cos(2*th)", "r*sin(2*th)", "0"],
            ["r*sin(2*th)", "r^2*cos(2*th)", "0"],
            ["0", "0", "r^2*sin(th)^2"],
        ],
    },
}

LORENTZIAN4 = {
    "schema": 1,
    "name": "lorentzian-4d",
    "signature": [3, 1],
    "chart": {"coords": ["x", "y", "z", "t"], "ranges": [[0.0, 1.0]] * 4, "samples": 5},
    "frame": [
        ["1 + 0.1*sin(y + t)", "0.05*z", "0", "0.1*x*t"],
        ["0", "1/(1 + 0.2*x^2)", "0.1*cos(z)", "0"],
        ["0.05*t", "0", "exp(0.1*y)", "0"],
        ["0.1*sin(x)", "0", "0", "1 + 0.2*t*y"],
    ],
    "mass": 0.5,
}

STOCK = {s["name"]: s for s in (FLAT, POLAR, SPHERICAL, SPHERICAL_PUSHFORWARD, LORENTZIAN4)}


def stock(name: str) -> dict:
    return copy.deepcopy(STOCK[name])

"""Scenario loading, the named check set and the JSON report."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import jsonschema
import numpy as np

from . import __version__
from .chart import (
    Chart,
    ChartError,
    Field,
    FrameField,
    NonFiniteSample,
    SpinField,
    TransformField,
    change_trivialization,
    field_from_def,
    induce_metric,
    transform_frame,
)
from .clifford import GammaRep, Signature, build_gamma
from .connection import (
    ContorsionField,
    TorsionField,
    antisymmetry_defect,
    connection_from_contorsion,
    connection_from_torsion_tensor,
    contorsion_from_torsion,
    levi_civita,
    projectability_defect,
    spin_coeffs,
    torsion,
)
from .dirac import (
    CONVENTION,
    DiracParams,
    SpinorField,
    contorsion_split_check,
    covariance_check,
    dirac_residual,
    frame_transform_dirac_check,
)
from .fieldlang import FieldDef, ParseError
from .stock import fill_random
from .transform import (
    h_tensor,
    k_tensor,
    ktilde_consistency,
    pointwise_sub,
    torsionless_transported_torsion,
    transport_connection,
    transported_contorsion,
    transported_torsion,
)

DEFAULT_TOLERANCES = {"exact": 1e-12, "fd1": 1e-7, "fd2": 1e-5}
DEFAULT_SEED = 0
DEFAULT_MASS = 0.5

_EXPR = {"type": ["string", "number"]}


def _nested(depth: int) -> dict:
    schema = _EXPR
    for _ in range(depth):
        schema = {"type": "array", "minItems": 1, "items": schema}
    return schema


SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema", "signature", "chart", "frame"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": 1},
        "name": {"type": "string"},
        "signature": {
            "type": "array",
            "items": {"type": "integer", "minimum": 0},
            "minItems": 2,
            "maxItems": 2,
        },
        "chart": {
            "type": "object",
            "required": ["coords", "ranges"],
            "additionalProperties": False,
            "properties": {
                "coords": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                "ranges": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                },
                "samples": {
                    "oneOf": [
                        {"type": "integer", "minimum": 2},
                        {"type": "array", "items": {"type": "integer", "minimum": 2}},
                    ]
                },
                "fd_step": {
                    "oneOf": [
                        {"type": "number", "exclusiveMinimum": 0},
                        {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                    ]
                },
            },
        },
        "frame": _nested(2),
        "transform": _nested(2),
        "contorsion": _nested(3),
        "torsion": _nested(3),
        "spin": _nested(2),
        "spinor": _nested(2),
        "mass": {"type": "number"},
        "seed": {"type": "integer", "minimum": 0},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": "number", "exclusiveMinimum": 0} for k in DEFAULT_TOLERANCES},
        },
        "expect": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"metric": _nested(2), "transformed_metric": _nested(2)},
        },
        "perturb_ktilde": {
            "type": "object",
            "required": ["index"],
            "additionalProperties": False,
            "properties": {
                "index": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 3, "maxItems": 3},
                "amount": {"type": "number"},
            },
        },
    },
    "not": {"required": ["contorsion", "torsion"]},
}


class ScenarioError(ValueError):
    """Any problem loading a scenario; ``pointer`` is a JSON pointer when known."""

    def __init__(self, message: str, pointer: str = ""):
        self.pointer = pointer
        super().__init__(f"{pointer}: {message}" if pointer else message)


def _pointer(path) -> str:
    return "".join(f"/{p}" for p in path) or "/"


def validate(data) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        err = errors[0]
        if err.validator == "not":
            raise ScenarioError("give at most one of 'contorsion' and 'torsion'", "/")
        raise ScenarioError(err.message, _pointer(err.absolute_path))


def _check_shape(nested, shape: tuple, pointer: str) -> None:
    if len(shape) == 0:
        if isinstance(nested, list):
            raise ScenarioError("expected an expression, found a list", pointer)
        return
    if not isinstance(nested, list) or len(nested) != shape[0]:
        got = len(nested) if isinstance(nested, list) else "a scalar"
        raise ScenarioError(f"expected {shape[0]} entries, got {got}", pointer)
    for i, item in enumerate(nested):
        _check_shape(item, shape[1:], f"{pointer}/{i}")


@dataclass
class Scenario:
    name: str
    data: dict  # resolved dictionary, random fields filled in
    signature: Signature
    rep: GammaRep
    chart: Chart
    frame: FrameField
    transform: TransformField
    contorsion: ContorsionField
    torsion: Optional[TorsionField]
    spin: SpinField
    spinor: SpinorField
    mass: float
    tolerances: dict
    seed: int
    expect_metric: Optional[Field] = None
    expect_transformed_metric: Optional[Field] = None
    perturb_ktilde: Optional[dict] = None

    @property
    def m(self) -> int:
        return self.chart.m

    @property
    def k(self) -> int:
        return self.rep.k

    @property
    def digest(self) -> str:
        return hashlib.sha256(canonical_json(self.data).encode("utf-8")).hexdigest()


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _build(nested, chart: Chart, pointer: str, cls=Field, **kwargs) -> Field:
    try:
        fdef = FieldDef.from_nested(nested, chart.coords)
        return field_from_def(fdef, chart, cls=cls, **kwargs)
    except ParseError as err:
        entry = getattr(err, "entry", ())
        where = pointer + "".join(f"/{i}" for i in entry)
        raise ScenarioError(f"{err.args[0]} in {err.src!r}", where) from None
    except NonFiniteSample as err:
        where = pointer + "".join(f"/{i}" for i in err.entry)
        raise ScenarioError(str(err), where) from None
    except ChartError as err:
        raise ScenarioError(str(err), pointer) from None


def scenario_from_dict(data: dict, seed: Optional[int] = None) -> Scenario:
    """Validate, fill omitted random fields from the seed and sample everything."""
    validate(data)
    seed = int(data.get("seed", DEFAULT_SEED) if seed is None else seed)
    data = fill_random(data, seed)
    data["seed"] = seed
    data.setdefault("mass", DEFAULT_MASS)
    data["tolerances"] = {**DEFAULT_TOLERANCES, **data.get("tolerances", {})}

    try:
        sig = Signature(*data["signature"])
        rep = build_gamma(sig)
    except ValueError as err:
        raise ScenarioError(str(err), "/signature") from None
    spec = data["chart"]
    m = len(spec["coords"])
    if m != sig.m:
        raise ScenarioError(f"{m} coordinates for a signature of dimension {sig.m}", "/chart/coords")
    try:
        chart = Chart.create(spec["coords"], spec["ranges"], spec.get("samples", 8), spec.get("fd_step"))
    except ChartError as err:
        raise ScenarioError(str(err), "/chart") from None

    for key, shape in [
        ("frame", (m, m)),
        ("transform", (m, m)),
        ("contorsion", (m, m, m)),
        ("torsion", (m, m, m)),
        ("spin", (m, m)),
        ("spinor", (rep.k, 2)),
    ]:
        if key in data:
            _check_shape(data[key], shape, f"/{key}")
    for key in ("metric", "transformed_metric"):
        if key in data.get("expect", {}):
            _check_shape(data["expect"][key], (m, m), f"/expect/{key}")

    frame = _build(data["frame"], chart, "/frame", FrameField)
    transform = _build(data["transform"], chart, "/transform", TransformField)
    theta = _build(data["spin"], chart, "/spin")
    if np.max(np.abs(theta.values + np.swapaxes(theta.values, -1, -2))) > 1e-12:
        raise ScenarioError("spin parameter theta must be antisymmetric", "/spin")
    spin = SpinField.from_theta(rep, theta)
    try:
        pairs = [[str(v) if not isinstance(v, str) else v for v in pair] for pair in data["spinor"]]
        spinor = SpinorField.from_pairs(pairs, chart)
    except (ParseError, NonFiniteSample) as err:
        raise ScenarioError(str(err), "/spinor") from None

    g = induce_metric(frame, rep.eta)
    tors = None
    if "torsion" in data:
        raw = _build(data["torsion"], chart, "/torsion")
        tors = TorsionField(chart, raw.fn, fd_depth=raw.fd_depth, antisymmetrize=True)
        contorsion = contorsion_from_torsion(g, tors)
    else:
        raw = _build(data["contorsion"], chart, "/contorsion")
        contorsion = ContorsionField(chart, raw.fn, fd_depth=raw.fd_depth, antisymmetrize=True)

    expect = data.get("expect", {})
    exp_g = _build(expect["metric"], chart, "/expect/metric") if "metric" in expect else None
    exp_gt = (
        _build(expect["transformed_metric"], chart, "/expect/transformed_metric")
        if "transformed_metric" in expect
        else None
    )
    perturb = data.get("perturb_ktilde")
    if perturb is not None and any(i >= m for i in perturb["index"]):
        raise ScenarioError(f"index out of range for m = {m}", "/perturb_ktilde/index")

    return Scenario(
        name=data.get("name", "scenario"),
        data=data,
        signature=sig,
        rep=rep,
        chart=chart,
        frame=frame,
        transform=transform,
        contorsion=contorsion,
        torsion=tors,
        spin=spin,
        spinor=spinor,
        mass=float(data["mass"]),
        tolerances=data["tolerances"],
        seed=seed,
        expect_metric=exp_g,
        expect_transformed_metric=exp_gt,
        perturb_ktilde=perturb,
    )


def load_scenario(path, seed: Optional[int] = None) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as err:
        raise ScenarioError(f"cannot read scenario: {err.strerror}") from None
    except json.JSONDecodeError as err:
        raise ScenarioError(f"invalid JSON at line {err.lineno} column {err.colno}: {err.msg}") from None
    return scenario_from_dict(data, seed)


class _Derived:
    """Quantities shared between checks, computed on first use."""

    def __init__(self, s: Scenario, perturb: Optional[dict]):
        self.s = s
        self.perturb = perturb

    @cached_property
    def g(self):
        return induce_metric(self.s.frame, self.s.rep.eta)

    @cached_property
    def lc(self):
        return levi_civita(self.g)

    @cached_property
    def w(self):
        return connection_from_contorsion(self.g, self.s.contorsion)

    @cached_property
    def sc(self):
        return spin_coeffs(self.w, self.s.frame, self.s.rep.eta)

    @cached_property
    def et(self):
        return transform_frame(self.s.frame, self.s.transform)

    @cached_property
    def gt(self):
        return induce_metric(self.et, self.s.rep.eta)

    @cached_property
    def ktilde_raw(self) -> Field:
        raw = transported_contorsion(self.s.contorsion, self.g, self.s.transform, project=False)
        if not self.perturb:
            return raw
        vals = np.array(raw.values)
        r, b, mu = self.perturb["index"]
        vals[:, r, b, mu] += self.perturb.get("amount", 1e-3)
        return Field(raw.chart, values=vals, fd_depth=raw.fd_depth)

    @cached_property
    def ktilde(self) -> ContorsionField:
        return transported_contorsion(self.s.contorsion, self.g, self.s.transform)

    @property
    def dirac(self) -> DiracParams:
        return DiracParams(self.s.mass, self.s.rep)


def _max_abs(a) -> float:
    return float(np.max(np.abs(a), initial=0.0))


def _check_metric_induce(d: _Derived) -> float:
    # the frame must be orthonormal for its induced metric
    e = d.s.frame.values
    gram = np.einsum("nma,nmv,nvb->nab", e, d.g.values, e)
    defect = _max_abs(gram - d.s.rep.eta)
    if d.s.expect_metric is not None:
        defect = max(defect, _max_abs(d.g.values - d.s.expect_metric.values))
    if d.s.expect_transformed_metric is not None:
        defect = max(defect, _max_abs(d.gt.values - d.s.expect_transformed_metric.values))
    return defect


def _check_lc_projectable(d: _Derived) -> float:
    return projectability_defect(spin_coeffs(d.lc, d.s.frame, d.s.rep.eta)).defect


def _check_contorsion_antisym(d: _Derived) -> float:
    # {g} + g.K is projectable exactly when K is antisymmetric in its first pair
    return max(antisymmetry_defect(d.s.contorsion.values), projectability_defect(d.sc).defect)


def _check_torsion_roundtrip(d: _Derived) -> float:
    t = torsion(d.w)
    back = contorsion_from_torsion(d.g, t)
    defect = _max_abs(back.values - d.s.contorsion.values)
    w2 = connection_from_torsion_tensor(d.g, t)
    defect = max(defect, _max_abs(torsion(w2).values - t.values))
    if d.s.torsion is not None:
        defect = max(defect, _max_abs(t.values - d.s.torsion.values))
    return defect


def _check_h_lemma(d: _Derived) -> float:
    ref = pointwise_sub(levi_civita(d.gt), d.lc)
    return _max_abs(h_tensor(d.g, d.s.transform).values - ref.values)


def _check_k_lemma(d: _Derived) -> float:
    phi = d.s.transform
    ref = pointwise_sub(transport_connection(d.w, phi), d.w)
    return _max_abs(k_tensor(d.w, phi).values - ref.values)


def _check_ktilde(d: _Derived) -> float:
    raw = d.ktilde_raw
    return max(
        antisymmetry_defect(raw.values),
        ktilde_consistency(d.s.contorsion, d.g, d.s.transform, raw),
    )


def _check_ttilde(d: _Derived) -> float:
    phi = d.s.transform
    tt = transported_torsion(d.s.contorsion, d.g, phi)
    ref = torsion(connection_from_contorsion(d.gt, d.ktilde))
    m = d.s.m
    zero = ContorsionField(d.s.chart, lambda x: np.zeros((len(x), m, m, m)))
    tt0 = transported_torsion(zero, d.g, phi)
    closed = torsionless_transported_torsion(d.g, phi)
    return max(_max_abs(tt.values - ref.values), _max_abs(tt0.values - closed.values))


def _check_pullback(d: _Derived) -> float:
    sct = spin_coeffs(connection_from_contorsion(d.gt, d.ktilde), d.et, d.s.rep.eta)
    transported = spin_coeffs(transport_connection(d.w, d.s.transform), d.et, d.s.rep.eta)
    return max(_max_abs(d.sc.values - sct.values), _max_abs(d.sc.values - transported.values))


def _check_dirac_split(d: _Derived) -> float:
    return contorsion_split_check(d.s.frame, d.g, d.s.contorsion, d.s.spinor, d.dirac)


def _check_dirac_covariance(d: _Derived) -> float:
    return covariance_check(d.s.frame, d.sc, d.s.spinor, d.dirac, d.s.spin)


def _check_frame_transform_dirac(d: _Derived) -> float:
    return frame_transform_dirac_check(d.s.frame, d.s.contorsion, d.s.transform, d.s.spinor, d.dirac)


def _check_metric_vertical(d: _Derived) -> float:
    e2 = change_trivialization(d.s.frame, d.s.spin)
    return _max_abs(induce_metric(e2, d.s.rep.eta).values - d.g.values)


# name -> (tolerance class, check); report order follows this table
CHECKS = {
    "metric-induce": ("exact", _check_metric_induce),
    "lc-projectable": ("fd1", _check_lc_projectable),
    "contorsion-antisym": ("fd1", _check_contorsion_antisym),
    "torsion-roundtrip": ("exact", _check_torsion_roundtrip),
    "h-lemma": ("fd1", _check_h_lemma),
    "k-lemma": ("exact", _check_k_lemma),
    "ktilde-theorem": ("exact", _check_ktilde),
    "ttilde-corollary": ("exact", _check_ttilde),
    "pullback-equality": ("fd1", _check_pullback),
    "dirac-split": ("exact", _check_dirac_split),
    "dirac-covariance": ("fd2", _check_dirac_covariance),
    "frame-transform-dirac": ("fd1", _check_frame_transform_dirac),
    "metric-invariance-vertical": ("exact", _check_metric_vertical),
}

CHECK_DESCRIPTIONS = {
    "metric-induce": "frame is orthonormal for its induced metric; expected metrics match",
    "lc-projectable": "Levi-Civita spin coefficients are antisymmetric in (ab)",
    "contorsion-antisym": "K is antisymmetric and {g} + g.K is projectable",
    "torsion-roundtrip": "K -> T -> K and T -> w -> T reproduce their inputs",
    "h-lemma": "closed-form h equals {g~} - {g}",
    "k-lemma": "phi nabla phibar equals w~ - w",
    "ktilde-theorem": "K~ is antisymmetric and equals g~(g^-1 K + k - h)",
    "ttilde-corollary": "closed-form T~ equals the torsion of {g~} + g~.K~; K = 0 special case",
    "pullback-equality": "spin coefficients agree on (e, w) and (e~, w~)",
    "dirac-split": "R_total - R_LC equals the frame-contorsion term",
    "dirac-covariance": "R'(S psi) = S R(psi) under a spin transformation",
    "frame-transform-dirac": "Dirac data on e and e~ share coefficients and residual",
    "metric-invariance-vertical": "a spin transformation leaves the induced metric unchanged",
}


@dataclass
class CheckResult:
    name: str
    defect: Optional[float]
    tolerance: float
    tolerance_class: str
    passed: bool
    error: Optional[str] = None

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "defect": self.defect,
            "tolerance": self.tolerance,
            "tolerance_class": self.tolerance_class,
            "pass": self.passed,
        }
        if self.error is not None:
            out["error"] = self.error
        return out


@dataclass
class Report:
    version: str
    scenario: str
    digest: str
    seed: int
    results: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def result(self, name: str) -> CheckResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "tool": "spinframes",
            "version": self.version,
            "scenario": self.scenario,
            "scenario_digest": self.digest,
            "seed": self.seed,
            "convention": CONVENTION,
            "checks": [r.to_dict() for r in self.results],
            "pass": self.passed,
        }

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=indent) + "\n"

    def to_text(self) -> str:
        lines = [f"scenario {self.scenario} (seed {self.seed}, sha256 {self.digest[:12]})"]
        width = max(len(n) for n in CHECKS)
        for r in self.results:
            status = "PASS" if r.passed else "FAIL"
            defect = "error" if r.defect is None else f"{r.defect:.3e}"
            line = f"  {status}  {r.name:<{width}}  defect {defect:>10}  tol {r.tolerance:.0e} ({r.tolerance_class})"
            if r.error:
                line += f"  [{r.error}]"
            lines.append(line)
        lines.append("overall: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines) + "\n"


def resolve_checks(spec) -> list[str]:
    """``None``/``"all"`` or a comma list (or iterable) of names, returned in table order."""
    if spec is None or spec == "all":
        return list(CHECKS)
    names = [n.strip() for n in spec.split(",")] if isinstance(spec, str) else list(spec)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown check(s): {', '.join(unknown)}")
    return [n for n in CHECKS if n in names]


def run_checks(s: Scenario, which=None, perturb_ktilde: Optional[dict] = None) -> Report:
    """Run the named checks; a failing or raising check is recorded, never fatal."""
    names = resolve_checks(which)
    d = _Derived(s, perturb_ktilde if perturb_ktilde is not None else s.perturb_ktilde)
    report = Report(__version__, s.name, s.digest, s.seed)
    for name in names:
        cls, fn = CHECKS[name]
        tol = float(s.tolerances[cls])
        try:
            defect = float(fn(d))
        except Exception as err:  # recorded in the report
            report.results.append(CheckResult(name, None, tol, cls, False, f"{type(err).__name__}: {err}"))
            continue
        ok = math.isfinite(defect) and defect < tol
        report.results.append(CheckResult(name, defect, tol, cls, ok))
    return report


def residual_norms(s: Scenario) -> np.ndarray:
    """Per-point ``|R|`` for the scenario's spinor on ``(e, {g} + g.K)``."""
    d = _Derived(s, None)
    r = dirac_residual(s.frame, d.sc, s.spinor, d.dirac)
    return np.linalg.norm(r, axis=-1)

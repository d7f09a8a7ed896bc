"""The eleven acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line, printed in the pytest terminal summary.
Run ``python3 tests/test_acceptance.py`` to get just those lines.
"""

from __future__ import annotations

import itertools
import sys
import time
from functools import lru_cache
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE_LINES, make_field  # noqa: E402

from spinframes.chart import (  # noqa: E402
    Chart,
    SpinField,
    TransformField,
    change_trivialization,
    induce_metric,
    transform_frame,
)
from spinframes.clifford import Signature, build_gamma, covering_map, spin_exp  # noqa: E402
from spinframes.connection import (  # noqa: E402
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
from spinframes.dirac import (  # noqa: E402
    DiracParams,
    contorsion_split_check,
    covariance_check,
    dirac_residual,
    frame_transform_dirac_check,
    identity_frame,
    on_shell_momentum,
    plane_wave,
    plane_wave_spinor,
    zero_coeffs,
)
from spinframes.scenario import run_checks, scenario_from_dict  # noqa: E402
from spinframes.stock import STOCK, random_contorsion, random_theta, random_transform, stock  # noqa: E402
from spinframes.transform import (  # noqa: E402
    h_tensor,
    k_tensor,
    ktilde_consistency,
    pointwise_sub,
    torsionless_transported_torsion,
    transport_connection,
    transported_contorsion,
    transported_torsion,
)

ALL = list(STOCK)
CURVED = ["polar", "spherical", "spherical-pushforward", "lorentzian-4d"]


@lru_cache(maxsize=None)
def scenario(name: str, seed: int = 42):
    return scenario_from_dict(stock(name), seed)


def _max(a) -> float:
    return float(np.max(np.abs(a), initial=0.0))


def _record(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def _random_k(s, seed):
    rng = np.random.default_rng(seed)
    raw = make_field(random_contorsion(rng, s.chart.coords, s.chart.ranges), s.chart)
    return ContorsionField(s.chart, raw.fn, antisymmetrize=True)


def _random_phi(s, seed):
    rng = np.random.default_rng(seed)
    return make_field(random_transform(rng, s.chart.coords, s.chart.ranges), s.chart, TransformField)


def _random_spin(s, seed):
    rng = np.random.default_rng(seed)
    return SpinField.from_theta(s.rep, make_field(random_theta(rng, s.chart.coords, s.chart.ranges), s.chart))


def test_criterion_01_clifford():
    rng = np.random.default_rng(1)
    anti = hom = orth = 0.0
    sign_exact = True
    for m in range(1, 7):
        for plus in range(m + 1):
            rep = build_gamma(Signature(plus, m - plus))
            anti = max(anti, rep.clifford_defect())
            for _ in range(3):
                t1, t2 = (0.5 * rng.normal(size=(m, m)) for _ in range(2))
                s1, s2 = spin_exp(rep, t1 - t1.T), spin_exp(rep, t2 - t2.T)
                l1, l2 = covering_map(rep, s1), covering_map(rep, s2)
                hom = max(hom, _max(covering_map(rep, s1 @ s2) - l1 @ l2))
                orth = max(orth, _max(l1 @ rep.eta @ l1.T - rep.eta))
                sign_exact &= bool(np.array_equal(covering_map(rep, -s1), l1))
    ok = anti < 1e-13 and hom < 1e-10 and orth < 1e-10 and sign_exact
    _record(1, "Clifford suite", ok, f"anticommutator {anti:.1e}, homomorphism {hom:.1e}, orthogonality {orth:.1e}, L(-S)=L(S) {sign_exact}")
    assert ok


def test_criterion_02_metric_induction():
    defects = {}
    for name in ("polar", "spherical"):
        s = scenario(name)
        defects[name] = _max(induce_metric(s.frame, s.rep.eta).values - s.expect_metric.values)
    s = scenario("spherical-pushforward")
    gt = induce_metric(transform_frame(s.frame, s.transform), s.rep.eta)
    g2 = _max(gt.values - s.expect_transformed_metric.values)
    ok = defects["polar"] < 1e-12 and defects["spherical"] < 1e-12 and g2 < 1e-10
    _record(2, "metric induction", ok, f"polar {defects['polar']:.1e}, g1 {defects['spherical']:.1e}, g2 {g2:.1e}")
    assert ok


def test_criterion_03_vertical_invariance():
    worst = 0.0
    for name in ALL:
        s = scenario(name)
        g = induce_metric(s.frame, s.rep.eta)
        for seed in range(5):
            e2 = change_trivialization(s.frame, _random_spin(s, 100 + seed))
            worst = max(worst, _max(induce_metric(e2, s.rep.eta).values - g.values))
    ok = worst < 1e-9
    _record(3, "vertical-automorphism metric invariance", ok, f"max |g' - g| {worst:.1e} over {len(ALL)} scenarios x 5 spin fields")
    assert ok


def test_criterion_04_projectability():
    lc = proj = 0.0
    for name in ALL:
        s = scenario(name)
        g = induce_metric(s.frame, s.rep.eta)
        lc = max(lc, projectability_defect(spin_coeffs(levi_civita(g), s.frame, s.rep.eta)).defect)
        for seed in range(5):
            w = connection_from_contorsion(g, _random_k(s, 200 + seed))
            proj = max(proj, projectability_defect(spin_coeffs(w, s.frame, s.rep.eta)).defect)
    ok = lc < 1e-7 and proj < 1e-7
    _record(4, "projectability", ok, f"Levi-Civita {lc:.1e}, {{g}}+g.K over 5 K fields {proj:.1e}")
    assert ok


def test_criterion_05_torsion_roundtrip():
    k_to_k = t_to_t = 0.0
    for name in ALL:
        s = scenario(name)
        g = induce_metric(s.frame, s.rep.eta)
        for seed in range(2):
            k = _random_k(s, 300 + seed)
            t = torsion(connection_from_contorsion(g, k))
            k_to_k = max(k_to_k, _max(contorsion_from_torsion(g, t).values - k.values))
            rng = np.random.default_rng(400 + seed)
            raw = make_field(random_contorsion(rng, s.chart.coords, s.chart.ranges), s.chart)
            i = TorsionField(s.chart, raw.fn, antisymmetrize=True)
            t_to_t = max(t_to_t, _max(torsion(connection_from_torsion_tensor(g, i)).values - i.values))
    ok = k_to_k < 1e-8 and t_to_t < 1e-8
    _record(5, "torsion/contorsion roundtrips", ok, f"K->T->K {k_to_k:.1e}, T->w->T {t_to_t:.1e}")
    assert ok


def test_criterion_06_h_and_k_lemmas():
    hd = kd = 0.0
    cases = 0
    for name in CURVED:
        s = scenario(name)
        g = induce_metric(s.frame, s.rep.eta)
        w = connection_from_contorsion(g, s.contorsion)
        for seed in range(3):
            phi = _random_phi(s, 500 + seed)
            gt = induce_metric(transform_frame(s.frame, phi), s.rep.eta)
            hd = max(hd, _max(h_tensor(g, phi).values - pointwise_sub(levi_civita(gt), levi_civita(g)).values))
            kd = max(kd, _max(k_tensor(w, phi).values - pointwise_sub(transport_connection(w, phi), w).values))
            cases += 1
    ok = hd < 1e-6 and kd < 1e-8
    _record(6, "h and k lemmas", ok, f"h {hd:.1e}, k {kd:.1e} over {cases} (scenario, phi) pairs")
    assert ok


def test_criterion_07_ktilde_theorem():
    anti = cons = proj = 0.0
    for name in CURVED:
        s = scenario(name)
        g = induce_metric(s.frame, s.rep.eta)
        w = connection_from_contorsion(g, s.contorsion)
        for seed in range(2):
            phi = _random_phi(s, 600 + seed)
            raw = transported_contorsion(s.contorsion, g, phi, project=False)
            anti = max(anti, antisymmetry_defect(raw.values))
            cons = max(cons, ktilde_consistency(s.contorsion, g, phi, raw))
            et = transform_frame(s.frame, phi)
            proj = max(proj, projectability_defect(spin_coeffs(transport_connection(w, phi), et, s.rep.eta)).defect)
    ok = anti < 1e-10 and cons < 1e-6 and proj < 1e-6
    _record(7, "transported contorsion", ok, f"antisymmetry {anti:.1e}, K+k-h consistency {cons:.1e}, projectable on e~ {proj:.1e}")
    assert ok


def test_criterion_08_ttilde_corollary():
    agree = closed = 0.0
    for name in CURVED:
        s = scenario(name)
        g = induce_metric(s.frame, s.rep.eta)
        phi = s.transform
        gt = induce_metric(transform_frame(s.frame, phi), s.rep.eta)
        kt = transported_contorsion(s.contorsion, g, phi)
        ref = torsion(connection_from_contorsion(gt, kt))
        agree = max(agree, _max(transported_torsion(s.contorsion, g, phi).values - ref.values))
        m = s.m
        zero = ContorsionField(s.chart, lambda x, m=m: np.zeros((len(x), m, m, m)))
        ref0 = torsion(connection_from_contorsion(gt, transported_contorsion(zero, g, phi)))
        closed = max(closed, _max(torsionless_transported_torsion(g, phi).values - ref0.values))
    ok = agree < 1e-6 and closed < 1e-6
    _record(8, "transported torsion", ok, f"vs torsion of {{g~}}+g~.K~ {agree:.1e}, K=0 closed form {closed:.1e}")
    assert ok


def test_criterion_09_pullback_equality():
    per = {}
    for name in ALL:
        r = run_checks(scenario(name), ["pullback-equality"])
        per[name] = r.results[0].defect
    worst = max(per.values())
    ok = worst < 1e-6 and scenario("lorentzian-4d").signature == Signature(3, 1)
    _record(9, "pullback coefficient equality", ok, ", ".join(f"{n} {d:.1e}" for n, d in per.items()))
    assert ok


def _plane_wave_defect() -> float:
    worst = 0.0
    for sig in (Signature(2, 0), Signature(1, 1), Signature(2, 1), Signature(3, 1)):
        rep = build_gamma(sig)
        chart = Chart.create([f"x{i}" for i in range(sig.m)], [(0.0, 1.0)] * sig.m, samples=5)
        p = on_shell_momentum(rep.eta, 1.3, [0.4] * (sig.m - 1))
        u, _ = plane_wave_spinor(rep, p)
        r = dirac_residual(identity_frame(chart), zero_coeffs(chart), plane_wave(chart, u, p), DiracParams(1.3, rep))
        worst = max(worst, _max(r))
    return worst


def test_criterion_10_dirac():
    pw = _plane_wave_defect()
    split = cov = ftd = 0.0
    for name in CURVED:
        s = scenario(name)
        g = induce_metric(s.frame, s.rep.eta)
        params = DiracParams(s.mass, s.rep)
        split = max(split, contorsion_split_check(s.frame, g, s.contorsion, s.spinor, params))
        sc = spin_coeffs(connection_from_contorsion(g, s.contorsion), s.frame, s.rep.eta)
        for seed in range(5):
            cov = max(cov, covariance_check(s.frame, sc, s.spinor, params, _random_spin(s, 700 + seed)))
        ftd = max(ftd, frame_transform_dirac_check(s.frame, s.contorsion, s.transform, s.spinor, params))
    ok = pw < 1e-6 and split < 1e-8 and cov < 1e-6 and ftd < 1e-6
    _record(10, "Dirac", ok, f"plane wave {pw:.1e}, split {split:.1e}, covariance {cov:.1e}, frame transform {ftd:.1e}")
    assert ok


def test_criterion_11_fault_injection():
    worst_ratio = 1.0
    detected = True
    n = 0
    for name in ("polar", "spherical"):
        s = scenario(name)
        for idx in itertools.product(range(s.m), repeat=3):
            r = run_checks(s, ["ktilde-theorem"], perturb_ktilde={"index": list(idx), "amount": 1e-3}).results[0]
            detected &= not r.passed
            ratio = r.defect / 1e-3
            worst_ratio = max(worst_ratio, ratio, 1.0 / ratio)
            n += 1
    ok = detected and worst_ratio < 3.0
    _record(11, "fault injection", ok, f"{n} single-component 1e-3 perturbations detected {detected}, worst defect/1e-3 factor {worst_ratio:.3f}")
    assert ok


if __name__ == "__main__":
    start = time.perf_counter()
    failures = 0
    for fname, fn in sorted(globals().items()):
        if fname.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failures += 1
    print(f"{11 - failures}/11 criteria pass in {time.perf_counter() - start:.1f} s")
    sys.exit(1 if failures else 0)

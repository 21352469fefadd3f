"""Release acceptance suite.

Each test exercises one numbered release criterion end to end and prints a
single ``[acceptance] criterion N: PASS/FAIL -- detail`` verdict on the real
stdout, so the verdicts are visible in plain ``pytest -v`` output.  Criteria
with a wall-clock budget assert the bound as well.  Verdict lines are printed
before the assertions run, so a red test still reports its measurements.
"""

import contextlib
import csv
import io
import json
import sys
import time

import numpy as np
import pytest

from qcodesign import decompose as D
from qcodesign import gates as G
from qcodesign import harness as H
from qcodesign import topology as T
from qcodesign.benchmarks import BenchmarkSpec, Family
from qcodesign.circuit import Circuit, Instruction, Origin, simulate
from qcodesign.transpile import basis_translate, dense_layout, stochastic_route


# One line per criterion (plus criterion 2's deviation rows); the conftest
# terminal-summary hook replays these after the run, outside output capture.
VERDICT_LINES = []


def _emit_line(line: str) -> None:
    VERDICT_LINES.append(line)
    print(line, file=sys.__stdout__, flush=True)


def _report(num: int, ok: bool, detail: str) -> None:
    verdict = "PASS" if ok else "FAIL"
    _emit_line(f"[acceptance] criterion {num}: {verdict} -- {detail}")


def _note(text: str) -> None:
    _emit_line(f"[acceptance]   {text}")


@contextlib.contextmanager
def _verdict(num: int):
    """Guarantee a verdict line for criterion ``num`` even if the body raises
    before reaching its own report call."""
    state = {"reported": False}

    def emit(ok: bool, detail: str) -> None:
        state["reported"] = True
        _report(num, ok, detail)

    try:
        yield emit
    except BaseException as exc:
        if not state["reported"]:
            _report(num, False, f"raised {type(exc).__name__}: {exc}")
        raise


# ---------------------------------------------------------------------------
# Criterion 1: six reference constructions reproduce their statistics exactly
# (diameter, average pairwise distance, average connectivity), in under 1 s.

EXACT_ROWS = (
    ("square_lattice(4,4)", lambda: T.build_square_lattice(4, 4),
     (6.0, 2.5, 3.0)),
    ("hypercube(4)", lambda: T.build_hypercube(4), (4.0, 2.0, 4.0)),
    ("tree(2)", lambda: T.build_tree(2), (3.0, 2.15, 4.6)),
    ("tree_rr(2)", lambda: T.build_tree_rr(2), (3.0, 2.03, 4.6)),
    ("corral(8,1,1)", lambda: T.build_corral(8, 1, 1), (4.0, 2.06, 5.0)),
    ("corral(8,1,2)", lambda: T.build_corral(8, 1, 2), (2.0, 1.5, 6.0)),
)


def test_criterion_1_reference_stats_exact():
    with _verdict(1) as emit:
        t0 = time.perf_counter()
        bad = []
        for name, build, want in EXACT_ROWS:
            s = T.stats(build())
            got = (float(s.diameter), round(s.avg_distance, 2),
                   round(s.avg_connectivity, 2))
            if got != want:
                bad.append(f"{name}: got {got}, want {want}")
        elapsed = time.perf_counter() - t0
        ok = not bad and elapsed < 1.0
        emit(ok, f"{len(EXACT_ROWS) - len(bad)}/{len(EXACT_ROWS)} reference "
                 f"rows exact in {elapsed:.3f}s (budget 1s)")
        assert not bad, "; ".join(bad)
        assert elapsed < 1.0, f"took {elapsed:.3f}s, budget is 1s"


# ---------------------------------------------------------------------------
# Criterion 2: the under-specified tilings land within +-10% of the reference
# statistics on every component (deviations printed), and the 7x12 square
# lattice hits diameter 17 exactly.

TOLERANT_ROWS = (
    ("heavy_hex(20)", lambda: T.build_heavy_hex(20), (8.0, 3.77, 2.1)),
    ("hex(20)", lambda: T.build_hex_lattice(20), (7.0, 3.37, 2.45)),
    ("heavy_hex(84)", lambda: T.build_heavy_hex(84), (21.0, 8.47, 2.26)),
    ("hex(84)", lambda: T.build_hex_lattice(84), (17.0, 6.95, 2.71)),
    ("square_lattice(7,12)", lambda: T.build_square_lattice(7, 12),
     (17.0, 6.26, 3.55)),
    ("alt_diag(7,12)", lambda: T.build_lattice_alt_diag(7, 12),
     (11.0, 4.62, 5.12)),
    ("tree(3)", lambda: T.build_tree(3), (5.0, 3.91, 4.71)),
    ("tree_rr(3)", lambda: T.build_tree_rr(3), (5.0, 3.65, 4.71)),
    ("hypercube_trim(7,84)", lambda: T.trim_hypercube(7, 84),
     (7.0, 3.32, 6.0)),
)


def test_criterion_2_reference_stats_tolerant():
    with _verdict(2) as emit:
        bad = []
        for name, build, want in TOLERANT_ROWS:
            s = T.stats(build())
            got = (float(s.diameter), s.avg_distance, s.avg_connectivity)
            devs = [(g - w) / w * 100.0 for g, w in zip(got, want)]
            _note(f"{name}: dia {devs[0]:+.1f}%, dist {devs[1]:+.1f}%, "
                  f"conn {devs[2]:+.1f}%")
            if any(abs(g - w) > 0.10 * w for g, w in zip(got, want)):
                bad.append(f"{name}: got {tuple(round(v, 3) for v in got)}, "
                           f"want {want}")
        dia84 = T.stats(T.build_square_lattice(7, 12)).diameter
        ok = not bad and dia84 == 17
        emit(ok, f"{len(TOLERANT_ROWS) - len(bad)}/{len(TOLERANT_ROWS)} "
                 f"constructions within +-10% on every statistic; "
                 f"square_lattice(7,12) diameter {dia84} (want exactly 17)")
        assert not bad, "; ".join(bad)
        assert dia84 == 17


# ---------------------------------------------------------------------------
# Criterion 3: exact synthesis quality over Haar-random samples, under 5 min.
#   - 1000 samples: <=3 gates at fidelity >= 1-1e-9 in CNOT and sqrt-iSWAP
#   - SWAP costs exactly 3 gates in both bases
#   - 200 samples: <=4 Sycamore gates at fidelity >= 1-1e-8


def test_criterion_3_decomposition_correctness():
    with _verdict(3) as emit:
        t0 = time.perf_counter()
        worst = {"cnot": [0, 1.0], "sqrt-iswap": [0, 1.0]}
        for i in range(1000):
            u = G.haar_random_2q(i)
            for label, basis in (("cnot", G.CNOT), ("sqrt-iswap", G.SQISWAP)):
                r = D.decompose_exact(u, basis)
                worst[label][0] = max(worst[label][0], r.count)
                worst[label][1] = min(worst[label][1], r.decomp_fidelity)
        swap_m = G.gate_matrix(G.SWAP)
        swap_counts = {label: D.decompose_exact(swap_m, basis).count
                       for label, basis in (("cnot", G.CNOT),
                                            ("sqrt-iswap", G.SQISWAP))}
        syc_worst = [0, 1.0]
        for i in range(200):
            r = D.decompose_syc(G.haar_random_2q(5000 + i))
            syc_worst[0] = max(syc_worst[0], r.count)
            syc_worst[1] = min(syc_worst[1], r.decomp_fidelity)
        elapsed = time.perf_counter() - t0
        ok = (all(c <= 3 and f >= 1 - 1e-9 for c, f in worst.values())
              and all(c == 3 for c in swap_counts.values())
              and syc_worst[0] <= 4 and syc_worst[1] >= 1 - 1e-8
              and elapsed < 300.0)
        emit(ok, "1000 Haar samples: max count/min fidelity "
                 f"cnot {worst['cnot'][0]}/{worst['cnot'][1]:.12f}, "
                 f"sqrt-iswap {worst['sqrt-iswap'][0]}/"
                 f"{worst['sqrt-iswap'][1]:.12f}; SWAP counts "
                 f"{swap_counts['cnot']}/{swap_counts['sqrt-iswap']}; "
                 f"SYC max count {syc_worst[0]}, min fidelity "
                 f"{syc_worst[1]:.10f}; {elapsed:.0f}s (budget 300s)")
        for label, (count, fid) in worst.items():
            assert count <= 3, f"{label}: needed {count} gates"
            assert fid >= 1 - 1e-9, f"{label}: worst fidelity {fid!r}"
        assert swap_counts == {"cnot": 3, "sqrt-iswap": 3}
        assert syc_worst[0] <= 4 and syc_worst[1] >= 1 - 1e-8
        assert elapsed < 300.0, f"took {elapsed:.0f}s, budget is 300s"


# ---------------------------------------------------------------------------
# Criterion 4: over 1000 Haar samples, strictly more unitaries are reachable
# with at most two sqrt-iSWAP uses than with at most two CNOTs.


def test_criterion_4_two_use_advantage():
    with _verdict(4) as emit:
        n_cx = n_sq = 0
        for i in range(1000):
            co = G.weyl_coordinates(G.haar_random_2q(i))
            n_cx += D.cnot_count(co) <= 2
            n_sq += D.sqiswap_count(co) <= 2
        ok = n_sq > n_cx
        emit(ok, f"{n_sq}/1000 unitaries need <=2 sqrt-iSWAP uses vs "
                 f"{n_cx}/1000 needing <=2 CNOTs (strict inequality required)")
        assert n_sq > n_cx, (n_sq, n_cx)


# ---------------------------------------------------------------------------
# Criterion 5: the per-gate fidelity rule gives exactly 0.95 for a 90%
# fidelity full iSWAP split over two gates.


def test_criterion_5_gate_fidelity_arithmetic():
    with _verdict(5) as emit:
        got = D.gate_fidelity(0.90, 2)
        ok = got == 0.95
        emit(ok, f"gate_fidelity(0.90, 2) = {got!r} (want exactly 0.95)")
        assert got == 0.95


# ---------------------------------------------------------------------------
# Criterion 6: scaled root-fidelity study (50 Haar samples, f_iswap = 0.99,
# roots 2-5, counts up to 6), under 15 min.  Requirements, in the order
# asserted: deeper roots 3 and 4 beat the square root; improvement magnitudes
# within +-10 percentage points of 14/25/11; root 4 gives the largest
# improvement of {3, 4, 5}.  The ranking check is asserted last so the
# measurements and the other verdicts are reported before it can fail; see
# README (acceptance notes) for why it is expected to fail.


def test_criterion_6_root_fidelity_study():
    with _verdict(6) as emit:
        t0 = time.perf_counter()
        st = H.root_fidelity_study(50, f_iswap_values=(0.99,),
                                   roots=(2, 3, 4, 5), k_max=6, seed=0)
        elapsed = time.perf_counter() - t0
        inf = {n: st.curve(0.99, n).mean_total_infidelity for n in (2, 3, 4, 5)}
        imp = {n: st.curve(0.99, n).improvement_vs_sqrt * 100.0
               for n in (3, 4, 5)}
        targets = {3: 14.0, 4: 25.0, 5: 11.0}
        direction_ok = inf[3] < inf[2] and inf[4] < inf[2]
        magnitude_ok = all(abs(imp[n] - targets[n]) <= 10.0 for n in (3, 4, 5))
        ranking_ok = imp[4] > imp[3] and imp[4] > imp[5]
        ok = direction_ok and magnitude_ok and ranking_ok and elapsed < 900.0
        emit(ok, "mean total infidelity n=2..5: "
                 f"{inf[2]:.6f}/{inf[3]:.6f}/{inf[4]:.6f}/{inf[5]:.6f}; "
                 f"improvement vs sqrt: n=3 {imp[3]:+.1f}pp, "
                 f"n=4 {imp[4]:+.1f}pp, n=5 {imp[5]:+.1f}pp "
                 f"(targets 14/25/11, +-10pp); direction "
                 f"{'OK' if direction_ok else 'FAIL'}, magnitudes "
                 f"{'OK' if magnitude_ok else 'FAIL'}, ranking n=4 largest "
                 f"{'OK' if ranking_ok else 'FAIL'}; {elapsed:.0f}s "
                 f"(budget 900s)")
        assert direction_ok, f"roots 3/4 must beat the square root: {inf}"
        assert magnitude_ok, (
            f"improvements {imp} outside +-10pp of targets {targets}")
        assert elapsed < 900.0, f"took {elapsed:.0f}s, budget is 900s"
        assert ranking_ok, (
            "root 4 must give the largest improvement of {3, 4, 5}; measured "
            f"n=3 {imp[3]:+.2f}pp, n=4 {imp[4]:+.2f}pp, n=5 {imp[5]:+.2f}pp. "
            "Known shortfall: roughly 23% of Haar-random two-qubit unitaries "
            "admit an exact four-gate fifth-root synthesis, so at "
            "f_iswap = 0.99 the fifth root's mean total infidelity stays "
            "below the fourth root's under every optimizer setting tried; "
            "the reference ranking is not reproducible from the stated "
            "model alone. Direction and magnitudes above all pass. See "
            "README acceptance notes.")


# ---------------------------------------------------------------------------
# Criterion 7: end-to-end trend, under 30 min.  Quantum-volume circuits at
# widths 16-80, 10 routing seeds: heavy-hex + CNOT must cost at least 2.0x
# the total 2Q gates and 4.0x the duration-weighted critical path of the
# trimmed hypercube + sqrt-iSWAP, with at least 1.8x the inserted SWAPs and
# 3.5x the critical-path SWAPs, and the ordering must hold at every width.

QV_WIDTHS = (16, 32, 48, 64, 80)
RATIO_FLOORS = {"total_2q": 2.0, "weighted_duration": 4.0,
                "total_swaps": 1.8, "critical_swaps": 3.5}


def test_criterion_7_end_to_end_ratios(tmp_path):
    with _verdict(7) as emit:
        t0 = time.perf_counter()
        shared = dict(benchmarks=(BenchmarkSpec(Family.QV, 16, seed=0),),
                      widths=QV_WIDTHS, seeds=tuple(range(10)),
                      f_iswap=0.99, trials=10, synthesis="counts",
                      out_dir=str(tmp_path / "qv_suite"))
        recs = H.run_suite(H.ExperimentConfig(
            topologies=(("hypercube_trim", (7, 84)),),
            bases=(G.SQISWAP,), **shared))
        recs += H.run_suite(H.ExperimentConfig(
            topologies=(("heavy_hex", (84,)),),
            bases=(G.CNOT,), **shared))
        errors = [r.errors for r in recs if r.errors]
        assert not errors, errors[:5]

        sq, cx = H.basis_label(G.SQISWAP), H.basis_label(G.CNOT)
        by = {}
        for r in recs:
            by.setdefault((r.basis, r.width), []).append(r)

        def mean(metric, basis, width):
            rows = by[(basis, width)]
            return sum(getattr(r, metric) for r in rows) / len(rows)

        per_width = {m: [mean(m, cx, w) / mean(m, sq, w) for w in QV_WIDTHS]
                     for m in RATIO_FLOORS}
        means = {m: sum(v) / len(v) for m, v in per_width.items()}
        elapsed = time.perf_counter() - t0
        ordering_ok = all(r > 1.0 for rs in per_width.values() for r in rs)
        floors_ok = all(means[m] >= f for m, f in RATIO_FLOORS.items())
        ok = ordering_ok and floors_ok and elapsed < 1800.0
        emit(ok, "mean ratios heavy_hex+cnot / hypercube_trim+sqrt-iswap: "
                 + ", ".join(f"{m} {means[m]:.2f}x (floor {f})"
                             for m, f in RATIO_FLOORS.items())
                 + f"; ordering holds at all widths: "
                   f"{'yes' if ordering_ok else 'NO'}; {len(recs)} rows, "
                   f"{elapsed:.0f}s (budget 1800s)")
        for m, floor in RATIO_FLOORS.items():
            assert all(r > 1.0 for r in per_width[m]), (m, per_width[m])
            assert means[m] >= floor, (m, means[m], floor)
        assert elapsed < 1800.0, f"took {elapsed:.0f}s, budget is 1800s"


# ---------------------------------------------------------------------------
# Criterion 8: for 100 random width-3 circuits, routing plus translation on a
# path graph preserves the full unitary (modulo the layout permutations and a
# global phase) to within 1e-6 of direct matrix evaluation.

PATH3 = T.CouplingGraph(3, {(0, 1), (1, 2)}, name="path3")


def _alg(gate, qubits):
    return Instruction(gate, qubits, Origin.ALGORITHM)


def _random_width3(seed: int) -> Circuit:
    rng = np.random.default_rng(seed)
    pairs = [(0, 1), (1, 2), (0, 2), (2, 0), (1, 0)]
    ins = []
    for _ in range(6):
        if rng.random() < 0.3:
            q = int(rng.integers(0, 3))
            ins.append(_alg(G.u2(G.haar_random_unitary(2, rng)), (q,)))
        else:
            a, b = pairs[int(rng.integers(0, len(pairs)))]
            ins.append(_alg(G.u4(G.haar_random_unitary(4, rng)), (a, b)))
    return Circuit(3, ins)


def _layout_perm(layout: dict, n: int) -> np.ndarray:
    """Permutation matrix sending logical basis states to physical ones
    (qubit 0 is the most significant bit)."""
    p = np.zeros((2 ** n, 2 ** n))
    for s in range(2 ** n):
        t = 0
        for q in range(n):
            bit = (s >> (n - 1 - q)) & 1
            t |= bit << (n - 1 - layout[q])
        p[t, s] = 1.0
    return p


def test_criterion_8_routed_semantics_oracle():
    with _verdict(8) as emit:
        worst = 0.0
        for seed in range(100):
            c = _random_width3(seed)
            basis = G.CNOT if seed % 2 else G.SQISWAP
            rc = stochastic_route(c, PATH3, dense_layout(c, PATH3), seed=seed)
            translated, _ = basis_translate(rc, basis)
            pi = _layout_perm(rc.initial_layout, PATH3.n)
            pf = _layout_perm(rc.final_layout, PATH3.n)
            target = pf @ simulate(c) @ pi.T
            worst = max(worst, G.phase_distance(simulate(translated), target))
        ok = worst <= 1e-6
        emit(ok, "100/100 width-3 circuits match direct evaluation after "
                 f"route + translate on path(3); max phase distance "
                 f"{worst:.2e} (tol 1e-6)")
        assert worst <= 1e-6, f"worst phase distance {worst!r}"


# ---------------------------------------------------------------------------
# Criterion 9: repeating a sweep with an identical config yields byte-
# identical records (modulo the timing columns), including when the second
# run executes on a thread pool.


def _suite_cfg(out_dir) -> H.ExperimentConfig:
    return H.ExperimentConfig(
        topologies=(("square", (2, 3)),),
        benchmarks=(BenchmarkSpec(Family.QV, 4, seed=0),
                    BenchmarkSpec(Family.GHZ, 4)),
        widths=(3, 4),
        bases=(G.CNOT, G.SQISWAP),
        seeds=(0, 1),
        f_iswap=0.99,
        trials=5,
        synthesis="full",
        out_dir=str(out_dir),
    )


def _stripped_outputs(out_dir) -> tuple:
    """records.csv and records.jsonl re-serialized with the timing columns
    blanked, for byte comparison."""
    with open(out_dir / "records.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    timing_idx = [rows[0].index(c) for c in H.TIMING_COLUMNS]
    for row in rows[1:]:
        for i in timing_idx:
            row[i] = ""
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    lines = []
    with open(out_dir / "records.jsonl") as fh:
        for line in fh:
            d = json.loads(line)
            for c in H.TIMING_COLUMNS:
                d[c] = None
            lines.append(json.dumps(d, sort_keys=True))
    return buf.getvalue(), "\n".join(lines)


def test_criterion_9_determinism(tmp_path, monkeypatch):
    with _verdict(9) as emit:
        n_rows = len(H.run_suite(_suite_cfg(tmp_path / "a")))
        H.run_suite(_suite_cfg(tmp_path / "b"))
        with monkeypatch.context() as m:
            m.setenv("CODESIGN_THREADS", "2")
            H.run_suite(_suite_cfg(tmp_path / "c"))
        a = _stripped_outputs(tmp_path / "a")
        b = _stripped_outputs(tmp_path / "b")
        c = _stripped_outputs(tmp_path / "c")
        ok = a == b == c
        emit(ok, f"sequential rerun and 2-thread rerun byte-identical after "
                 f"masking timing columns ({n_rows} rows, full synthesis)")
        assert a == b, "sequential rerun differs"
        assert a == c, "parallel (2-thread) run differs"

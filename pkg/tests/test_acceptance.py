"""Acceptance gate.

Each test records one line in ``conftest.ACCEPTANCE``; the terminal summary
prints them as PASS/FAIL after the run. Corpus runs are shared per session.
"""

import logging
import time
from dataclasses import dataclass

import numpy as np
import pytest
from scipy.spatial import ConvexHull

from conftest import ACCEPTANCE
from oracles import enumerate_vertices, random_polytope, same_set
from relureach import jsonio
from relureach.cli import main as cli_main
from relureach.errors import RegionCapExceeded
from relureach.geometry import (
    AffineRegion,
    Polyhedron,
    UnionOfPolyhedra,
    lp_feasible,
    region_to_polyhedron,
    remove_redundancy,
    vertices_2d,
)
from relureach.netmodel import forward, random_network, save_network
from relureach.oracle import check_completeness, check_soundness, sample_input_set
from relureach.reach import default_jobs, export_reach, network_reach, relu_function_reach
from relureach.verify import SAFE, UNSAFE, check_reach_set, unsafe_from_infinity_ball, witness_is_valid

log = logging.getLogger(__name__)

pytestmark = pytest.mark.slow

DEEP_SIZES = [3, 7, 7, 7, 7, 7, 7, 7, 2]
CORPUS_SIZE = 10
REGION_CAP = 100_000
SOUNDNESS_TOL = 1e-6
COMPLETENESS_TOL = 1e-9
WITNESS_TOL = 1e-6
CUBE = UnionOfPolyhedra((Polyhedron.box([-1] * 3, [1] * 3),))


def record(n, title, ok, detail):
    ACCEPTANCE[n] = (title, bool(ok), detail)
    assert ok, detail


@dataclass
class CorpusRun:
    seed: int
    net: object
    reach: object
    stats: object
    seconds: float


@pytest.fixture(scope="session")
def corpus():
    runs, replaced = [], []
    seed = 0
    while len(runs) < CORPUS_SIZE:
        net = random_network(DEEP_SIZES, seed)
        t0 = time.perf_counter()
        try:
            Y, stats = network_reach(net, CUBE, mode="neuronwise", jobs=default_jobs(), region_cap=REGION_CAP)
        except RegionCapExceeded as exc:
            log.warning("seed %d replaced: %s", seed, exc)
            replaced.append(seed)
        else:
            runs.append(CorpusRun(seed, net, Y, stats, time.perf_counter() - t0))
            log.info("seed %d: %d regions in %.1fs", seed, len(Y), runs[-1].seconds)
        seed += 1
    return runs, replaced


@pytest.fixture(scope="session")
def grid():
    X = sample_input_set(CUBE, "grid", per_axis=20)
    assert X.shape == (8000, 3)
    return X


def test_criterion_1_soundness(corpus, grid):
    runs, replaced = corpus
    worst, failures = 0.0, 0
    for run in runs:
        report = check_soundness(run.net, run.reach, grid, tol=SOUNDNESS_TOL)
        failures += len(report.failures)
        worst = max(worst, report.max_residual)
    seeds = [r.seed for r in runs]
    record(1, "soundness on 8000-point grids", failures == 0 and worst <= SOUNDNESS_TOL,
           f"{len(runs)} nets (seeds {seeds}, replaced {replaced}), {failures} failures, "
           f"max residual {worst:.2e} (tol {SOUNDNESS_TOL:g})")


def test_criterion_2_completeness(corpus):
    runs, _ = corpus
    worst, bad, total = 0.0, 0, 0
    for run in runs:
        report = check_completeness(run.net, run.reach, tol=COMPLETENESS_TOL)
        worst = max(worst, report.max_residual)
        bad += len(report.failures)
        total += report.n_regions
    record(2, "completeness witnesses", bad == 0 and worst <= COMPLETENESS_TOL,
           f"{total} regions over {len(runs)} nets, {bad} failures, max residual {worst:.2e} "
           f"(tol {COMPLETENESS_TOL:g})")


def _small_instance(i):
    rng = np.random.default_rng(5000 + i)
    in_dim = 1 + i % 3
    hidden = [int(w) for w in rng.integers(1, 5, size=int(rng.integers(1, 4)))]
    out_dim = int(rng.integers(1, 4))
    net = random_network([in_dim] + hidden + [out_dim], seed=5000 + i)
    return net, UnionOfPolyhedra((Polyhedron.box([-1] * in_dim, [1] * in_dim),)), rng


def _union_members(U, Y, tol=1e-9):
    hit = np.zeros(len(Y), dtype=bool)
    for P in U.pieces:
        hit |= P.contains_many(Y, tol)
    return hit


def test_criterion_3_cross_mode(tmp_path):
    n_instances, mismatched, verdict_mismatch, unsound, bound_breaks = 60, 0, 0, 0, 0
    n_points = 0
    for i in range(n_instances):
        net, X0, rng = _small_instance(i)
        Yp, sp = network_reach(net, X0, mode="patterns")
        Yn, sn = network_reach(net, X0, mode="neuronwise")
        bound_breaks += not (_bound_ok(sp, net, 1) and _bound_ok(sn, net, 1))
        Up, Un = export_reach(Yp, "hrep"), export_reach(Yn, "hrep")
        members = forward(net, sample_input_set(X0, "uniform", n=5000, seed=i))
        spread = np.maximum(members.max(axis=0) - members.min(axis=0), 1e-3)
        perturbed = members + rng.normal(scale=0.1, size=members.shape) * spread
        Y = np.vstack([members, perturbed])
        n_points += len(Y)
        a, b = _union_members(Up, Y), _union_members(Un, Y)
        mismatched += int(np.sum(a != b))
        unsound += int(np.sum(~_union_members(Up, members, 1e-7)))
        specs = [unsafe_from_infinity_ball(members[int(rng.integers(len(members)))], 0.05 * float(spread.max())),
                 unsafe_from_infinity_ball(rng.uniform(members.min(axis=0) - 1, members.max(axis=0) + 1),
                                           float(rng.uniform(0.05, 0.5)))]
        for spec in specs:
            verdict_mismatch += check_reach_set(Yp, spec, net).status != check_reach_set(Yn, spec, net).status
    ok = n_instances >= 50 and mismatched == 0 and verdict_mismatch == 0 and unsound == 0 and bound_breaks == 0
    record(3, "patterns vs neuronwise equivalence", ok,
           f"{n_instances} nets, {n_points} outputs ({n_points // n_instances} per net): {mismatched} membership "
           f"mismatches, {verdict_mismatch} verdict mismatches, {unsound} sampled outputs outside the union")


def _bound_ok(stats, net, n0):
    bound = n0
    for count, layer in zip(stats.per_layer_counts, net.layers):
        if layer.activation == "relu":
            bound *= 2**layer.out_dim
        if count > bound:
            return False
    return stats.per_layer_bound == _bounds(net, n0)


def _bounds(net, n0):
    out, bound = [], n0
    for layer in net.layers:
        if layer.activation == "relu":
            bound *= 2**layer.out_dim
        out.append(bound)
    return out


def test_criterion_4_count_bound(corpus):
    runs, _ = corpus
    ok = all(_bound_ok(run.stats, run.net, len(CUBE)) for run in runs)
    counts = {run.seed: run.stats.per_layer_counts for run in runs}
    record(4, "per-layer region count bound", ok,
           f"all layers within N0*prod 2^n on {len(runs)} nets; final counts "
           f"{[c[-1] for c in counts.values()]}")


def test_criterion_5_box_decomposition():
    U = relu_function_reach(UnionOfPolyhedra((Polyhedron.box([-1, -1], [1, 1]),)))
    want = [
        Polyhedron(np.zeros((0, 2)), [], np.eye(2), [0, 0]),
        Polyhedron([[0, 1], [0, -1]], [1, 0], [[1, 0]], [0]),
        Polyhedron([[1, 0], [-1, 0]], [1, 0], [[0, 1]], [0]),
        Polyhedron.box([0, 0], [1, 1]),
    ]
    matches = [same_set(got, exp) for got, exp in zip(U.pieces, want)] if len(U) == 4 else []
    record(5, "2-D relu box gives origin, two axis segments and the unit square", len(U) == 4 and all(matches),
           f"{len(U)} pieces, mutual LP containment per piece: {matches}")


def test_criterion_6_verdicts(corpus, grid):
    runs, _ = corpus
    unsafe_ok = safe_ok = 0
    for run in runs:
        F = forward(run.net, grid)
        rng = np.random.default_rng(run.seed)
        near = unsafe_from_infinity_ball(F[int(rng.integers(len(F)))], 1.0)
        v = check_reach_set(run.reach, near, run.net)
        unsafe_ok += v.status == UNSAFE and witness_is_valid(run.net, CUBE, near, v, WITNESS_TOL)
        far = unsafe_from_infinity_ball(F.max(axis=0) + 2.0, 1.0)
        safe_ok += check_reach_set(run.reach, far, run.net).status == SAFE
    n = len(runs)
    record(6, "unsafe balls near and far from the outputs", unsafe_ok == n and safe_ok == n,
           f"UNSAFE with valid witness {unsafe_ok}/{n}; SAFE for ball 2 beyond the output box {safe_ok}/{n}")


def test_criterion_7_parallel_determinism(corpus, tmp_path, capsys):
    runs, _ = corpus
    largest = max(runs, key=lambda r: len(r.reach))
    net_path = tmp_path / "net.json"
    save_network(largest.net, net_path)
    cube = tmp_path / "cube.json"
    cube.write_text(jsonio.dumps(CUBE.to_json()))
    files, walls = {}, {}
    for jobs in (1, 4):
        out = tmp_path / f"reach_{jobs}.json"
        t0 = time.perf_counter()
        code = cli_main(["reach", str(net_path), str(cube), "--mode", "neuronwise", "--jobs", str(jobs),
                         "--out", str(out)])
        walls[jobs] = time.perf_counter() - t0
        capsys.readouterr()
        assert code == 0
        files[jobs] = out.read_bytes()
    identical = files[1] == files[4]
    faster = walls[4] <= walls[1]
    record(7, "jobs 1 vs 4: identical region files, 4 jobs no slower", identical and faster,
           f"seed {largest.seed} ({len(largest.reach)} regions): byte-identical={identical}; "
           f"wall 1 job {walls[1]:.1f}s, 4 jobs {walls[4]:.1f}s on {default_jobs()} available core(s)")


# -- criterion 8: geometry kernels against brute force -------------------------


def _lp_feasible_agrees(rng):
    dim = int(rng.integers(1, 4))
    A, b, E, f = random_polytope(rng, dim, int(rng.integers(1, 8)),
                                 feasible=[None, None, False][int(rng.integers(3))], with_eq=rng.random() < 0.25)
    out = lp_feasible(A, b, E, f)
    V = enumerate_vertices(A, b, E, f)
    if out.feasible != (len(V) > 0):
        return False
    return not out.feasible or Polyhedron(A, b, E, f).contains(out.witness, 1e-8)


def _same_vertices(V, W, tol=1e-7):
    if len(V) != len(W):
        return False
    return all(np.min(np.linalg.norm(W - v, axis=1)) <= tol for v in V)


def _remove_redundancy_agrees(rng):
    dim = int(rng.integers(1, 4))
    A, b, _, _ = random_polytope(rng, dim, int(rng.integers(2, 12)), feasible=True)
    R = remove_redundancy(Polyhedron(A, b))
    if not _same_vertices(enumerate_vertices(A, b), enumerate_vertices(R.A, R.b)):
        return False
    far_A = np.vstack([np.eye(dim), -np.eye(dim)])
    for i in range(R.n_ineq):
        rest = np.delete(np.arange(R.n_ineq), i)
        V = enumerate_vertices(np.vstack([R.A[rest], far_A]), np.concatenate([R.b[rest], np.full(2 * dim, 1e3)]))
        if np.max(V @ R.A[i] - R.b[i]) <= 1e-9:
            return False
    return True


def _image_agrees(rng):
    in_dim, out_dim = int(rng.integers(2, 4)), int(rng.integers(1, 3))
    A, b, _, _ = random_polytope(rng, in_dim, int(rng.integers(1, 6)), feasible=True)
    M, c = rng.normal(size=(out_dim, in_dim)), rng.normal(size=out_dim)
    img = region_to_polyhedron(AffineRegion(Polyhedron(A, b), M, c))
    mapped = enumerate_vertices(A, b) @ M.T + c
    if not img.contains_many(mapped, 1e-7).all():
        return False
    corners = enumerate_vertices(img.A, img.b, img.E, img.f)
    if out_dim == 1:
        return (abs(corners.min() - mapped.min()) <= 1e-7 and abs(corners.max() - mapped.max()) <= 1e-7)
    hull = ConvexHull(mapped)
    return bool(np.all(corners @ hull.equations[:, :-1].T + hull.equations[:, -1] <= 1e-7))


def _vertices_2d_agree(rng):
    A, b, _, _ = random_polytope(rng, 2, int(rng.integers(1, 9)), feasible=True)
    got = np.array(vertices_2d(Polyhedron(A, b)))
    V = enumerate_vertices(A, b)
    want = V[ConvexHull(V).vertices]
    if not _same_vertices(want, got):
        return False
    x, y = got[:, 0], got[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y) > 0


def test_criterion_8_geometry_micro_suite():
    checks = {"lp_feasible": _lp_feasible_agrees, "remove_redundancy": _remove_redundancy_agrees,
              "region_to_polyhedron": _image_agrees, "vertices_2d": _vertices_2d_agree}
    n = 500
    tally = {}
    for k, (name, check) in enumerate(checks.items()):
        rng = np.random.default_rng(8000 + k)
        tally[name] = sum(bool(check(rng)) for _ in range(n))
    record(8, "geometry kernels vs brute force", all(v == n for v in tally.values()),
           ", ".join(f"{name} {v}/{n}" for name, v in tally.items()))

import itertools
import math

import numpy as np
import pytest

from motionqubo import qubo as qb
from motionqubo.metrics import accuracy
from motionqubo.problem import MotionProblem, PartialSegmentation, bits_to_labels, labels_to_bits
from motionqubo.samplers import (AnnealParams, SampleSet, SolverGuardError, best_sample,
                                 brute_force, random_sampler, read_seeds, simulated_annealing,
                                 success_probability, temperature_schedule)
from motionqubo.synthetic import SyntheticConfig, generate

TWO_POINTS = MotionProblem(2, 2, (1, 1), (PartialSegmentation(0, 1, [[1]]),))


def random_qubo(rng, k):
    a = rng.integers(-5, 6, size=(k, k))
    return qb.QuboInstance((a + a.T).astype(float), rng.integers(-5, 6, size=k), float(rng.integers(-3, 4)))


def enumerate_energies(q):
    """Independent exhaustive oracle: plain loop over all bitstrings in lexicographic order."""
    out = []
    for bits in itertools.product((0, 1), repeat=q.k):
        y = np.array(bits, dtype=float)
        out.append((float(y @ q.quadratic @ y + q.linear @ y + q.offset), bits))
    return out


def test_brute_force_separable_diagonal():
    q = qb.QuboInstance(np.diag([-1.0, 1.0, -1.0, 1.0]), np.zeros(4))
    ss = brute_force(q)
    assert best_sample(ss).tolist() == [1, 0, 1, 0]
    assert ss.energies[0] == -2.0
    assert len(ss) == 16 and ss.total == 16


def test_brute_force_two_point_v1():
    q = qb.build_v1(TWO_POINTS, 14.0)
    table = enumerate_energies(q)
    e_min = min(e for e, _ in table)
    argmin = sorted(b for e, b in table if abs(e - e_min) <= 1e-9)
    assert e_min == -2.0 and argmin == [(0, 0, 1, 1), (1, 1, 0, 0)]
    ss = brute_force(q)
    assert ss.energies[0] == e_min
    assert tuple(best_sample(ss).tolist()) == argmin[0]
    assert bits_to_labels(best_sample(ss), TWO_POINTS)


def test_brute_force_size_guard():
    q = qb.QuboInstance(np.zeros((27, 27)), np.zeros(27))
    with pytest.raises(SolverGuardError):
        brute_force(q)


@pytest.mark.parametrize("k", [1, 5, 9])
def test_brute_force_matches_enumeration(k):
    rng = np.random.default_rng(k)
    q = random_qubo(rng, k)
    table = sorted(enumerate_energies(q), key=lambda t: (round(t[0], 9), t[1]))
    ss = brute_force(q)
    assert [tuple(b.tolist()) for b in ss.bits] == [b for _, b in table]
    np.testing.assert_allclose(ss.energies, [e for e, _ in table], atol=1e-9)
    top = brute_force(q, keep=5, chunk_bits=2)
    assert np.array_equal(top.bits, ss.bits[:5])


def test_sampleset_invariants():
    rng = np.random.default_rng(0)
    q = random_qubo(rng, 8)
    for ss in (simulated_annealing(q, AnnealParams(reads=200, seed=1)), random_sampler(q, 300, 2)):
        np.testing.assert_allclose(ss.energies, [qb.energy(q, b) for b in ss.bits], atol=1e-9)
        assert (ss.counts >= 1).all() and ss.total == ss.reads
        keys = [(round(e, 9), tuple(b.tolist())) for b, e in zip(ss.bits, ss.energies)]
        assert keys == sorted(keys)
        assert len({tuple(b.tolist()) for b in ss.bits}) == len(ss)


def test_sa_determinism_and_default_reads():
    assert AnnealParams().reads == 1000
    q = random_qubo(np.random.default_rng(1), 10)
    a = simulated_annealing(q, AnnealParams(reads=50, seed=9))
    b = simulated_annealing(q, AnnealParams(reads=50, seed=9))
    assert np.array_equal(a.bits, b.bits) and np.array_equal(a.counts, b.counts)
    c = simulated_annealing(q, AnnealParams(reads=50, seed=10))
    assert a.seed == 9 and c.seed == 10


def test_sa_read_seeds_are_prefix_stable():
    assert np.array_equal(read_seeds(4, 10), read_seeds(4, 30)[:10])


def test_sa_best_energy_non_increasing_in_reads():
    rng = np.random.default_rng(11)
    q = random_qubo(rng, 14)
    prev = math.inf
    for reads in (1, 3, 10, 30, 100):
        e = simulated_annealing(q, AnnealParams(reads=reads, sweeps=4, seed=3)).energies[0]
        assert e <= prev + 1e-9
        prev = e


def test_sa_zero_temperature_is_greedy_descent():
    rng = np.random.default_rng(12)
    q = random_qubo(rng, 12)
    params = AnnealParams(reads=20, seed=5, schedule=(0.0,))
    ss = simulated_annealing(q, params)
    finals = []
    Q, h = q.quadratic, q.linear
    for s in read_seeds(5, 20):
        # the kernel draws k uniforms for the start state and none at zero temperature
        x = (np.random.RandomState(s).random_sample(q.k) < 0.5).astype(float)
        for t in range(q.k):
            sgn = 1.0 - 2.0 * x[t]
            if sgn * (2.0 * Q[t] @ x + h[t]) + Q[t, t] <= 0.0:
                x[t] += sgn
        finals.append(tuple(x.astype(int).tolist()))
    got = {tuple(b.tolist()): c for b, c in zip(ss.bits, ss.counts)}
    want = {}
    for f in finals:
        want[f] = want.get(f, 0) + 1
    assert got == want


def test_sa_finds_brute_force_minimum_on_small_qubos():
    rng = np.random.default_rng(13)
    hits = 0
    for i in range(50):
        q = random_qubo(rng, int(rng.integers(4, 13)))
        e_min = brute_force(q, keep=1).energies[0]
        e_sa = simulated_annealing(q, AnnealParams(reads=200, seed=i)).energies[0]
        assert e_sa >= e_min - 1e-9
        hits += abs(e_sa - e_min) <= 1e-9
    assert hits >= 48


def test_temperature_schedule_auto():
    q = random_qubo(np.random.default_rng(14), 10)
    temps = temperature_schedule(q, AnnealParams(sweeps=8, seed=0))
    assert len(temps) == 8 and temps[0] >= temps[-1] > 0
    ratios = temps[1:] / temps[:-1]
    np.testing.assert_allclose(ratios, ratios[0])
    fixed = temperature_schedule(q, AnnealParams(sweeps=3, initial_temp=4.0, final_temp=1.0))
    np.testing.assert_allclose(fixed, [4.0, 2.0, 1.0])


@pytest.mark.parametrize("kw", [
    dict(reads=0), dict(sweeps=0), dict(initial_temp=-1.0), dict(initial_temp=1.0, final_temp=2.0),
    dict(schedule=()), dict(schedule=(1.0, 2.0)), dict(schedule=(-1.0,)),
])
def test_anneal_params_validation(kw):
    with pytest.raises(ValueError):
        AnnealParams(**kw)


def test_random_sampler_accuracy_near_half():
    pr = generate(SyntheticConfig(n=3, d=2, points=16, seed=4))
    q = qb.build_v1(pr)
    ss = random_sampler(q, 2000, seed=1)
    y_gt = labels_to_bits(pr.ground_truth, 2)
    accs = np.array([accuracy(b, y_gt, 2, pr.p) for b in ss.bits])
    mean = float((accs * ss.counts).sum() / ss.total)
    assert abs(mean - 0.5) <= 0.05
    np.testing.assert_allclose(ss.energies, [qb.energy(q, b) for b in ss.bits], atol=1e-9)
    again = random_sampler(q, 2000, seed=1)
    assert np.array_equal(again.bits, ss.bits)


def test_best_sample_rules():
    q = qb.QuboInstance(np.zeros((2, 2)), np.array([0.0, 0.0]))
    single = SampleSet.from_reads([[1, 0]], q)
    assert best_sample(single).tolist() == [1, 0]
    tie = SampleSet.from_reads([[1, 0], [0, 1]], q)
    assert best_sample(tie).tolist() == [0, 1]
    assert np.array_equal(best_sample(tie), tie.bits[0])
    empty = SampleSet(np.zeros((0, 2), dtype=np.uint8), np.zeros(0), np.zeros(0, dtype=int))
    with pytest.raises(ValueError):
        best_sample(empty)


def test_success_probability():
    q = random_qubo(np.random.default_rng(15), 6)
    ss = brute_force(q)
    assert success_probability(ss, ss.energies[0] - 1.0) == 0.0
    assert success_probability(ss, ss.energies[-1]) == 1.0
    unique = qb.QuboInstance(np.diag([-1.0, 1.0, -1.0]), np.zeros(3))
    assert success_probability(brute_force(unique), -2.0) == 1 / 8
    sa = simulated_annealing(q, AnnealParams(reads=100, seed=0))
    sp = success_probability(sa, ss.energies[0])
    assert sp == sa.counts[np.abs(sa.energies - ss.energies[0]) <= 1e-9].sum() / 100


def test_sampleset_json(tmp_path):
    q = random_qubo(np.random.default_rng(16), 5)
    ss = simulated_annealing(q, AnnealParams(reads=30, seed=2))
    data = ss.to_dict()
    assert data["solver"] == "sa" and data["seed"] == 2
    assert data["samples"][0]["y"] == "".join(str(v) for v in ss.bits[0])
    ss.save(tmp_path / "s.json")
    back = SampleSet.load(tmp_path / "s.json")
    assert np.array_equal(back.bits, ss.bits) and np.array_equal(back.counts, ss.counts)
    np.testing.assert_allclose(back.energies, ss.energies)

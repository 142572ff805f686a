from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from motionqubo.problem import ProblemError, all_motion_counts, consistency_error, relative_from_absolute
from motionqubo.synthetic import SyntheticConfig, generate, generate_ground_truth, inject_noise


def test_standard_configuration_noiseless():
    pr = generate_ground_truth(SyntheticConfig(n=3, d=2, points=16, seed=0))
    assert pr.k == 96 and len(pr.edges) == 3
    assert consistency_error(pr, pr.ground_truth) == 0
    assert generate_ground_truth(SyntheticConfig(n=4, d=2, points=16)).k == 128


def test_single_motion_blocks_all_ones():
    pr = generate_ground_truth(SyntheticConfig(n=3, d=1, points=(2, 3, 4)))
    assert all(e.z.all() for e in pr.edges)


def test_seed_determinism():
    cfg = SyntheticConfig(n=3, d=3, points=5, noise=0.3, seed=11)
    assert generate(cfg, 2) == generate(cfg, 2)
    assert generate(cfg, 2) != generate(cfg, 3)


def test_explicit_motion_counts():
    cfg = SyntheticConfig(n=3, d=2, motion_counts=((8, 8), (8, 9), (10, 0)))
    pr = generate_ground_truth(cfg)
    assert pr.point_counts == (16, 17, 10)
    assert all_motion_counts(pr.ground_truth, 2).tolist() == [[8, 8], [8, 9], [10, 0]]
    with pytest.raises(ProblemError):
        generate_ground_truth(SyntheticConfig(n=1, d=3, motion_counts=((1, 1),)))


def test_path_graph_and_explicit_edges():
    assert [(e.i, e.j) for e in generate(SyntheticConfig(n=4, complete=False)).edges] == [
        (0, 1), (1, 2), (2, 3)]
    assert [(e.i, e.j) for e in generate(SyntheticConfig(n=4, edges=((2, 3), (0, 2)))).edges] == [
        (0, 2), (2, 3)]


def test_zero_noise_identity():
    pr = generate_ground_truth(SyntheticConfig(n=3, d=2, points=6, seed=1))
    assert inject_noise(pr, 0.0, seed=5) == pr


def _local_flips(pr, noisy, e_idx):
    """Smallest number of local relabelings explaining a noisy block (d=2, by enumeration)."""
    e = noisy.edges[e_idx]
    gi, gj = pr.ground_truth.labels[e.i], pr.ground_truth.labels[e.j]
    joint = np.concatenate([gi, gj])
    best = None
    for li in product((0, 1), repeat=len(gi)):
        li = np.array(li)
        for lj in product((0, 1), repeat=len(gj)):
            lj = np.array(lj)
            if np.array_equal((li[:, None] == lj[None, :]).astype(int), e.z):
                flips = int(np.sum(np.concatenate([li, lj]) != joint))
                best = flips if best is None else min(best, flips)
    return best


def test_half_noise_corrupts_exactly_half():
    # 3 + 3 points per edge at rho = 0.5 -> 3 local labels switched per edge
    pr = generate_ground_truth(SyntheticConfig(n=2, d=2, points=3, seed=2))
    for seed in range(10):
        noisy = inject_noise(pr, 0.5, seed)
        assert _local_flips(pr, noisy, 0) == 3


def test_sixteen_point_half_noise_count():
    # with d=2 every chosen label is flipped; exactly 16 of 32 differ from the ground truth
    pr = generate_ground_truth(SyntheticConfig(n=2, d=2, points=16, seed=3))
    rng_pr = inject_noise(pr, 0.5, seed=1)
    from motionqubo.synthetic import _corrupt, _rng
    rng = _rng(1, 1, 0, 1)
    joint = np.concatenate(pr.ground_truth.labels)
    corrupted = _corrupt(joint, 16, 2, rng)
    assert np.count_nonzero(corrupted != joint) == 16
    li, lj = corrupted[:16], corrupted[16:]
    assert np.array_equal(rng_pr.edges[0].z, (li[:, None] == lj[None, :]).astype(int))


@given(st.floats(0, 1), st.integers(2, 4), st.integers(0, 1000))
@settings(max_examples=40)
def test_corruption_count_and_changed_motion(rho, d, seed):
    from motionqubo.synthetic import _corrupt, _count, _rng
    labels = np.arange(12) % d
    out = _corrupt(labels, _count(rho, 12), d, _rng(seed, 1))
    assert np.count_nonzero(out != labels) == int(np.floor(rho * 12 + 1e-9))
    assert out.min() >= 0 and out.max() < d


def test_edges_independent_under_reseeding():
    pr = generate_ground_truth(SyntheticConfig(n=3, d=3, points=5, seed=4))
    a, b = inject_noise(pr, 0.4, seed=1), inject_noise(pr, 0.4, seed=1)
    assert a == b
    # corrupting a subgraph yields the same blocks on the shared edges
    sub = pr.with_edges(pr.edges[1:])
    c = inject_noise(sub, 0.4, seed=1)
    assert c.edges == a.edges[1:]
    assert a.ground_truth == pr.ground_truth


def test_noise_one_side():
    pr = generate_ground_truth(SyntheticConfig(n=2, d=2, points=4, seed=5))
    noisy = inject_noise(pr, 0.5, seed=0, side="one")
    gi = pr.ground_truth.labels[0]
    z = noisy.edges[0].z
    # image i is untouched, so rows of Z still follow its true labels
    lj = np.where(z[0] == 1, gi[0], 1 - gi[0])
    assert np.count_nonzero(lj != pr.ground_truth.labels[1]) == 2
    assert np.array_equal(z, relative_from_absolute(pr.ground_truth.__class__((gi, lj)), 0, 1))


def test_noise_errors():
    pr = generate_ground_truth(SyntheticConfig(n=2, d=2, points=2))
    with pytest.raises(ProblemError):
        inject_noise(pr.__class__(2, 2, (2, 2), pr.edges), 0.1, 0)
    with pytest.raises(ProblemError):
        inject_noise(pr, 1.5, 0)
    with pytest.raises(ProblemError):
        SyntheticConfig(noise=-0.1)

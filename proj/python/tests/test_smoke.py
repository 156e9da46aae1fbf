import numpy as np
import pytest

import mflab


def test_wasserstein_matches_permutation_minimum():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(5, 2))
    y = rng.normal(size=(5, 2))
    from itertools import permutations

    best = min(np.mean(np.sum((x - y[list(s)]) ** 2, axis=1)) for s in permutations(range(5)))
    dist, plan = mflab.wasserstein_exact(x, y, 2.0)
    assert dist**2 == pytest.approx(best, abs=1e-12)
    assert sum(m for _, _, m in plan) == pytest.approx(1.0)


def test_weighted_dirac():
    dist, _ = mflab.wasserstein_exact(np.array([[0.0]]), np.array([[3.0]]), 1.0)
    assert dist == pytest.approx(3.0)


def test_validate_reports_problems():
    assert mflab.validate({"experiment": "ot-selftest", "instances": 2}) == []
    diags = mflab.validate({"experiment": "no-such-thing"})
    assert diags and "experiment" in diags[0]
    with pytest.raises(mflab.ConfigError):
        mflab.run({"experiment": "ot-selftest", "instances": -1}, "unused", write_files=False)


def test_run_ot_selftest(tmp_path):
    code, reports = mflab.run({"experiment": "ot-selftest", "instances": 3, "max_cloud": 4}, tmp_path, seed=2)
    assert code == 0
    assert reports and all(r["pass"] for r in reports)
    assert (tmp_path / "reports.jsonl").exists()


def test_counting_and_constants():
    assert mflab.count_S_Np_enumerated(3, 2) == 6
    assert mflab.combineq_rhs(1.0, 2.0, 4) > 0.0
    assert mflab.classical_rhs(1.0, 1.0, 2.0, 16, 1, 0.0) == 0.0

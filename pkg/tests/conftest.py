import numpy as np
import pytest
import scipy.sparse as sp

from tempo import TemporalNetwork, frame_adjacency


def random_network(rng, n, N, density=0.4, weights=(1, 2), loops=False, reciprocal=False, real=False):
    """Random temporal network; integer weights drawn from ``weights`` unless ``real``."""
    frames = []
    for _ in range(N):
        mask = rng.random((n, n)) < density
        if not loops:
            np.fill_diagonal(mask, False)
        if real:
            w = rng.uniform(0.1, 1.0, (n, n))
        else:
            w = rng.choice(np.asarray(weights, dtype=float), size=(n, n))
        frames.append(np.where(mask, w, 0.0))
    if reciprocal and n >= 2:
        f = int(rng.integers(N))
        i, j = rng.choice(n, size=2, replace=False)
        frames[f][i, j] = frames[f][i, j] or float(weights[-1])
        frames[f][j, i] = frames[f][j, i] or float(weights[-1])
    return TemporalNetwork.from_matrices([sp.csr_matrix(F) for F in frames])


def dense_frames(net):
    return [frame_adjacency(net, s).toarray() for s in range(1, net.N + 1)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# -- per-criterion summary for the acceptance suite ------------------------------------

CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number k")
    config.stash[CRITERIA] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.failed or rep.skipped):
        return
    item.config.stash[CRITERIA].setdefault(mark.args[0], []).append((item.name, rep.outcome))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(CRITERIA, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        outcomes = [o for _, o in results[k]]
        ok = all(o == "passed" for o in outcomes)
        bad = [name for name, o in results[k] if o != "passed"]
        detail = f"{outcomes.count('passed')}/{len(outcomes)} checks passed"
        if bad:
            detail += "; failing: " + ", ".join(bad)
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'} ({detail})")

import numpy as np
import pytest

from vpsep import synth_dataset


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    """Small but realistic train/test corpus shared by pipeline-level tests."""
    root = tmp_path_factory.mktemp("corpus")
    return synth_dataset(root, seed=11, n_train=2, n_test=2, duration_s=1.2)


def central_diff(f, planes, eps=1e-6):
    """Central finite differences of scalar f over a list of arrays."""
    grads = []
    for plane in planes:
        g = np.zeros_like(plane)
        it = np.nditer(plane, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = plane[idx]
            plane[idx] = orig + eps
            f_plus = f()
            plane[idx] = orig - eps
            f_minus = f()
            plane[idx] = orig
            g[idx] = (f_plus - f_minus) / (2 * eps)
        grads.append(g)
    return grads


def max_rel_grad_err(analytic, numeric, floor_scale=1e-3):
    """Worst relative disagreement; denominator floored by a fraction of the
    largest gradient magnitude so near-zero entries do not amplify noise."""
    gmax = max(max(np.max(np.abs(a)) for a in analytic),
               max(np.max(np.abs(n)) for n in numeric))
    worst = 0.0
    for a, n in zip(analytic, numeric):
        den = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor_scale * gmax)
        worst = max(worst, float(np.max(np.abs(a - n) / den)))
    return worst


@pytest.fixture(scope="session")
def grad_tools():
    return central_diff, max_rel_grad_err

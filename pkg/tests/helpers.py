"""Shared fixture builders and brute-force oracles for the test suite."""

import math

import numpy as np

from trifolio.autoencoder import AutoencoderModel, backward, forward, mse_loss
from trifolio.hrp import DistanceMatrix, correlation_distance
from trifolio.market_data import CovarianceMatrix, PricePanel, correlation_matrix

# Settings for the synthetic low-rank panel: chosen (with the model seed
# used by the tests) so that no code unit goes dead during training and the
# loss target is met with a wide margin.
RANK5_ROWS = 250
RANK5_DATA_SEED = 123
RANK5_MODEL_SEED = 0


def rank5_panel(rows: int = RANK5_ROWS, data_seed: int = RANK5_DATA_SEED) -> PricePanel:
    """10-column price panel spanned by 5 non-negative latent factors.

    Each column is a linear mix of the factors (one dominant factor per
    column plus small cross-loadings) shifted into positive price range, so
    a 5-code autoencoder with a linear decoder can represent it exactly.
    """
    rng = np.random.default_rng(data_seed)
    latent = rng.uniform(0.2, 1.0, size=(rows, 5))
    mix = rng.uniform(0.0, 0.1, size=(10, 5))
    for i in range(10):
        mix[i, i % 5] = rng.uniform(0.6, 0.9)
    prices = latent @ mix.T + 0.05
    return PricePanel(
        tickers=tuple(f"S{i}" for i in range(10)),
        dates=tuple(date_seq(rows)),
        prices=prices,
    )


def date_seq(rows: int) -> list[str]:
    """ISO-like strictly increasing date strings, enough for any test size."""
    out = []
    for i in range(rows):
        year = 2000 + i // 372
        month = 1 + (i % 372) // 31
        day = 1 + (i % 372) % 31
        out.append(f"{year:04d}-{month:02d}-{day:02d}")
    return out


def naive_ward(d: np.ndarray):
    """Ward merges computed from first principles, no distance recursion.

    The ward squared distance between clusters A and B is
    2|A||B|/(|A|+|B|) times the squared gap between their centroids, and the
    centroid gap can be written purely in terms of the original pairwise
    squared distances.  Recomputing it for every active pair at every step
    is O(N^3)-ish but independent of the production code path.
    """
    n = d.shape[0]
    d2 = d.astype(float) ** 2
    members = {i: (i,) for i in range(n)}
    centrality = [math.fsum(float(v) ** 2 for v in d[i]) for i in range(n)]
    heights = {}

    def order_key(node):
        if node < n:
            return (0.0, 0, centrality[node], node)
        return (heights[node], 1, 0.0, node)

    def within(ms):
        return sum(d2[x, y] for k, x in enumerate(ms) for y in ms[k + 1 :]) / len(ms)

    def ward_d2(a, b):
        na, nb = len(a), len(b)
        s_ab = sum(d2[x, y] for x in a for y in b)
        centroid_gap = (s_ab - nb * within(a) - na * within(b)) / (na * nb)
        return 2.0 * na * nb / (na + nb) * centroid_gap

    merges = []
    for step in range(n - 1):
        ids = sorted(members)
        best = None
        for ai in range(len(ids)):
            for bi in range(ai + 1, len(ids)):
                i, j = ids[ai], ids[bi]
                key = (ward_d2(members[i], members[j]), i, j)
                if best is None or key < best:
                    best = key
        v, i, j = best
        h = math.sqrt(max(v, 0.0))
        heights[n + step] = h
        left, right = sorted((i, j), key=order_key)
        merges.append((left, right, h, len(members[i]) + len(members[j])))
        members[n + step] = members.pop(i) + members.pop(j)
    return merges


def naive_bisection(cov_mat: np.ndarray, order) -> np.ndarray:
    """Recursive-definition bisection, structured unlike the iterative one."""
    out = {}

    def block_variance(items):
        sub = cov_mat[np.ix_(items, items)]
        inv = 1.0 / np.diag(sub)
        w = inv / inv.sum()
        return float(w @ sub @ w)

    def rec(items, mult):
        if len(items) == 1:
            out[items[0]] = mult
            return
        mid = -(-len(items) // 2)
        left, right = list(items[:mid]), list(items[mid:])
        alpha = 1.0 - block_variance(left) / (block_variance(left) + block_variance(right))
        rec(left, mult * alpha)
        rec(right, mult * (1.0 - alpha))

    rec(list(order), 1.0)
    return np.array([out[i] for i in range(len(order))])


def random_cov(rng, n, t=40) -> CovarianceMatrix:
    data = rng.normal(0, 0.02, size=(t, n)) + rng.normal(0, 0.01, size=(t, 1))
    cov = np.cov(data, rowvar=False, ddof=1)
    cov = (np.atleast_2d(cov) + np.atleast_2d(cov).T) / 2
    return CovarianceMatrix(tickers=tuple(f"S{i}" for i in range(n)), matrix=cov)


def distance_of(cov: CovarianceMatrix) -> DistanceMatrix:
    return correlation_distance(correlation_matrix(cov))


def max_fd_error(model: AutoencoderModel, batch: np.ndarray, h: float = 1e-5) -> float:
    """Worst relative error between analytic and central-difference grads."""
    grads = backward(model, batch)
    names = ("w1", "b1", "w2", "b2")

    def loss_with(name, flat_index, delta):
        params = {k: np.array(getattr(model, k)) for k in names}
        params[name].flat[flat_index] += delta
        moved = AutoencoderModel(**params)
        _, xhat = forward(moved, batch)
        return mse_loss(batch, xhat)

    worst = 0.0
    for name in names:
        analytic = getattr(grads, name)
        for idx in range(analytic.size):
            fd = (loss_with(name, idx, h) - loss_with(name, idx, -h)) / (2 * h)
            a = analytic.flat[idx]
            err = abs(a - fd) / max(abs(a), abs(fd), 1e-7)
            worst = max(worst, err)
    return worst


def small_panel(rows=120, n=4, seed=5):
    """Compact synthetic panel spanning a 2020 train / 2021 test split."""
    rng = np.random.Generator(np.random.PCG64(seed))
    start = rng.uniform(50.0, 500.0, size=n)
    steps = rng.normal(0.0005, 0.01, size=(rows - 1, n))
    prices = np.vstack([start, start * np.exp(np.cumsum(steps, axis=0))])
    year_one = (rows * 2) // 3
    dates = []
    for i in range(rows):
        if i < year_one:
            year, k = 2020, i
        else:
            year, k = 2021, i - year_one
        dates.append(f"{year}-{k // 28 + 1:02d}-{k % 28 + 1:02d}")
    return PricePanel(
        tickers=tuple(f"T{i}" for i in range(n)),
        dates=tuple(dates),
        prices=np.round(prices, 2),
    )

"""Linearly separable Gaussian datasets and their JSON serialization.

Random numbers come from numpy's PCG64 bit generator (platform independent
for a given seed). Normals are drawn with the Box-Muller transform applied
to PCG64 uniforms, so the stream does not depend on numpy's internal
normal sampler.
"""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DatasetFormatError, InvalidInputError

#: Samples with |<w*, x>| below this are redrawn.
SEPARATION_TOL = 1e-6


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """``n`` labeled points in ``R^d``.

    ``features`` is ``(n, d)``; ``labels`` holds +-1. ``ground_truth`` (if
    present) is the separator the labels were generated from.
    """

    features: np.ndarray
    labels: np.ndarray
    seed: int = 0
    ground_truth: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        x = _frozen(self.features)
        if x.ndim != 2 or x.shape[0] == 0 or x.shape[1] == 0:
            raise InvalidInputError(f"features must be a nonempty (n, d) matrix, got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise InvalidInputError("features contain non-finite values")
        y = _frozen(self.labels)
        if y.shape != (x.shape[0],):
            raise InvalidInputError("labels must have one entry per row of features")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise InvalidInputError("labels must be +1 or -1")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        if self.ground_truth is not None:
            gt = _frozen(self.ground_truth)
            if gt.shape != (x.shape[1],):
                raise InvalidInputError("ground_truth must have length d")
            object.__setattr__(self, "ground_truth", gt)

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]

    @property
    def signed_features(self):
        """Rows ``y_i x_i``; constraints of the min-norm problem read ``A w >= 1``."""
        return self.labels[:, None] * self.features

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        gt_equal = (self.ground_truth is None and other.ground_truth is None) or (
            self.ground_truth is not None
            and other.ground_truth is not None
            and np.array_equal(self.ground_truth, other.ground_truth)
        )
        return (
            self.seed == other.seed
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
            and gt_equal
        )


def standard_normal(rng, size):
    """Box-Muller normals from a :class:`numpy.random.Generator`'s uniforms."""
    m = (size + 1) // 2
    u1 = 1.0 - rng.random(m)  # in (0, 1], keeps log finite
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
    return z[:size]


def generate(d, n, seed=0):
    """Sample ``n`` points from N(0, I_d) labeled by a random Gaussian separator."""
    if d < 1 or n < 1:
        raise InvalidInputError(f"need d >= 1 and n >= 1, got d={d}, n={n}")
    if seed < 0:
        raise InvalidInputError("seed must be nonnegative")
    rng = np.random.Generator(np.random.PCG64(seed))
    w_star = standard_normal(rng, d)
    x = standard_normal(rng, n * d).reshape(n, d)
    scores = x @ w_star
    bad = np.abs(scores) < SEPARATION_TOL
    while np.any(bad):
        x[bad] = standard_normal(rng, int(bad.sum()) * d).reshape(-1, d)
        scores = x @ w_star
        bad = np.abs(scores) < SEPARATION_TOL
    y = np.where(scores > 0, 1.0, -1.0)
    return Dataset(x, y, seed=int(seed), ground_truth=w_star)


def augment(ds):
    """Append a constant-1 feature so a bias can be learned as a weight."""
    ones = np.ones((ds.n, 1))
    gt = None if ds.ground_truth is None else np.append(ds.ground_truth, 0.0)
    meta = dict(ds.meta, augmented_bias=True)
    return Dataset(np.hstack([ds.features, ones]), ds.labels, ds.seed, gt, meta)


def is_separated_by(ds, w):
    """True iff ``y_i <w, x_i> > 0`` for every sample."""
    w = np.asarray(w, dtype=float)
    if w.shape != (ds.d,):
        raise InvalidInputError(f"w has shape {w.shape}, dataset has d={ds.d}")
    return bool(np.all(ds.labels * (ds.features @ w) > 0))


def to_dict(ds):
    return {
        "d": ds.d,
        "n": ds.n,
        "seed": ds.seed,
        "features": ds.features.tolist(),
        "labels": [int(v) for v in ds.labels],
        "ground_truth": None if ds.ground_truth is None else ds.ground_truth.tolist(),
    }


def from_dict(doc):
    try:
        d, n = int(doc["d"]), int(doc["n"])
        feats = np.asarray(doc["features"], dtype=float)
        labels = np.asarray(doc["labels"], dtype=float)
        gt = doc.get("ground_truth")
        seed = int(doc["seed"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetFormatError(f"malformed dataset document: {exc}") from exc
    if feats.shape != (n, d):
        raise DatasetFormatError(f"features shape {feats.shape} does not match (n, d) = ({n}, {d})")
    try:
        return Dataset(feats, labels, seed, None if gt is None else np.asarray(gt, dtype=float))
    except InvalidInputError as exc:
        raise DatasetFormatError(str(exc)) from exc


def save(ds, path):
    """Write ``ds`` as JSON. Floats use ``repr``, which round-trips exactly."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_dict(ds)))
    return path


def load(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"{path}: not valid JSON ({exc})") from exc
    return from_dict(doc)

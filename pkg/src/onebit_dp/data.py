"""Synthetic ground truth, one-bit sampling, and real rating datasets.

Real datasets are read from local files only:

* MovieLens-100K ``u.data``-style files: tab separated
  ``user<TAB>item<TAB>rating<TAB>timestamp`` with 1-based integer ids.
* RC (restaurant & consumer) ``rating_final.csv``-style files: comma
  separated with a header naming user, place and rating columns.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .likelihood import ObservationSet
from .links import LinkModel
from .privacy import _gen

__all__ = [
    "GroundTruth",
    "RatingsTable",
    "DataError",
    "gen_synthetic",
    "sample_observations",
    "load_movielens",
    "load_movielens_split",
    "binarize_mean_threshold",
    "load_rc",
    "binarize_rc",
    "save_matrix",
    "load_matrix",
]


class DataError(ValueError):
    """Malformed or missing rating data."""


@dataclass(frozen=True, eq=False)
class GroundTruth:
    M: np.ndarray
    rank: int
    alpha: float

    @property
    def shape(self):
        return self.M.shape


def gen_synthetic(d1: int, d2: int, r: int, alpha: float, rng, scaling: str = "max") -> GroundTruth:
    """Random rank-``r`` matrix ``M1 @ M2.T`` with uniform [-1/2, 1/2] factors.

    ``scaling="max"`` divides by the largest entry, so the maximum entry
    equals ``alpha``. ``scaling="abs_max"`` divides by the largest absolute
    entry, which guarantees ``||M||_inf == alpha``.
    """
    if not 1 <= r <= min(d1, d2):
        raise ValueError(f"rank {r} incompatible with a {d1}x{d2} matrix")
    g = _gen(rng)
    M1 = g.uniform(-0.5, 0.5, size=(d1, r))
    M2 = g.uniform(-0.5, 0.5, size=(d2, r))
    M = M1 @ M2.T
    if scaling == "max":
        top = M.max()
    elif scaling == "abs_max":
        top = np.abs(M).max()
    else:
        raise ValueError(f"unknown scaling {scaling!r}")
    return GroundTruth(alpha * M / top, r, alpha)


def sample_observations(gt, ratio: float, model: LinkModel, rng,
                        exact_count: bool = False) -> ObservationSet:
    """Reveal entries of ``M`` and draw one-bit ratings ``P(Y=+1) = h(M_ij)``.

    Each entry is revealed independently with probability ``ratio``;
    with ``exact_count=True`` exactly ``round(ratio * d1 * d2)`` entries are
    revealed instead, chosen without replacement.
    """
    if not 0 < ratio <= 1:
        raise ValueError(f"observation ratio must be in (0, 1], got {ratio}")
    M = gt.M if isinstance(gt, GroundTruth) else np.asarray(gt, dtype=float)
    d1, d2 = M.shape
    g = _gen(rng)
    if exact_count:
        flat = np.sort(g.choice(d1 * d2, size=int(round(ratio * d1 * d2)), replace=False))
    else:
        flat = np.flatnonzero(g.random(d1 * d2) < ratio)
    rows, cols = np.divmod(flat, d2)
    p_up = model.probs(M[rows, cols])[0]
    y = np.where(g.random(flat.size) < p_up, 1, -1)
    return ObservationSet((d1, d2), rows, cols, y)


def save_matrix(path, M):
    """Write a matrix as CSV (``.csv``) or raw little-endian float64 (anything else)."""
    path = Path(path)
    M = np.asarray(M, dtype=float)
    if path.suffix == ".csv":
        np.savetxt(path, M, delimiter=",", fmt="%.17g")
    else:
        header = np.array(M.shape, dtype="<i8")
        with open(path, "wb") as fh:
            fh.write(header.tobytes())
            fh.write(M.astype("<f8").tobytes())


def load_matrix(path) -> np.ndarray:
    path = Path(path)
    if path.suffix == ".csv":
        return np.atleast_2d(np.loadtxt(path, delimiter=","))
    raw = path.read_bytes()
    d1, d2 = np.frombuffer(raw[:16], dtype="<i8")
    return np.frombuffer(raw[16:], dtype="<f8").reshape(int(d1), int(d2)).copy()


@dataclass(frozen=True, eq=False)
class RatingsTable:
    """Raw rating records with ids re-indexed densely.

    ``users[k]``/``items[k]`` are dense 0-based indices of record ``k``;
    ``user_ids``/``item_ids`` map a dense index back to the original id.
    """

    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray
    user_ids: np.ndarray
    item_ids: np.ndarray
    timestamps: np.ndarray | None = None

    @classmethod
    def from_records(cls, users, items, ratings, timestamps=None, user_ids=None, item_ids=None):
        """Re-index raw ids. Passing ``user_ids``/``item_ids`` fixes the id universe
        (used to keep a train/test pair on one index)."""
        users = np.asarray(users)
        items = np.asarray(items)
        if user_ids is None:
            user_ids = np.unique(users)
        if item_ids is None:
            item_ids = np.unique(items)
        u = np.searchsorted(user_ids, users)
        i = np.searchsorted(item_ids, items)
        if (np.any(u >= user_ids.size) or np.any(user_ids[np.minimum(u, user_ids.size - 1)] != users)
                or np.any(i >= item_ids.size)
                or np.any(item_ids[np.minimum(i, item_ids.size - 1)] != items)):
            raise DataError("record refers to an id outside the supplied id universe")
        ts = None if timestamps is None else np.asarray(timestamps)
        return cls(u, i, np.asarray(ratings, dtype=float), user_ids, item_ids, ts)

    @property
    def shape(self):
        return (self.user_ids.size, self.item_ids.size)

    def __len__(self):
        return int(self.ratings.size)

    def original_ids(self):
        return self.user_ids[self.users], self.item_ids[self.items]


def _read_movielens_records(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no MovieLens file at {path}")
    rec = []
    with open(path, encoding="latin-1") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) not in (3, 4):
                raise DataError(f"{path}:{lineno}: expected 4 tab-separated fields")
            try:
                vals = [int(p) for p in parts]
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-integer field in {line.strip()!r}") from None
            if not 1 <= vals[2] <= 5:
                raise DataError(f"{path}:{lineno}: rating {vals[2]} outside 1..5")
            rec.append(vals + [0] * (4 - len(vals)))
    if not rec:
        raise DataError(f"{path}: no ratings found")
    return np.array(rec, dtype=np.int64)


def load_movielens(path) -> RatingsTable:
    """Load a ``u.data``-format file."""
    r = _read_movielens_records(path)
    return RatingsTable.from_records(r[:, 0], r[:, 1], r[:, 2], r[:, 3])


def load_movielens_split(base_path, test_path):
    """Load a base/test pair (e.g. ``u1.base``/``u1.test``) on one shared index."""
    a = _read_movielens_records(base_path)
    b = _read_movielens_records(test_path)
    both = np.vstack([a, b])
    uid, iid = np.unique(both[:, 0]), np.unique(both[:, 1])
    train = RatingsTable.from_records(a[:, 0], a[:, 1], a[:, 2], a[:, 3], uid, iid)
    test = RatingsTable.from_records(b[:, 0], b[:, 1], b[:, 2], b[:, 3], uid, iid)
    return train, test


def _to_obs(table: RatingsTable, signs, idx=None) -> ObservationSet:
    if idx is None:
        idx = np.arange(len(table))
    return ObservationSet(table.shape, table.users[idx], table.items[idx], signs[idx])


def binarize_mean_threshold(table: RatingsTable, test: RatingsTable | None = None,
                            threshold: float | None = None):
    """Ratings below the global mean become -1, the rest +1.

    Ratings equal to the mean map to +1. The mean is taken over every
    supplied record (train and test together) unless ``threshold`` is
    given. Returns ``obs`` or ``(train_obs, test_obs)`` when ``test`` is set.
    """
    if len(table) == 0:
        raise DataError("empty ratings table")
    if threshold is None:
        pool = table.ratings if test is None else np.concatenate([table.ratings, test.ratings])
        threshold = np.mean(pool)
    t = float(threshold)

    def signs(tab):
        return np.where(tab.ratings < t, -1, 1)

    train = _dedupe(table, signs(table))
    if test is None:
        return train
    return train, _dedupe(test, signs(test))


def _dedupe(table: RatingsTable, signs) -> ObservationSet:
    # repeated (user, item) records keep the last one
    key = table.users * table.shape[1] + table.items
    _, last = np.unique(key[::-1], return_index=True)
    idx = np.sort(len(key) - 1 - last)
    return _to_obs(table, signs, idx)


_RC_USER = ("userid", "user_id", "user")
_RC_ITEM = ("placeid", "place_id", "item", "itemid", "item_id")
_RC_RATING = ("rating",)


def _pick(header, names, path):
    low = [h.strip().lower() for h in header]
    for n in names:
        if n in low:
            return low.index(n)
    raise DataError(f"{path}: no column among {names} in header {header}")


def load_rc(path) -> RatingsTable:
    """Load an RC ratings CSV (header with user, place and rating columns)."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no RC file at {path}")
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        cu, ci, cr = (_pick(header, names, path) for names in (_RC_USER, _RC_ITEM, _RC_RATING))
        users, items, ratings = [], [], []
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            try:
                rating = int(row[cr])
            except (ValueError, IndexError):
                raise DataError(f"{path}:{lineno}: bad rating field") from None
            if rating not in (0, 1, 2):
                raise DataError(f"{path}:{lineno}: rating {rating} outside {{0, 1, 2}}")
            users.append(row[cu].strip())
            items.append(row[ci].strip())
            ratings.append(rating)
    if not ratings:
        raise DataError(f"{path}: no ratings found")
    return RatingsTable.from_records(users, items, ratings)


def binarize_rc(table: RatingsTable, rng, train_fraction: float = 0.8):
    """Two-star ratings become +1, zero/one-star -1; random record-level split.

    Returns ``(train_obs, test_obs)`` with ``round(train_fraction * n)``
    training records.
    """
    bad = ~np.isin(table.ratings, (0, 1, 2))
    if np.any(bad):
        raise DataError(f"RC ratings must be 0, 1 or 2; found {table.ratings[bad][0]}")
    signs = np.where(table.ratings == 2, 1, -1)
    n = len(table)
    perm = _gen(rng).permutation(n)
    n_train = int(math.floor(train_fraction * n + 0.5))
    return _to_obs(table, signs, np.sort(perm[:n_train])), _to_obs(table, signs, np.sort(perm[n_train:]))

"""Probe/response datasets and their CSV serialization.

A dataset is an ordered sequence of K probe vectors (the adversary's side)
paired with K response vectors (the agent's side), all of dimension m.
Probes are strictly positive.  Responses of a clean dataset are nonnegative;
datasets carrying raw noisy measurements may contain negative components,
so nonnegativity is enforced by the operations that require it rather than
here.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class ProbeResponseDataset:
    """K probe/response pairs in R^m."""

    probes: np.ndarray
    responses: np.ndarray

    def __post_init__(self) -> None:
        probes = np.atleast_2d(np.asarray(self.probes, dtype=float))
        responses = np.atleast_2d(np.asarray(self.responses, dtype=float))
        object.__setattr__(self, "probes", probes)
        object.__setattr__(self, "responses", responses)
        if probes.ndim != 2 or responses.ndim != 2:
            raise ValueError("probes and responses must be 2-d arrays (K, m)")
        if probes.shape != responses.shape:
            raise ValueError(
                f"shape mismatch: probes {probes.shape} vs responses {responses.shape}"
            )
        if probes.shape[0] < 1 or probes.shape[1] < 1:
            raise ValueError("need at least one epoch and one dimension")
        if not np.all(np.isfinite(probes)) or not np.all(np.isfinite(responses)):
            raise ValueError("probes and responses must be finite")
        if np.any(probes <= 0):
            raise ValueError("probes must be strictly positive componentwise")

    @property
    def k(self) -> int:
        """Number of epochs."""
        return self.probes.shape[0]

    @property
    def m(self) -> int:
        """Vector dimension."""
        return self.probes.shape[1]

    def with_responses(self, responses: np.ndarray) -> "ProbeResponseDataset":
        """Same probes, replaced responses."""
        return ProbeResponseDataset(self.probes, responses)


def save_dataset(dataset: ProbeResponseDataset, path: str | Path) -> None:
    """Write `epoch,alpha_1..alpha_m,beta_1..beta_m` rows."""
    path = Path(path)
    m = dataset.m
    header = (
        ["epoch"]
        + [f"alpha_{i + 1}" for i in range(m)]
        + [f"beta_{i + 1}" for i in range(m)]
    )
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t in range(dataset.k):
            row = [t + 1] + [repr(float(x)) for x in dataset.probes[t]] + [
                repr(float(x)) for x in dataset.responses[t]
            ]
            writer.writerow(row)


def load_dataset(path: str | Path) -> ProbeResponseDataset:
    """Read a dataset written by :func:`save_dataset`."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "epoch":
            raise ValueError(f"{path}: expected header starting with 'epoch'")
        n_cols = len(header) - 1
        if n_cols < 2 or n_cols % 2 != 0:
            raise ValueError(f"{path}: header must list alpha_* and beta_* columns")
        m = n_cols // 2
        expected = [f"alpha_{i + 1}" for i in range(m)] + [
            f"beta_{i + 1}" for i in range(m)
        ]
        if header[1:] != expected:
            raise ValueError(f"{path}: malformed header {header}")
        probes, responses = [], []
        for row in reader:
            if not row:
                continue
            values = [float(x) for x in row[1:]]
            probes.append(values[:m])
            responses.append(values[m:])
    if not probes:
        raise ValueError(f"{path}: no data rows")
    return ProbeResponseDataset(np.array(probes), np.array(responses))

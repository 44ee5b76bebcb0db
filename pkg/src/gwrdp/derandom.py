"""Common-randomness removal by source simulation.

A few extra source symbols (the tail of an extended block) are hashed
through a fixed map into a seed value in [0, n-1] whose distribution is
within the largest atom probability of uniform, per bin. The map is built
greedily: atoms (joint tail realizations) are sorted by descending
probability and each is placed into the currently lightest bin, which
bounds the heaviest-lightest gap by the largest atom. The resulting
deterministic code runs the shift-seeded codec with the simulated seed
and extends reconstructions by copying the head prefix into the tail.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass

import numpy as np

from .codec import Codebook, EncodeResult, decode, encode
from .prob import JointPmf


class SeedMapError(ValueError):
    """The requested (n0, n) cannot produce a valid seed map."""


@dataclass(frozen=True, eq=False)
class SeedMap:
    """Assignment of every length-n0 joint tail realization to a seed bin."""

    assignment: np.ndarray   # (pair_alphabet ** n0,) values in [0, n-1]
    bin_masses: np.ndarray   # (n,)
    p_max: float             # largest atom probability
    n0: int
    n: int
    nx: int
    ny: int

    @property
    def max_deviation(self) -> float:
        return float(np.abs(self.bin_masses - 1.0 / self.n).max())

    @property
    def bound(self) -> float:
        return self.p_max

    def seed_for_tail(self, x_tail: np.ndarray, y_tail: np.ndarray) -> int:
        x = np.asarray(x_tail).astype(np.int64)
        y = np.asarray(y_tail).astype(np.int64)
        if x.shape[0] != self.n0 or y.shape[0] != self.n0:
            raise ValueError(f"tails must have length n0={self.n0}")
        pair = x * self.ny + y
        idx = 0
        for p in pair:
            idx = idx * (self.nx * self.ny) + int(p)
        return int(self.assignment[idx])

    def audit(self) -> dict:
        """Exhaustive mass audit: per-bin masses against the uniform bound."""
        dev = self.max_deviation
        return {
            "n0": self.n0,
            "n": self.n,
            "atoms": int(self.assignment.shape[0]),
            "bin_masses": self.bin_masses.tolist(),
            "max_deviation": dev,
            "bound_p_max": self.p_max,
            "within_bound": bool(dev <= self.p_max + 1e-15),
        }

    def to_json(self) -> str:
        return json.dumps({
            "n0": self.n0, "n": self.n, "nx": self.nx, "ny": self.ny,
            "p_max": self.p_max,
            "assignment": self.assignment.tolist(),
            "bin_masses": self.bin_masses.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "SeedMap":
        o = json.loads(text)
        return cls(assignment=np.asarray(o["assignment"], dtype=np.int64),
                   bin_masses=np.asarray(o["bin_masses"], dtype=np.float64),
                   p_max=o["p_max"], n0=o["n0"], n=o["n"], nx=o["nx"], ny=o["ny"])


def default_tail_length(pair_alphabet_size: int, n: int) -> int:
    """Smallest n0 with pair_alphabet**n0 >= n**2 (deviation slack)."""
    n0 = 1
    while pair_alphabet_size ** n0 < n * n:
        n0 += 1
    return n0


def build_seed_map(p_xy: JointPmf, n0: int, n: int, *,
                   atom_cap: int = 4_194_304) -> SeedMap:
    """Greedy least-loaded assignment of tail atoms to seed bins.

    Atoms are sorted by descending probability (ties by index) and placed
    into the lightest bin, so the final per-bin deviation from 1/n is at
    most the largest atom probability; the bound is asserted, not assumed.
    """
    flat = np.asarray(p_xy.probs, dtype=np.float64).reshape(-1)
    nx, ny = p_xy.shape
    n_atoms = len(flat) ** n0
    if n_atoms < n:
        need = default_tail_length(len(flat), n)
        raise SeedMapError(
            f"{n_atoms} atoms cannot populate {n} bins; need n0 >= "
            f"{math.ceil(math.log(n, len(flat)))} (default rule gives {need})")
    if n_atoms > atom_cap:
        raise SeedMapError(f"{n_atoms} atoms exceed the cap of {atom_cap}")

    probs = flat
    for _ in range(n0 - 1):
        probs = np.kron(probs, flat)
    order = np.lexsort((np.arange(n_atoms), -probs))

    assignment = np.empty(n_atoms, dtype=np.int64)
    heap = [(0.0, b) for b in range(n)]
    heapq.heapify(heap)
    for atom in order:
        mass, b = heapq.heappop(heap)
        assignment[atom] = b
        heapq.heappush(heap, (mass + probs[atom], b))

    masses = np.zeros(n)
    np.add.at(masses, assignment, probs)
    p_max = float(probs.max())
    gap = float(masses.max() - masses.min())
    if gap > p_max + 1e-15:
        raise AssertionError(
            f"greedy guarantee violated: bin gap {gap} exceeds largest atom {p_max}")
    return SeedMap(assignment=assignment, bin_masses=masses, p_max=p_max,
                   n0=n0, n=n, nx=nx, ny=ny)


def seed_rate_overhead(n: int, n0: int) -> float:
    """Extra bits per symbol each message carries for the simulated seed."""
    return math.log2(n) / (n + n0)


def deterministic_encode(codebook: Codebook, seed_map: SeedMap,
                         x_ext: np.ndarray, y_ext: np.ndarray,
                         delta_x: np.ndarray, delta_y: np.ndarray,
                         threshold_x: float, threshold_y: float
                         ) -> tuple[EncodeResult, int]:
    """Encode an extended block: the tail simulates the seed, the head is
    encoded with it. Fully deterministic."""
    n, n0 = codebook.n, seed_map.n0
    x = np.asarray(x_ext)
    y = np.asarray(y_ext)
    if x.shape[0] != n + n0 or y.shape[0] != n + n0:
        raise ValueError(f"extended sequences must have length n+n0={n + n0}")
    k_sim = seed_map.seed_for_tail(x[n:], y[n:])
    enc = encode(codebook, x[:n], y[:n], k_sim, delta_x, delta_y,
                 threshold_x, threshold_y)
    return enc, k_sim


def deterministic_decode(codebook: Codebook, s0: int, s1: int, s2: int,
                         k_sim: int, n0: int) -> tuple[np.ndarray, np.ndarray]:
    """Reconstruct an extended block: shift the selected codewords by the
    simulated seed, then copy the first n0 head positions into the tail."""
    if not 0 <= k_sim < codebook.n:
        raise IndexError(f"seed {k_sim} outside [0, {codebook.n - 1}]")
    x_hat, y_hat = decode(codebook, s0, s1, s2, k_sim)
    x_ext = np.concatenate([x_hat, x_hat[:n0]])
    y_ext = np.concatenate([y_hat, y_hat[:n0]])
    return x_ext, y_ext

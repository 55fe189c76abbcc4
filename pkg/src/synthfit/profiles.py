"""Sampling profiles: which parameters vary during dataset generation.

The full profile draws all 23 classes uniformly.  The desk profile pins 18
parameters to fixed classes and varies only {f_cut, q, f_gate, A_sin,
f_sin}, shrinking the task enough to train in minutes on a laptop while
labels stay 368-dimensional.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .params import NUM_CLASSES, PARAM_IDS, PatchClasses


@dataclass(frozen=True)
class SamplingProfile:
    name: str
    pinned: tuple[tuple[str, int], ...]  # (param id, class) pairs, canonical order

    def __post_init__(self):
        seen = set()
        for pid, cls in self.pinned:
            if pid not in PARAM_IDS:
                raise InputError(f"unknown parameter id {pid!r}")
            if pid in seen:
                raise InputError(f"parameter {pid!r} pinned twice")
            if not 0 <= cls < NUM_CLASSES:
                raise InputError(f"pinned class {cls} out of range for {pid!r}")
            seen.add(pid)

    @property
    def free(self) -> tuple[str, ...]:
        pinned_ids = {pid for pid, _ in self.pinned}
        return tuple(pid for pid in PARAM_IDS if pid not in pinned_ids)

    def sample(self, rng: np.random.Generator) -> PatchClasses:
        fixed = dict(self.pinned)
        classes = []
        for pid in PARAM_IDS:
            if pid in fixed:
                classes.append(fixed[pid])
            else:
                classes.append(int(rng.integers(0, NUM_CLASSES)))
        return PatchClasses(tuple(classes))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "free": list(self.free),
            "pinned": {pid: cls for pid, cls in self.pinned},
        }

    @staticmethod
    def from_dict(d: dict) -> "SamplingProfile":
        pinned = tuple(
            (pid, int(cls))
            for pid in PARAM_IDS
            if pid in d["pinned"]
            for cls in [d["pinned"][pid]]
        )
        return SamplingProfile(d["name"], pinned)


FULL_PROFILE = SamplingProfile("full", ())

# silent-ish oscillators: amplitude class 0 is the 0.001 floor, modulation
# depth class 0 is exactly zero
DESK_PROFILE = SamplingProfile(
    "desk",
    (
        ("a", 0), ("d", 0), ("s", 15), ("r", 7),
        ("A_saw", 0), ("B_saw", 0), ("v_saw", 0), ("f_saw", 0),
        ("B_sin", 0), ("v_sin", 0),
        ("A_sqr", 0), ("B_sqr", 0), ("v_sqr", 0), ("f_sqr", 0),
        ("A_tri", 0), ("B_tri", 0), ("v_tri", 0), ("f_tri", 0),
    ),
)

PROFILES = {"full": FULL_PROFILE, "desk": DESK_PROFILE}


def get_profile(name: str) -> SamplingProfile:
    try:
        return PROFILES[name]
    except KeyError:
        raise InputError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}") from None

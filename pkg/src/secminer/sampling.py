"""Sample-size computation and deterministic stratified sampling.

Sample sizes use Cochran's formula with finite-population correction:

    n0 = z^2 * p * (1 - p) / e^2
    n  = ceil(n0 / (1 + (n0 - 1) / N))        capped at N

with z the two-sided normal quantile for the confidence level (1.959964
at 95%).  Strata default to project x source; each stratum is sized from
its own population and sampled independently, so per-stratum sample
counts sum up to the final number of instances to inspect.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Mapping, Sequence

from .lexicon import IndicatorMatch, SOURCE_KINDS


@dataclass(frozen=True)
class SampleSpec:
    confidence: float = 0.95
    margin: float = 0.05
    proportion: float = 0.5
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 < self.confidence < 1.0:
            raise ValueError(f"confidence must be in (0, 1), got {self.confidence}")
        if not 0.0 < self.margin < 1.0:
            raise ValueError(f"margin must be in (0, 1), got {self.margin}")
        if not 0.0 <= self.proportion <= 1.0:
            raise ValueError(f"proportion must be in [0, 1], got {self.proportion}")


@dataclass(frozen=True)
class SampleTask:
    task_id: str
    source_kind: str
    stratum: str
    payload: str
    matches: tuple[IndicatorMatch, ...] = ()

    def __post_init__(self) -> None:
        if not self.task_id:
            raise ValueError("task_id is empty")
        if self.source_kind not in SOURCE_KINDS:
            raise ValueError(f"unknown source kind {self.source_kind!r}")
        if not self.payload:
            raise ValueError(f"task {self.task_id}: payload is empty")

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "source_kind": self.source_kind,
            "stratum": self.stratum,
            "payload": self.payload,
            "matches": [m.to_dict() for m in self.matches],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SampleTask":
        return cls(
            task_id=d["task_id"],
            source_kind=d["source_kind"],
            stratum=d["stratum"],
            payload=d["payload"],
            matches=tuple(IndicatorMatch.from_dict(m) for m in d.get("matches", [])),
        )


# Acklam's rational approximation to the inverse normal CDF; absolute
# error below 1.2e-9 over (0, 1), comfortably past the 6 decimals needed.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)


def normal_quantile(p: float) -> float:
    """Inverse of the standard normal CDF."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile argument must be in (0, 1), got {p}")
    p_low, p_high = 0.02425, 1 - 0.02425
    if p < p_low:
        q = math.sqrt(-2 * math.log(p))
        return ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1))
    if p > p_high:
        q = math.sqrt(-2 * math.log(1 - p))
        return -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                 / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1))
    q = p - 0.5
    r = q * q
    return ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1))


def z_score(confidence: float) -> float:
    """Two-sided normal quantile for a confidence level."""
    return normal_quantile(1.0 - (1.0 - confidence) / 2.0)


def required_sample_size(population: int, spec: SampleSpec = SampleSpec()) -> int:
    """Cochran sample size with finite-population correction, capped at N."""
    spec.validate()
    if population < 1:
        raise ValueError(f"population must be >= 1, got {population}")
    z = z_score(spec.confidence)
    n0 = z * z * spec.proportion * (1.0 - spec.proportion) / (spec.margin ** 2)
    n = math.ceil(n0 / (1.0 + (n0 - 1.0) / population))
    return max(1, min(n, population))


def _stratum_rng(seed: int, stratum: str) -> random.Random:
    # string seeding hashes via sha512, stable across platforms and runs
    return random.Random(f"{seed}|{stratum}")


def draw_sample(
    population: Mapping[str, Sequence[SampleTask]], spec: SampleSpec = SampleSpec()
) -> list[SampleTask]:
    """Deterministic per-stratum sample, uniform without replacement.

    Output order is stratum name ascending, then original candidate
    order.  The generator is seeded by (spec.seed, stratum name), so equal
    seeds reproduce selections exactly.
    """
    spec.validate()
    if not population:
        raise ValueError("no strata to sample from")
    sampled: list[SampleTask] = []
    for stratum in sorted(population):
        candidates = population[stratum]
        if not candidates:
            continue
        n = required_sample_size(len(candidates), spec)
        rng = _stratum_rng(spec.seed, stratum)
        # partial Fisher-Yates over indices keeps the draw uniform and
        # independent of candidate contents
        indices = list(range(len(candidates)))
        for i in range(n):
            j = rng.randrange(i, len(indices))
            indices[i], indices[j] = indices[j], indices[i]
        for index in sorted(indices[:n]):
            sampled.append(candidates[index])
    return sampled

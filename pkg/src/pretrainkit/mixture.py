"""Data-mixture accounting: weights, token budgets, and deterministic sampling.

A mixture is a list of named sources, each with a sampling weight, an
effective token count (raw size times epochs), an epoch count, and a domain
category.  This module validates the internal consistency of such tables,
computes category breakdowns, plans token budgets from weight vectors, and
draws reproducible weighted sample streams of source names.

Sampling uses a counter-based splitmix64 generator, so a stream is a pure
function of (mixture, seed): the same seed always yields the same sequence on
every platform, and a stream of length n is a prefix of the stream of length
n+1.
"""

from __future__ import annotations

import hashlib
import json
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "CATEGORIES",
    "DatasetEntry",
    "MixtureSpec",
    "EntryCheck",
    "ValidationReport",
    "BudgetRow",
    "validate",
    "per_epoch_size",
    "category_breakdown",
    "plan_budget",
    "MixtureSampler",
    "SamplerSnapshot",
    "sample_stream",
    "document_order",
    "load_mixture",
    "dump_mixture",
]

CATEGORIES = (
    "Academic",
    "Books",
    "Web",
    "Social",
    "Law",
    "Math",
    "Wiki",
    "Code",
    "Instruction",
)


@dataclass(frozen=True)
class DatasetEntry:
    """One source row: name, sampling weight, effective tokens, epochs, category."""

    name: str
    weight: float
    effective_tokens: int
    epochs: float
    category: str

    def __post_init__(self) -> None:
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError(f"{self.name}: weight must lie in [0, 1], got {self.weight}")
        if self.effective_tokens < 0:
            raise ValueError(f"{self.name}: effective_tokens must be nonnegative")
        if self.epochs <= 0.0:
            raise ValueError(f"{self.name}: epochs must be positive, got {self.epochs}")
        if self.category not in CATEGORIES:
            raise ValueError(
                f"{self.name}: unknown category {self.category!r}; expected one of {CATEGORIES}"
            )


@dataclass(frozen=True)
class MixtureSpec:
    """A full mixture: entries plus the total token budget they add up to."""

    entries: tuple[DatasetEntry, ...]
    total_tokens: int

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("mixture must have at least one entry")
        if self.total_tokens <= 0:
            raise ValueError(f"total_tokens must be positive, got {self.total_tokens}")
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise ValueError("duplicate entry names in mixture")

    @property
    def weight_sum(self) -> float:
        return float(sum(e.weight for e in self.entries))

    def entry(self, name: str) -> DatasetEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)


def per_epoch_size(entry: DatasetEntry) -> float:
    """Raw tokens per epoch: effective tokens divided by epoch count."""
    return entry.effective_tokens / entry.epochs


@dataclass(frozen=True)
class EntryCheck:
    """Validation result for one entry."""

    name: str
    token_residual: float  # |weight*total - effective| / effective
    per_epoch_tokens: float
    ok: bool


@dataclass(frozen=True)
class ValidationReport:
    weight_sum: float
    weight_residual: float  # |weight_sum - 1|
    weight_ok: bool
    entries: tuple[EntryCheck, ...]
    weight_tol: float
    token_tol: float

    @property
    def ok(self) -> bool:
        return self.weight_ok and all(e.ok for e in self.entries)

    @property
    def failures(self) -> tuple[EntryCheck, ...]:
        return tuple(e for e in self.entries if not e.ok)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "weight_sum": self.weight_sum,
            "weight_residual": self.weight_residual,
            "weight_ok": self.weight_ok,
            "weight_tol": self.weight_tol,
            "token_tol": self.token_tol,
            "entries": [
                {
                    "name": e.name,
                    "token_residual": e.token_residual,
                    "per_epoch_tokens": e.per_epoch_tokens,
                    "ok": e.ok,
                }
                for e in self.entries
            ],
        }


def validate(spec: MixtureSpec, weight_tol: float = 1e-3, token_tol: float = 0.01) -> ValidationReport:
    """Check a mixture's internal consistency.

    Three checks: the weights sum to 1 within ``weight_tol``; for each entry
    the implied token count ``weight * total_tokens`` agrees with the stated
    effective tokens within ``token_tol`` relative; and each entry's
    per-epoch size is positive.  Every violation is listed in the report
    rather than raised, so a report over a slightly inconsistent table is
    still complete.
    """
    wsum = spec.weight_sum
    wres = abs(wsum - 1.0)
    checks = []
    for e in spec.entries:
        implied = e.weight * spec.total_tokens
        if e.effective_tokens > 0:
            residual = abs(implied - e.effective_tokens) / e.effective_tokens
        else:
            residual = float("inf") if implied > 0 else 0.0
        per_epoch = per_epoch_size(e)
        checks.append(
            EntryCheck(
                name=e.name,
                token_residual=residual,
                per_epoch_tokens=per_epoch,
                ok=residual <= token_tol and per_epoch > 0,
            )
        )
    return ValidationReport(
        weight_sum=wsum,
        weight_residual=wres,
        weight_ok=wres <= weight_tol,
        entries=tuple(checks),
        weight_tol=weight_tol,
        token_tol=token_tol,
    )


def category_breakdown(spec: MixtureSpec) -> dict[str, float]:
    """Weight mass per category, in the canonical category order.

    Fractions are plain sums of the entry weights, so they add up to the
    mixture's total weight sum with no renormalization.
    """
    out = {c: 0.0 for c in CATEGORIES}
    for e in spec.entries:
        out[e.category] += e.weight
    return {c: w for c, w in out.items() if w > 0.0}


@dataclass(frozen=True)
class BudgetRow:
    name: str
    weight: float
    tokens: float
    epochs: float
    over_ceiling: bool


def plan_budget(
    weights: Mapping[str, float],
    total_tokens: int,
    raw_sizes: Mapping[str, float],
    repetition_ceiling: float = 8.0,
    weight_tol: float = 1e-3,
) -> list[BudgetRow]:
    """Turn a weight vector into per-source token budgets and epoch counts.

    ``tokens_i = weight_i * total_tokens`` and ``epochs_i = tokens_i /
    raw_size_i``; rows whose epochs exceed ``repetition_ceiling`` are flagged.
    Published ablation weight columns often carry rounding, so the weight-sum
    check accepts a caller-supplied tolerance.

    Raises:
        ValueError: if the weights do not sum to 1 within ``weight_tol``.
        KeyError: if a positively weighted source has no raw size.
    """
    if total_tokens < 0:
        raise ValueError(f"total_tokens must be nonnegative, got {total_tokens}")
    wsum = sum(weights.values())
    if abs(wsum - 1.0) > weight_tol:
        raise ValueError(
            f"weights sum to {wsum:.6f}, outside 1 +/- {weight_tol}; "
            "pass an explicit weight_tol to accept"
        )
    rows = []
    for name, w in weights.items():
        tokens = w * total_tokens
        if tokens > 0 and name not in raw_sizes:
            raise KeyError(f"no raw size for weighted source {name!r}")
        raw = raw_sizes.get(name)
        epochs = tokens / raw if raw else 0.0
        rows.append(
            BudgetRow(
                name=name,
                weight=w,
                tokens=tokens,
                epochs=epochs,
                over_ceiling=epochs > repetition_ceiling,
            )
        )
    return rows


# --- deterministic sampling -------------------------------------------------
#
# splitmix64: the i-th draw mixes the counter value seed + (i+1)*GOLDEN through
# two xor-shift-multiply rounds.  Stateless in the counter, hence identical
# across platforms and trivially resumable.

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64


def _splitmix64(state: np.ndarray) -> np.ndarray:
    """Finalizer of splitmix64 applied elementwise to uint64 state words."""
    z = (state ^ (state >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _uniform01(seed: int, start: int, n: int) -> np.ndarray:
    """n doubles in [0, 1) for draw indices start..start+n-1 under ``seed``."""
    idx = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        counters = _U64(seed & 0xFFFFFFFFFFFFFFFF) + idx * _GOLDEN
        bits = _splitmix64(counters)
    return (bits >> np.uint64(11)).astype(np.float64) / float(1 << 53)


@dataclass(frozen=True)
class SamplerSnapshot:
    """Cursor of a sampler: enough to resume the stream exactly where it stopped."""

    seed: int
    position: int
    counts: dict[str, int] = field(default_factory=dict)


class MixtureSampler:
    """Weighted source sampler with single-consumer iterator semantics.

    Draws are made by inverting the cumulative weight distribution with the
    splitmix64 counter stream, so the sequence is a pure function of
    (spec, seed).  Per-source draw counters track epoch progress; a snapshot
    captures the cursor and may be handed to another thread for resumption.
    """

    def __init__(self, spec: MixtureSpec, seed: int):
        self.spec = spec
        self.seed = int(seed)
        self._names = [e.name for e in spec.entries]
        w = np.array([e.weight for e in spec.entries], dtype=np.float64)
        if np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be nonnegative with positive sum")
        cum = np.cumsum(w / w.sum())
        cum[-1] = 1.0  # guard against rounding above/below one
        self._cum = cum
        self._position = 0
        self.counts: dict[str, int] = {n: 0 for n in self._names}

    @classmethod
    def resume(cls, spec: MixtureSpec, snapshot: SamplerSnapshot) -> "MixtureSampler":
        sampler = cls(spec, snapshot.seed)
        sampler._position = snapshot.position
        sampler.counts.update(snapshot.counts)
        return sampler

    @property
    def position(self) -> int:
        return self._position

    def snapshot(self) -> SamplerSnapshot:
        return SamplerSnapshot(seed=self.seed, position=self._position, counts=dict(self.counts))

    def draw(self, n: int) -> list[str]:
        """Next ``n`` source names; advances the cursor."""
        if n < 0:
            raise ValueError(f"n must be nonnegative, got {n}")
        u = _uniform01(self.seed, self._position, n)
        idx = np.searchsorted(self._cum, u, side="right")
        self._position += n
        names = self._names
        out = [names[i] for i in idx]
        for i, c in zip(*np.unique(idx, return_counts=True)):
            self.counts[names[i]] += int(c)
        return out

    def __iter__(self) -> Iterator[str]:
        return self

    def __next__(self) -> str:
        return self.draw(1)[0]

    def epoch_progress(self, docs_per_epoch: Mapping[str, int]) -> dict[str, float]:
        """Fraction of an epoch consumed per source, given per-epoch document counts."""
        out = {}
        for name, count in self.counts.items():
            if name in docs_per_epoch and docs_per_epoch[name] > 0:
                out[name] = count / docs_per_epoch[name]
        return out


def sample_stream(spec: MixtureSpec, seed: int, n: int) -> list[str]:
    """The first ``n`` draws of the (spec, seed) stream."""
    return MixtureSampler(spec, seed).draw(n)


def document_order(seed: int, source: str, epoch: int, n_docs: int) -> np.ndarray:
    """Deterministic document permutation for one epoch of one source.

    Each epoch reshuffles with a key derived from (seed, source, epoch), so
    multi-epoch consumers see a fresh order per pass without losing
    reproducibility.
    """
    digest = hashlib.sha256(f"{seed}/{source}/{epoch}".encode()).digest()
    key = int.from_bytes(digest[:8], "little")
    rng = np.random.Generator(np.random.PCG64(key))
    return rng.permutation(n_docs)


# --- JSON interchange --------------------------------------------------------


def load_mixture(source: str | Path | dict) -> MixtureSpec:
    """Read a mixture from a JSON file path or an already-parsed document.

    Expected shape: ``{"total_tokens": int, "entries": [{"name", "weight",
    "effective_tokens", "epochs", "category"}, ...]}``.
    """
    if isinstance(source, (str, Path)):
        doc = json.loads(Path(source).read_text())
    else:
        doc = source
    entries = tuple(
        DatasetEntry(
            name=e["name"],
            weight=float(e["weight"]),
            effective_tokens=int(e["effective_tokens"]),
            epochs=float(e["epochs"]),
            category=e["category"],
        )
        for e in doc["entries"]
    )
    return MixtureSpec(entries=entries, total_tokens=int(doc["total_tokens"]))


def dump_mixture(spec: MixtureSpec) -> dict:
    """Inverse of :func:`load_mixture`."""
    return {
        "total_tokens": spec.total_tokens,
        "entries": [
            {
                "name": e.name,
                "weight": e.weight,
                "effective_tokens": e.effective_tokens,
                "epochs": e.epochs,
                "category": e.category,
            }
            for e in spec.entries
        ],
    }

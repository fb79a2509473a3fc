"""Potential ensembles on the chain and their concrete realizations.

Five kinds are supported: ``zero``, ``explicit``, ``anderson`` (i.i.d. values
from a finite distribution), ``fibonacci`` and ``almost_mathieu`` (rotations of
the circle by ``alpha``).  Every spec round-trips through a JSON object tagged
by ``kind``; the schema lives next to this module as
``potential_spec.schema.json``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

GOLDEN_ALPHA = (math.sqrt(5.0) - 1.0) / 2.0

KINDS = ("zero", "explicit", "anderson", "fibonacci", "almost_mathieu")


class ValidationError(ValueError):
    """Raised for malformed model input (bad rates, weights, sizes...)."""


def _golden_alpha_ld() -> np.longdouble:
    return (np.sqrt(np.longdouble(5)) - np.longdouble(1)) / np.longdouble(2)


@dataclass(frozen=True)
class PotentialSpec:
    """Symbolic description of a potential ensemble.

    Only the fields relevant to ``kind`` are used.  ``alpha=None`` for the
    Fibonacci kind means the golden-mean rotation ``(sqrt(5)-1)/2``.
    """

    kind: str = "zero"
    values: tuple[float, ...] = ()
    support: tuple[float, ...] = ()
    weights: tuple[float, ...] = ()
    seed: int = 0
    lam: float = 1.0
    alpha: float | None = None
    omega: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(x) for x in self.values))
        object.__setattr__(self, "support", tuple(float(x) for x in self.support))
        object.__setattr__(self, "weights", tuple(float(x) for x in self.weights))
        self.validate()

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls) -> "PotentialSpec":
        return cls("zero")

    @classmethod
    def explicit(cls, values: Sequence[float]) -> "PotentialSpec":
        return cls("explicit", values=tuple(values))

    @classmethod
    def anderson(cls, support: Sequence[float], weights: Sequence[float] | None = None,
                 seed: int = 0) -> "PotentialSpec":
        support = tuple(support)
        if weights is None:
            weights = (1.0 / len(support),) * len(support) if support else ()
        return cls("anderson", support=support, weights=tuple(weights), seed=int(seed))

    @classmethod
    def bernoulli(cls, amplitude: float = 1.0, seed: int = 0) -> "PotentialSpec":
        """Symmetric +-amplitude Anderson model."""
        return cls.anderson((-amplitude, amplitude), (0.5, 0.5), seed)

    @classmethod
    def fibonacci(cls, lam: float = 1.0, omega: float = 0.0,
                  alpha: float | None = None) -> "PotentialSpec":
        return cls("fibonacci", lam=lam, omega=omega, alpha=alpha)

    @classmethod
    def almost_mathieu(cls, lam: float, alpha: float, omega: float = 0.0) -> "PotentialSpec":
        return cls("almost_mathieu", lam=lam, alpha=alpha, omega=omega)

    # -- checks -------------------------------------------------------------
    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ValidationError(f"unknown potential kind {self.kind!r}")
        if self.kind == "explicit":
            if not all(math.isfinite(x) for x in self.values):
                raise ValidationError("explicit potential values must be finite")
        elif self.kind == "anderson":
            if len(set(self.support)) < 2:
                raise ValidationError("Anderson support needs at least two distinct values")
            if len(self.weights) != len(self.support):
                raise ValidationError("Anderson weights and support differ in length")
            if any(w < 0 for w in self.weights):
                raise ValidationError("Anderson weights must be nonnegative")
            if abs(math.fsum(self.weights) - 1.0) > 1e-12:
                raise ValidationError(
                    f"Anderson weights sum to {math.fsum(self.weights)!r}, not 1")
            if not all(math.isfinite(x) for x in self.support):
                raise ValidationError("Anderson support must be finite")
            if not 0 <= self.seed < 2**64:
                raise ValidationError("seed must be a 64-bit unsigned integer")
        elif self.kind in ("fibonacci", "almost_mathieu"):
            if not self.lam > 0:
                raise ValidationError("lambda must be positive")
            if not 0.0 <= self.omega < 1.0:
                raise ValidationError("omega must lie in [0, 1)")
            if self.kind == "almost_mathieu" and self.alpha is None:
                raise ValidationError("almost Mathieu needs alpha")
            if self.alpha is not None and not 0.0 <= self.alpha < 1.0:
                raise ValidationError("alpha must lie in [0, 1)")
            if not 0 <= self.seed < 2**64:
                raise ValidationError("seed must be a 64-bit unsigned integer")

    @property
    def is_random(self) -> bool:
        return self.kind == "anderson"

    @property
    def is_dynamical(self) -> bool:
        """True for ergodic ensembles v(n) = f(phi^n omega)."""
        return self.kind in ("zero", "anderson", "fibonacci", "almost_mathieu")

    def sup_bound(self) -> float:
        """Upper bound on sup|v(n)| over every realization of the ensemble."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "explicit":
            return max((abs(x) for x in self.values), default=0.0)
        if self.kind == "anderson":
            return max(abs(x) for x, w in zip(self.support, self.weights) if w > 0)
        if self.kind == "fibonacci":
            return self.lam
        return 2.0 * self.lam

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind}
        if self.kind == "explicit":
            d["values"] = list(self.values)
        elif self.kind == "anderson":
            d.update(support=list(self.support), weights=list(self.weights), seed=self.seed)
        elif self.kind == "fibonacci":
            d.update(lambda_=self.lam, omega=self.omega)
            if self.alpha is not None:
                d["alpha"] = self.alpha
        elif self.kind == "almost_mathieu":
            d.update(lambda_=self.lam, alpha=self.alpha, omega=self.omega)
        if "lambda_" in d:
            d["lambda"] = d.pop("lambda_")
            if self.seed:
                d["seed"] = self.seed  # drives the phase of realizations k >= 1
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "PotentialSpec":
        d = dict(d)
        try:
            kind = d.pop("kind")
        except KeyError:
            raise ValidationError("potential spec needs a 'kind' tag") from None
        allowed = {
            "zero": set(),
            "explicit": {"values"},
            "anderson": {"support", "weights", "seed"},
            "fibonacci": {"lambda", "omega", "alpha", "seed"},
            "almost_mathieu": {"lambda", "omega", "alpha", "seed"},
        }
        if kind not in allowed:
            raise ValidationError(f"unknown potential kind {kind!r}")
        extra = set(d) - allowed[kind]
        if extra:
            raise ValidationError(f"unexpected fields for {kind}: {sorted(extra)}")
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        if kind == "anderson" and "weights" not in d and "support" in d:
            d["weights"] = [1.0 / len(d["support"])] * len(d["support"])
        return cls(kind, **d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PotentialSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class PotentialValues:
    """A concrete potential v(1..N) (stored 0-based)."""

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise ValidationError("potential values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    @property
    def norm_sup(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def derived_seed(seed: int, index: int) -> int:
    """64-bit seed of the stream for realization ``index`` of master ``seed``.

    The derivation hashes ``(seed, index)`` (numpy ``SeedSequence`` spawn keys)
    so streams do not depend on the order in which realizations are drawn.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def realization(spec: PotentialSpec, index: int) -> PotentialSpec:
    """Spec of the ``index``-th sample of the ensemble described by ``spec``.

    Anderson samples get a derived seed; quasi-periodic samples shift the phase
    omega by a uniform draw (index 0 keeps the original phase).  Zero and
    explicit potentials are deterministic and returned unchanged.
    """
    if spec.kind == "anderson":
        return replace(spec, seed=derived_seed(spec.seed, index))
    if spec.kind in ("fibonacci", "almost_mathieu") and index != 0:
        rng = np.random.default_rng(derived_seed(spec.seed, index))
        return replace(spec, omega=float((spec.omega + rng.random()) % 1.0))
    return spec


def _rotation_frac(n: np.ndarray, alpha, omega) -> np.ndarray:
    x = np.longdouble(omega) + n.astype(np.longdouble) * alpha
    return x - np.floor(x)


def sample_potential(spec: PotentialSpec, N: int) -> PotentialValues:
    """Values v(1), ..., v(N) of the potential described by ``spec``.

    Anderson draws are i.i.d. from ``(support, weights)`` using a PCG64 stream
    seeded by ``spec.seed``; the result depends only on ``(spec, N)`` and a
    shorter chain is a prefix of a longer one.
    """
    if int(N) != N or N < 1:
        raise ValidationError(f"chain length must be a positive integer, got {N!r}")
    N = int(N)
    kind = spec.kind
    if kind == "zero":
        v = np.zeros(N)
    elif kind == "explicit":
        if len(spec.values) < N:
            raise ValidationError(
                f"explicit potential has {len(spec.values)} values, {N} requested")
        v = np.array(spec.values[:N])
    elif kind == "anderson":
        rng = np.random.default_rng(spec.seed)
        idx = rng.choice(len(spec.support), size=N, p=np.array(spec.weights))
        v = np.asarray(spec.support)[idx]
    elif kind == "fibonacci":
        alpha = _golden_alpha_ld() if spec.alpha is None else np.longdouble(spec.alpha)
        frac = _rotation_frac(np.arange(1, N + 1), alpha, spec.omega)
        v = np.where(frac >= 1 - alpha, -spec.lam, 0.0).astype(float)
    else:
        frac = _rotation_frac(np.arange(1, N + 1), np.longdouble(spec.alpha), spec.omega)
        v = (-2.0 * spec.lam * np.cos(2 * np.pi * frac.astype(float)))
    return PotentialValues(v)

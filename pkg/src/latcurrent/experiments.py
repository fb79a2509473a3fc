"""Experiment drivers behind the command line: currents, sweeps, fits, scans, validation.

Sweeps fan out over (N, realization) pairs in a thread pool capped by the
``LATCURRENT_THREADS`` environment variable; results are always gathered in
(N, realization) order so output does not depend on scheduling.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, NamedTuple, Sequence

import numpy as np
from scipy import stats

from . import closed_forms, lindblad, transfer
from .lattice import CouplingSpec, LatticeSpec, build_hamiltonian_dd
from .lindblad import GeneratorHandle, SolverError, make_generator
from .potentials import PotentialSpec, ValidationError, realization, sample_potential

METHODS = ("linv", "ode", "energy_integral", "closed_form")
CSV_COLUMNS = ("dims", "alphas", "beta", "potential_kind", "seed", "N", "method", "current",
               "stderr_current", "wall_ms", "realizations", "mean_log_current", "tol",
               "potential")


def worker_count() -> int:
    try:
        n = int(os.environ.get("LATCURRENT_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


# -- fits ----------------------------------------------------------------------

class Fit(NamedTuple):
    slope: float
    intercept: float
    r_squared: float
    stderr: float


def _linear_fit(x, y) -> Fit:
    res = stats.linregress(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return Fit(float(res.slope), float(res.intercept), float(res.rvalue ** 2), float(res.stderr))


def _fit_inputs(Ns, values):
    Ns = np.asarray(Ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if Ns.size != values.size:
        raise ValidationError("Ns and values differ in length")
    if Ns.size < 4:
        raise ValidationError("fits need at least 4 points")
    return Ns, values


def fit_exponential_rate(Ns, values, log_values: bool = False) -> Fit | None:
    """Least squares of -log(values) against N: returns (rate, intercept, r^2, stderr).

    ``values = A*exp(-rate*N)`` gives ``intercept = log A``.  Pass
    ``log_values=True`` when ``values`` already are logarithms (e.g. a mean
    log-current).  Returns ``None`` (not applicable) for non-positive data.
    """
    Ns, values = _fit_inputs(Ns, values)
    if log_values:
        y = values
        if not np.all(np.isfinite(y)):
            return None
    else:
        if np.any(values <= 0):
            return None
        y = np.log(values)
    f = _linear_fit(Ns, y)
    return Fit(-f.slope, f.intercept, f.r_squared, f.stderr)


def fit_power_law(Ns, values, log_values: bool = False) -> Fit | None:
    """Least squares of log(values) against log(N): returns (exponent, prefactor, r^2, stderr).

    ``values = A*N**(-exponent)``; ``None`` for non-positive data.
    """
    Ns, values = _fit_inputs(Ns, values)
    if np.any(Ns <= 0):
        return None
    if log_values:
        y = values
        if not np.all(np.isfinite(y)):
            return None
    else:
        if np.any(values <= 0):
            return None
        y = np.log(values)
    f = _linear_fit(np.log(Ns), y)
    return Fit(-f.slope, math.exp(f.intercept), f.r_squared, f.stderr)


# -- configuration and records -------------------------------------------------

@dataclass
class ExperimentConfig:
    dims: tuple[int, ...] = (10,)
    couplings: CouplingSpec = field(default_factory=CouplingSpec)
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    Ns: tuple[int, ...] = ()
    method: str = "linv"
    seed: int | None = None
    tol: float = 1e-9
    realizations: int = 1
    energies: tuple[float, ...] = ()
    lyapunov_N: int = 2000
    samples: int = 10
    R: float | None = None
    out: str | None = None
    format: str = "csv"
    timing: bool = True

    def __post_init__(self):
        self.dims = tuple(int(n) for n in self.dims)
        LatticeSpec(self.dims)
        self.Ns = tuple(int(n) for n in self.Ns)
        self.energies = tuple(float(e) for e in self.energies)
        if self.method not in METHODS:
            raise ValidationError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.method == "energy_integral" and self.couplings.beta != 0:
            raise ValidationError("method energy_integral requires beta = 0")
        if self.realizations < 1:
            raise ValidationError("realizations must be >= 1")
        if self.Ns and any(b <= a for a, b in zip(self.Ns, self.Ns[1:])):
            raise ValidationError("sweep lengths must be strictly increasing")
        if self.format not in ("csv", "jsonl"):
            raise ValidationError("format must be csv or jsonl")
        if not self.tol > 0:
            raise ValidationError("tol must be positive")
        if self.seed is not None:
            if not 0 <= int(self.seed) < 2**64:
                raise ValidationError("seed must be a 64-bit unsigned integer")
            if self.potential.kind in ("anderson", "fibonacci", "almost_mathieu"):
                self.potential = replace(self.potential, seed=int(self.seed))

    def to_dict(self) -> dict[str, Any]:
        c = self.couplings
        return {
            "dims": list(self.dims),
            "alphas": [c.alpha_in_l, c.alpha_out_l, c.alpha_in_r, c.alpha_out_r],
            "beta": c.beta,
            "potential": self.potential.to_dict(),
            "Ns": list(self.Ns),
            "method": self.method,
            "seed": self.seed,
            "tol": self.tol,
            "realizations": self.realizations,
            "energies": list(self.energies),
            "lyapunov_N": self.lyapunov_N,
            "samples": self.samples,
            "R": self.R,
            "out": self.out,
            "format": self.format,
            "timing": self.timing,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentConfig":
        d = dict(d)
        known = {"dims", "alphas", "beta", "potential", "Ns", "method", "seed", "tol",
                 "realizations", "energies", "lyapunov_N", "samples", "R", "out", "format",
                 "timing"}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        alphas = d.pop("alphas", [1.0, 0.0, 0.0, 1.0])
        if len(alphas) != 4:
            raise ValidationError("alphas needs four rates: in_l, out_l, in_r, out_r")
        beta = d.pop("beta", 0.0)
        d["couplings"] = CouplingSpec(*alphas, beta)
        pot = d.pop("potential", {"kind": "zero"})
        d["potential"] = pot if isinstance(pot, PotentialSpec) else PotentialSpec.from_dict(pot)
        if "dims" in d:
            d["dims"] = tuple(np.atleast_1d(d["dims"]).tolist())
        return cls(**d)


@dataclass
class ResultRecord:
    dims: tuple[int, ...]
    couplings: CouplingSpec
    potential: PotentialSpec
    seed: int | None
    method: str
    tol: float
    realizations: int
    current: float
    stderr_current: float
    mean_log_current: float
    wall_ms: float

    @property
    def N(self) -> int:
        return self.dims[0]

    def row(self) -> dict[str, Any]:
        c = self.couplings
        return {
            "dims": "x".join(str(n) for n in self.dims),
            "alphas": ";".join(repr(a) for a in c.as_tuple()[:4]),
            "beta": repr(c.beta),
            "potential_kind": self.potential.kind,
            "seed": "" if self.seed is None else str(self.seed),
            "N": str(self.N),
            "method": self.method,
            "current": repr(self.current),
            "stderr_current": repr(self.stderr_current),
            "wall_ms": f"{self.wall_ms:.3f}",
            "realizations": str(self.realizations),
            "mean_log_current": repr(self.mean_log_current),
            "tol": repr(self.tol),
            "potential": self.potential.to_json(),
        }

    def to_dict(self) -> dict[str, Any]:
        c = self.couplings
        return {
            "dims": list(self.dims),
            "alphas": list(c.as_tuple()[:4]),
            "beta": c.beta,
            "potential": self.potential.to_dict(),
            "potential_kind": self.potential.kind,
            "seed": self.seed,
            "N": self.N,
            "method": self.method,
            "tol": self.tol,
            "realizations": self.realizations,
            "current": self.current,
            "stderr_current": self.stderr_current,
            "mean_log_current": None if math.isnan(self.mean_log_current) else self.mean_log_current,
            "wall_ms": self.wall_ms,
        }

    def config(self) -> ExperimentConfig:
        """Configuration that reproduces this record through :func:`run_current`."""
        return ExperimentConfig(dims=self.dims, couplings=self.couplings,
                                potential=self.potential, method=self.method,
                                tol=self.tol, realizations=self.realizations)


def records_to_csv(records: Sequence[ResultRecord]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def records_to_jsonl(records: Sequence[ResultRecord]) -> str:
    return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in records)


# -- single currents -----------------------------------------------------------

def build_generator(dims, couplings: CouplingSpec, v) -> GeneratorHandle:
    lattice = LatticeSpec(tuple(dims))
    h = build_hamiltonian_dd(lattice, np.asarray(v, dtype=float))
    return make_generator(h, couplings, lattice)


def compute_current(dims, couplings: CouplingSpec, v, method: str = "linv",
                    tol: float = 1e-9, potential_kind: str | None = None) -> float:
    """Stationary current of one realization by the chosen method."""
    if method == "closed_form":
        if potential_kind not in (None, "zero") or np.any(np.asarray(v) != 0):
            raise ValidationError("closed_form needs the zero potential")
        return closed_forms.closed_form_dd(couplings, tuple(dims))
    g = build_generator(dims, couplings, v)
    if method == "linv":
        return lindblad.stationary_current(g)
    if method == "ode":
        return lindblad.current_via_ode(g)
    if method == "energy_integral":
        return transfer.current_via_energy_integral(g, tol=tol)
    raise ValidationError(f"unknown method {method!r}")


def _one(dims, couplings, spec, k, method, tol) -> tuple[float, float]:
    t0 = time.perf_counter()
    size = math.prod(dims)
    v = sample_potential(realization(spec, k), size).values
    J = compute_current(dims, couplings, v, method, tol, spec.kind)
    return J, (time.perf_counter() - t0) * 1e3


def _summarize(cfg: ExperimentConfig, dims, results) -> ResultRecord:
    currents = np.array([r[0] for r in results])
    wall = float(sum(r[1] for r in results)) if cfg.timing else 0.0
    n = currents.size
    stderr = float(np.std(currents, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    mlog = float(np.mean(np.log(currents))) if np.all(currents > 0) else math.nan
    return ResultRecord(tuple(dims), cfg.couplings, cfg.potential, cfg.seed, cfg.method,
                        cfg.tol, cfg.realizations, float(np.mean(currents)), stderr, mlog, wall)


def _map_ordered(fn: Callable, tasks: list) -> list:
    workers = min(worker_count(), max(len(tasks), 1))
    if workers <= 1:
        return [fn(*t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: fn(*t), tasks))


def run_current(cfg: ExperimentConfig) -> ResultRecord:
    """Current for ``cfg.dims`` averaged over ``cfg.realizations`` potential samples."""
    tasks = [(cfg.dims, cfg.couplings, cfg.potential, k, cfg.method, cfg.tol)
             for k in range(cfg.realizations)]
    return _summarize(cfg, cfg.dims, _map_ordered(_one, tasks))


@dataclass
class SweepResult:
    records: list[ResultRecord]
    exponential: Fit | None
    power_law: Fit | None

    def summary(self) -> dict[str, Any]:
        def fit_dict(f, names):
            if f is None:
                return {"applicable": False}
            return {"applicable": True, names[0]: f.slope, names[1]: f.intercept,
                    "r_squared": f.r_squared, "stderr": f.stderr}
        return {
            "Ns": [r.N for r in self.records],
            "exponential_fit": fit_dict(self.exponential, ("rate", "intercept")),
            "power_law_fit": fit_dict(self.power_law, ("exponent", "prefactor")),
        }


def run_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Currents over ``cfg.Ns`` (transport length; cross-section from ``cfg.dims[1:]``).

    Both fits use the mean log-current of each length.
    """
    if len(cfg.Ns) < 4:
        raise ValidationError("a sweep needs at least 4 lengths")
    cross = tuple(cfg.dims[1:])
    tasks, owners = [], []
    for i, N in enumerate(cfg.Ns):
        for k in range(cfg.realizations):
            tasks.append(((N,) + cross, cfg.couplings, cfg.potential, k, cfg.method, cfg.tol))
            owners.append(i)
    results = _map_ordered(_one, tasks)
    records = []
    for i, N in enumerate(cfg.Ns):
        mine = [r for r, o in zip(results, owners) if o == i]
        records.append(_summarize(cfg, (N,) + cross, mine))
    y = [r.mean_log_current for r in records]
    ok = all(math.isfinite(x) for x in y)
    expo = fit_exponential_rate(cfg.Ns, y, log_values=True) if ok else None
    power = fit_power_law(cfg.Ns, y, log_values=True) if ok else None
    return SweepResult(records, expo, power)


# -- Lyapunov / transfer-integral tables ----------------------------------------

def run_lyapunov(cfg: ExperimentConfig) -> tuple[list[transfer.LyapunovEstimate], transfer.LyapunovEstimate]:
    if not cfg.energies:
        raise ValidationError("empty energy grid")
    if not cfg.potential.is_dynamical:
        raise ValidationError("Lyapunov scans need a dynamically defined potential")
    E = np.asarray(cfg.energies)
    vals = transfer.lyapunov_samples(E, cfg.potential, cfg.lyapunov_N, cfg.samples)
    rows = [transfer._estimate(e, vals[i], cfg.lyapunov_N) for i, e in enumerate(E)]
    best = min(rows, key=lambda r: r.mean)
    return rows, best


def lyapunov_table(rows, fmt: str = "csv") -> str:
    if fmt == "jsonl":
        return "".join(json.dumps(asdict(r), sort_keys=True) + "\n" for r in rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["energy", "mean", "std_error", "N", "samples"])
    for r in rows:
        w.writerow([repr(r.energy), repr(r.mean), repr(r.std_error), r.N, r.samples])
    return buf.getvalue()


def run_integral(cfg: ExperimentConfig) -> list[dict[str, Any]]:
    """Transfer integral for each length in ``cfg.Ns`` (or ``cfg.dims[0]``), one row per realization."""
    Ns = cfg.Ns or (cfg.dims[0],)
    rows = []
    for N in Ns:
        for k in range(cfg.realizations):
            v = sample_potential(realization(cfg.potential, k), N)
            val, info = transfer.transfer_integral(v, R=cfg.R, return_info=True)
            rows.append({"N": N, "realization": k, "integral": val,
                         "tail_bound": info["tail_bound"], "R": info["R"]})
    return rows


# -- validation suite ----------------------------------------------------------

@dataclass
class Check:
    name: str
    passed: bool
    margin: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<34s} margin={self.margin:.3e}  {self.detail}"


def _random_chain(rng, N, beta=0.0, vmax=1.0):
    v = rng.uniform(-vmax, vmax, N)
    c = CouplingSpec(*rng.uniform(0.2, 1.5, 4), beta)
    return make_generator(build_hamiltonian_dd(LatticeSpec.chain(N), v), c)


def validate(seed: int = 20240601, ode_tol: float = 1e-5, generator_sign: float = 1.0,
             quick: bool = True) -> list[Check]:
    """Cross-method oracle suite at pinned seeds.

    ``ode_tol`` is the relative tolerance of the ODE-vs-linv comparison;
    ``generator_sign=-1`` is a mutation hook that flips the generator before
    the spectrum check (that check must then fail).
    """
    rng = np.random.default_rng(seed)
    checks: list[Check] = []

    # exact chain formula for v = 0
    worst = 0.0
    for N in (2, 5, 20):
        for beta in (0.0, 0.8):
            for _ in range(4):
                c = CouplingSpec(*rng.uniform(0.1, 2.0, 4), beta)
                g = make_generator(build_hamiltonian_dd(LatticeSpec.chain(N), np.zeros(N)), c)
                ref = closed_forms.closed_form_1d(c, N)
                worst = max(worst, abs(lindblad.stationary_current(g) - ref) / abs(ref))
    checks.append(Check("chain closed form (v=0)", worst <= 1e-10, 1e-10 - worst,
                        f"max rel err {worst:.2e}"))

    # box formula
    worst = 0.0
    for dims in ((4, 2), (3, 2, 2)):
        c = CouplingSpec(*rng.uniform(0.2, 1.5, 4), 0.6)
        lat = LatticeSpec(dims)
        g = make_generator(build_hamiltonian_dd(lat, np.zeros(lat.size)), c, lat)
        ref = closed_forms.closed_form_dd(c, dims)
        worst = max(worst, abs(lindblad.stationary_current(g) - ref) / abs(ref))
    checks.append(Check("box closed form (v=0)", worst <= 1e-9, 1e-9 - worst,
                        f"max rel err {worst:.2e}"))

    # three routes
    worst_ode = worst_ei = 0.0
    for i in range(3 if quick else 10):
        g = _random_chain(rng, 6 + 2 * i)
        J = lindblad.stationary_current(g)
        worst_ode = max(worst_ode, abs(lindblad.current_via_ode(g) - J) / abs(J))
        worst_ei = max(worst_ei, abs(transfer.current_via_energy_integral(g, tol=1e-10) - J) / abs(J))
    checks.append(Check("ODE vs linv", worst_ode <= ode_tol, ode_tol - worst_ode,
                        f"max rel err {worst_ode:.2e} (tol {ode_tol:g})"))
    checks.append(Check("energy integral vs linv", worst_ei <= 1e-5, 1e-5 - worst_ei,
                        f"max rel err {worst_ei:.2e}"))

    # transfer identity and resolvent bounds
    worst_id = 0.0
    worst_bound = -np.inf
    for _ in range(30):
        N = int(rng.integers(1, 25))
        g = _random_chain(rng, N)
        c = g.couplings
        E = float(rng.uniform(-5, 5))
        g11, g1N, gN1, gNN = transfer.resolvent_entries(E, g)
        worst_id = max(worst_id, transfer.transfer_identity_residual(E, g))
        m = 1 / (4 * c.zeta_l * c.zeta_r)
        worst_bound = max(worst_bound, abs(g11) - 1 / c.zeta_l, abs(gNN) - 1 / c.zeta_r,
                          abs(g1N) ** 2 - m, abs(gN1) ** 2 - m)
    checks.append(Check("transfer/resolvent identity", worst_id <= 1e-9, 1e-9 - worst_id,
                        f"max scaled residual {worst_id:.2e}"))
    checks.append(Check("resolvent corner bounds", worst_bound <= 1e-12, -worst_bound,
                        f"max excess {worst_bound:.2e}"))

    # generator spectrum in the open left half-plane
    worst_re = -np.inf
    for _ in range(5):
        g = _random_chain(rng, int(rng.integers(2, 8)), beta=float(rng.uniform(0, 1)))
        ev = np.linalg.eigvals(generator_sign * lindblad.vectorized_generator(g))
        worst_re = max(worst_re, float(ev.real.max()))
    checks.append(Check("generator spectrum Re < 0", worst_re < 0, -worst_re,
                        f"max Re {worst_re:.3e}"))

    # site independence
    worst = 0.0
    for dims in ((9,), (4, 3)):
        lat = LatticeSpec(dims)
        c = CouplingSpec(*rng.uniform(0.2, 1.5, 4), float(rng.uniform(0, 1)))
        g = make_generator(build_hamiltonian_dd(lat, rng.uniform(-1, 1, lat.size)), c, lat)
        R = lindblad.stationary_two_point(g)
        J = lindblad.stationary_current(g)
        worst = max(worst, max(abs(lindblad.site_current(R, n, lat) - J)
                               for n in range(1, lat.length)))
    checks.append(Check("site independence", worst <= 1e-9, 1e-9 - worst,
                        f"max deviation {worst:.2e}"))

    # symmetric-bath parametrization
    worst = 0.0
    for _ in range(20):
        G, mu, gam = rng.uniform(0.1, 3), rng.uniform(-1, 1), rng.uniform(0, 2)
        N = int(rng.integers(2, 200))
        a = closed_forms.znidaric_current(G, mu, gam, N)
        b = closed_forms.closed_form_1d(closed_forms.znidaric_map(G, mu, gam), N)
        worst = max(worst, abs(a - b))
    checks.append(Check("symmetric-bath map", worst <= 1e-12, 1e-12 - worst,
                        f"max abs err {worst:.2e}"))
    return checks


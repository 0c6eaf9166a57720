"""Reproducible sampling, one-dimensional quadratic-transport comparison, and
consolidated normality diagnostics.

RNG contract.  The generator is counter-based (numpy's Philox 4x64).  A call
``sample(f, n, seed, stream)`` partitions the index range into fixed blocks of
``BLOCK_SIZE`` samples; block ``b`` draws from a Philox generator keyed by the
pure function

    key(seed, stream, b) = ((seed mod 2**64) << 64) | ((stream mod 2**32) << 32) | b

and the blocks are concatenated in block order.  Workers only parallelize
block evaluation, so output is bit-identical for every worker count and every
backend, and regenerating with equal (seed, stream) reproduces the values
exactly.  The Gaussian reference used by diagnostics owns the reserved stream
``GAUSSIAN_REFERENCE_STREAM``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
import numpy as np

from ._kernels import accumulate_terms
from .algebra import (
    ChaosPoly,
    MultiIndex,
    expectation,
    inner_product,
    mul,
)
from .ensembles import InputLaw, MultilinearPoly, build_ensemble, substitute_gaussian
from .errors import ParseError, PreconditionError
from .influence import rho_q
from .malliavin import carre_du_champ

BLOCK_SIZE = 1 << 16
GENERATOR_ID = "philox4x64-block65536"
GAUSSIAN_REFERENCE_STREAM = 2**31 - 1

_MASK64 = (1 << 64) - 1
_MASK32 = (1 << 32) - 1


@dataclass(frozen=True)
class SampleSet:
    """Array of draws plus everything needed to regenerate it bit-identically."""

    values: np.ndarray
    seed: int
    stream: int
    generator_id: str
    source_description: str

    def __post_init__(self):
        self.values.setflags(write=False)

    def __len__(self) -> int:
        return int(self.values.shape[0])


def _block_rng(seed: int, stream: int, block: int) -> np.random.Generator:
    key = ((seed & _MASK64) << 64) | ((stream & _MASK32) << 32) | (block & _MASK32)
    return np.random.Generator(np.random.Philox(key=key))


def _blocks(n: int) -> list[tuple[int, int, int]]:
    """(block index, offset, size) tuples covering range(n)."""
    out = []
    block = 0
    offset = 0
    while offset < n:
        size = min(BLOCK_SIZE, n - offset)
        out.append((block, offset, size))
        block += 1
        offset += size
    return out


def _draw_law(rng: np.random.Generator, law: InputLaw, shape) -> np.ndarray:
    if law.kind == "gaussian":
        return rng.standard_normal(shape)
    if law.kind == "rademacher":
        return rng.integers(0, 2, size=shape).astype(np.float64) * 2.0 - 1.0
    if law.kind == "uniform":
        half = math.sqrt(3.0)
        return rng.uniform(-half, half, size=shape)
    if law.kind == "discrete":
        cumulative = np.cumsum([float(p) for p in law.probabilities])
        cumulative[-1] = 1.0
        u = rng.random(shape)
        picks = np.searchsorted(cumulative, u, side="right")
        points = np.array([float(p) for p in law.points])
        return points[picks]
    raise PreconditionError(f"unknown law kind {law.kind!r}")


class _ChaosSampler:
    """Encodes a Hermite-basis polynomial for batched evaluation."""

    def __init__(self, f: ChaosPoly):
        self.variables = f.variables()
        var_pos = {v: i for i, v in enumerate(self.variables)}
        slots: dict[tuple[int, int], int] = {}
        coeffs: list[float] = []
        ptr = [0]
        slot_list: list[int] = []
        for idx in sorted(f.terms, key=MultiIndex.sort_key):
            coeffs.append(float(f.terms[idx]))
            for v, d in idx.entries:
                key = (var_pos[v], d)
                slot_list.append(slots.setdefault(key, len(slots)))
            ptr.append(len(slot_list))
        self.coeffs = np.array(coeffs, dtype=np.float64)
        self.term_ptr = np.array(ptr, dtype=np.int64)
        self.term_slots = np.array(slot_list, dtype=np.int64)
        self.slot_keys = sorted(slots, key=slots.get)
        self.max_degree = max((d for _, d in self.slot_keys), default=0)

    def evaluate_block(self, rng: np.random.Generator, size: int) -> np.ndarray:
        nvars = len(self.variables)
        if nvars == 0:
            base = self.coeffs.sum() if self.coeffs.size else 0.0
            return np.full(size, base)
        draws = rng.standard_normal((size, nvars))
        hermite = np.empty((nvars, self.max_degree + 1, size))
        hermite[:, 0, :] = 1.0
        if self.max_degree >= 1:
            hermite[:, 1, :] = draws.T
        for k in range(1, self.max_degree):
            hermite[:, k + 1, :] = draws.T * hermite[:, k, :] - k * hermite[:, k - 1, :]
        values = np.empty((len(self.slot_keys), size))
        for row, (vp, deg) in enumerate(self.slot_keys):
            values[row] = hermite[vp, deg]
        return accumulate_terms(values, self.coeffs, self.term_ptr, self.term_slots)


class _MultilinearSampler:
    """Encodes a multilinear polynomial over its input law for batched evaluation."""

    def __init__(self, p: MultilinearPoly):
        self.law = p.law
        self.variables = p.variables()
        var_pos = {v: i for i, v in enumerate(self.variables)}
        ensemble = build_ensemble(p.law, p.max_level)
        self.ensemble = ensemble
        slots: dict[tuple[int, int], int] = {}
        coeffs: list[float] = []
        ptr = [0]
        slot_list: list[int] = []
        for term in sorted(p.terms, key=lambda t: (len(t), sorted(t))):
            coeffs.append(float(p.terms[term]))
            for v, k in sorted(term):
                slot_list.append(slots.setdefault((var_pos[v], k), len(slots)))
            ptr.append(len(slot_list))
        self.coeffs = np.array(coeffs, dtype=np.float64)
        self.term_ptr = np.array(ptr, dtype=np.int64)
        self.term_slots = np.array(slot_list, dtype=np.int64)
        self.slot_keys = sorted(slots, key=slots.get)

    def evaluate_block(self, rng: np.random.Generator, size: int) -> np.ndarray:
        nvars = len(self.variables)
        if nvars == 0:
            base = self.coeffs.sum() if self.coeffs.size else 0.0
            return np.full(size, base)
        draws = _draw_law(rng, self.law, (size, nvars))
        values = np.empty((len(self.slot_keys), size))
        for row, (vp, level) in enumerate(self.slot_keys):
            poly = self.ensemble.polys[level]
            col = draws[:, vp]
            acc = np.zeros(size)
            for c in reversed(poly.coeffs):
                acc = acc * col + float(c)
            values[row] = acc / math.sqrt(float(poly.norm_sq))
        return accumulate_terms(values, self.coeffs, self.term_ptr, self.term_slots)


def _run_blocks(sampler, n: int, seed: int, stream: int, workers: int) -> np.ndarray:
    spans = _blocks(n)
    out = np.empty(n)

    def job(span):
        block, offset, size = span
        rng = _block_rng(seed, stream, block)
        return offset, size, sampler.evaluate_block(rng, size)

    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, spans))
    else:
        results = [job(span) for span in spans]
    for offset, size, chunk in results:
        out[offset : offset + size] = chunk
    return out


def sample(
    f: ChaosPoly | MultilinearPoly,
    n: int,
    seed: int,
    stream: int = 0,
    workers: int = 1,
) -> SampleSet:
    """``n`` independent draws of the polynomial, deterministic in (seed, stream)."""
    if n < 1:
        raise PreconditionError(f"sample size must be >= 1, got {n}")
    if isinstance(f, ChaosPoly):
        sampler = _ChaosSampler(f)
        source = f"chaos-poly terms={len(f.terms)} vars={list(sampler.variables)}"
    elif isinstance(f, MultilinearPoly):
        sampler = _MultilinearSampler(f)
        source = (
            f"multilinear({f.law.kind}) terms={len(f.terms)} vars={list(sampler.variables)}"
        )
    else:
        raise TypeError(f"cannot sample {type(f).__name__}")
    values = _run_blocks(sampler, n, seed, stream, workers)
    return SampleSet(
        values=values,
        seed=seed,
        stream=stream,
        generator_id=GENERATOR_ID,
        source_description=source,
    )


def _gaussian_reference(n: int, seed: int, scale: float, workers: int = 1) -> SampleSet:
    class _Std:
        variables = (1,)

        @staticmethod
        def evaluate_block(rng, size):
            return rng.standard_normal(size) * scale

    values = _run_blocks(_Std, n, seed, GAUSSIAN_REFERENCE_STREAM, workers)
    return SampleSet(
        values=values,
        seed=seed,
        stream=GAUSSIAN_REFERENCE_STREAM,
        generator_id=GENERATOR_ID,
        source_description=f"gaussian-reference scale={scale!r}",
    )


# -- sample files ---------------------------------------------------------------


def write_sample_file(sample_set: SampleSet, path) -> None:
    with open(path, "w") as handle:
        handle.write(
            f"# seed={sample_set.seed} stream={sample_set.stream} "
            f"generator={sample_set.generator_id}\n"
        )
        for value in sample_set.values:
            handle.write(f"{float(value)!r}\n")


def read_sample_file(path) -> SampleSet:
    seed = stream = 0
    generator = "unknown"
    values = []
    with open(path) as handle:
        first = handle.readline()
        if first.startswith("#"):
            for token in first[1:].split():
                key, _, value = token.partition("=")
                if key == "seed":
                    seed = int(value)
                elif key == "stream":
                    stream = int(value)
                elif key == "generator":
                    generator = value
        else:
            values.append(_parse_sample_line(first, 1))
        for lineno, line in enumerate(handle, start=2):
            if line.strip():
                values.append(_parse_sample_line(line, lineno))
    return SampleSet(
        values=np.array(values, dtype=np.float64),
        seed=seed,
        stream=stream,
        generator_id=generator,
        source_description=f"loaded from {path}",
    )


def _parse_sample_line(line: str, lineno: int) -> float:
    try:
        return float(line.strip())
    except ValueError:
        raise ParseError(f"sample file line {lineno}: bad value {line.strip()!r}") from None


# -- distances and exact diagnostics ---------------------------------------------


def w2_1d(a: SampleSet | np.ndarray, b: SampleSet | np.ndarray) -> float:
    """Empirical quadratic transport cost between two one-dimensional samples.

    Sorts both; unequal sizes interpolate the smaller sample's quantile
    function at the larger sample's plotting positions.
    """
    xs = np.sort(np.asarray(a.values if isinstance(a, SampleSet) else a, dtype=np.float64))
    ys = np.sort(np.asarray(b.values if isinstance(b, SampleSet) else b, dtype=np.float64))
    if xs.size == 0 or ys.size == 0:
        raise PreconditionError("cannot compare empty sample sets")
    if xs.size != ys.size:
        if xs.size < ys.size:
            xs, ys = ys, xs
        # xs is the larger sample; interpolate the smaller at its positions
        pos_large = (np.arange(xs.size) + 0.5) / xs.size
        pos_small = (np.arange(ys.size) + 0.5) / ys.size
        ys = np.interp(pos_large, pos_small, ys)
    return float(np.sqrt(np.mean((xs - ys) ** 2)))


def var_gamma(f: ChaosPoly) -> Fraction:
    """Exact variance of the carre du champ of ``(f, f)``; zero iff degree <= 1."""
    gamma = carre_du_champ(f, f)
    return inner_product(gamma, gamma) - expectation(gamma) ** 2


def excess_kurtosis(f: ChaosPoly) -> Fraction:
    """Exact ``E[(f - Ef)**4] / Var(f)**2 - 3``."""
    centered = f - ChaosPoly.constant(expectation(f))
    variance = inner_product(centered, centered)
    if variance == 0:
        raise PreconditionError("excess kurtosis needs positive variance")
    square = mul(centered, centered)
    fourth = inner_product(square, square)
    return fourth / variance**2 - 3


@dataclass(frozen=True)
class NormalityReport:
    """Finite-size readout of the asymptotic-normality criteria for one polynomial."""

    variance: Fraction
    excess_kurtosis: Fraction
    var_gamma: Fraction
    rho: dict[int, float]
    w2_to_gaussian: float
    inputs: dict

    def to_json_dict(self) -> dict:
        return {
            "variance": float(self.variance),
            "variance_exact": str(self.variance),
            "excess_kurtosis": float(self.excess_kurtosis),
            "excess_kurtosis_exact": str(self.excess_kurtosis),
            "var_gamma": float(self.var_gamma),
            "var_gamma_exact": str(self.var_gamma),
            "rho": {str(q): v for q, v in sorted(self.rho.items())},
            "w2_to_gaussian": self.w2_to_gaussian,
            "inputs": self.inputs,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))


def normality_report(
    f: ChaosPoly,
    n_samples: int,
    seed: int,
    extra_vars: int | None = None,
    workers: int = 1,
    max_basis_dim: int | None = None,
) -> NormalityReport:
    """Variance, excess kurtosis, carre-du-champ variance, influence values up
    to degree floor(deg/2), and the empirical distance to a matched Gaussian."""
    centered = f - ChaosPoly.constant(expectation(f))
    variance = inner_product(centered, centered)
    if variance == 0:
        raise PreconditionError("normality diagnostics need a non-deterministic polynomial")
    degree = f.degree or 0
    rho: dict[int, float] = {}
    for q in range(1, max(1, degree // 2) + 1):
        rho[q] = rho_q(f, q, extra_vars, max_basis_dim).value
    observed = sample(f, n_samples, seed, stream=0, workers=workers)
    reference = _gaussian_reference(
        n_samples, seed, math.sqrt(float(variance)), workers=workers
    )
    shifted = observed.values - float(expectation(f))
    w2 = w2_1d(shifted, reference.values)
    return NormalityReport(
        variance=variance,
        excess_kurtosis=excess_kurtosis(f),
        var_gamma=var_gamma(f),
        rho=rho,
        w2_to_gaussian=w2,
        # worker count is deliberately not echoed: it cannot affect the values
        inputs={
            "n_samples": n_samples,
            "seed": seed,
            "stream": 0,
            "reference_stream": GAUSSIAN_REFERENCE_STREAM,
            "extra_vars": extra_vars,
            "generator": GENERATOR_ID,
        },
    )


def invariance_gap(
    p: MultilinearPoly, n_samples: int, seed: int, workers: int = 1
) -> float:
    """Empirical transport distance between the law of ``p`` under its inputs
    and under independent standard Gaussians (small iff no variable dominates)."""
    original = sample(p, n_samples, seed, stream=0, workers=workers)
    image = sample(
        substitute_gaussian(p), n_samples, seed,
        stream=GAUSSIAN_REFERENCE_STREAM, workers=workers,
    )
    return w2_1d(original, image)

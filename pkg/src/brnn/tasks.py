"""Synthetic sequence-regression tasks and the CSV interchange format.

Three generators:
  sine_track      s_k = sin(omega*k + phase) (+ noise), d_k = sin(omega*(k+1) + phase)
  bandpass_filter s_k = uniform noise, d_k = second-order stable filter of s
  lag_copy        s_k = uniform noise, d_k = s_{k-lag} (zeros before the lag)

Noise comes from a splitmix64 stream so datasets are reproducible across
implementations: state advances by the golden-gamma constant, the output
is finalized by two xor-multiply rounds, and the top 53 bits are mapped to
[0, 1). Uniform noise in [-amp, amp) is amp*(2u - 1).

CSV schema: header "k,s1..sm,d1..dr", one row per step k = 0..N, floats
printed with full round-trip precision.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DatasetFormatError
from .model import Sequence

TASK_KINDS = ("sine_track", "bandpass_filter", "lag_copy")

_MASK64 = (1 << 64) - 1


def splitmix64(seed: int):
    """Infinite stream of 64-bit integers from the splitmix64 generator."""
    state = seed & _MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield z ^ (z >> 31)


def uniform_noise(seed: int, shape, amp: float) -> np.ndarray:
    """Array of i.i.d. uniform samples in [-amp, amp)."""
    gen = splitmix64(seed)
    n = int(np.prod(shape))
    u = np.fromiter(((next(gen) >> 11) * 2.0 ** -53 for _ in range(n)),
                    dtype=float, count=n)
    return (amp * (2.0 * u - 1.0)).reshape(shape)


@dataclass
class TaskSpec:
    kind: str
    N: int
    m: int = 1
    r: int = 1
    omega: float = 0.3           # sine_track frequency
    phase: float = 0.0           # sine_track phase
    coeffs: tuple = (1.2, -0.72, 1.0)   # (a1, a2, b0): d_k = a1 d_{k-1} + a2 d_{k-2} + b0 s_k
    lag: int = 1                 # lag_copy delay
    noise: float = 0.0           # uniform noise amplitude (0 = default 1.0 for noise-driven tasks)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise ConfigurationError(f"unknown task kind {self.kind!r}")
        if self.N < 1:
            raise ConfigurationError("N must be >= 1")
        if self.m < 1 or self.r < 1:
            raise ConfigurationError("m and r must be >= 1")
        if self.kind == "lag_copy" and not 0 <= self.lag < self.N:
            raise ConfigurationError(f"lag must satisfy 0 <= lag < N, got {self.lag}")
        if self.kind in ("lag_copy", "bandpass_filter") and self.r > self.m:
            raise ConfigurationError(f"{self.kind} requires r <= m")
        if self.kind == "bandpass_filter":
            a1, a2, _ = self.coeffs
            roots = np.roots([1.0, -a1, -a2])
            if roots.size and np.abs(roots).max() >= 1.0:
                raise ConfigurationError(
                    f"filter poles {roots} not strictly inside the unit circle")


def _filter(coeffs, s: np.ndarray) -> np.ndarray:
    a1, a2, b0 = coeffs
    d = np.zeros_like(s)
    for k in range(s.shape[0]):
        d[k] = b0 * s[k]
        if k >= 1:
            d[k] += a1 * d[k - 1]
        if k >= 2:
            d[k] += a2 * d[k - 2]
    return d


def gen_task(spec: TaskSpec) -> Sequence:
    """Deterministically generate the task's input/target sequence."""
    rows = spec.N + 1
    if spec.kind == "sine_track":
        k = np.arange(rows)
        base = np.sin(spec.omega * k + spec.phase)
        s = np.tile(base[:, None], (1, spec.m))
        if spec.noise > 0.0:
            s = s + uniform_noise(spec.seed, (rows, spec.m), spec.noise)
        d = np.tile(np.sin(spec.omega * (k + 1) + spec.phase)[:, None], (1, spec.r))
        return Sequence(s=s, d=d)

    amp = spec.noise if spec.noise > 0.0 else 1.0
    s = uniform_noise(spec.seed, (rows, spec.m), amp)
    if spec.kind == "bandpass_filter":
        d = np.column_stack([_filter(spec.coeffs, s[:, j]) for j in range(spec.r)])
    else:  # lag_copy
        d = np.zeros((rows, spec.r))
        if spec.lag < rows:
            d[spec.lag:] = s[:rows - spec.lag, :spec.r]
    return Sequence(s=s, d=d)


def write_csv(seq: Sequence, path) -> None:
    """Write the dataset with full round-trip float precision."""
    m, r = seq.m, seq.r
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["k"] + [f"s{j + 1}" for j in range(m)]
                        + [f"d{j + 1}" for j in range(r)])
        for k in range(seq.N + 1):
            writer.writerow([k] + [repr(float(v)) for v in seq.s[k]]
                            + [repr(float(v)) for v in seq.d[k]])


def _parse_header(fields):
    if not fields or fields[0] != "k":
        raise DatasetFormatError("header must start with 'k'", line=1)
    m = 0
    i = 1
    while i < len(fields) and fields[i] == f"s{m + 1}":
        m += 1
        i += 1
    r = 0
    while i < len(fields) and fields[i] == f"d{r + 1}":
        r += 1
        i += 1
    if i != len(fields) or m < 1 or r < 1:
        raise DatasetFormatError(
            f"header must be k,s1..sm,d1..dr, got {','.join(fields)}", line=1)
    return m, r


def read_csv(path) -> Sequence:
    """Parse a dataset written by write_csv; errors carry the line number."""
    path = Path(path)
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError("empty file", line=1) from None
        m, r = _parse_header(header)
        s_rows, d_rows = [], []
        for lineno, fields in enumerate(reader, start=2):
            if not fields:
                continue
            if len(fields) != 1 + m + r:
                raise DatasetFormatError(
                    f"expected {1 + m + r} columns, got {len(fields)}", line=lineno)
            k = lineno - 2
            if fields[0] != str(k):
                raise DatasetFormatError(
                    f"expected k={k}, got {fields[0]!r}", line=lineno)
            try:
                vals = [float(v) for v in fields[1:]]
            except ValueError as exc:
                raise DatasetFormatError(str(exc), line=lineno) from None
            if not all(np.isfinite(vals)):
                raise DatasetFormatError("non-finite value", line=lineno)
            s_rows.append(vals[:m])
            d_rows.append(vals[m:])
    if len(s_rows) < 2:
        raise DatasetFormatError(
            f"need at least 2 rows (N >= 1), got {len(s_rows)}", line=len(s_rows) + 1)
    return Sequence(s=np.array(s_rows), d=np.array(d_rows))

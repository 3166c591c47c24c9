"""Problem instances for minimum-cardinality constant-modulus beamforming.

An instance is a complex channel matrix ``H`` (N antennas x K users), a desired
receive vector ``s`` and an error bound ``tol`` on ``||s - H^T x||_2``.  The
squared budget ``delta = tol**2`` is what the real-valued reformulation uses.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

QPSK_MAGNITUDE = 1.414
DEFAULT_EPS = 1e-5

# preset name -> multiple of q used as the squared error budget
PRESETS = {"0.1q": 0.1, "0.2q": 0.2}


class InstanceFormatError(ValueError):
    """Raised when an instance file is malformed or dimensionally inconsistent."""


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    channel: np.ndarray
    desired: np.ndarray
    tol: float
    modulus: float = 1.0

    def __post_init__(self):
        H = np.array(self.channel, dtype=complex)
        s = np.array(self.desired, dtype=complex).reshape(-1)
        if H.ndim != 2:
            raise ValueError("channel must be a 2-D matrix")
        n, k = H.shape
        if n < 1 or k < 1:
            raise ValueError("channel must have at least one antenna and one user")
        if s.shape != (k,):
            raise ValueError(f"desired has length {s.shape[0]}, expected {k}")
        if not np.all(np.any(H != 0, axis=0)):
            raise ValueError("channel has an all-zero column")
        if not (self.tol >= 0 and math.isfinite(self.tol)):
            raise ValueError("tol must be finite and nonnegative")
        if self.modulus != 1.0:
            raise ValueError("only unit modulus is supported")
        H.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "channel", H)
        object.__setattr__(self, "desired", s)
        object.__setattr__(self, "tol", float(self.tol))

    @property
    def n_antennas(self) -> int:
        return self.channel.shape[0]

    @property
    def n_users(self) -> int:
        return self.channel.shape[1]

    @property
    def delta(self) -> float:
        """Squared error budget."""
        return self.tol * self.tol

    def __eq__(self, other):
        if not isinstance(other, ProblemInstance):
            return NotImplemented
        return (
            self.tol == other.tol
            and self.channel.shape == other.channel.shape
            and np.array_equal(self.channel, other.channel)
            and np.array_equal(self.desired, other.desired)
        )

    __hash__ = None


@dataclass(frozen=True)
class RealInstance:
    """Real/imaginary split of an instance.

    The error constraint reads ``||s_real - A @ concat(w, z)||^2 <= delta`` with
    ``A = [[Re H^T, -Im H^T], [Im H^T, Re H^T]]``.
    """

    re_h: np.ndarray
    im_h: np.ndarray
    re_s: np.ndarray
    im_s: np.ndarray
    delta: float
    matrix: np.ndarray = field(repr=False)
    target: np.ndarray = field(repr=False)

    @property
    def n_antennas(self) -> int:
        return self.re_h.shape[0]

    def error_sq(self, w, z) -> float:
        """Left side of the real-valued error constraint."""
        w = np.asarray(w, dtype=float)
        z = np.asarray(z, dtype=float)
        re_part = self.re_s - (self.re_h.T @ w - self.im_h.T @ z)
        im_part = self.im_s - (self.re_h.T @ z + self.im_h.T @ w)
        return float(np.sum(re_part**2) + np.sum(im_part**2))

    def residual_vector(self, w, z) -> np.ndarray:
        return self.target - self.matrix @ np.concatenate([w, z])

    def to_complex(self) -> tuple[np.ndarray, np.ndarray]:
        return self.re_h + 1j * self.im_h, self.re_s + 1j * self.im_s


@dataclass(frozen=True)
class CandidateSolution:
    w: np.ndarray
    z: np.ndarray
    b: np.ndarray

    @property
    def cardinality(self) -> int:
        return int(np.sum(np.asarray(self.b) > 0.5))

    @classmethod
    def from_complex(cls, x) -> "CandidateSolution":
        x = np.asarray(x, dtype=complex)
        b = (x != 0).astype(float)
        return cls(x.real.copy(), x.imag.copy(), b)

    def to_complex(self) -> np.ndarray:
        return np.where(np.asarray(self.b) > 0.5, self.w + 1j * self.z, 0.0)


@dataclass(frozen=True)
class ComplexSolution:
    x: np.ndarray

    @property
    def cardinality(self) -> int:
        return int(np.count_nonzero(self.x))

    def check_modulus(self, eps: float = DEFAULT_EPS) -> bool:
        mag = np.abs(self.x[self.x != 0])
        return bool(np.all((mag >= 1.0 - eps) & (mag <= 1.0)))


def to_real(inst: ProblemInstance) -> RealInstance:
    H = inst.channel
    s = inst.desired
    re_h, im_h = H.real.copy(), H.imag.copy()
    matrix = np.block([[re_h.T, -im_h.T], [im_h.T, re_h.T]])
    target = np.concatenate([s.real, s.imag])
    return RealInstance(re_h, im_h, s.real.copy(), s.imag.copy(), inst.delta, matrix, target)


def residual(inst: ProblemInstance, x) -> float:
    """Euclidean error ``||s - H^T x||_2``."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (inst.n_antennas,):
        raise ValueError(f"x has shape {x.shape}, expected ({inst.n_antennas},)")
    return float(np.linalg.norm(inst.desired - inst.channel.T @ x))


def is_feasible(inst: ProblemInstance, sol: CandidateSolution, eps: float = DEFAULT_EPS) -> bool:
    w = np.asarray(sol.w, dtype=float)
    z = np.asarray(sol.z, dtype=float)
    b = np.asarray(sol.b, dtype=float)
    if not np.all((b == 0) | (b == 1)):
        return False
    off = b == 0
    if np.any(w[off] != 0) or np.any(z[off] != 0):
        return False
    mod = w[~off] ** 2 + z[~off] ** 2
    if np.any(mod < 1 - eps) or np.any(mod > 1 + eps):
        return False
    err = residual(inst, w + 1j * z)
    return err * err <= inst.delta * (1 + eps)


def preset_tol(preset: str | float, q: float = QPSK_MAGNITUDE, squared: bool = True) -> float:
    """Error bound for a benchmark preset such as ``"0.1q"``.

    With ``squared=True`` the preset value is read as the squared bound, so
    ``"0.1q"`` gives ``tol = sqrt(0.1 q)``; otherwise the value is the bound itself.
    Plain numbers pass through unchanged as ``tol``.
    """
    if isinstance(preset, str) and preset in PRESETS:
        value = PRESETS[preset] * q
        return math.sqrt(value) if squared else value
    value = float(preset)
    if value < 0:
        raise ValueError("tol must be nonnegative")
    return value


def qpsk_symbol(index: int, q: float = QPSK_MAGNITUDE) -> complex:
    return q * complex(math.cos(math.pi * (2 * index + 1) / 4), math.sin(math.pi * (2 * index + 1) / 4))


def generate_instance(n: int, k: int, delta_spec="0.1q", seed=None, squared_preset: bool = True) -> ProblemInstance:
    """Rayleigh channel with a single-group QPSK multicast target."""
    if n < 1 or k < 1:
        raise ValueError("n and k must be positive")
    rng = np.random.default_rng(seed)
    H = (rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))) / math.sqrt(2.0)
    symbol = qpsk_symbol(int(rng.integers(4)))
    s = np.full(k, symbol, dtype=complex)
    return ProblemInstance(H, s, preset_tol(delta_spec, squared=squared_preset))


def _pair(value, where: str) -> complex:
    if (
        not isinstance(value, list)
        or len(value) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        raise InstanceFormatError(f"{where}: expected [re, im] pair of numbers, got {value!r}")
    return complex(float(value[0]), float(value[1]))


def instance_to_dict(inst: ProblemInstance) -> dict:
    return {
        "n": inst.n_antennas,
        "k": inst.n_users,
        "tol": inst.tol,
        "channel": [[[v.real, v.imag] for v in row] for row in inst.channel],
        "desired": [[v.real, v.imag] for v in inst.desired],
    }


def instance_from_dict(data: dict) -> ProblemInstance:
    if not isinstance(data, dict):
        raise InstanceFormatError("top level: expected a JSON object")
    for key in ("n", "k", "tol", "channel", "desired"):
        if key not in data:
            raise InstanceFormatError(f"missing field {key!r}")
    n, k = data["n"], data["k"]
    if not isinstance(n, int) or not isinstance(k, int) or n < 1 or k < 1:
        raise InstanceFormatError("n and k must be positive integers")
    rows = data["channel"]
    if not isinstance(rows, list) or len(rows) != n:
        raise InstanceFormatError(f"channel: expected {n} rows, got {len(rows) if isinstance(rows, list) else rows!r}")
    H = np.empty((n, k), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != k:
            got = len(row) if isinstance(row, list) else type(row).__name__
            raise InstanceFormatError(f"channel[{i}]: expected {k} entries, got {got}")
        for j, v in enumerate(row):
            H[i, j] = _pair(v, f"channel[{i}][{j}]")
    desired = data["desired"]
    if not isinstance(desired, list) or len(desired) != k:
        raise InstanceFormatError(f"desired: expected {k} entries")
    s = np.array([_pair(v, f"desired[{j}]") for j, v in enumerate(desired)], dtype=complex)
    tol = data["tol"]
    if not isinstance(tol, (int, float)) or isinstance(tol, bool):
        raise InstanceFormatError("tol: expected a number")
    try:
        return ProblemInstance(H, s, float(tol))
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from exc


def write_instance(inst: ProblemInstance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst)) + "\n")


def read_instance(path) -> ProblemInstance:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return instance_from_dict(data)

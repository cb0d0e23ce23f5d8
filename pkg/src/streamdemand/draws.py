"""Posterior draw container, convergence diagnostics, and on-disk format.

Draws are kept per chain so split-chain diagnostics stay honest. The disk
layout is columnar: one binary file per parameter block (little-endian
float64 with a shape header) plus a JSON index, so a dashboard can map
single blocks without parsing everything.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, StoreError

_MAGIC = b"SDRAWS01"


def split_rhat(x: np.ndarray) -> float:
    """Split-chain potential scale reduction for one scalar.

    ``x`` has shape (chains, draws); each chain is halved, then the usual
    between/within variance ratio is taken over the 2m half-chains.
    """
    m, n = x.shape
    half = n // 2
    if half < 2:
        return np.nan
    halves = np.concatenate([x[:, :half], x[:, half: 2 * half]], axis=0)
    means = halves.mean(axis=1)
    variances = halves.var(axis=1, ddof=1)
    W = variances.mean()
    B = half * means.var(ddof=1)
    if W <= 0:
        return 1.0 if B <= 0 else np.inf
    var_plus = (half - 1) / half * W + B / half
    return float(np.sqrt(var_plus / W))


def effective_sample_size(x: np.ndarray) -> float:
    """Autocorrelation-based ESS over pooled chains (initial positive sums)."""
    m, n = x.shape
    if n < 4:
        return float(m * n)
    centered = x - x.mean(axis=1, keepdims=True)
    # per-chain autocovariance via FFT, averaged
    acov = np.zeros(n)
    for c in range(m):
        f = np.fft.rfft(centered[c], 2 * n)
        ac = np.fft.irfft(f * np.conjugate(f))[:n] / n
        acov += ac
    acov /= m
    if acov[0] <= 0:
        return float(m * n)
    rho = acov / acov[0]
    # Geyer initial monotone positive sequence on pair sums
    tau = 1.0
    prev_pair = np.inf
    for k in range(1, n // 2):
        pair = rho[2 * k - 1] + rho[2 * k]
        if pair < 0:
            break
        pair = min(pair, prev_pair)
        prev_pair = pair
        tau += 2.0 * pair
    return float(m * n / tau)


@dataclass
class PosteriorDraws:
    """MCMC output: named blocks shaped (chains, draws, ...) plus context.

    ``meta`` carries whatever is needed to reproduce or extend the fit
    (training panel, spec and sampler settings, master seed).
    """

    blocks: dict[str, np.ndarray]
    seed: int | None = None
    meta: dict = field(default_factory=dict)
    diagnostics: dict[str, dict[str, float]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        shapes = {k: v.shape[:2] for k, v in self.blocks.items()}
        if len(set(shapes.values())) > 1:
            raise ConfigurationError(f"blocks disagree on (chains, draws): {shapes}")

    @property
    def n_chains(self) -> int:
        return next(iter(self.blocks.values())).shape[0]

    @property
    def n_draws(self) -> int:
        return next(iter(self.blocks.values())).shape[1]

    def scalars(self) -> dict[str, np.ndarray]:
        """Flatten every block into named scalar chains (chains, draws)."""
        out = {}
        for name, arr in self.blocks.items():
            flat = arr.reshape(arr.shape[0], arr.shape[1], -1)
            if flat.shape[2] == 1:
                out[name] = flat[:, :, 0]
            else:
                for idx in range(flat.shape[2]):
                    out[f"{name}[{idx}]"] = flat[:, :, idx]
        return out

    def pooled(self, name: str) -> np.ndarray:
        """All chains concatenated: shape (chains * draws, ...)."""
        arr = self.blocks[name]
        return arr.reshape(arr.shape[0] * arr.shape[1], *arr.shape[2:])

    def compute_diagnostics(self, rhat_warn: float = 1.1) -> "PosteriorDraws":
        self.diagnostics = {}
        for name, chain in self.scalars().items():
            self.diagnostics[name] = {
                "rhat": split_rhat(chain),
                "ess": effective_sample_size(chain),
            }
        flagged = [k for k, v in self.diagnostics.items()
                   if np.isfinite(v["rhat"]) and v["rhat"] > rhat_warn]
        if flagged:
            self.warnings.append(
                f"split-Rhat above {rhat_warn} for: {', '.join(sorted(flagged))}")
        return self

    def save_dir(self, path) -> None:
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        index = {
            "seed": self.seed,
            "meta": self.meta,
            "diagnostics": self.diagnostics,
            "warnings": self.warnings,
            "blocks": {},
        }
        for name, arr in self.blocks.items():
            fname = f"{name}.bin"
            index["blocks"][name] = {"file": fname, "shape": list(arr.shape)}
            _write_block(path / fname, arr)
        (path / "index.json").write_text(
            json.dumps(index, indent=2, sort_keys=True, default=_jsonify))

    @classmethod
    def load_dir(cls, path) -> "PosteriorDraws":
        path = Path(path)
        index_file = path / "index.json"
        if not index_file.exists():
            raise StoreError(f"no draw index at {path}")
        index = json.loads(index_file.read_text())
        blocks = {}
        for name, entry in index["blocks"].items():
            blocks[name] = _read_block(path / entry["file"], tuple(entry["shape"]))
        return cls(blocks, seed=index.get("seed"), meta=index.get("meta", {}),
                   diagnostics=index.get("diagnostics", {}),
                   warnings=index.get("warnings", []))


def _jsonify(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def _write_block(path: Path, arr: np.ndarray) -> None:
    data = np.ascontiguousarray(arr, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", data.ndim))
        fh.write(struct.pack(f"<{data.ndim}Q", *data.shape))
        fh.write(data.tobytes())


def _read_block(path: Path, expected_shape: tuple[int, ...]) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise StoreError(f"{path} is not a draw block")
        (ndim,) = struct.unpack("<I", fh.read(4))
        shape = struct.unpack(f"<{ndim}Q", fh.read(8 * ndim))
        if tuple(shape) != tuple(expected_shape):
            raise StoreError(f"{path}: header shape {shape} != index {expected_shape}")
        data = np.frombuffer(fh.read(), dtype="<f8")
    return data.reshape(shape).copy()

"""On-disk eigendata cache: manifest plus raw little-endian float arrays.

One directory per (lattice, disorder realization), keyed by a hash of the
canonical model description. Arrays are stored row-major as 64-bit
little-endian floats (real and imaginary planes separately); the manifest
records sha256 checksums that are verified on every read. A format
version bump turns old entries into cache misses, never silent reuse.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import CacheError
from .model import DisorderSpec, LatticeSpec
from .spectral import EigenSystem

FORMAT_VERSION = 1

POLICIES = ("off", "read", "read_write")


def _model_record(lattice: LatticeSpec, disorder: DisorderSpec) -> dict:
    record = {
        "format_version": FORMAT_VERSION,
        "lattice": dataclasses.asdict(lattice),
        "disorder": dataclasses.asdict(disorder),
    }
    # JSON-normalize (tuples to lists) so records compare equal after a
    # manifest round-trip
    return json.loads(_canonical(record))


def _canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class EigenCache:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.hits = 0
        self.misses = 0

    def entry_dir(self, lattice: LatticeSpec, disorder: DisorderSpec) -> Path:
        key = _sha256(_canonical(_model_record(lattice, disorder)))[:24]
        return self.root / key

    def load(self, lattice: LatticeSpec,
             disorder: DisorderSpec) -> EigenSystem | None:
        """Return the cached eigensystem, None on miss; raise on corruption."""
        path = self.entry_dir(lattice, disorder)
        manifest_path = path / "manifest.json"
        if not manifest_path.exists():
            self.misses += 1
            return None
        try:
            manifest = json.loads(manifest_path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CacheError(f"unreadable cache manifest at {path}: {exc}")
        if manifest.get("model") != _model_record(lattice, disorder):
            self.misses += 1
            return None
        arrays = {}
        for name, checksum in manifest["checksums"].items():
            blob = (path / name).read_bytes() if (path / name).exists() else None
            if blob is None or _sha256(blob) != checksum:
                raise CacheError(f"cache checksum mismatch for {path / name}")
            arrays[name] = np.frombuffer(blob, dtype="<f8")
        n = int(manifest["n"])
        energies = arrays["eigenvalues.f64"].copy()
        re = arrays["states_re.f64"].reshape(n, n)
        im = arrays["states_im.f64"].reshape(n, n)
        states = re + 1j * im if np.any(im) else re.copy()
        self.hits += 1
        return EigenSystem(energies, states, lattice=lattice,
                           disorder=disorder)

    def store(self, es: EigenSystem) -> None:
        if es.lattice is None or es.disorder is None:
            raise ValueError("cache entries need lattice and disorder metadata")
        path = self.entry_dir(es.lattice, es.disorder)
        path.mkdir(parents=True, exist_ok=True)
        states = np.asarray(es.states)
        blobs = {
            "eigenvalues.f64": np.ascontiguousarray(
                es.energies, dtype="<f8").tobytes(),
            "states_re.f64": np.ascontiguousarray(
                states.real, dtype="<f8").tobytes(),
            "states_im.f64": np.ascontiguousarray(
                states.imag if np.iscomplexobj(states)
                else np.zeros_like(states.real), dtype="<f8").tobytes(),
        }
        manifest = {
            "model": _model_record(es.lattice, es.disorder),
            "n": es.n,
            "checksums": {name: _sha256(blob) for name, blob in blobs.items()},
        }
        for name, blob in blobs.items():
            (path / name).write_bytes(blob)
        (path / "manifest.json").write_text(
            json.dumps(manifest, sort_keys=True, indent=1))


class EigenFactory:
    """Realization factory for :class:`~ccclab.ensemble.Ensemble` that
    consults the cache according to ``policy`` and counts the
    diagonalizations it actually performs."""

    def __init__(self, cache: EigenCache | None = None, policy: str = "off"):
        if policy not in POLICIES:
            raise ValueError(f"unknown cache policy {policy!r}")
        self.cache = cache if policy != "off" else None
        self.policy = policy if cache is not None else "off"
        self.computed = 0

    def __call__(self, cfg, index: int, need_vectors: bool = True):
        from .ensemble import realization_eigensystem

        if self.cache is not None:
            disorder = cfg.disorder_for(index)
            hit = self.cache.load(cfg.lattice, disorder)
            if hit is not None:
                return hit if need_vectors else hit.energies
            es = realization_eigensystem(cfg, index, need_vectors=True)
            self.computed += 1
            if self.policy == "read_write":
                self.cache.store(es)
            return es if need_vectors else es.energies
        out = realization_eigensystem(cfg, index, need_vectors=need_vectors)
        self.computed += 1
        return out

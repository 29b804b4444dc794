"""File formats: delimited data, JSON sidecars, run manifests, binary
trajectory dumps.

All writes are atomic (write to a temporary name, then rename), so an
interrupted run never leaves a truncated file. Floats print with 17
significant digits, enough for exact round trips.
"""

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .basis import BasisMap
from .dynamics import Trajectory, StateVector
from .observables import OverlapSpectrum, TimeSeries

SCHEMA_VERSION = 1
MANIFEST_NAME = "manifest.json"
_TRAJ_MAGIC = b"SCARTRJ1"


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _atomic_write_bytes(path: Path, payload: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def write_csv(path, rows):
    """Rows of numbers (or strings) as comma-separated lines, no header."""
    lines = []
    for row in rows:
        lines.append(",".join(c if isinstance(c, str) else fmt(c) for c in row))
    _atomic_write_bytes(Path(path), ("\n".join(lines) + "\n").encode())


def write_json(path, obj):
    _atomic_write_bytes(
        Path(path), (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()
    )


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# -- typed writers ------------------------------------------------------------------


def write_timeseries(path, series: TimeSeries, sidecar: dict | None = None):
    write_csv(path, zip(series.times, series.values))
    if sidecar is not None:
        meta = dict(sidecar)
        meta.setdefault("columns", ["time", series.label or "value"])
        write_json(Path(path).with_suffix(".json"), meta)


def write_overlap_spectrum(path, spectrum: OverlapSpectrum, sidecar: dict | None = None):
    write_csv(path, zip(spectrum.energies, spectrum.overlaps))
    if sidecar is not None:
        meta = dict(sidecar)
        meta.setdefault("columns", ["energy", "overlap"])
        write_json(Path(path).with_suffix(".json"), meta)


def write_entropy_scatter(path, scatter, sidecar: dict | None = None):
    write_csv(path, zip(scatter.energies, scatter.entropies))
    if sidecar is not None:
        meta = dict(sidecar)
        meta.setdefault("columns", ["energy", "entropy"])
        write_json(Path(path).with_suffix(".json"), meta)


def write_basis_csv(path, basis: BasisMap):
    """Rows (index, bitstring, pattern); pattern prints site 1 leftmost."""
    rows = (
        (str(k), basis.bitstring(int(c)), basis.pattern(int(c)))
        for k, c in enumerate(basis.configs)
    )
    write_csv(path, rows)


def write_operator_coo(path, op):
    """Debug dump: one `row,col,re,im` line per stored entry."""
    coo = op.matrix.tocoo()
    rows = (
        (str(r), str(c), fmt(v.real), fmt(v.imag))
        for r, c, v in zip(coo.row, coo.col, coo.data)
    )
    write_csv(path, rows)


# -- binary trajectory layout --------------------------------------------------------
#
# magic "SCARTRJ1" | uint32 little-endian header length | UTF-8 JSON header |
# snapshots as little-endian complex128, C order, shape (n_times, dim).
# The header carries n_sites, boundary, sector, the time grid, the operator
# digest, and the array shape.


def save_trajectory(path, traj: Trajectory):
    header = {
        "n_sites": traj.basis.n_sites,
        "boundary": traj.basis.boundary.value,
        "sector": traj.basis.sector.value,
        "times": [float(t) for t in traj.times],
        "hamiltonian_digest": traj.hamiltonian_digest,
        "shape": [len(traj.snapshots), traj.basis.size],
    }
    blob = json.dumps(header, sort_keys=True).encode()
    data = np.stack([s.amplitudes for s in traj.snapshots]).astype("<c16")
    payload = (
        _TRAJ_MAGIC
        + np.uint32(len(blob)).tobytes()
        + blob
        + data.tobytes(order="C")
    )
    _atomic_write_bytes(Path(path), payload)


def load_trajectory(path, basis: BasisMap) -> Trajectory:
    with open(path, "rb") as fh:
        magic = fh.read(len(_TRAJ_MAGIC))
        if magic != _TRAJ_MAGIC:
            raise ValueError(f"{path} is not a trajectory dump")
        (hlen,) = np.frombuffer(fh.read(4), dtype="<u4")
        header = json.loads(fh.read(int(hlen)).decode())
        n_times, dim = header["shape"]
        raw = np.frombuffer(fh.read(), dtype="<c16").reshape(n_times, dim)
    if dim != basis.size or header["n_sites"] != basis.n_sites:
        raise ValueError("trajectory dump does not match the given basis")
    times = np.array(header["times"])
    snaps = [StateVector(basis, raw[k].copy()) for k in range(n_times)]
    drifts = np.zeros(n_times)
    return Trajectory(basis, times, snaps, header["hamiltonian_digest"], drifts)


# -- run manifests -------------------------------------------------------------------


def build_manifest(command: str, params: dict, out_dir, data_files, figures=()) -> dict:
    out_dir = Path(out_dir)
    return {
        "schema": SCHEMA_VERSION,
        "command": command,
        "params": params,
        "outputs": {
            str(Path(f).relative_to(out_dir)): sha256_file(f) for f in data_files
        },
        "figures": [str(Path(f).relative_to(out_dir)) for f in figures],
    }


def write_manifest(out_dir, manifest: dict):
    write_json(Path(out_dir) / MANIFEST_NAME, manifest)


def load_manifest(out_dir) -> dict:
    path = Path(out_dir) / MANIFEST_NAME
    if not path.exists():
        raise FileNotFoundError(f"no {MANIFEST_NAME} in {out_dir}")
    return read_json(path)

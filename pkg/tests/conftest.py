"""Shared fixtures and independent dense oracles.

The oracles never reuse the package's assembly paths: operators are built
from explicit Kronecker products and sector filters from a direct scan over
all bit patterns, so agreement is a real cross-check.
"""

import numpy as np
import pytest

# local operators in the (ground, excited) ordering used by the package
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[-1, 0], [0, 1]], dtype=complex)
PDOWN = np.array([[1, 0], [0, 0]], dtype=complex)
ID2 = np.eye(2, dtype=complex)


def site_op(op: np.ndarray, site: int, n: int) -> np.ndarray:
    """Embed a single-site operator at 1-based `site` (site 1 = fastest index)."""
    return np.kron(np.eye(1 << (n - site)), np.kron(op, np.eye(1 << (site - 1))))


def brute_constrained(n: int, pbc: bool) -> np.ndarray:
    """Filter all 2^n bit patterns for adjacent excitations."""
    c = np.arange(1 << n, dtype=np.int64)
    bad = (c & (c >> 1)) != 0
    if pbc:
        bad |= ((c & 1) & (c >> (n - 1))) != 0
    return c[~bad]


def dense_pxp(n: int, pbc: bool) -> np.ndarray:
    """Kinetic term from explicit Kronecker products on the full space."""
    dim = 1 << n
    H = np.zeros((dim, dim), dtype=complex)
    if pbc:
        for i in range(1, n + 1):
            left = (i - 2) % n + 1
            right = i % n + 1
            H += site_op(PDOWN, left, n) @ site_op(SX, i, n) @ site_op(PDOWN, right, n)
    else:
        for i in range(2, n):
            H += site_op(PDOWN, i - 1, n) @ site_op(SX, i, n) @ site_op(PDOWN, i + 1, n)
        H += site_op(SX, 1, n) @ site_op(PDOWN, 2, n)
        H += site_op(PDOWN, n - 1, n) @ site_op(SX, n, n)
    return H


def dense_fields(n: int, fields: np.ndarray) -> np.ndarray:
    """Bare single-site fields sum(h_X X + h_Y Y + h_Z Z) on the full space."""
    dim = 1 << n
    H = np.zeros((dim, dim), dtype=complex)
    for i in range(1, n + 1):
        hx, hy, hz = fields[i - 1]
        H += hx * site_op(SX, i, n) + hy * site_op(SY, i, n) + hz * site_op(SZ, i, n)
    return H


def dense_projected_fields(n: int, fields: np.ndarray, pbc: bool) -> np.ndarray:
    """Locally sandwiched fields sum P_{i-1}(h.sigma_i)P_{i+1}, full space.

    Open-chain edge terms keep the projector on their single neighbour only.
    """
    dim = 1 << n
    H = np.zeros((dim, dim), dtype=complex)
    for i in range(1, n + 1):
        hx, hy, hz = fields[i - 1]
        term = hx * site_op(SX, i, n) + hy * site_op(SY, i, n) + hz * site_op(SZ, i, n)
        if pbc:
            left, right = (i - 2) % n + 1, i % n + 1
            H += site_op(PDOWN, left, n) @ term @ site_op(PDOWN, right, n)
        else:
            if i > 1:
                term = site_op(PDOWN, i - 1, n) @ term
            if i < n:
                term = term @ site_op(PDOWN, i + 1, n)
            H += term
    return H


def embed_full(amps: np.ndarray, configs: np.ndarray, n: int) -> np.ndarray:
    """Lift a sector state to the full 2^n amplitude vector."""
    out = np.zeros(1 << n, dtype=complex)
    out[configs] = amps
    return out


def bond_sum_direct(bits: int, n: int, pbc: bool) -> float:
    """Bond-averaged ZZ of one configuration by explicit bit iteration."""
    s = [1.0 if (bits >> i) & 1 else -1.0 for i in range(n)]
    bonds = [s[i] * s[i + 1] for i in range(n - 1)]
    if pbc:
        bonds.append(s[n - 1] * s[0])
    return sum(bonds) / len(bonds)


def random_state(dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


@pytest.fixture(scope="session")
def tmp_out(tmp_path_factory):
    return tmp_path_factory.mktemp("runs")

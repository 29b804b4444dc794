import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scarlab.basis import (
    BasisMap,
    BoundaryCondition,
    Sector,
    StateLabel,
    basis_state,
    constrained_configs_obc,
    default_defect_site,
    enumerate_basis,
    make_state,
    named_state_bits,
    z2_bits,
    z3_bits,
)
from scarlab.errors import (
    ConfigNotInSectorError,
    SectorError,
    SizeError,
    StateMismatchError,
)

from conftest import brute_constrained


def fib_obc_count(n):
    a, b = 1, 2  # counts for 0 and 1 sites
    for _ in range(n - 1):
        a, b = b, a + b
    return b


def lucas_count(n):
    a, b = 3, 4  # counts for 2 and 3 sites
    for _ in range(n - 2):
        a, b = b, a + b
    return a


class TestEnumeration:
    def test_two_site_obc(self):
        basis = enumerate_basis(2, BoundaryCondition.OBC, Sector.CONSTRAINED)
        assert list(basis.configs) == [0b00, 0b01, 0b10]  # only ** excluded

    @pytest.mark.parametrize("n", range(2, 13))
    @pytest.mark.parametrize("bc", [BoundaryCondition.OBC, BoundaryCondition.PBC])
    def test_matches_brute_force(self, n, bc):
        basis = enumerate_basis(n, bc, Sector.CONSTRAINED)
        expected = brute_constrained(n, bc is BoundaryCondition.PBC)
        assert np.array_equal(basis.configs, expected)

    def test_paper_scale_counts(self):
        assert enumerate_basis(4, "pbc", "constrained").size == 7
        assert enumerate_basis(14, "pbc", "constrained").size == 843
        assert enumerate_basis(18, "pbc", "constrained").size == 5778

    @pytest.mark.parametrize("n", range(4, 21))
    def test_obc_fibonacci_recurrence(self, n):
        sizes = [
            enumerate_basis(k, "obc", "constrained").size for k in (n - 2, n - 1, n)
        ]
        assert sizes[2] == sizes[1] + sizes[0]
        assert sizes[2] == fib_obc_count(n)

    @pytest.mark.parametrize("n", range(4, 21))
    def test_pbc_lucas_recurrence(self, n):
        sizes = [
            enumerate_basis(k, "pbc", "constrained").size for k in (n - 2, n - 1, n)
        ]
        assert sizes[2] == sizes[1] + sizes[0]
        assert sizes[2] == lucas_count(n)

    def test_full_sector_size(self):
        assert enumerate_basis(10, "pbc", "full").size == 1024

    @pytest.mark.parametrize("n", [0, 1, 63, 200])
    def test_size_errors(self, n):
        with pytest.raises(SizeError):
            enumerate_basis(n, "pbc", "constrained")

    def test_canonical_order_strictly_increasing(self):
        for bc in ("obc", "pbc"):
            basis = enumerate_basis(11, bc, "constrained")
            assert np.all(np.diff(basis.configs) > 0)


class TestLookup:
    def test_round_trip(self):
        basis = enumerate_basis(12, "pbc", "constrained")
        for k in range(basis.size):
            assert basis.index_of(basis.config(k)) == k

    def test_round_trip_full(self):
        basis = enumerate_basis(6, "obc", "full")
        for k in range(basis.size):
            assert basis.index_of(basis.config(k)) == k

    def test_miss_is_detectable(self):
        basis = enumerate_basis(6, "pbc", "constrained")
        with pytest.raises(ConfigNotInSectorError):
            basis.index_of(0b000011)  # adjacent pair
        assert not basis.contains(0b000011)
        full = enumerate_basis(6, "pbc", "full")
        with pytest.raises(ConfigNotInSectorError):
            full.index_of(1 << 6)

    def test_pattern_strings(self):
        basis = enumerate_basis(4, "pbc", "constrained")
        assert basis.pattern(0b0101) == "*.*."  # site 1 leftmost
        assert basis.bitstring(0b0101) == "0101"


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(min_value=2, max_value=13),
    pbc=st.booleans(),
)
def test_no_adjacent_excitations_property(n, pbc):
    bc = BoundaryCondition.PBC if pbc else BoundaryCondition.OBC
    basis = enumerate_basis(n, bc, Sector.CONSTRAINED)
    c = basis.configs
    assert np.all((c & (c >> 1)) == 0)
    if pbc:
        assert np.all(((c & 1) & (c >> (n - 1))) == 0)
    # round trip on a sample of positions
    for k in range(0, basis.size, max(1, basis.size // 16)):
        assert basis.index_of(basis.config(k)) == k


def test_segment_enumeration_matches_brute_force():
    for n in range(0, 10):
        got = constrained_configs_obc(n)
        if n == 0:
            assert list(got) == [0]
        else:
            assert np.array_equal(got, brute_constrained(n, False))


class TestNamedStates:
    def test_z2_on_ring(self):
        basis = enumerate_basis(4, "pbc", "constrained")
        psi = make_state(StateLabel.Z2, basis)
        k = int(np.flatnonzero(psi.amplitudes)[0])
        assert basis.config(k) == 0b0101
        assert psi.amplitudes[k] == 1.0
        assert abs(psi.norm() - 1.0) < 1e-15

    def test_all_down(self):
        basis = enumerate_basis(6, "obc", "constrained")
        psi = make_state(StateLabel.ALL_DOWN, basis)
        assert psi.amplitudes[basis.index_of(0)] == 1.0

    def test_z2_shift_complements_z2(self):
        assert z2_bits(8) ^ named_state_bits(StateLabel.Z2_SHIFT, 8, "pbc") == 0xFF

    def test_z3_pattern(self):
        assert z3_bits(6) == 0b001001
        basis = enumerate_basis(6, "pbc", "constrained")
        psi = make_state(StateLabel.Z3, basis)
        assert psi.amplitudes[basis.index_of(0b001001)] == 1.0

    def test_defect_up_three_consecutive(self):
        # flipping the ground site 10 of the 18-site pattern excites 9,10,11
        bits = named_state_bits(StateLabel.Z2_DEFECT_UP, 18, "pbc", defect_site=10)
        assert bits == z2_bits(18) | (1 << 9)
        for site in (9, 10, 11):
            assert (bits >> (site - 1)) & 1

    def test_defect_down_stays_constrained(self):
        bits = named_state_bits(StateLabel.Z2_DEFECT_DOWN, 14, "pbc", defect_site=7)
        basis = enumerate_basis(14, "pbc", "constrained")
        assert basis.contains(bits)

    def test_defect_up_needs_full_sector(self):
        basis = enumerate_basis(10, "pbc", "constrained")
        with pytest.raises(SectorError):
            make_state(StateLabel.Z2_DEFECT_UP, basis)

    def test_defect_up_exists_in_full(self):
        basis = enumerate_basis(10, "pbc", "full")
        psi = make_state(StateLabel.Z2_DEFECT_UP, basis)
        assert abs(psi.norm() - 1.0) < 1e-15

    @pytest.mark.parametrize(
        "n,label,site",
        [
            (18, StateLabel.Z2_DEFECT_UP, 10),
            (18, StateLabel.Z2_DEFECT_DOWN, 9),
            (14, StateLabel.Z2_DEFECT_UP, 8),
            (14, StateLabel.Z2_DEFECT_DOWN, 7),
        ],
    )
    def test_default_defect_sites(self, n, label, site):
        assert default_defect_site(n, label) == site

    def test_pattern_size_mismatches(self):
        with pytest.raises(StateMismatchError):
            named_state_bits(StateLabel.Z2, 7, "obc")
        with pytest.raises(StateMismatchError):
            named_state_bits(StateLabel.Z3, 16, "pbc")
        named_state_bits(StateLabel.Z3, 16, "obc")  # fine on an open chain
        with pytest.raises(StateMismatchError):
            named_state_bits(StateLabel.Z2_DEFECT_UP, 12, "pbc", defect_site=5)
        with pytest.raises(StateMismatchError):
            named_state_bits(StateLabel.Z2_DEFECT_DOWN, 12, "pbc", defect_site=40)

    def test_basis_state_rejects_prohibited(self):
        basis = enumerate_basis(4, "pbc", "constrained")
        with pytest.raises(ConfigNotInSectorError):
            basis_state(basis, 0b0011)


def test_same_space():
    a = enumerate_basis(6, "pbc", "constrained")
    b = enumerate_basis(6, "pbc", "constrained")
    c = enumerate_basis(6, "obc", "constrained")
    assert a.same_space(b)
    assert not a.same_space(c)
    assert isinstance(a, BasisMap)

import pytest

from dbpim import ArgumentError, RangeError, ShapeError, Signedness
from dbpim.oracle import csd_enumerate, dot_reference, is_nonadjacent, min_nonzeros, nearest_reference, nonadjacent_forms


# ===========================================================================
# Tests: Dot products
# ===========================================================================

class TestDotReference:

    def test_small(self):
        assert dot_reference([[1, 2], [3, 4]], [5, 6]).outputs == (17, 39)

    def test_signed_inputs(self):
        assert dot_reference([[-128, 127]], [-128, 127], Signedness.SIGNED8).outputs == (128 * 128 + 127 * 127,)

    def test_no_filters(self):
        assert dot_reference([], [1, 2]).outputs == ()

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            dot_reference([[1, 2, 3]], [1, 2])

    def test_weight_out_of_range(self):
        with pytest.raises(RangeError):
            dot_reference([[128]], [1])

    def test_input_out_of_range(self):
        with pytest.raises(RangeError):
            dot_reference([[1]], [-1])
        with pytest.raises(RangeError):
            dot_reference([[1]], [200], Signedness.SIGNED8)


# ===========================================================================
# Tests: Signed-digit enumeration
# ===========================================================================

class TestEnumeration:

    def test_all_decode(self):
        for r in csd_enumerate(3):
            assert sum(d * 2 ** i for i, d in enumerate(r)) == 3

    def test_three(self):
        forms = csd_enumerate(3)
        assert (1, 1, 0, 0, 0, 0, 0, 0) in forms
        assert (-1, 0, 1, 0, 0, 0, 0, 0) in forms
        assert nonadjacent_forms(3) == [(-1, 0, 1, 0, 0, 0, 0, 0)]

    def test_nonadjacent_form_unique(self):
        for v in range(-128, 128):
            assert len(nonadjacent_forms(v)) == 1

    def test_min_nonzeros(self):
        assert min_nonzeros(0) == 0
        assert min_nonzeros(85) == 4
        assert min_nonzeros(127) == 2
        assert min_nonzeros(-128) == 1

    def test_is_nonadjacent(self):
        assert is_nonadjacent((1, 0, -1, 0))
        assert not is_nonadjacent((0, 1, -1, 0))

    def test_out_of_range(self):
        with pytest.raises(RangeError):
            csd_enumerate(128)


class TestNearestReference:

    def test_85(self):
        assert nearest_reference(85, lambda phi: phi == 2) == 80

    def test_zero_goes_positive(self):
        assert nearest_reference(0, lambda phi: phi == 1) == 1

    def test_unsatisfiable(self):
        with pytest.raises(ArgumentError):
            nearest_reference(0, lambda phi: phi > 4)

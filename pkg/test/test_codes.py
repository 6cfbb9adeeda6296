import numpy as np
import pytest

from fdisac.codes import (
    BARKER_SEQUENCES,
    CodeFactory,
    CodeKind,
    FastTimeCode,
    make_barker_code,
    make_custom_code,
    make_lfm_code,
)
from fdisac.errors import UnsupportedLength


class TestLfmCode:
    """Tests for the LFM-derived code."""

    @pytest.mark.parametrize("n", [1, 13, 100])
    def test_norm(self, n):
        """Test that the squared norm equals the length."""
        code = make_lfm_code(n)
        assert np.sum(np.abs(code.chips) ** 2) == pytest.approx(n, rel=1e-12)
        assert np.allclose(np.abs(code.chips), 1.0)

    def test_phase(self):
        """Test the quadratic phase of the first chips."""
        code = make_lfm_code(100)
        assert code.chips[0] == pytest.approx(1.0)
        assert code.chips[3] == pytest.approx(np.exp(1j * np.pi * 9 / 100))

    def test_empty(self):
        """Test that a code needs a chip."""
        with pytest.raises(UnsupportedLength):
            make_lfm_code(0)

    def test_oversampled_hits_chips(self):
        """Test that the continuous chirp passes through the chips."""
        code = make_lfm_code(32)
        assert np.allclose(code.sample(4)[::4], code.chips)


class TestBarkerCode:
    """Tests for Barker codes."""

    @pytest.mark.parametrize("n", sorted(BARKER_SEQUENCES))
    def test_sidelobes(self, n):
        """Test that aperiodic sidelobes stay at or below one."""
        chips = make_barker_code(n).chips
        acf = np.abs(np.correlate(chips, chips, mode="full"))
        assert acf[n - 1] == pytest.approx(n)
        assert np.all(np.delete(acf, n - 1) <= 1 + 1e-12)

    @pytest.mark.parametrize("n", [1, 6, 100])
    def test_unsupported(self, n):
        """Test that missing lengths are rejected."""
        with pytest.raises(UnsupportedLength):
            make_barker_code(n)

    def test_hold_oversampling(self):
        """Test that binary codes are held over each chip."""
        code = make_barker_code(5)
        assert np.array_equal(code.sample(3), np.repeat(code.chips, 3))


class TestFastTimeCode:
    """Tests for generic codes."""

    def test_custom_rescaled(self):
        """Test that custom chips are scaled to squared norm N."""
        code = make_custom_code([2, 2j, 0, 2])
        assert code.verify()
        assert np.sum(np.abs(code.chips) ** 2) == pytest.approx(4)

    def test_wrong_norm(self):
        """Test that unnormalized chips are rejected."""
        with pytest.raises(ValueError):
            FastTimeCode(np.array([2.0, 0.0]), "bad")

    def test_read_only(self):
        """Test that chips cannot be modified."""
        code = make_lfm_code(8)
        with pytest.raises(ValueError):
            code.chips[0] = 0

    def test_zero_custom(self):
        """Test that an all-zero custom code is rejected."""
        with pytest.raises(UnsupportedLength):
            make_custom_code(np.zeros(4))


class TestCodeFactory:
    """Tests for the code factory."""

    def test_unknown(self):
        """Test that unknown families give None."""
        assert CodeFactory.get_code("zadoff", 8) is None

    def test_custom_without_chips(self):
        """Test that custom codes need chips."""
        assert CodeFactory.get_code(CodeKind.CUSTOM, 4) is None

    def test_custom_length(self):
        """Test that custom codes have to fill the pulse."""
        with pytest.raises(UnsupportedLength):
            CodeFactory.get_code(CodeKind.CUSTOM, 8, np.ones(4))

    @pytest.mark.parametrize(
        "kind, n", [(CodeKind.LFM_DERIVED, 100), (CodeKind.BARKER, 13)]
    )
    def test_named(self, kind, n):
        """Test that named families are built with the requested length."""
        code = CodeFactory.get_code(kind, n)
        assert len(code) == n
        assert code.kind == kind

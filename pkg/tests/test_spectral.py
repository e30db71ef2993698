import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nmtune import SingularSpectrum, lsvr, spectrum_report, sve
from nmtune.errors import DegenerateSpectrumError, ValidationError


def spec_of(values, d=None, m=None):
    values = np.asarray(values, dtype=np.float64)
    d = d if d is not None else len(values)
    m = m if m is not None else max(len(values), d)
    return SingularSpectrum(values, ambient_dim=d, sample_count=m)


def mp_sve(values):
    """High-precision entropy of the normalized values."""
    with mpmath.workdps(50):
        vals = [mpmath.mpf(v) for v in values]
        total = mpmath.fsum(vals)
        acc = mpmath.mpf(0)
        for v in vals:
            if v > 0:
                p = v / total
                acc -= p * mpmath.log(p)
        return float(acc)


def mp_lsvr(values):
    with mpmath.workdps(50):
        vals = [mpmath.mpf(v) for v in values]
        return float(-mpmath.log(vals[0] / mpmath.fsum(vals)))


class TestSve:
    def test_single_mass(self):
        assert sve(spec_of([1.0, 0.0, 0.0])) == 0.0

    def test_uniform_is_log_d(self):
        for d in (2, 5, 16):
            s = spec_of([3.7] * d)
            assert sve(s) == pytest.approx(math.log(d), abs=1e-12)

    def test_three_one(self):
        value = sve(spec_of([3.0, 1.0]))
        assert value == pytest.approx(0.562335, abs=1e-6)
        assert value == pytest.approx(mp_sve([3.0, 1.0]), abs=1e-14)

    def test_all_zero_rejected(self):
        with pytest.raises(DegenerateSpectrumError):
            sve(spec_of([0.0, 0.0]))


class TestLsvr:
    def test_single_mass(self):
        assert lsvr(spec_of([1.0, 0.0, 0.0])) == 0.0

    def test_uniform_is_log_d(self):
        for d in (2, 5, 16):
            assert lsvr(spec_of([0.25] * d)) == pytest.approx(math.log(d), abs=1e-12)

    def test_three_one(self):
        value = lsvr(spec_of([3.0, 1.0]))
        assert value == pytest.approx(0.287682, abs=1e-6)
        assert value == pytest.approx(mp_lsvr([3.0, 1.0]), abs=1e-14)

    def test_zero_top_rejected(self):
        with pytest.raises(DegenerateSpectrumError):
            lsvr(spec_of([0.0, 0.0]))


class TestSpectrumValidation:
    def test_wrong_length(self):
        with pytest.raises(ValidationError):
            SingularSpectrum(np.array([1.0]), ambient_dim=3, sample_count=5)

    def test_not_descending(self):
        with pytest.raises(ValidationError):
            spec_of([1.0, 2.0])

    def test_negative(self):
        with pytest.raises(ValidationError):
            spec_of([1.0, -0.5])


@st.composite
def spectra(draw):
    n = draw(st.integers(min_value=1, max_value=24))
    values = draw(
        st.lists(
            st.floats(min_value=1e-6, max_value=1e6, allow_nan=False),
            min_size=n,
            max_size=n,
        )
    )
    return np.sort(np.asarray(values))[::-1].copy()


class TestProperties:
    @given(spectra(), st.floats(min_value=1e-3, max_value=1e3))
    @settings(max_examples=100, deadline=None)
    def test_scale_invariance(self, values, c):
        s1 = spec_of(values)
        s2 = spec_of(c * values)
        assert sve(s2) == pytest.approx(sve(s1), abs=1e-12)
        assert lsvr(s2) == pytest.approx(lsvr(s1), abs=1e-12)

    @given(spectra())
    @settings(max_examples=100, deadline=None)
    def test_bounds(self, values):
        s = spec_of(values)
        r = len(values)
        assert -1e-15 <= sve(s) <= math.log(r) + 1e-12
        assert -1e-15 <= lsvr(s) <= math.log(r) + 1e-12

    @pytest.mark.parametrize("seed", range(20))
    def test_monotone_flattening(self, seed):
        rng = np.random.default_rng(seed)
        values = np.sort(rng.uniform(0.1, 10.0, size=8))[::-1]
        previous = -1.0
        for t in np.linspace(0.0, 1.0, 11):
            mixed = np.sort((1 - t) * values + t * values.mean())[::-1]
            entropy = sve(spec_of(mixed))
            assert entropy >= previous - 1e-12
            previous = entropy


class TestSpectrumReport:
    def test_identity_matrix(self):
        rep = spectrum_report(np.eye(4))
        assert rep.sve == pytest.approx(math.log(4), abs=1e-12)
        assert rep.lsvr == pytest.approx(math.log(4), abs=1e-12)
        assert rep.effective_mass == pytest.approx(4.0, abs=1e-12)

    def test_diag_padded(self):
        f = np.zeros((5, 2))
        f[0, 0] = 3.0
        f[1, 1] = 1.0
        rep = spectrum_report(f)
        assert rep.sve == pytest.approx(0.562335, abs=1e-6)
        assert rep.lsvr == pytest.approx(0.287682, abs=1e-6)

    def test_rank_one(self):
        f = np.outer([1.0, 2.0, -1.0], [0.5, 2.0])
        rep = spectrum_report(f)
        assert rep.sve == pytest.approx(0.0, abs=1e-9)
        assert rep.lsvr == pytest.approx(0.0, abs=1e-9)

    def test_top_k_and_groups(self):
        rng = np.random.default_rng(0)
        rep = spectrum_report(rng.normal(size=(30, 25)))
        assert len(rep.top_k) == 20
        groups = rep.groups()
        assert len(groups["top"]) == 20
        assert len(groups["mid"]) == 5
        assert groups["tail"] == []
        assert rep.top_k[0][1] >= rep.top_k[-1][1]

    def test_lsvr_identity_with_mass(self):
        rng = np.random.default_rng(4)
        rep = spectrum_report(rng.normal(size=(12, 6)))
        sigma1 = rep.top_k[0][1]
        assert rep.lsvr == pytest.approx(math.log(rep.effective_mass / sigma1), rel=1e-12)

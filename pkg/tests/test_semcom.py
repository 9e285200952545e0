"""Tests for the semantic similarity curve and rate conversions."""

import numpy as np
import pytest

from semrelay.core import semcom
from semrelay.core.exceptions import DomainError
from semrelay.core.models import SemanticParams

SEM = SemanticParams()


@pytest.mark.unit
class TestSimilarity:
    def test_reference_points(self):
        assert semcom.similarity(0.0, SEM) == pytest.approx(0.51211, abs=1e-4)
        assert semcom.similarity(10.0, SEM) == pytest.approx(0.83838, abs=1e-4)

    def test_asymptotes(self):
        assert semcom.similarity(-np.inf, SEM) == pytest.approx(0.3980, abs=1e-12)
        assert semcom.similarity(np.inf, SEM) == pytest.approx(0.9365, abs=1e-12)

    def test_strictly_increasing(self):
        values = np.asarray(semcom.similarity(np.linspace(-30.0, 30.0, 1000), SEM))
        assert np.all(np.diff(values) > 0)

    def test_scalar_in_scalar_out(self):
        assert isinstance(semcom.similarity(3.0, SEM), float)
        assert semcom.similarity(np.array([0.0, 10.0]), SEM).shape == (2,)

    def test_nan_rejected(self):
        with pytest.raises(DomainError):
            semcom.similarity(float("nan"), SEM)

    def test_derivative_matches_finite_difference(self):
        r, h = 4.0, 1e-5
        numeric = (semcom.similarity(r + h, SEM) - semcom.similarity(r - h, SEM)) / (2 * h)
        assert semcom.similarity_derivative(r, SEM) == pytest.approx(numeric, rel=1e-6)


@pytest.mark.unit
class TestSimilarityInverse:
    def test_round_trip_over_domain(self):
        lo, hi = semcom.inverse_bounds(SEM)
        values = np.linspace(lo, hi, 1001)
        back = np.asarray(semcom.similarity(semcom.similarity_inverse(values, SEM), SEM))
        assert np.max(np.abs(back - values)) <= 1e-9

    def test_zero_db(self):
        assert semcom.similarity_inverse(semcom.similarity(0.0, SEM), SEM) == pytest.approx(0.0, abs=1e-9)
        assert semcom.similarity_inverse(0.51211, SEM) == pytest.approx(0.0, abs=1e-3)

    def test_below_domain(self):
        with pytest.raises(DomainError) as exc:
            semcom.similarity_inverse(0.3980, SEM)
        assert exc.value.quantity == "lower_bound"

    def test_above_domain(self):
        with pytest.raises(DomainError) as exc:
            semcom.similarity_inverse(0.9365, SEM)
        assert exc.value.quantity == "upper_bound"

    def test_clamp_counts_entries(self):
        lo, hi = semcom.inverse_bounds(SEM)
        clamped, events = semcom.clamp_similarity(np.array([0.1, 0.6, 0.99]), SEM)
        assert events == 2
        assert clamped[0] == lo and clamped[2] == hi
        assert clamped[1] == 0.6


@pytest.mark.unit
class TestRateConversions:
    def test_s2r_bit_rate_at_saturation(self):
        # mu1/Q * b * (a1 + a2)
        assert semcom.semantic_to_bit_s2r(4.0, np.inf, SEM) == pytest.approx(48.0 * 0.9365)

    def test_s2r_semantic_rate(self):
        assert semcom.semantic_rate_s2r(4.0, np.inf, SEM) == pytest.approx(0.9365)

    def test_downlink_weight(self):
        assert SEM.sem_weight == pytest.approx(3.0)
        assert semcom.semantic_to_bit_r2su(1.0, SEM) == pytest.approx(3.0)
        assert semcom.semantic_rate_r2su(16.0, SEM) == pytest.approx(1.0)

    def test_negative_inputs_rejected(self):
        with pytest.raises(DomainError):
            semcom.semantic_to_bit_s2r(-1.0, 0.0, SEM)
        with pytest.raises(DomainError):
            semcom.semantic_to_bit_r2su(-1.0, SEM)

    def test_parameters_validated(self):
        with pytest.raises(ValueError):
            SemanticParams(a1=0.6, a2=0.5)

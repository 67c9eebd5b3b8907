import math
import os

import pytest

import hsps

DATA_DIR = os.environ.get("HSPS_DATA_DIR", os.path.join(os.path.dirname(__file__), "..", "..", "data"))


def test_g2_limits_and_crossing():
    assert abs(hsps.g2_zero(hsps.GatedStatisticsInput(0.0, 50.0, hsps.OriginalDistribution.POISSON)) - 2) < 1e-6
    assert abs(hsps.find_poisson_crossing(1.0) - 0.5552) < 1e-3
    assert abs(hsps.b_from_b0(hsps.find_poisson_crossing(1.0), 1.0) - math.log(2)) < 1e-6


def test_characterize_reference_file():
    measured, system, integration_time, _label = hsps.load_measurement_file(
        os.path.join(DATA_DIR, "reference_operating_point.meas"))
    result = hsps.characterize(measured, system, integration_time)
    assert abs(result["values"]["g2_zero"] - 0.0235) < 1e-3
    assert result["uncertainty"]["R_s"] > 0


def test_short_simulation():
    config = hsps.reference_sim_config()
    config.duration = 0.05
    report = hsps.simulate(config)
    assert report["herald_rate"] > 0
    assert 0 <= report["statistics"]["g2_zero"] < 0.2


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        hsps.GatedStatisticsInput(1.5, 0.1, hsps.OriginalDistribution.POISSON)
    with pytest.raises(ValueError):
        hsps.load_measurement_file("/nonexistent.meas")

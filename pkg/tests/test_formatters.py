import math

from formatters import fmt_bool, fmt_interval, fmt_matrix, fmt_radius, fmt_real


def test_fmt_real():
    assert fmt_real(1 / 3) == "0.3333"
    assert fmt_real(None) == "-"
    assert fmt_real(math.inf) == "inf"
    assert fmt_real(float("nan")) == "nan"
    assert fmt_real(1.5e-7) == "1.500e-07"


def test_fmt_radius():
    assert fmt_radius(None) == "no certificate"
    assert fmt_radius(math.inf) == "immune (inf)"
    assert fmt_radius(0.0873) == "0.087"


def test_fmt_matrix_and_interval():
    assert fmt_matrix([[-1.0, -1.0]]) == "[[-1.000, -1.000]]"
    assert fmt_matrix([0.5]) == "[[0.500]]"
    assert fmt_interval(0.4472, None) == "[0.4472, -]"
    assert fmt_bool(True) == "yes" and fmt_bool(None) == "-"

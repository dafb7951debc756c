"""Extended real exponents in ``[1, inf]`` with the convention ``1/inf = 0``."""

import math

from .errors import ParameterError

INF = math.inf


def as_exponent(p, name="exponent"):
    """Parse ``p`` (number or ``"inf"``) and check ``1 <= p <= inf``."""
    if isinstance(p, str):
        p = p.strip().lower()
        p = INF if p in ("inf", "infinity", "∞") else float(p)
    p = float(p)
    if math.isnan(p) or p < 1:
        raise ParameterError(f"{name} must lie in [1, inf], got {p}")
    return p


def recip(p):
    return 0.0 if p == INF else 1.0 / p


def fmt(p):
    """Stable text form used in reports and CSV."""
    if p == INF:
        return "inf"
    return repr(float(p))

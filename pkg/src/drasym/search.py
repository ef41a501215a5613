"""Golden-section line search with bracket expansion."""

import math
from dataclasses import dataclass, field

__all__ = ["InvPhi", "BracketError", "LineSearchResult", "golden_section", "golden_with_expansion"]

InvPhi = (math.sqrt(5.0) - 1.0) / 2.0


class BracketError(RuntimeError):
    pass


@dataclass
class LineSearchResult:
    x: float
    fx: float
    lo: float
    hi: float
    evaluations: int
    expansions: int = 0
    warnings: list = field(default_factory=list)


def golden_section(f, lo, hi, tol, maximize=False, max_iter=500):
    """Golden-section search on ``[lo, hi]`` until the bracket is narrower than ``tol``.

    Returns the bracket midpoint and its value. The probe trace is checked for
    unimodality; a violation adds a message to ``warnings`` but does not stop
    the search.
    """
    sign = -1.0 if maximize else 1.0
    a, b = float(lo), float(hi)
    x1 = b - InvPhi * (b - a)
    x2 = a + InvPhi * (b - a)
    f1 = sign * f(x1)
    f2 = sign * f(x2)
    probes = [(x1, f1), (x2, f2)]
    it = 0
    while b - a > tol and it < max_iter:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - InvPhi * (b - a)
            f1 = sign * f(x1)
            probes.append((x1, f1))
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + InvPhi * (b - a)
            f2 = sign * f(x2)
            probes.append((x2, f2))
        it += 1
    xm = 0.5 * (a + b)
    fm = f(xm)
    res = LineSearchResult(x=xm, fx=fm, lo=a, hi=b, evaluations=len(probes) + 1)
    if not _unimodal(probes):
        kind = "concavity" if maximize else "convexity"
        res.warnings.append(f"non-{kind} detected on [{lo:.4g}, {hi:.4g}]")
    return res


def _unimodal(probes, rtol=1e-12):
    """True if the (minimization-signed) probe values fall then rise along x."""
    pts = sorted(probes)
    vals = [v for _, v in pts]
    scale = max(1.0, max(abs(v) for v in vals))
    tiny = rtol * scale
    rising = False
    for prev, cur in zip(vals, vals[1:]):
        if cur > prev + tiny:
            rising = True
        elif cur < prev - tiny and rising:
            return False
    return True


def golden_with_expansion(f, lo, hi, tol, maximize=False, max_expansions=20):
    """Golden-section search that widens the bracket until the optimum is interior.

    The upper end doubles whenever the optimum lands within ``2 tol`` of it;
    the lower end halves (staying positive) when it lands at the bottom.
    """
    evals = 0
    warnings = []
    for expansions in range(max_expansions + 1):
        res = golden_section(f, lo, hi, tol, maximize=maximize)
        evals += res.evaluations
        warnings.extend(res.warnings)
        at_hi = hi - res.x <= 2.0 * tol
        at_lo = res.x - lo <= 2.0 * tol and lo > 4.0 * tol
        if not (at_hi or at_lo):
            res.evaluations = evals
            res.expansions = expansions
            res.warnings = warnings
            return res
        if at_hi:
            hi *= 2.0
        else:
            lo *= 0.5
    raise BracketError(
        f"optimum not interior after {max_expansions} expansions (bracket [{lo:.4g}, {hi:.4g}])"
    )

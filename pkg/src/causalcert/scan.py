"""Bisection over a noise parameter for the feasibility boundary."""

from __future__ import annotations

from dataclasses import dataclass, field

from .certify import CertificationResult, certify
from .errors import InvalidBracketError

SCAN_WIDTH = 1e-3
SCAN_MARGIN = 1e-6


@dataclass
class ScanProbe:
    r: float
    signed_robustness: float
    status: str


@dataclass
class ScanResult:
    threshold: float
    lo: float
    hi: float
    width: float
    margin: float
    probes: list[ScanProbe] = field(default_factory=list)

    def __str__(self):
        return (f"threshold {self.threshold:.4f} in [{self.lo:.4f}, {self.hi:.4f}] "
                f"after {len(self.probes)} probes")


def threshold_scan(builder, r_lo: float, r_hi: float, *, cone=None, noise=None,
                   width: float = SCAN_WIDTH, margin: float = SCAN_MARGIN,
                   solver: str | None = None, feas_tol: float | None = None) -> ScanResult:
    """Bisect r between a noncausal r_lo and a causal r_hi.

    `builder(r)` must produce the certifiable object of a family monotone in
    r; a probe counts as noncausal when its signed robustness exceeds
    `margin`.  Returns the midpoint of the final bracket with the probe log.
    """
    probes: list[ScanProbe] = []

    def probe(r: float) -> bool:
        res: CertificationResult = certify(builder(r), cone, noise, solver=solver,
                                           feas_tol=feas_tol, margin=margin)
        probes.append(ScanProbe(r, res.signed_robustness, res.status))
        return res.signed_robustness > margin

    if not probe(r_lo):
        raise InvalidBracketError(
            f"lower endpoint r={r_lo} is not certified noncausal "
            f"(signed robustness {probes[-1].signed_robustness:.3e})")
    if probe(r_hi):
        raise InvalidBracketError(
            f"upper endpoint r={r_hi} is still noncausal "
            f"(signed robustness {probes[-1].signed_robustness:.3e})")
    lo, hi = r_lo, r_hi
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if probe(mid):
            lo = mid
        else:
            hi = mid
    return ScanResult(0.5 * (lo + hi), lo, hi, width, margin, probes)

"""Complex-multiplication counts of the joint design and of the primal-dual subgradient reference.

All arithmetic is exact (integers and ``Fraction``); formatting happens last.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction

__all__ = ["ComplexityInputs", "ComplexityReport", "complexity_report", "format_sci", "format_percent"]


@dataclass(frozen=True)
class ComplexityInputs:
    n_tx: int = 2
    n_bs: int = 5
    n_tones: int = 16
    n_users: int = 4
    n_rx: int = 2
    n_irs: int = 2
    n_elems: int = 100
    outer: int = 10  # joint-design outer iterations
    cadmm: int = 35
    apg: int = 40
    frcg: int = 5
    ref_outer: int = 15  # reference-method iteration counts
    ref_active: int = 11
    ref_passive: int = 15

    def __post_init__(self):
        for name, v in asdict(self).items():
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {v!r}")


@dataclass(frozen=True)
class ComplexityReport:
    rows: dict
    overall: int
    reference: int
    ratio: Fraction

    def lines(self) -> list[str]:
        out = [f"{name:>6}: {value}" for name, value in self.rows.items()]
        out.append(f"overall (joint design): {format_sci(self.overall)}  [{self.overall}]")
        out.append(f"overall (reference):    {format_sci(self.reference)}  [{self.reference}]")
        out.append(f"complexity ratio:       {format_percent(self.ratio)}")
        return out


def complexity_report(inp: ComplexityInputs) -> ComplexityReport:
    M, K, Nr = inp.n_tones, inp.n_users, inp.n_rx
    L = inp.n_tx * inp.n_bs
    NcR = inp.n_irs * inp.n_elems
    rows = {
        "eta": M * K * (K * Nr * L + Nr**3 + (K + 1) * Nr**2 + Nr),
        "delta": M * K * (K * Nr * L + Nr**3 + (K + 1) * Nr**2),
        "W": L**2 * M**2 * K**2 + inp.cadmm * L * M * K,
        "rho": M * K * (Nr**3 + (K + 1) * Nr**2),
        "phi": inp.apg * (NcR**2 + 2 * NcR),
        "varphi": 3 * inp.frcg * NcR,
        "psi": 3 * inp.frcg * NcR,
        "kappa": 3 * inp.frcg * NcR,
    }
    overall = inp.outer * (L**2 * M**2 * K**2 + inp.cadmm * L * M * K
                           + inp.apg * (NcR**2 + 2 * NcR + 9 * inp.frcg * NcR))
    reference = inp.ref_outer * (inp.ref_active * L**2 * M**2 * K**2 + inp.ref_passive * NcR**2)
    return ComplexityReport(rows=rows, overall=overall, reference=reference, ratio=Fraction(overall, reference))


def _round_half_up(x: Fraction, digits: int) -> Fraction:
    scale = 10**digits
    n = x * scale
    q, r = divmod(n.numerator, n.denominator)
    if 2 * r >= n.denominator:
        q += 1
    return Fraction(q, scale)


def format_sci(value: int, sig: int = 5) -> str:
    """Exact scientific notation with trailing zeros trimmed, e.g. ``2.408E+7``."""
    v = Fraction(value)
    if v == 0:
        return "0E+0"
    exp = len(str(abs(v.numerator) // v.denominator)) - 1
    mant = _round_half_up(abs(v) / Fraction(10) ** exp, sig - 1)
    if mant >= 10:
        mant /= 10
        exp += 1
    digits = f"{mant.numerator * 10**(sig - 1) // mant.denominator:0{sig}d}"
    text = (digits[0] + "." + digits[1:]).rstrip("0").rstrip(".")
    return f"{'-' if value < 0 else ''}{text}E+{exp}"


def format_percent(ratio: Fraction, digits: int = 4) -> str:
    p = _round_half_up(ratio * 100, digits)
    whole, frac = divmod(p.numerator * 10**digits // p.denominator, 10**digits)
    return f"{whole}.{frac:0{digits}d}%"

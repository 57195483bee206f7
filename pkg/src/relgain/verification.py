"""Ratio harness: ||grad Q+(f, h)||_L2 against the weighted-norm products.

The bounds hold with unspecified constants, so what can be checked is that
the ratio lhs/(rhs_f rhs_h) stays under an envelope measured once under
audited settings and frozen in a flat text file.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .distributions import Distribution
from .norms import RHS, TheoremCase
from .quadrature import MomentumGrid
from .scattering import ScatteringKernel
from .spectral import gradient_gain_norms

TAIL_FLAG_THRESHOLD = 1e-4
ENVELOPE_SLACK = 1.10
DEFAULT_ENVELOPES = Path(__file__).with_name("data") / "envelopes.txt"


@dataclass
class VerificationReport:
    case: TheoremCase
    lhs: float
    rhs_f: float
    rhs_h: float
    ratio: float
    grid_N: int
    R: float
    mode_cutoff: float
    mode_stride: int
    n_modes: int
    tail_f: float
    tail_h: float
    family: str = ""
    family_param: float = float("nan")

    @property
    def tail_flag(self):
        return max(self.tail_f, self.tail_h) > TAIL_FLAG_THRESHOLD

    def as_row(self):
        return {
            "family_param": self.family_param,
            "lhs": self.lhs,
            "rhs_f": self.rhs_f,
            "rhs_h": self.rhs_h,
            "ratio": self.ratio,
            "grid_N": self.grid_N,
            "R": self.R,
            "mode_cutoff": self.mode_cutoff,
            "tail_flag": int(self.tail_flag),
        }

    def as_dict(self):
        d = asdict(self)
        d["case"] = asdict(self.case)
        d["case_label"] = self.case.label
        d["tail_flag"] = self.tail_flag
        return d


def relative_tail(dist: Distribution, R):
    if dist.is_zero:
        return 0.0
    try:
        return float(dist.tail_mass(R) / dist.total_mass())
    except NotImplementedError:
        return float("nan")


def _ratio(lhs, rf, rh):
    den = rf * rh
    if den == 0:
        return 0.0 if lhs == 0 else float("inf")
    return lhs / den


def verify_cases(f: Distribution, h: Distribution, cases, grid: MomentumGrid, amplitude=1.0,
                 stride=1, kmax=None, family="", family_param=float("nan")):
    """One report per case; all kernel exponents share a single pass over the dual lattice."""
    cases = list(cases)
    exps = sorted({float(c.a) for c in cases})
    norms = gradient_gain_norms(f, h, exps, grid, stride, kmax, amplitude)
    lhs_by_a = dict(zip(exps, norms.values))
    tf, th = relative_tail(f, grid.R), relative_tail(h, grid.R)
    out = []
    for case in cases:
        rf, rh = RHS[case.theorem](f, h, case, grid)
        lhs = float(lhs_by_a[float(case.a)])
        out.append(VerificationReport(
            case, lhs, rf, rh, _ratio(lhs, rf, rh), grid.N, grid.R, norms.kmax, norms.stride,
            norms.n_modes, tf, th, family, family_param,
        ))
    return out


def verify_case(f: Distribution, h: Distribution, kernel: ScatteringKernel, case: TheoremCase,
                grid: MomentumGrid, stride=1, kmax=None) -> VerificationReport:
    if not np.isclose(kernel.a, case.a, rtol=0, atol=1e-14):
        raise ValueError(f"kernel exponent {kernel.a} does not match case exponent {case.a}")
    if not kernel.isotropic:
        raise ValueError("the gradient norm uses the Fourier path and needs an isotropic kernel")
    return verify_cases(f, h, [case], grid, kernel.amplitude, stride, kmax)[0]


def settings_hash(settings) -> str:
    blob = json.dumps(settings, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


@dataclass
class EnvelopeRecord:
    family: str
    case: str
    envelope: float
    settings: str


@dataclass
class EnvelopeTable:
    records: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path):
        table = cls()
        path = Path(path)
        if not path.exists():
            return table
        for line in path.read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fam, case, env, sh = line.split()
            table.records[(fam, case)] = EnvelopeRecord(fam, case, float(env), sh)
        return table

    def save(self, path):
        lines = ["# family case envelope settings_hash"]
        for key in sorted(self.records):
            r = self.records[key]
            lines.append(f"{r.family} {r.case} {r.envelope!r} {r.settings}")
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text("\n".join(lines) + "\n")

    def get(self, family, case):
        return self.records.get((family, case))

    def freeze(self, reports, settings):
        """Record the family maximum of each case's ratio."""
        for fam, case, peak in family_maxima(reports):
            self.records[(fam, case)] = EnvelopeRecord(fam, case, peak, settings)

    def breaches(self, reports, slack=ENVELOPE_SLACK):
        """(family, case, observed max, envelope) for every exceeded envelope."""
        out = []
        for fam, case, peak in family_maxima(reports):
            rec = self.get(fam, case)
            if rec is not None and peak > slack * rec.envelope:
                out.append((fam, case, peak, rec.envelope))
        return out


def family_maxima(reports):
    peaks = {}
    for r in reports:
        key = (r.family, r.case.label)
        peaks[key] = max(peaks.get(key, 0.0), r.ratio)
    return [(fam, case, v) for (fam, case), v in sorted(peaks.items())]

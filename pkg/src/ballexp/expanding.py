"""Net certificates and refutations of the ball-expanding condition.

The condition checked is ``B_delta(f(x)) ⊆ f(B_{L*delta}(x))`` for sampled
``delta <= delta0``.  On nets it reads: for every candidate point ``x`` and
every target point ``y`` with ``d(f(x), y) <= delta`` there is a candidate
``z`` with ``d(x, z) <= L*delta`` and ``d(f(z), y) <= eta``.  Candidates
come from a finer net than targets so that exact preimages exist (``eta = 0``).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import ContractError, ShapeError
from .numerics import dyadic, fmt_point, fmt_rational
from .systems import NetSpace, SystemDef, build_net, eval_map

DEFAULT_KMAX = 8


def default_delta_samples(delta0: Fraction, kmax: int = DEFAULT_KMAX) -> List[Fraction]:
    """``delta0`` together with every ``2**-k <= delta0`` for ``0 <= k <= kmax``."""
    out = {Fraction(delta0)}
    out.update(dyadic(-k) for k in range(0, kmax + 1) if dyadic(-k) <= delta0)
    return sorted(out)


@dataclass(frozen=True)
class Witness:
    x: object
    delta: Fraction
    y: object
    gap: Fraction

    def to_json(self) -> dict:
        return {"x": fmt_point(self.x), "delta": fmt_rational(self.delta), "y": fmt_point(self.y), "gap": fmt_rational(self.gap)}


@dataclass
class BallExpandingCertificate:
    system: str
    L: Fraction
    delta0: Fraction
    target: dict
    candidate: dict
    delta_samples: List[Fraction]
    eta: Fraction
    witness: Optional[Witness] = None
    failures: int = 0
    checked: int = 0
    excluded: List[object] = field(default_factory=list)

    @property
    def mode(self) -> str:
        return "exact" if self.eta == 0 else "slack"

    @property
    def passed(self) -> bool:
        return self.witness is None

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_json(self) -> dict:
        return {
            "system": self.system,
            "L": fmt_rational(self.L),
            "delta0": fmt_rational(self.delta0),
            "mode": self.mode,
            "eta": fmt_rational(self.eta),
            "target_net": self.target,
            "candidate_net": self.candidate,
            "delta_samples": [fmt_rational(d) for d in self.delta_samples],
            "excluded_targets": [fmt_point(p) for p in self.excluded],
            "checked_triples": self.checked,
            "failures": self.failures,
            "verdict": self.verdict,
            "witness": self.witness.to_json() if self.witness else None,
        }


def _net_desc(net: NetSpace) -> dict:
    d = {"kind": net.spec.kind, "resolution": net.resolution, "size": len(net)}
    if net.spec.N is not None:
        d["N"] = net.spec.N
    if net.spec.m is not None:
        d["m"] = net.spec.m
    return d


def _check_nets(target: NetSpace, candidate: NetSpace) -> None:
    if target.spec.family != candidate.spec.family:
        raise ShapeError("target and candidate nets live in different spaces")
    if any(not candidate.contains(p) for p in target.points):
        raise ContractError("candidate net must refine the target net")


def _gap(target: NetSpace, images: Sequence, zs: Sequence[int], y) -> Fraction:
    return min(target.dist(images[z], y) for z in zs)


def verify_witness(system, target, candidate, L, w: Witness, eta: Fraction) -> bool:
    """Re-check a FAIL witness by direct evaluation over the candidate net."""
    fx = eval_map(system, w.x)
    if target.dist(fx, w.y) > w.delta:
        return False
    gaps = [
        target.dist(eval_map(system, z), w.y)
        for z in candidate.points
        if candidate.dist(w.x, z) <= L * w.delta
    ]
    return bool(gaps) and min(gaps) == w.gap and w.gap > eta


def ball_expanding_check(
    system: SystemDef,
    target_net: NetSpace,
    candidate_net: NetSpace,
    L: Fraction,
    delta0: Fraction,
    delta_samples: Optional[Sequence[Fraction]] = None,
    eta: Fraction = Fraction(0),
) -> BallExpandingCertificate:
    """Certify ball expansion on the nets, or return the worst violation.

    ``eta = 0`` is exact mode; ``eta > 0`` is slack mode.  The witness is the
    failing triple with the largest gap, ties broken by ``(x, delta, y)``
    in canonical order, so refutations report the most robust violation.
    On truncated spaces, target points with no exact preimage among the
    candidates are excluded and listed.
    """
    L, delta0, eta = Fraction(L), Fraction(delta0), Fraction(eta)
    if not 0 < L < 1:
        raise ContractError("L must lie in (0, 1)")
    if eta < 0:
        raise ContractError("eta must be nonnegative")
    _check_nets(target_net, candidate_net)
    samples = sorted(set(Fraction(d) for d in (delta_samples or default_delta_samples(delta0))))
    if any(d <= 0 or d > delta0 for d in samples):
        raise ContractError("delta samples must lie in (0, delta0]")

    cands = candidate_net.points
    images = [eval_map(system, z) for z in cands]
    image_keys = [target_net.embed(p) for p in images]
    excluded = set()
    if target_net.spec.truncated:
        hit = set(image_keys)
        excluded = {i for i, y in enumerate(target_net.points) if y not in hit}

    cert = BallExpandingCertificate(
        system.name, L, delta0, _net_desc(target_net), _net_desc(candidate_net), samples, eta,
        excluded=[target_net.points[i] for i in sorted(excluded)],
    )
    best_key = None
    for xi, x in enumerate(cands):
        fx = images[xi]
        for delta in samples:
            ys = [j for j in target_net.ball(fx, delta) if j not in excluded]
            if not ys:
                continue
            zs = candidate_net.ball(x, L * delta)
            keys = {image_keys[z] for z in zs}
            for yj in ys:
                cert.checked += 1
                y = target_net.points[yj]
                if y in keys:
                    continue
                gap = _gap(target_net, images, zs, y)
                if gap <= eta:
                    continue
                cert.failures += 1
                key = (-gap, xi, delta, yj)
                if best_key is None or key < best_key:
                    best_key = key
                    cert.witness = Witness(x, delta, y, gap)
    if cert.witness is not None and not verify_witness(system, target_net, candidate_net, L, cert.witness, eta):
        raise AssertionError("ball-expanding witness does not re-verify")
    return cert


@dataclass
class SearchResult:
    best: Optional[BallExpandingCertificate]
    table: List[dict]

    def to_json(self) -> dict:
        return {"best": self.best.to_json() if self.best else None, "table": self.table}


def certificate_search(
    system: SystemDef,
    target_net: NetSpace,
    candidate_net: NetSpace,
    L_grid: Sequence[Fraction],
    delta0_grid: Sequence[Fraction],
    eta: Fraction = Fraction(0),
    kmax: int = DEFAULT_KMAX,
) -> SearchResult:
    """First passing ``(L, delta0)``, smaller ``L`` first, then larger ``delta0``."""
    if not L_grid or not delta0_grid:
        raise ContractError("grids must be nonempty")
    table = []
    for L in sorted(set(Fraction(v) for v in L_grid)):
        for d0 in sorted(set(Fraction(v) for v in delta0_grid), reverse=True):
            cert = ball_expanding_check(
                system, target_net, candidate_net, L, d0, default_delta_samples(d0, kmax), eta
            )
            table.append(
                {
                    "L": fmt_rational(L),
                    "delta0": fmt_rational(d0),
                    "verdict": cert.verdict,
                    "witness": cert.witness.to_json() if cert.witness else None,
                }
            )
            if cert.passed:
                return SearchResult(cert, table)
    return SearchResult(None, table)


def default_nets(system: SystemDef, target_res: int = 6, cand_res: Optional[int] = None):
    """Target net and a strictly finer candidate net for certificates.

    Continuum parts are refined by two dyadic levels by default; truncated
    countable and word parts gain one level of depth.
    """
    spec = system.space
    target = build_net(spec, target_res)
    cand_res = target_res + 2 if cand_res is None else cand_res
    if cand_res <= target_res and spec.kind in ("interval01", "circle", "ex22_set"):
        raise ContractError("candidate resolution must exceed the target resolution")
    if spec.kind in ("ex21_set", "ex22_set", "ex21_product"):
        spec = dataclasses.replace(spec, N=spec.N + 1)
    elif spec.kind == "word_shift":
        spec = dataclasses.replace(spec, m=spec.m + 1)
    return target, build_net(spec, cand_res)


@dataclass
class PairVerdict:
    passed: bool
    witness: Optional[Tuple[object, object]] = None
    pairs_checked: int = 0
    detail: Dict[str, str] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "witness": [fmt_point(p) for p in self.witness] if self.witness else None,
            "pairs_checked": self.pairs_checked,
            **self.detail,
        }


def metric_expanding_check(system: SystemDef, net: NetSpace, L: Fraction, delta0: Fraction) -> PairVerdict:
    """Does ``d(f(x), f(y)) >= d(x, y) / L`` hold for net pairs at distance ``<= delta0``?

    The witness is the first failing pair in canonical order.
    """
    L = Fraction(L)
    if not 0 < L < 1:
        raise ContractError("L must lie in (0, 1)")
    pts = net.points
    images = [eval_map(system, p) for p in pts]
    count = 0
    for i, x in enumerate(pts):
        for j in net.ball(x, delta0):
            if j <= i:
                continue
            count += 1
            d = net.dist(x, pts[j])
            fd = net.dist(images[i], images[j])
            if fd * L < d:
                return PairVerdict(False, (x, pts[j]), count, {"distance": fmt_rational(d), "image_distance": fmt_rational(fd)})
    return PairVerdict(True, None, count)


def local_injectivity_check(system: SystemDef, net: NetSpace, rho: Fraction) -> PairVerdict:
    """Are distinct net points within ``rho`` of each other mapped to distinct points?"""
    if rho <= 0:
        raise ContractError("rho must be positive")
    pts = net.points
    images = [net.embed(eval_map(system, p)) for p in pts]
    count = 0
    for i, x in enumerate(pts):
        for j in net.ball(x, rho):
            if j <= i:
                continue
            count += 1
            if images[i] == images[j]:
                return PairVerdict(False, (x, pts[j]), count, {"image": str(fmt_point(images[i]))})
    return PairVerdict(True, None, count)

"""Adversarial provers and the Monte-Carlo soundness harness."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .field import FieldContext, SchemeKind, make_rng
from .fourcycles import FourCycleSession, fc_prove_round1, fc_prove_round2
from .matching import (
    MatchingProof,
    MatchingSketch,
    assemble_matching_proof,
    spanning_forest,
    verify_matching,
)
from .outcome import MalformedProof
from .poly import PointValuePoly
from .stream import (
    GenSpec,
    StreamUpdate,
    accumulate,
    generate,
    oracle_components,
    oracle_max_matching,
    oracle_tutte_berge,
    tutte_berge_value,
)
from .triangles import TriangleProof, TriangleSketch, prove, replay_points, verify

TRIANGLE_ATTACKS = ("one-point", "other-stream")
MATCHING_ATTACKS = ("phantom-edge", "forged-ustar", "merged-labels", "split-labels")
FOURCYCLE_ATTACKS = ("s1-one-point", "s2-one-point", "s2-wrong-challenge")


def bump(poly: PointValuePoly, x: int, by: int = 1) -> PointValuePoly:
    vals = list(poly.values)
    vals[x] = (vals[x] + by) % poly.field.p
    return PointValuePoly(poly.field, tuple(vals))


# ---------------------------------------------------------------- triangles


def flipped_stream(header, updates):
    """Same stream plus one toggle of an edge whose endpoints both have edges."""
    g = accumulate(header, updates)
    deg = (g.mult > 0).sum(axis=1)
    live = [v + 1 for v in range(header.n) if deg[v]]
    for a, b in itertools.combinations(live, 2):
        c = g[a, b]
        if c > 0:
            return list(updates) + [StreamUpdate(a, b, -1)]
        if c < header.B:
            return list(updates) + [StreamUpdate(a, b, 1)]
    raise ValueError("no edge can be flipped")


def triangles_attack(mode, field, header, updates) -> TriangleProof:
    if mode == "one-point":
        honest = prove(field, header, updates)
        return TriangleProof(bump(honest.s, 0))
    if mode == "other-stream":
        return prove(field, header, flipped_stream(header, updates))
    raise ValueError(f"unknown triangles attack {mode!r}")


# ---------------------------------------------------------------- matching


def _unmatched_pair(n, M):
    used = {v for e in M for v in e}
    free = [v for v in range(1, n + 1) if v not in used]
    return (free[0], free[1]) if len(free) >= 2 else None


def _witness_with_value(g, target2):
    """Some U whose honest Tutte-Berge expression equals ``target2``."""
    for size in range(g.n + 1):
        for U in itertools.combinations(range(1, g.n + 1), size):
            if tutte_berge_value(g, U) == target2:
                return list(U)
    return None


def matching_attack(mode, field, header, updates):
    """Forged proof for ``mode``, or None when the instance cannot host it."""
    updates = list(updates)
    n = header.n
    g = accumulate(header, updates)
    lde, _ = replay_points(field, header, updates, range(2 * n + 1), products=False)
    k, M = oracle_max_matching(g)
    _, Ustar = oracle_tutte_berge(g)

    def honest_parts(U):
        labels, _ = oracle_components(g, U)
        return labels, spanning_forest(g, labels)

    if mode in ("phantom-edge", "forged-ustar"):
        pair = _unmatched_pair(n, M)
        if pair is None:
            return None
        M2 = list(M) + [pair]
        U = _witness_with_value(g, 2 * (k + 1))
        if U is None:
            if mode == "forged-ustar":
                return None
            U = Ustar
        labels, trees = honest_parts(U)
        proof = assemble_matching_proof(field, header, updates, k + 1, M2, U, labels, trees, lde)
        if mode == "forged-ustar":
            # claim the phantom edge is present: head value 1 instead of 0
            proof = _replace(proof, tM=bump(proof.tM, pair[1], 1))
        return proof

    labels, trees = honest_parts(Ustar)
    classes: dict[int, list[int]] = {}
    for v, lab in labels.items():
        classes.setdefault(lab, []).append(v)

    if mode == "merged-labels":
        # merge a class with one of even size so the odd count is unchanged
        evens = [lab for lab, c in classes.items() if len(c) % 2 == 0]
        if not evens or len(classes) < 2:
            return None
        a = evens[0]
        b = next(lab for lab in classes if lab != a)
        keep, gone = min(a, b), max(a, b)
        labels2 = {v: (keep if lab == gone else lab) for v, lab in labels.items()}
        trees2 = list(trees) + [(gone, keep)]          # phantom tree edge
        proof = assemble_matching_proof(field, header, updates, k, M, Ustar, labels2, trees2, lde)
        if g[gone, keep] == 0:
            proof = _replace(proof, tT=bump(proof.tT, gone, 1))
        return proof

    if mode == "split-labels":
        # cut one tree edge from a class whose size keeps the odd count fixed
        for lab, members in sorted(classes.items()):
            if len(members) < 2:
                continue
            sub = {c: par for c, par in trees if labels[c] == lab}
            for child in sorted(sub):
                side = _subtree(child, trees)
                if len(members) % 2 == 0 and len(side) % 2 == 1:
                    continue
                labels2 = dict(labels)
                for v in side:
                    labels2[v] = child
                trees2 = [t for t in trees if t[0] != child]
                proof = assemble_matching_proof(
                    field, header, updates, k, M, Ustar, labels2, trees2, lde
                )
                bad = sum(proof.sB.values[1 : n + 1]) % field.p
                return _replace(proof, sB=bump(proof.sB, 1, -bad))
        return None
    raise ValueError(f"unknown matching attack {mode!r}")


def _subtree(root, trees):
    kids: dict[int, list[int]] = {}
    for c, par in trees:
        kids.setdefault(par, []).append(c)
    out, stack = [], [root]
    while stack:
        x = stack.pop()
        out.append(x)
        stack.extend(kids.get(x, []))
    return out


def _replace(proof: MatchingProof, **kw) -> MatchingProof:
    from dataclasses import replace

    return replace(proof, **kw)


# ---------------------------------------------------------------- 4-cycles


class FourCycleProver:
    """Prover for one 4-cycle session; ``mode`` None is honest."""

    def __init__(self, field, header, updates, mode=None):
        if mode not in (None, *FOURCYCLE_ATTACKS):
            raise ValueError(f"unknown 4-cycle attack {mode!r}")
        self.field, self.header, self.updates, self.mode = field, header, list(updates), mode
        self._s1 = None

    def round1(self) -> PointValuePoly:
        s1 = fc_prove_round1(self.field, self.header, self.updates)
        if self.mode == "s1-one-point":
            s1 = bump(s1, 0)
        self._s1 = s1
        return s1

    def round2(self, r1: int) -> PointValuePoly:
        from .poly import eval_point_value, range_sum

        p = self.field.p
        if self.mode == "s2-wrong-challenge":
            return fc_prove_round2(self.field, self.header, self.updates, (r1 + 1) % p)
        s2 = fc_prove_round2(self.field, self.header, self.updates, r1)
        if self.mode == "s2-one-point":
            return bump(s2, 0)
        if self.mode == "s1-one-point":
            # stay consistent with the forged s1 at r1; caught only at r2
            gap = (eval_point_value(self._s1, r1) - range_sum(s2, 1, self.header.n)) % p
            return bump(s2, 1, gap)
        return s2


# ---------------------------------------------------------------- harness


@dataclass
class SoundnessReport:
    scheme: str
    mode: str
    n: int
    p: int
    trials: int
    rejects: int
    bound: float

    @property
    def rejection_rate(self) -> float:
        return self.rejects / self.trials if self.trials else 0.0

    def as_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "mode": self.mode,
            "n": self.n,
            "p": self.p,
            "trials": self.trials,
            "rejects": self.rejects,
            "rejection_rate": self.rejection_rate,
            "theoretical_rejection_bound": 1 - self.bound,
        }


def _rejected(outcome) -> bool:
    return not outcome.accepted


def run_soundness(scheme, mode, trials, n, seed=0, m=None, B=1, graphs=None):
    """Fresh verifier randomness per trial; streams drawn from a seeded pool."""
    rng = make_rng(seed)
    if scheme == "triangles":
        field = FieldContext.for_scheme(SchemeKind.TRIANGLES, n, B)
        header, ups = generate(GenSpec(n, m or 4 * n, B, deletion_fraction=0.1, seed=seed))
        proof = triangles_attack(mode, field, header, ups)
        rejects = 0
        for _ in range(trials):
            sk = TriangleSketch(field, n, field.sample(rng))
            for up in ups:
                sk.update(up)
            rejects += _rejected(verify(sk, proof))
        return SoundnessReport(scheme, mode, n, field.p, trials, rejects, 2 * n / field.p)

    if scheme == "matching":
        field = FieldContext.for_scheme(SchemeKind.MATCHING, n, B)
        pool = []
        gseed = seed
        want = graphs or max(1, trials // 50)
        tries = 0
        while len(pool) < want:
            tries += 1
            if tries > 200 * want:
                raise RuntimeError(f"no instance supports attack {mode!r}")
            header, ups = generate(GenSpec(n, m or n + n // 2, B, seed=gseed))
            gseed += 1
            proof = matching_attack(mode, field, header, ups)
            if proof is not None:
                pool.append((header, ups, proof))
        rejects = 0
        for t in range(trials):
            header, ups, proof = pool[t % len(pool)]
            sk = MatchingSketch(field, n, field.sample(rng))
            for up in ups:
                sk.update(up)
            try:
                rejects += _rejected(verify_matching(sk, proof))
            except MalformedProof:
                rejects += 1
        return SoundnessReport(scheme, mode, n, field.p, trials, rejects, 2 * n / field.p)

    if scheme == "fourcycles":
        field = FieldContext.for_scheme(SchemeKind.FOURCYCLES, n, B)
        header, ups = generate(GenSpec(n, m or 4 * n, B, deletion_fraction=0.1, seed=seed))
        prover = FourCycleProver(field, header, ups, mode)
        s1 = prover.round1()
        rejects = 0
        cache: dict[int, PointValuePoly] = {}
        for _ in range(trials):
            r1, r2 = field.sample(rng), field.sample(rng)
            sess = FourCycleSession(field, n, r1, r2)
            for up in ups:
                sess.update(up)
            sess.end_stream()
            sess.receive_s1(s1)
            if r1 not in cache:
                cache[r1] = prover.round2(r1)
            rejects += _rejected(sess.receive_s2(cache[r1]))
        return SoundnessReport(scheme, mode, n, field.p, trials, rejects, 4 * n / field.p)
    raise ValueError(f"unknown scheme {scheme!r}")

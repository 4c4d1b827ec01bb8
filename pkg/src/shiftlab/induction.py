"""First-return (induced) presentations at distinguished words.

``induce`` rebuilds a shift as a loop system: all first-return paths between
occurrences of one or two words, enumerated exactly up to a length cap, with
the remainder summarized by a rigorous tail bound read off the off-core part
of the block graph.  Loop systems are also a direct input format (renewal
shifts), in which case per-length weights and tails are declared instead of
derived.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from . import kernels
from .expsum import ExpSum
from .graphs import (
    BudgetExceededError,
    FiniteGraph,
    FinitePresentation,
    GraphError,
    Word,
    higher_block,
)
from .potentials import (
    FiniteRangePotential,
    Number,
    PotentialError,
    VariationCertificate,
    bowen_reduce,
    lift_variation,
)

_EPS = 2.2e-16


@dataclass(frozen=True)
class Loop:
    """One first-return path; ``label`` is its ambient word when known."""

    length: int
    src: int = 1
    dst: int = 1
    label: Word | None = None
    count: int = 1
    log_weight: Number = Fraction(0)

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("loops have length >= 1")
        if self.src not in (1, 2) or self.dst not in (1, 2):
            raise ValueError("distinguished vertices are numbered 1 and 2")
        if self.label is not None and len(self.label) != self.length:
            raise ValueError("label length must equal the loop length")
        if self.count < 1:
            raise ValueError("count must be >= 1")


@dataclass(frozen=True)
class TailDescriptor:
    """Aggregate weight of loops longer than ``start``.

    ``exact`` tails state the true per-length weights (zero | geometric
    coef*ratio**n | polynomial coef*n**-power); ``upper`` tails only bound
    them from above (the lower envelope is then the explicit part alone).
    """

    kind: str
    coef: float = 0.0
    ratio: float = 0.0
    power: float = 0.0
    start: int = 0
    bound: str = "exact"
    src: int = 1
    dst: int = 1

    def __post_init__(self):
        if self.kind not in ("zero", "geometric", "polynomial"):
            raise ValueError(f"unknown tail kind {self.kind!r}")
        if self.bound not in ("exact", "upper"):
            raise ValueError("bound must be exact or upper")
        if self.coef < 0:
            raise ValueError("tail coefficient must be >= 0")
        if self.kind == "geometric" and self.ratio <= 0 and self.coef > 0:
            raise ValueError("geometric tail needs ratio > 0")
        if self.kind == "polynomial" and self.power <= 0 and self.coef > 0:
            raise ValueError("polynomial tail needs power > 0")

    def radius(self) -> float:
        if self.kind == "zero" or self.coef == 0.0:
            return math.inf
        if self.kind == "geometric":
            return 1.0 / self.ratio
        return 1.0


@dataclass(frozen=True)
class OffCoreData:
    """Block graph minus the distinguished vertices, for weighted tail bounds."""

    block_graph: FiniteGraph
    block_words: tuple[Word, ...]
    distinguished: tuple[int, ...]  # vertex ids of W1 (and W2) in the block graph


@dataclass(frozen=True)
class LoopSystem:
    """First-return data at one or two distinguished vertices."""

    loops: tuple[Loop, ...]
    tails: tuple[TailDescriptor, ...]
    names: tuple[str, ...] | None = None
    base_words: tuple[Word, ...] = ()
    off_core: OffCoreData | None = None

    def __post_init__(self):
        labeled = [lp for lp in self.loops if lp.label is not None]
        if len({(lp.src, lp.dst, lp.label) for lp in labeled}) != len(labeled):
            raise ValueError("labeled loops must be pairwise distinct")
        pairs = [(t.src, t.dst) for t in self.tails]
        if len(set(pairs)) != len(pairs):
            raise ValueError("at most one tail per vertex pair")
        object.__setattr__(
            self,
            "loops",
            tuple(sorted(self.loops, key=lambda lp: (lp.src, lp.dst, lp.length, lp.label or ()))),
        )

    @property
    def kind(self) -> str:
        return "loops"

    @property
    def two_vertex(self) -> bool:
        verts = {lp.src for lp in self.loops} | {lp.dst for lp in self.loops}
        verts |= {t.src for t in self.tails if t.coef > 0} | {t.dst for t in self.tails if t.coef > 0}
        return 2 in verts

    @property
    def period(self) -> int:
        g = 0
        for lp in self.loops:
            g = math.gcd(g, lp.length)
        for t in self.tails:
            if t.coef > 0:
                g = math.gcd(g, math.gcd(t.start + 1, t.start + 2))
        return g if g else 1

    def max_explicit_length(self, src: int = 1, dst: int = 1) -> int:
        lens = [lp.length for lp in self.loops if lp.src == src and lp.dst == dst]
        return max(lens) if lens else 0

    def tail_for(self, src: int, dst: int) -> TailDescriptor:
        for t in self.tails:
            if (t.src, t.dst) == (src, dst):
                return t
        return TailDescriptor(kind="zero", src=src, dst=dst,
                              start=self.max_explicit_length(src, dst))


@dataclass(frozen=True)
class InducedPresentation:
    """A loop system together with the block code back to the ambient shift."""

    loops: LoopSystem
    source_words: tuple[Word, ...]
    offsets: tuple[int, int]  # (L, M) used for certificate lifting

    @property
    def W1(self) -> Word:
        return self.source_words[0]

    @property
    def W2(self) -> Word:
        return self.source_words[-1]


# --------------------------------------------------------------------------
# building induced presentations


def _loop_weight(label: Word, dst_word: Word, f: FiniteRangePotential) -> Number:
    """Birkhoff weight of one loop, peeking into the seam word.

    The letters right after a loop are the destination word itself, whatever
    loop follows, so windows reaching past the label are still determined.
    The value equals the closed-orbit sum of the loop, hence is invariant
    under composing with powers of the shift.
    """
    if f.left > 0:
        f = bowen_reduce(f)[0]
    r = f.span
    word = label + dst_word
    k = len(label)
    if r > len(dst_word) + 1:
        raise PotentialError(
            f"potential span {r} too wide for induction at a word of length {len(dst_word)}"
        )
    total: Number = Fraction(0) if f.rational else 0.0
    for t in range(k):
        total = total + f.table[word[t: t + r]]
    return total


def induce(
    g,
    W1,
    W2=None,
    maxlen: int = 20,
    budget: int = 500_000,
) -> InducedPresentation:
    """Enumerate the first-return structure at one or two words.

    Words must be admissible and of common length.  Explicit loops cover
    lengths up to ``maxlen``; longer returns are bounded by a geometric tail
    computed from the off-core block matrix (exactly zero when that part of
    the graph has no cycles; in that case ``maxlen`` is extended so nothing
    is truncated).
    """
    graph = g.graph if isinstance(g, FinitePresentation) else g
    W1 = tuple(int(s) for s in W1)
    W2 = W1 if W2 is None else tuple(int(s) for s in W2)
    if not W1 or not graph.is_word(W1) or not graph.is_word(W2):
        raise GraphError("distinguished words must be nonempty admissible words")
    if len(W1) != len(W2):
        raise GraphError("distinguished words must have a common length (pad the shorter)")
    N = len(W1)
    H, labeling = higher_block(graph, N)
    index = labeling.block_index()
    v1, v2 = index[W1], index[W2]
    distinct = sorted({v1, v2})

    # extend maxlen when the off-core part is acyclic: tails become exactly zero
    Vh = H.n_vertices
    B_bool = H.adjacency.copy()
    for v in distinct:
        B_bool[v, :] = False
        B_bool[:, v] = False
    nilpotent = not _has_cycle(B_bool)
    if nilpotent:
        maxlen = max(maxlen, Vh + 1)

    indptr, indices = H.csr
    allowed = np.ones(Vh, dtype=bool)
    for v in distinct:
        allowed[v] = False

    loops: list[Loop] = []
    sides = [(1, v1)] + ([(2, v2)] if v2 != v1 else [])
    for di, vstart in sides:
        for dj, vend in sides:
            dist = _bfs_dist_to(H, allowed, vend)
            flat, lengths, overflow = kernels.first_return_paths(
                indptr, indices, allowed, dist, vstart, vend, maxlen, budget
            )
            if overflow:
                raise BudgetExceededError(
                    f"more than {budget} first-return paths up to length {maxlen}"
                )
            pos = 0
            for k in lengths:
                k = int(k)
                path = flat[pos:pos + k]
                pos += k
                label = labeling.apply(int(s) for s in path)
                loops.append(Loop(length=k, src=di, dst=dj, label=tuple(label)))
    if not loops:
        raise GraphError("no first return found up to maxlen; increase maxlen")
    loops.sort(key=lambda lp: (lp.src, lp.dst, lp.length, lp.label))

    tails = []
    for di, vstart in sides:
        for dj, vend in sides:
            tails.append(
                _count_tail(H, distinct, vstart, vend, maxlen, nilpotent, di, dj)
            )
    system = LoopSystem(
        loops=tuple(loops),
        tails=tuple(tails),
        names=graph.names,
        base_words=(W1,) if v1 == v2 else (W1, W2),
        off_core=OffCoreData(
            block_graph=H,
            block_words=labeling.block_words,
            distinguished=tuple(distinct),
        ),
    )
    return InducedPresentation(
        loops=system,
        source_words=(W1,) if v1 == v2 else (W1, W2),
        offsets=(0, N - 1),
    )


def _structured_extensions(graph: FiniteGraph, w: Word, total: int):
    """All (a, b) with |a| + |b| = total, both nonempty, w a w b admissible."""
    for la in range(1, total):
        lb = total - la
        for a in graph.words(la):
            if not graph.is_word(w + a + w):
                continue
            for b in graph.words(lb):
                if graph.is_word(w + a + w + b):
                    yield a, b


def induce_structured(
    g,
    w1,
    w2=None,
    maxlen: int = 20,
    budget: int = 500_000,
) -> InducedPresentation:
    """Induce at doubled words W_i = w_i a_i w_i b_i of common length.

    The fillers are the shortest admissible nonempty (a_i, b_i), chosen
    lexicographically, with both W_i brought to the same total length N.
    The recorded offsets are L = |w_i| and M = N - |b| - L - 1 (minimized
    over the two sides, the conservative direction for certificate lifting).
    """
    graph = g.graph if isinstance(g, FinitePresentation) else g
    w1 = tuple(int(s) for s in w1)
    w2 = w1 if w2 is None else tuple(int(s) for s in w2)
    if len(w1) != len(w2):
        raise GraphError("base words must share a length (lengthen the shorter)")
    L = len(w1)
    ws = [w1] if w2 == w1 else [w1, w2]
    for total in range(2, 2 * graph.n_vertices + 8):
        picks = []
        for w in ws:
            found = next(iter(_structured_extensions(graph, w, total)), None)
            if found is None:
                break
            picks.append(found)
        if len(picks) != len(ws):
            continue
        words = [w + a + w + b for w, (a, b) in zip(ws, picks)]
        N = len(words[0])
        M = min(N - len(b) - L - 1 for _, b in picks)
        ind = induce(graph, words[0], words[-1], maxlen=maxlen, budget=budget)
        return replace(ind, offsets=(L, M))
    raise GraphError("no admissible doubled words found")


def _has_cycle(adj: np.ndarray) -> bool:
    a = adj.astype(np.int64)
    power = a.copy()
    for _ in range(adj.shape[0]):
        if power.trace() > 0:
            return True
        power = np.clip(power @ a, 0, 1)
    return bool(power.any())


def _bfs_dist_to(H: FiniteGraph, allowed: np.ndarray, target: int) -> np.ndarray:
    """Min step counts to ``target`` through allowed intermediates."""
    V = H.n_vertices
    dist = np.full(V, np.inf)
    preds: dict[int, list[int]] = {v: [] for v in range(V)}
    for u, v in H.edges:
        preds[v].append(u)
    dist[target] = 0.0
    queue = [target]
    while queue:
        v = queue.pop(0)
        for u in preds[v]:
            if allowed[u] and not math.isfinite(dist[u]):
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


def _weighted_tail_bound(
    H: FiniteGraph,
    distinguished: tuple[int, ...],
    vstart: int,
    vend: int,
    maxlen: int,
    weights: np.ndarray,
    src: int,
    dst: int,
) -> TailDescriptor:
    """Rigorous geometric upper bound for weighted first returns past maxlen.

    First returns of length n >= 2 factor through the off-core matrix B:
    w_n = out . B^{n-2} . in.  For any positive u, rho = max_i (Bu)_i/u_i
    dominates B's Perron root and B^k in <= c u rho^k entrywise, giving
    w_n <= C rho^n.
    """
    V = H.n_vertices
    M = H.adjacency.astype(np.float64) * weights[:, None]
    mask = np.ones(V, dtype=bool)
    for v in distinguished:
        mask[v] = False
    B = M[np.ix_(mask, mask)]
    out_w = M[vstart, mask]
    in_w = M[mask, vend]
    if B.size == 0 or not out_w.any() or not in_w.any():
        return TailDescriptor(kind="zero", start=maxlen, src=src, dst=dst)
    u = np.ones(B.shape[0])
    for _ in range(200):
        nu = B @ u + u
        u = nu / nu.sum()
    rho = float(np.max((B @ u) / u))
    if rho <= 0.0:
        return TailDescriptor(kind="zero", start=maxlen, src=src, dst=dst)
    c_in = float(np.max(np.where(u > 0, in_w / u, 0.0)))
    C = c_in * float(out_w @ u) / (rho * rho)
    C *= 1.0 + 1e-9  # float slop
    return TailDescriptor(
        kind="geometric", coef=C, ratio=rho, start=maxlen, bound="upper", src=src, dst=dst
    )


def _count_tail(H, distinguished, vstart, vend, maxlen, nilpotent, src, dst) -> TailDescriptor:
    if nilpotent:
        return TailDescriptor(kind="zero", start=maxlen, src=src, dst=dst)
    ones = np.ones(H.n_vertices)
    return _weighted_tail_bound(H, distinguished, vstart, vend, maxlen, ones, src, dst)


def lift_potential(
    ind: InducedPresentation,
    f: FiniteRangePotential,
    cert: VariationCertificate | None = None,
):
    """Per-loop Birkhoff weights of f over the induced system, plus the lifted
    oscillation certificate (via the offsets recorded at induction time).

    Returns ``(loop_system_with_weights, lifted_certificate)``.
    """
    sys_ = ind.loops
    if sys_.names is None:
        raise PotentialError("loop system carries no ambient labels to lift over")
    dst_words = {1: ind.source_words[0], 2: ind.source_words[-1]}
    L, M = ind.offsets
    new_loops = []
    for lp in sys_.loops:
        if lp.label is None:
            raise PotentialError("cannot lift over an unlabeled loop")
        w = _loop_weight(lp.label, dst_words[lp.dst], f)
        new_loops.append(replace(lp, log_weight=w))
    tails = _weighted_tails(ind, f)
    lifted = lift_variation(cert, L, M) if cert is not None else None
    weighted = replace(sys_, loops=tuple(new_loops), tails=tails)
    return weighted, lifted


def _weighted_tails(ind: InducedPresentation, f: FiniteRangePotential | None):
    sys_ = ind.loops
    oc = sys_.off_core
    if oc is None:
        if f is None:
            return sys_.tails
        raise PotentialError("loop system has no off-core data; bake weights via lift_potential at induction time")
    H = oc.block_graph
    if f is None:
        weights = np.ones(H.n_vertices)
    else:
        g = bowen_reduce(f)[0] if f.left > 0 else f
        span = g.span
        weights = np.empty(H.n_vertices)
        for i, bw in enumerate(oc.block_words):
            weights[i] = math.exp(float(g.table[bw[:span]]))
    ids = {1: oc.distinguished[0], 2: oc.distinguished[-1]}
    maxlen = max((lp.length for lp in sys_.loops), default=0)
    nil = all(t.kind == "zero" for t in sys_.tails)
    tails = []
    for t in sys_.tails:
        if nil:
            tails.append(replace(t, start=maxlen))
            continue
        tails.append(
            _weighted_tail_bound(
                H, oc.distinguished, ids[t.src], ids[t.dst], maxlen, weights, t.src, t.dst
            )
        )
    return tuple(tails)


# --------------------------------------------------------------------------
# the first-return generating series with rigorous envelopes


@dataclass
class _SeriesPart:
    explicit: dict[int, float]
    tail: TailDescriptor

    def eval_F(self, z: float) -> tuple[float, float]:
        head = math.fsum(w * z**n for n, w in self.explicit.items())
        slop = 1e-14 * (1.0 + abs(head))
        lo, hi = _tail_F(self.tail, z)
        if self.tail.bound == "upper":
            lo = 0.0
        return head - slop + lo, head + slop + hi

    def eval_Fprime(self, z: float):
        head = math.fsum(n * w * z ** (n - 1) for n, w in self.explicit.items())
        slop = 1e-14 * (1.0 + abs(head))
        t = _tail_Fprime(self.tail, z)
        if t is None:
            return None
        lo, hi = t
        if self.tail.bound == "upper":
            lo = 0.0
        return head - slop + lo, head + slop + hi

    def radius(self) -> float:
        return self.tail.radius()


def _tail_F(t: TailDescriptor, z: float) -> tuple[float, float]:
    if t.kind == "zero" or t.coef == 0.0:
        return 0.0, 0.0
    N = t.start
    if t.kind == "geometric":
        x = t.ratio * z
        if x >= 1.0:
            return math.inf, math.inf
        val = t.coef * x ** (N + 1) / (1.0 - x)
        return val * (1 - 1e-12), val * (1 + 1e-12)
    # polynomial
    if z > 1.0:
        return math.inf, math.inf
    q = t.power
    if z == 1.0:
        if q <= 1.0:
            return math.inf, math.inf
        M = max(N + 1, 1_000_000)
        ns = np.arange(N + 1, M + 1, dtype=np.float64)
        partial = float(np.sum(t.coef * ns**-q))
        lo = partial + t.coef * (M + 1) ** (1 - q) / (q - 1)
        hi = partial + t.coef * M ** (1 - q) / (q - 1)
        slop = 8 * _EPS * partial * math.log2(M)
        return lo - slop, hi + slop
    M = max(N + 1, 4096)
    ns = np.arange(N + 1, M + 1, dtype=np.float64)
    partial = float(np.sum(t.coef * ns**-q * z**ns))
    rem_hi = t.coef * (M + 1) ** -q * z ** (M + 1) / (1.0 - z)
    slop = 8 * _EPS * (partial + rem_hi + 1e-300)
    return partial - slop, partial + rem_hi + slop


def _tail_Fprime(t: TailDescriptor, z: float):
    if t.kind == "zero" or t.coef == 0.0:
        return 0.0, 0.0
    N = t.start
    if t.kind == "geometric":
        x = t.ratio * z
        if x >= 1.0:
            return None
        # sum_{n > N} n coef ratio^n z^{n-1}
        val = (t.coef / z) * x ** (N + 1) * ((N + 1) - N * x) / (1.0 - x) ** 2 if z > 0 else 0.0
        return val * (1 - 1e-12), val * (1 + 1e-12)
    q = t.power
    if z > 1.0:
        return None
    if z == 1.0:
        if q - 1.0 <= 1.0:
            return None
        M = max(N + 1, 1_000_000)
        ns = np.arange(N + 1, M + 1, dtype=np.float64)
        partial = float(np.sum(t.coef * ns ** (1.0 - q)))
        lo = partial + t.coef * (M + 1) ** (2 - q) / (q - 2)
        hi = partial + t.coef * M ** (2 - q) / (q - 2)
        slop = 8 * _EPS * partial * math.log2(M)
        return lo - slop, hi + slop
    M = max(N + 1, 4096)
    ns = np.arange(N + 1, M + 1, dtype=np.float64)
    partial = float(np.sum(t.coef * ns ** (1.0 - q) * z ** (ns - 1.0)))
    # sum_{n > M} n z^{n-1} = ((M+1) z^M (1-z) + z^{M+1}) / (1-z)^2, times max n^-q
    rem_geom = ((M + 1) * z**M * (1 - z) + z ** (M + 1)) / (1 - z) ** 2
    rem_hi = t.coef * (M + 1) ** -q * rem_geom
    slop = 8 * _EPS * (partial + rem_hi + 1e-300)
    return partial - slop, partial + rem_hi + slop


@dataclass
class ReturnSeries:
    """Interval-valued F(z) for a loop system, reduced to the first vertex.

    Two-vertex systems are folded through excursions:
    ``F = F11 + F12 F21 / (1 - F22)``.
    """

    parts: dict[tuple[int, int], _SeriesPart]
    tail_exact: bool
    radius_lower: float

    def F(self, z: float) -> tuple[float, float]:
        lo11, hi11 = self.parts[(1, 1)].eval_F(z)
        if (1, 2) not in self.parts:
            return lo11, hi11
        lo12, hi12 = self.parts[(1, 2)].eval_F(z)
        lo21, hi21 = self.parts[(2, 1)].eval_F(z)
        lo22, hi22 = self.parts[(2, 2)].eval_F(z)
        hi = hi11 + (hi12 * hi21 / (1.0 - hi22) if hi22 < 1.0 else math.inf)
        lo = lo11 + (lo12 * lo21 / (1.0 - lo22) if lo22 < 1.0 else math.inf)
        return lo, hi

    def Fprime(self, z: float):
        p11 = self.parts[(1, 1)].eval_Fprime(z)
        if p11 is None:
            return None
        if (1, 2) not in self.parts:
            return p11
        evals = {}
        for key in ((1, 2), (2, 1), (2, 2)):
            fv = self.parts[key].eval_F(z)
            dv = self.parts[key].eval_Fprime(z)
            if dv is None or fv[1] >= 1.0 and key == (2, 2):
                return None
            evals[key] = (fv, dv)
        (f12, d12), (f21, d21), (f22, d22) = evals[(1, 2)], evals[(2, 1)], evals[(2, 2)]
        if f22[1] >= 1.0:
            return None
        # d/dz [F12 F21 / (1 - F22)]
        los = (
            d12[0] * f21[0] / (1 - f22[0])
            + f12[0] * d21[0] / (1 - f22[0])
            + f12[0] * f21[0] * d22[0] / (1 - f22[0]) ** 2
        )
        his = (
            d12[1] * f21[1] / (1 - f22[1])
            + f12[1] * d21[1] / (1 - f22[1])
            + f12[1] * f21[1] * d22[1] / (1 - f22[1]) ** 2
        )
        return p11[0] + los, p11[1] + his

    def _root(self, pick_hi: bool, atol: float, z_max: float | None):
        """Bracket the smallest z with F_env(z) = 1, env = upper or lower.

        Returns the rigorous side: the bisection's upper end when the root
        bounds z* from above (lower envelope), its lower end otherwise.
        """

        def env(z: float) -> float:
            lo, hi = self.F(z)
            return hi if pick_hi else lo

        zr = self.radius_lower if z_max is None else min(z_max, self.radius_lower)
        if math.isinf(zr):
            hi = 1.0
            while env(hi) < 1.0:
                hi *= 2.0
                if hi > 1e12:
                    return None
            lo = 0.0
        else:
            zr_in = zr * (1.0 - 1e-12)
            if env(zr_in) < 1.0:
                return None
            lo, hi = 0.0, zr_in
        for _ in range(200):
            if hi - lo <= atol:
                break
            mid = 0.5 * (lo + hi)
            if env(mid) < 1.0:
                lo = mid
            else:
                hi = mid
        # env(lo) < 1 <= env(hi): the envelope's root lies in [lo, hi]
        return lo if pick_hi else hi

    def root_lower(self, atol: float = 1e-10, z_max: float | None = None):
        """A certified lower bound for z* (via the upper envelope)."""
        return self._root(True, atol, z_max)

    def root_upper(self, atol: float = 1e-10, z_max: float | None = None):
        """A certified upper bound for z* (via the lower envelope)."""
        return self._root(False, atol, z_max)


def return_series(loops: LoopSystem, f: FiniteRangePotential | None = None) -> ReturnSeries:
    """Aggregate explicit loop weights and tails into an evaluable series."""
    if f is not None:
        if any(lp.label is None for lp in loops.loops):
            raise PotentialError("potential given but loops carry no labels")
        if not loops.base_words:
            raise PotentialError("labeled loop system needs its base words to lift a potential")
        dst_words = {1: loops.base_words[0], 2: loops.base_words[-1]}
        explicit: dict[tuple[int, int], dict[int, float]] = {}
        for lp in loops.loops:
            w = float(_loop_weight(lp.label, dst_words[lp.dst], f))
            d = explicit.setdefault((lp.src, lp.dst), {})
            d[lp.length] = d.get(lp.length, 0.0) + lp.count * math.exp(w)
        ind = InducedPresentation(loops=loops, source_words=loops.base_words,
                                  offsets=(0, len(loops.base_words[0]) - 1))
        tails = _weighted_tails(ind, f)
    else:
        explicit = {}
        for lp in loops.loops:
            d = explicit.setdefault((lp.src, lp.dst), {})
            d[lp.length] = d.get(lp.length, 0.0) + lp.count * math.exp(float(lp.log_weight))
        tails = loops.tails

    keys = {(1, 1)}
    if loops.two_vertex:
        keys |= {(1, 2), (2, 1), (2, 2)}
    parts = {}
    tail_exact = True
    radius = math.inf
    tmap = {(t.src, t.dst): t for t in tails}
    for key in keys:
        t = tmap.get(key, TailDescriptor(kind="zero", src=key[0], dst=key[1]))
        if t.coef > 0 and t.bound == "upper":
            tail_exact = False
        radius = min(radius, t.radius())
        parts[key] = _SeriesPart(explicit=explicit.get(key, {}), tail=t)
    return ReturnSeries(parts=parts, tail_exact=tail_exact, radius_lower=radius)


# --------------------------------------------------------------------------
# partition functions over loop compositions, and the coincidence check


def loop_zn_exact(loops: LoopSystem, f: FiniteRangePotential | None, n_max: int) -> list[ExpSum]:
    """Z_n at the first distinguished vertex via loop compositions, exact.

    Renewal recurrence over the loop structure: a closed orbit through the
    distinguished vertex decomposes uniquely into first-return loops.  Needs
    rational data; raises if explicit loops do not cover n_max (a nonzero
    tail would make the result a lower bound).
    """
    verts = (1, 2) if loops.two_vertex else (1,)
    weights: dict[tuple[int, int], dict[int, ExpSum]] = {}
    for lp in loops.loops:
        if f is not None:
            if lp.label is None:
                raise PotentialError("potential given but loop has no label")
            dst_word = loops.base_words[min(lp.dst, len(loops.base_words)) - 1]
            w = _loop_weight(lp.label, dst_word, f)
        else:
            w = lp.log_weight
        if not isinstance(w, (Fraction, int)):
            raise ValueError("exact loop composition needs rational weights")
        d = weights.setdefault((lp.src, lp.dst), {})
        entry = d.setdefault(lp.length, ExpSum())
        entry.add_term(Fraction(w), lp.count)
    # state[j][n] = weighted count of length-n loop chains from vertex 1 to j
    state: dict[int, list[ExpSum]] = {j: [ExpSum() for _ in range(n_max + 1)] for j in verts}
    state[1][0] = ExpSum.unit()
    for n in range(1, n_max + 1):
        for j in verts:
            acc = ExpSum()
            for i in verts:
                d = weights.get((i, j), {})
                for k, w in d.items():
                    if k <= n and state[i][n - k]:
                        acc = acc + state[i][n - k] * w
            state[j][n] = acc
    return state[1][1: n_max + 1]


def loop_partition_function(loops: LoopSystem, f: FiniteRangePotential | None, n_max: int):
    from .thermo import PartitionFunctionTable

    covered = min(
        (t.start for t in loops.tails if t.coef > 0),
        default=max((lp.length for lp in loops.loops), default=0),
    )
    note = None
    if covered < n_max:
        note = f"explicit loops cover lengths <= {covered}; entries beyond are lower bounds"
    try:
        zs = loop_zn_exact(loops, f, n_max)
        entries = {n: zs[n - 1] for n in range(1, n_max + 1)}
        exact = True
    except ValueError:
        series = return_series(loops, f)
        verts = (1, 2) if loops.two_vertex else (1,)
        w = {key: part.explicit for key, part in series.parts.items()}
        state = {j: [0.0] * (n_max + 1) for j in verts}
        state[1][0] = 1.0
        entries = {}
        for n in range(1, n_max + 1):
            for j in verts:
                state[j][n] = math.fsum(
                    w.get((i, j), {}).get(k, 0.0) * state[i][n - k]
                    for i in verts
                    for k in range(1, n + 1)
                )
            entries[n] = (state[1][n], abs(state[1][n]) * 1e-12)
        exact = False
    base = loops.base_words[0] if loops.base_words else ()
    return PartitionFunctionTable(
        base_word=base, exact=exact, entries=entries, n_max=n_max, note=note,
    )


@dataclass(frozen=True)
class ZnCoincidenceReport:
    rows: tuple[tuple[int, str, str, bool], ...]
    all_equal: bool
    inequality_only: bool  # right side is a lower bound past the explicit tail


def verify_zn_coincidence(
    g,
    f: FiniteRangePotential,
    W,
    ind: InducedPresentation,
    n_max: int = 10,
) -> ZnCoincidenceReport:
    """Compare ambient Z_n(S, f, W) with the loop-composition Z_n, exactly."""
    from .thermo import partition_function

    if ind.loops.two_vertex:
        raise ValueError("coincidence check runs on single-word inductions")
    graph = g.graph if isinstance(g, FinitePresentation) else g
    left = partition_function(graph, f, W, n_max)
    maxlen = ind.loops.max_explicit_length()
    right = loop_zn_exact(ind.loops, f, n_max)
    rows = []
    ok = True
    truncated = maxlen < n_max and any(t.coef > 0 for t in ind.loops.tails)
    for n in range(1, n_max + 1):
        lz = left.zn_exact(n)
        rz = right[n - 1]
        if truncated and n > maxlen:
            # right side misses tail loops, so it must embed in the left multiset
            eq = all(lz.terms.get(e, 0) >= m for e, m in rz.terms.items())
        else:
            eq = lz == rz
        ok &= eq
        rows.append((n, repr(lz), repr(rz), eq))
    return ZnCoincidenceReport(rows=tuple(rows), all_equal=ok, inequality_only=truncated)


def phi_injective_on_periodic(ind: InducedPresentation, period_cap: int = 10):
    """Distinct loop compositions must spell distinct ambient words."""
    loops = [lp for lp in ind.loops.loops if lp.src == 1 and lp.dst == 1]
    if ind.loops.two_vertex:
        raise ValueError("injectivity check runs on single-word inductions")
    for n in range(1, period_cap + 1):
        seen: dict[Word, list[tuple[int, ...]]] = {}
        stack: list[tuple[Word, tuple[int, ...]]] = [((), ())]
        while stack:
            word, chain = stack.pop()
            if len(word) == n:
                seen.setdefault(word, []).append(chain)
                continue
            for i, lp in enumerate(loops):
                if len(word) + lp.length <= n and lp.label is not None:
                    stack.append((word + lp.label, chain + (i,)))
        for word, chains in seen.items():
            if len(chains) > 1:
                return False, (word, chains)
    return True, None

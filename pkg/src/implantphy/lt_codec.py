"""Rateless XOR codec over a binary symmetric channel.

Encoding draws a degree from a fixed output-node degree law, XORs that many
uniformly chosen message bits into one coded bit, and repeats for as long as
the receiver keeps asking.  Decoding runs hard-decision ternary message
passing (messages in {-1, 0, +1}, zero meaning "don't know") on the factor
graph induced by the received symbols.  The incremental loop realizes the
rateless behavior: collect symbols, retry the decoder on a fixed schedule,
stop at the first full recovery.
"""

from __future__ import annotations

import bisect
import math
import random
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

__all__ = [
    "PROB_TOL",
    "DegreeDistribution",
    "CodedSymbol",
    "FactorGraph",
    "DecodeResult",
    "GraphError",
    "default_degree_distribution",
    "derive_rng",
    "sample_degree",
    "encode_next",
    "make_symbol",
    "xor_bit",
    "build_graph",
    "decode_ternary",
    "run_incremental",
    "bit_error_rate",
    "write_symbol_file",
    "read_symbol_file",
    "load_degree_file",
]

PROB_TOL = 1e-9

# Output-node degree law tuned for hard-decision ternary decoding on a
# binary symmetric channel.  The coefficients sum to 1 exactly.
_DEFAULT_DEGREE_TABLE = (
    (1, 0.00466),
    (2, 0.55545),
    (3, 0.09743),
    (5, 0.17506),
    (8, 0.03774),
    (14, 0.08202),
    (33, 0.01775),
    (100, 0.02989),
)


class GraphError(ValueError):
    """Coded symbols and channel observations do not form a valid graph."""


def derive_rng(seed: int, label: str) -> random.Random:
    """Namespaced RNG stream.

    String seeding hashes through SHA-512, so the stream is stable across
    platforms and interpreter versions, and independent streams can be
    derived from one experiment seed without overlap bookkeeping.
    """
    return random.Random(f"{seed}:{label}")


@dataclass(frozen=True)
class DegreeDistribution:
    """Discrete degree law with precomputed cumulative sums for sampling."""

    degrees: tuple[int, ...]
    probabilities: tuple[float, ...]
    cumulative: tuple[float, ...] = field(
        init=False, repr=False, compare=False, default=()
    )

    def __post_init__(self) -> None:
        if not self.degrees or len(self.degrees) != len(self.probabilities):
            raise ValueError("degrees and probabilities must align and be nonempty")
        if any(d < 1 for d in self.degrees):
            raise ValueError("degrees must be >= 1")
        if any(b <= a for a, b in zip(self.degrees, self.degrees[1:])):
            raise ValueError("degrees must be strictly increasing")
        if any(not 0.0 < p <= 1.0 for p in self.probabilities):
            raise ValueError("probabilities must lie in (0, 1]")
        total = math.fsum(self.probabilities)
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {total!r}, expected 1 +- {PROB_TOL}")
        acc, cum = 0.0, []
        for p in self.probabilities:
            acc += p
            cum.append(acc)
        object.__setattr__(self, "cumulative", tuple(cum))

    def mean_degree(self) -> float:
        return math.fsum(d * p for d, p in zip(self.degrees, self.probabilities))

    def truncate(self, k: int) -> "DegreeDistribution":
        """Fold the mass of degrees above k onto degree k.

        Keeps short messages encodable; a no-op when k already covers the
        largest degree.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        if self.degrees[-1] <= k:
            return self
        kept_d: list[int] = []
        kept_p: list[float] = []
        folded = 0.0
        for d, p in zip(self.degrees, self.probabilities):
            if d < k:
                kept_d.append(d)
                kept_p.append(p)
            else:
                folded += p
        kept_d.append(k)
        kept_p.append(folded)
        return DegreeDistribution(tuple(kept_d), tuple(kept_p))

    def edge_poly(self, x: float) -> float:
        """Edge-perspective generating value sum_d d*p_d*x**(d-1) / mean."""
        num = math.fsum(
            d * p * x ** (d - 1) for d, p in zip(self.degrees, self.probabilities)
        )
        return num / self.mean_degree()


@lru_cache(maxsize=None)
def default_degree_distribution() -> DegreeDistribution:
    degrees, probs = zip(*_DEFAULT_DEGREE_TABLE)
    return DegreeDistribution(degrees, probs)


@lru_cache(maxsize=256)
def _truncated(dist: DegreeDistribution, k: int) -> DegreeDistribution:
    return dist.truncate(k)


def sample_degree(dist: DegreeDistribution, rng: random.Random) -> int:
    """Draw one degree by inverse CDF over the precomputed cumulative sums."""
    u = rng.random()
    idx = bisect.bisect_right(dist.cumulative, u)
    if idx == len(dist.degrees):
        idx -= 1
    return dist.degrees[idx]


def load_degree_file(path) -> DegreeDistribution:
    """Read a two-column ``degree probability`` text file ('#' comments ok)."""
    degrees: list[int] = []
    probs: list[float] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 2:
                raise ValueError(f"expected 'degree probability', got {line!r}")
            degrees.append(int(fields[0]))
            probs.append(float(fields[1]))
    return DegreeDistribution(tuple(degrees), tuple(probs))


@dataclass(frozen=True)
class CodedSymbol:
    """One coded bit: which message bits were XORed and the resulting value."""

    index: int
    degree: int
    neighbors: tuple[int, ...]
    bit: int

    def __post_init__(self) -> None:
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if len(self.neighbors) != self.degree:
            raise ValueError("neighbor count must equal degree")
        if len(set(self.neighbors)) != self.degree:
            raise ValueError("neighbors must be distinct")
        if any(i < 0 for i in self.neighbors):
            raise ValueError("neighbors must be nonnegative indices")
        if tuple(sorted(self.neighbors)) != self.neighbors:
            raise ValueError("neighbors must be sorted")
        if self.bit not in (0, 1):
            raise ValueError("bit must be 0 or 1")

    def consistent_with(self, message) -> bool:
        return self.bit == xor_bit(message, self.neighbors)


def xor_bit(message, neighbors) -> int:
    msg = np.asarray(message, dtype=np.uint8)
    return int(np.bitwise_xor.reduce(msg[list(neighbors)]))


def make_symbol(message, neighbors, index: int = 0) -> CodedSymbol:
    """Build a symbol with a forced neighbor set (handy for fixed test graphs)."""
    nbrs = tuple(sorted(int(i) for i in neighbors))
    return CodedSymbol(index, len(nbrs), nbrs, xor_bit(message, nbrs))


def encode_next(
    message,
    rng: random.Random,
    dist: DegreeDistribution | None = None,
    index: int = 0,
) -> CodedSymbol:
    """Generate the next coded bit from a shared RNG stream.

    Draws the degree by inverse CDF, then the neighbor set by a partial
    Fisher-Yates shuffle (exactly uniform without replacement), so the whole
    symbol sequence is reproducible from (seed, k).
    """
    msg = np.asarray(message, dtype=np.uint8)
    k = int(msg.shape[0])
    if k < 1:
        raise ValueError("message must contain at least one bit")
    law = _truncated(dist if dist is not None else default_degree_distribution(), k)
    d = sample_degree(law, rng)
    pool = list(range(k))
    for i in range(d):
        j = rng.randrange(i, k)
        pool[i], pool[j] = pool[j], pool[i]
    nbrs = tuple(sorted(pool[:d]))
    return CodedSymbol(index, d, nbrs, xor_bit(msg, nbrs))


@dataclass
class FactorGraph:
    """Bipartite message/coded-bit graph plus the attached channel signs."""

    k: int
    symbols: tuple[CodedSymbol, ...]
    observations: np.ndarray  # int8 in {-1, +1}, one entry per symbol
    edge_output: np.ndarray = field(repr=False, default=None)  # edge -> output index
    edge_input: np.ndarray = field(repr=False, default=None)  # edge -> input index

    @property
    def n(self) -> int:
        return len(self.symbols)

    @property
    def adjacency(self) -> list[list[int]]:
        """Input -> output incidence lists (transpose of the neighbor sets)."""
        adj: list[list[int]] = [[] for _ in range(self.k)]
        for j, sym in enumerate(self.symbols):
            for i in sym.neighbors:
                adj[i].append(j)
        return adj

    def input_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_input, minlength=self.k)

    def output_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_output, minlength=self.n)


def build_graph(symbols, observations, k: int) -> FactorGraph:
    symbols = tuple(symbols)
    obs = np.asarray(observations, dtype=np.int8)
    if len(symbols) < 1:
        raise GraphError("need at least one coded symbol")
    if obs.shape != (len(symbols),):
        raise GraphError(
            f"{len(symbols)} symbols but {obs.shape} observations; counts must match"
        )
    if not np.all(np.abs(obs) == 1):
        raise GraphError("observations must be -1 or +1")
    eo: list[int] = []
    ei: list[int] = []
    for j, sym in enumerate(symbols):
        if sym.degree > k or any(i >= k for i in sym.neighbors):
            raise GraphError(f"symbol {sym.index} references bits outside [0, {k})")
        eo.extend([j] * sym.degree)
        ei.extend(sym.neighbors)
    return FactorGraph(
        k=k,
        symbols=symbols,
        observations=obs,
        edge_output=np.asarray(eo, dtype=np.int64),
        edge_input=np.asarray(ei, dtype=np.int64),
    )


@dataclass
class DecodeResult:
    """Decoder outcome for one block."""

    message_estimate: np.ndarray  # uint8 bit per input node
    unresolved: np.ndarray  # bool flag where the ternary decision stayed 0
    converged: bool
    iterations_used: int
    symbols_consumed: int
    realized_rate: float
    overhead: float

    @property
    def success(self) -> bool:
        return self.converged and not bool(self.unresolved.any())


def decode_ternary(
    graph: FactorGraph, max_iters: int = 60, channel_weight: int = 1
) -> DecodeResult:
    """Hard-decision ternary message passing to a fixed point or iteration cap.

    Coded node j tells bit i the sign it would need given the channel sign and
    every other incoming bit message (zero absorbs: parity of unknowns is
    unknown).  Bit i answers with the sign of the vote sum over its other
    coded nodes.  Final per-bit decision is the sign over all incoming votes;
    +1 decodes to 0, -1 to 1, 0 is reported as unresolved, never guessed.

    channel_weight is accepted for systematic variants where bits carry their
    own channel vote; the non-systematic graphs built here have none, so the
    default weight of 1 has no effect.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if channel_weight < 1:
        raise ValueError("channel_weight must be a positive integer")
    eo, ei = graph.edge_output, graph.edge_input
    n, k = graph.n, graph.k
    obs_e = graph.observations[eo].astype(np.int64)

    mu = np.zeros(eo.shape[0], dtype=np.int8)  # input -> output messages
    m = np.zeros(eo.shape[0], dtype=np.int8)  # output -> input messages
    converged = False
    used = max_iters
    for it in range(1, max_iters + 1):
        zero_mask = mu == 0
        zeros_per_out = np.bincount(eo[zero_mask], minlength=n)
        negs_per_out = np.bincount(eo[mu < 0], minlength=n)
        sign_per_out = np.where(negs_per_out % 2 == 1, -1, 1)
        # Excluding the edge's own message: a zero drops from the zero count,
        # a nonzero sign divides out, which for +-1 is the same as multiplying.
        others_zero = zeros_per_out[eo] - zero_mask
        prod_others = sign_per_out[eo] * np.where(zero_mask, 1, mu)
        m_new = np.where(others_zero > 0, 0, obs_e * prod_others).astype(np.int8)

        sums_per_in = np.bincount(ei, weights=m_new, minlength=k)
        mu_new = np.sign(sums_per_in[ei] - m_new).astype(np.int8)

        unchanged = np.array_equal(mu_new, mu) and np.array_equal(m_new, m)
        mu, m = mu_new, m_new
        if unchanged:
            converged = True
            used = it
            break

    decision = np.sign(np.bincount(ei, weights=m, minlength=k))
    estimate = (decision < 0).astype(np.uint8)
    unresolved = decision == 0
    return DecodeResult(
        message_estimate=estimate,
        unresolved=unresolved,
        converged=converged,
        iterations_used=used,
        symbols_consumed=n,
        realized_rate=k / n,
        overhead=n / k - 1.0,
    )


def bit_error_rate(result: DecodeResult, message) -> float:
    """Fraction of wrong bits, counting an unresolved bit as half an error."""
    truth = np.asarray(message, dtype=np.uint8)
    wrong = (result.message_estimate != truth) & ~result.unresolved
    return float(wrong.sum() + 0.5 * result.unresolved.sum()) / truth.size


def run_incremental(
    message,
    flip_prob: float,
    rng: random.Random,
    dist: DegreeDistribution | None = None,
    first_attempt: int | None = None,
    attempt_step: int | None = None,
    budget: int | None = None,
    max_iters: int = 60,
) -> DecodeResult:
    """Generate, corrupt, and collect coded bits until the decoder succeeds.

    Each coded bit passes through a binary symmetric channel with the given
    flip probability.  Decoding is first attempted once k symbols are in,
    then after every ceil(0.05 k) new symbols, and the loop stops at the
    first attempt that converges with no unresolved bits.  If the symbol
    budget (default 20 k) runs out, the last attempt is returned with the
    converged flag forced off so callers see the failure.
    """
    msg = np.asarray(message, dtype=np.uint8)
    k = int(msg.shape[0])
    if k < 1:
        raise ValueError("message must contain at least one bit")
    if not 0.0 <= flip_prob < 0.5:
        raise ValueError("flip probability must lie in [0, 0.5)")
    law = _truncated(dist if dist is not None else default_degree_distribution(), k)
    first = first_attempt if first_attempt is not None else k
    step = attempt_step if attempt_step is not None else math.ceil(0.05 * k)
    cap = budget if budget is not None else 20 * k
    first = max(1, first)
    step = max(1, step)

    symbols: list[CodedSymbol] = []
    observations: list[int] = []
    result: DecodeResult | None = None
    next_attempt = first
    while len(symbols) < cap:
        sym = encode_next(msg, rng, law, index=len(symbols))
        received = sym.bit ^ (1 if rng.random() < flip_prob else 0)
        symbols.append(sym)
        observations.append(1 - 2 * received)
        if len(symbols) >= next_attempt:
            graph = build_graph(symbols, observations, k)
            result = decode_ternary(graph, max_iters)
            if result.success:
                return result
            next_attempt += step
    if result is None:
        graph = build_graph(symbols, observations, k)
        result = decode_ternary(graph, max_iters)
    return replace(result, converged=False)


def write_symbol_file(symbols, path) -> None:
    """One line per symbol: ``index,degree,neighbors(semicolon-separated),bit``."""
    with open(path, "w", encoding="utf-8") as fh:
        for sym in symbols:
            fh.write(format_symbol_line(sym) + "\n")


def format_symbol_line(sym: CodedSymbol) -> str:
    return f"{sym.index},{sym.degree},{';'.join(map(str, sym.neighbors))},{sym.bit}"


def read_symbol_file(path) -> tuple[CodedSymbol, ...]:
    out: list[CodedSymbol] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            idx, deg, nbrs, bit = line.split(",")
            neighbors = tuple(int(x) for x in nbrs.split(";"))
            out.append(CodedSymbol(int(idx), int(deg), neighbors, int(bit)))
    return tuple(out)

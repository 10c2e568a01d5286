"""Domain types and pure decision rules for threshold-based sharing protocols.

A protocol pins down who serves whom (a reputation-indexed service rule) and
how reputations move at the end of each period (a punishment scheme with
optional probabilistic forgiveness).  Everything in this module is a pure
function of its inputs; the analytic solvers and the simulator both build on
these primitives.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class Action(enum.Enum):
    """What a server can do with an incoming chunk request."""

    SERVE = "serve"
    NOT_SERVE = "not_serve"


class PeerKind(enum.Enum):
    RECIPROCATIVE = "reciprocative"
    ALTRUISTIC = "altruistic"
    MALICIOUS = "malicious"
    TFT_AGENT = "tft_agent"  # only used by the simulator's tit-for-tat baseline


@dataclass(frozen=True)
class NetworkEnv:
    """Environment constants outside the designer's control.

    r       benefit a client derives from one delivered chunk (r > c required:
            sharing must be socially valuable)
    c       upload cost per chunk attempt
    eps     probability a single upload attempt fails from a connectivity error
    lam     utilization rate of one connection per period (requests per
            connection per period)
    delta   discount factor peers apply to future utility
    p_c     fraction of altruistic peers in the population
    p_d     fraction of malicious peers in the population
    """

    r: float
    c: float
    eps: float
    lam: float
    delta: float
    p_c: float = 0.0
    p_d: float = 0.0

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"r must be > 0, got {self.r}")
        if self.c < 0:
            raise ValueError(f"c must be >= 0, got {self.c}")
        if not self.r > self.c:
            raise ValueError(f"need r > c for sharing to be valuable, got r={self.r}, c={self.c}")
        if not 0.0 <= self.eps < 1.0:
            raise ValueError(f"eps must be in [0, 1), got {self.eps}")
        if not self.lam > 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must be in [0, 1), got {self.delta}")
        if not 0.0 <= self.p_c <= 1.0:
            raise ValueError(f"p_c must be in [0, 1], got {self.p_c}")
        if not 0.0 <= self.p_d <= 1.0:
            raise ValueError(f"p_d must be in [0, 1], got {self.p_d}")
        if self.p_c + self.p_d > 1.0 + 1e-12:
            raise ValueError(f"p_c + p_d must be <= 1, got {self.p_c + self.p_d}")

    def replace(self, **kw) -> "NetworkEnv":
        d = dict(r=self.r, c=self.c, eps=self.eps, lam=self.lam,
                 delta=self.delta, p_c=self.p_c, p_d=self.p_d)
        d.update(kw)
        return NetworkEnv(**d)


@dataclass(frozen=True)
class ProtocolParams:
    """A candidate protocol: reputation ladder plus service thresholds.

    L       top reputation; reputations live in {0, ..., L}
    h_o     activity threshold: peers at or above it must upload, peers below
            are shut out of the mutual exchange
    b       maximum number of concurrent download connections per peer
    beta    forgiveness base: a punished peer at reputation t keeps its
            reputation with probability beta**(L - t + 1) instead of dropping
            to 0 (beta = 0 is the harshest scheme)
    m_o     per-reputation client thresholds, one entry per server reputation
            h_o..L: a server at reputation t serves clients at or above
            m_o(t).  Defaults to the uniform rule m_o(t) = h_o.  Must be
            non-decreasing.  Queries below h_o are rejected: inactive peers
            have no prescribed uploads.
    """

    L: int
    h_o: int
    b: int
    beta: float = 0.0
    m_o: tuple = None  # tuple[int, ...] over server reputations h_o..L

    def __post_init__(self):
        if not (isinstance(self.L, int) and self.L >= 1):
            raise ValueError(f"L must be an integer >= 1, got {self.L}")
        if not (isinstance(self.h_o, int) and 1 <= self.h_o <= self.L):
            raise ValueError(f"h_o must be an integer in 1..L={self.L}, got {self.h_o}")
        if not (isinstance(self.b, int) and self.b >= 1):
            raise ValueError(f"b must be an integer >= 1, got {self.b}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must be in [0, 1], got {self.beta}")
        if self.m_o is None:
            object.__setattr__(self, "m_o", tuple([self.h_o] * (self.L - self.h_o + 1)))
        else:
            object.__setattr__(self, "m_o", tuple(int(v) for v in self.m_o))
        m = self.m_o
        if len(m) != self.L - self.h_o + 1:
            raise ValueError(
                f"m_o must have one entry per reputation h_o..L "
                f"({self.L - self.h_o + 1}), got {len(m)}")
        for v in m:
            if not 1 <= v <= self.L:
                raise ValueError(f"m_o entries must lie in 1..L={self.L}, got {v}")
        for lo, hi in zip(m, m[1:]):
            if lo > hi:
                raise ValueError(f"m_o must be non-decreasing, got {m}")

    @property
    def uniform_thresholds(self) -> bool:
        return all(v == self.h_o for v in self.m_o)

    def m_o_at(self, server_rep: int) -> int:
        """Client threshold applied by a server at `server_rep` (>= h_o)."""
        if server_rep < self.h_o:
            raise ValueError(
                f"no client threshold below the activity threshold: "
                f"server_rep={server_rep} < h_o={self.h_o}")
        if server_rep > self.L:
            raise ValueError(f"reputation out of range: {server_rep} > L={self.L}")
        return self.m_o[server_rep - self.h_o]

    @property
    def client_eligibility(self) -> int:
        """Lowest client reputation that anyone is prescribed to serve."""
        return self.m_o[0]

    def replace(self, **kw) -> "ProtocolParams":
        d = dict(L=self.L, h_o=self.h_o, b=self.b, beta=self.beta, m_o=self.m_o)
        if "L" in kw or "h_o" in kw:
            # the m_o vector is tied to (L, h_o); drop it unless given explicitly
            d["m_o"] = kw.pop("m_o", None)
        d.update(kw)
        return ProtocolParams(**d)


def social_strategy(params: ProtocolParams, server_rep: int, client_rep: int) -> Action:
    """Prescribed action of a server toward a client, by reputations alone.

    Serve iff the server is active (server_rep >= h_o) and the client clears
    the server's client threshold (client_rep >= m_o(server_rep)).
    """
    if server_rep >= params.h_o and client_rep >= params.m_o_at(server_rep):
        return Action.SERVE
    return Action.NOT_SERVE


def phi_compliance(params: ProtocolParams, server_rep: int, client_rep: int,
                   action_taken: Action) -> int:
    """Per-transaction compliance bit: 0 if the action matches the prescribed
    rule, 1 otherwise.  The tracker ORs these bits over a period."""
    return 0 if action_taken == social_strategy(params, server_rep, client_rep) else 1


def reputation_update(params: ProtocolParams, rep: int, x: int, forgiven: int = 0) -> int:
    """End-of-period reputation transition.

    x = 0 (clean period): climb one step, capped at L.
    x = 1 (at least one non-compliant transaction): drop to 0, unless the
    forgiveness lottery came up (forgiven = 1), in which case the reputation
    is unchanged.  The caller draws `forgiven` with probability
    beta**(L - rep + 1); the analytic modules integrate over that lottery and
    the simulator samples it.
    """
    if x == 0:
        return min(params.L, rep + 1)
    if forgiven:
        return rep
    return 0


def error_punish_prob(env: NetworkEnv, b: int) -> float:
    """Probability a compliant active peer is punished in one period purely
    from connectivity errors: 1 - (1 - eps)**(lam * b).

    lam * b is the per-period upload volume; it need not be an integer here
    (the simulator discretizes to round(lam * b) requests per peer).
    """
    if b < 1:
        raise ValueError(f"b must be >= 1, got {b}")
    return 1.0 - (1.0 - env.eps) ** (env.lam * b)

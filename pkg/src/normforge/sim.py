"""Seeded agent-based Monte-Carlo simulator of the discrete-time sharing game.

One period: every reciprocative peer emits round(lam*b) chunk requests; each
request is routed among the servers willing to take it (compliant active
peers for clients above their thresholds, malicious peers posing as willing
toward anyone, altruists up to their per-period capacity); accepted uploads
fail with the connectivity error probability; the tracker ORs each server's
per-transaction compliance bits and, at the period boundary, moves every
reputation synchronously (climb when clean, fall to 0 unless forgiven).

Matching model: within each pool the period's demand is spread as evenly as
possible across willing servers with uniformly random pairing.  The analytic
model treats per-peer upload volume as deterministic, so the even spread is
the faithful discretization; independent per-request draws would blur the
per-period punishment probability.  Malicious peers accept any request (the
corrupt delivery wastes the client's slot; the client re-requests next
period) but never emit requests of their own.

Randomness comes from one counter-based Philox generator keyed by (seed,
period); all draws within a period follow a fixed program order, so a config
replays byte-for-byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace as dc_replace
from typing import Optional

import numpy as np

from .incentives import check_equilibrium
from .model import NetworkEnv, PeerKind, ProtocolParams
from .stationary import stationary_for_regime

KIND_ORDER = (PeerKind.RECIPROCATIVE, PeerKind.ALTRUISTIC, PeerKind.MALICIOUS)
_K_RECIP, _K_ALT, _K_MAL = 0, 1, 2

SOCIAL_NORM = "SocialNorm"
TFT = "TFT"


@dataclass(frozen=True)
class DeviantPolicy:
    """Per-peer strategy override for empirical deviation measurement.

    The tagged peer refuses every prescribed upload during the given period
    window [start, stop) (all periods when window is None) and complies
    otherwise.  Refusing is the binding deviation; serving extra clients only
    burns cost.
    """

    peer_id: int
    rule: str = "refuse_all"
    window: Optional[tuple] = None  # (start, stop) in periods, None = always

    def __post_init__(self):
        if self.rule != "refuse_all":
            raise ValueError(f"unsupported deviant rule {self.rule!r}")

    def active(self, period: int) -> bool:
        if self.window is None:
            return True
        return self.window[0] <= period < self.window[1]


@dataclass(frozen=True)
class SimConfig:
    n_peers: int
    n_periods: int
    seed: int
    params: ProtocolParams
    env: NetworkEnv
    population_mix: dict = None  # PeerKind -> fraction, defaults to all reciprocative
    protocol_flavor: str = SOCIAL_NORM
    deviant_policy: Optional[DeviantPolicy] = None
    strategic: bool = False      # free-ride when the analytic check fails
    init_reputations: Optional[tuple] = None

    def __post_init__(self):
        if self.n_peers < 2:
            raise ValueError(f"n_peers must be >= 2, got {self.n_peers}")
        if self.n_periods < 1:
            raise ValueError(f"n_periods must be >= 1, got {self.n_periods}")
        if self.protocol_flavor not in (SOCIAL_NORM, TFT):
            raise ValueError(f"unknown protocol flavor {self.protocol_flavor!r}")
        mix = self.population_mix
        if mix is None:
            mix = {PeerKind.RECIPROCATIVE: 1.0}
        norm = {}
        for kind, frac in mix.items():
            if isinstance(kind, str):
                kind = PeerKind(kind)
            if kind not in KIND_ORDER:
                raise ValueError(f"{kind} cannot appear in a population mix")
            norm[kind] = float(frac)
        if abs(sum(norm.values()) - 1.0) > 1e-9:
            raise ValueError(f"population fractions must sum to 1, got {sum(norm.values())}")
        object.__setattr__(self, "population_mix", norm)
        if self.requests_per_peer < 1:
            raise ValueError("round(lam * b) must be >= 1")
        if self.init_reputations is not None:
            object.__setattr__(self, "init_reputations", tuple(int(v) for v in self.init_reputations))

    @property
    def requests_per_peer(self) -> int:
        return int(round(self.env.lam * self.params.b))

    def replace(self, **kw) -> "SimConfig":
        return dc_replace(self, **kw)

    def kind_counts(self) -> dict:
        """Deterministic integer split of n_peers by kind (largest remainder)."""
        n = self.n_peers
        raw = {k: self.population_mix.get(k, 0.0) * n for k in KIND_ORDER}
        counts = {k: int(np.floor(v)) for k, v in raw.items()}
        short = n - sum(counts.values())
        for k in sorted(KIND_ORDER, key=lambda k: raw[k] - counts[k], reverse=True):
            if short <= 0:
                break
            counts[k] += 1
            short -= 1
        return counts

    def as_dict(self) -> dict:
        return {
            "n_peers": self.n_peers,
            "n_periods": self.n_periods,
            "seed": self.seed,
            "protocol_flavor": self.protocol_flavor,
            "strategic": self.strategic,
            "population_mix": {k.value: v for k, v in self.population_mix.items()},
            "params": {"L": self.params.L, "h_o": self.params.h_o, "b": self.params.b,
                       "beta": self.params.beta, "m_o": list(self.params.m_o)},
            "env": {"r": self.env.r, "c": self.env.c, "eps": self.env.eps,
                    "lambda": self.env.lam, "delta": self.env.delta,
                    "p_c": self.env.p_c, "p_d": self.env.p_d},
            "deviant_policy": None if self.deviant_policy is None else {
                "peer_id": self.deviant_policy.peer_id,
                "rule": self.deviant_policy.rule,
                "window": list(self.deviant_policy.window) if self.deviant_policy.window else None,
            },
            "init_reputations": list(self.init_reputations) if self.init_reputations else None,
        }


@dataclass
class SimTrace:
    """Time series and per-peer outcomes of one run.

    eta[t] is the population reputation histogram at the start of period t.
    Request outcomes partition per period into served / errored / corrupted /
    unserved; refusals count bounced contacts (they redirect, consuming no
    download slot).  discounted_utility accumulates delta**t * (benefit -
    cost) per peer, truncated after n_periods with tail bound
    truncation_bound.
    """

    config: SimConfig
    top_rep: int
    eta: np.ndarray                  # (T, top_rep + 1)
    counts: dict                     # name -> (T,) int arrays
    mean_utility: dict               # kind value -> (T,) float arrays
    discounted_utility: np.ndarray   # (n_peers,)
    final_reputation: np.ndarray     # (n_peers,)
    kinds: np.ndarray                # (n_peers,) kind codes
    truncation_bound: float

    def window_eta(self, last: int = None) -> np.ndarray:
        """Mean reputation histogram over the final `last` periods (default:
        final quarter)."""
        if last is None:
            last = max(1, self.config.n_periods // 4)
        return self.eta[-last:].mean(axis=0)

    def window_mu(self, h_o: int = None, last: int = None) -> float:
        if h_o is None:
            h_o = self.config.params.h_o if self.config.protocol_flavor == SOCIAL_NORM else 1
        return float(self.window_eta(last)[h_o:].sum())

    def strategic_kind(self) -> str:
        """Label under which strategic agents report (tit-for-tat runs tag
        them as tft_agent)."""
        return (PeerKind.TFT_AGENT.value if self.config.protocol_flavor == TFT
                else PeerKind.RECIPROCATIVE.value)

    def summary(self) -> dict:
        eta_w = self.window_eta()
        per_kind = {}
        for kind, series in self.mean_utility.items():
            last = max(1, self.config.n_periods // 4)
            per_kind[kind] = float(np.mean(series[-last:]))
        totals = {name: int(arr.sum()) for name, arr in self.counts.items()}
        emitted = max(1, totals["emitted"])
        return {
            "final_window_eta": [float(v) for v in eta_w],
            "final_window_mu": self.window_mu(),
            "final_window_mean_utility": per_kind,
            "totals": totals,
            "delivery_rate": totals["served"] / emitted,
            "recip_delivery_rate": int(self.counts["served_by_recip"].sum()) / emitted,
            "truncation_bound": self.truncation_bound,
        }

    def to_json_dict(self) -> dict:
        return {
            "schema": 1,
            "config": self.config.as_dict(),
            "top_rep": self.top_rep,
            "periods": {
                "eta": [[float(v) for v in row] for row in self.eta],
                "counts": {k: [int(v) for v in arr] for k, arr in self.counts.items()},
                "mean_utility": {k: [float(v) for v in arr] for k, arr in self.mean_utility.items()},
            },
            "per_peer": {
                "discounted_utility": [float(v) for v in self.discounted_utility],
                "final_reputation": [int(v) for v in self.final_reputation],
                "kind": [self.strategic_kind() if k == _K_RECIP else KIND_ORDER[k].value
                         for k in self.kinds],
            },
            "summary": self.summary(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=1)


class _Protocol:
    """Flavor adapter: reputation range, prescribed willingness, update rule."""

    def __init__(self, config: SimConfig):
        params, env = config.params, config.env
        self.flavor = config.protocol_flavor
        if self.flavor == SOCIAL_NORM:
            self.top = params.L
            self.pinned = params.L
            # willing[s, c]: a compliant s-server accepts a c-client
            self.willing = np.zeros((self.top + 1, self.top + 1), dtype=bool)
            for s in range(params.h_o, self.top + 1):
                self.willing[s, params.m_o_at(s):] = True
            self.beta = params.beta
            self.L = params.L
        else:
            self.top = 1
            self.pinned = 1
            self.willing = np.zeros((2, 2), dtype=bool)
            self.willing[:, 1] = True  # serve anyone whose last period was clean
            self.beta = 0.0
            self.L = 1

    def update_reputations(self, rep, x, forgive_draws):
        if self.flavor == SOCIAL_NORM:
            clean = np.minimum(rep + 1, self.L)
            keep = forgive_draws < self.beta ** (self.L - rep + 1)
            punished = np.where(keep, rep, 0)
            return np.where(x, punished, clean)
        return np.where(x, 0, 1)


def tft_sustainable(env: NetworkEnv, b: int, p_c: float = 0.0) -> bool:
    """One-shot-deviation verdict for the binary tit-for-tat rule.

    Compliant play makes next-period reputation independent of the current
    one (1 when the period was clean), so the discounted gap between the two
    reputations equals the one-period service gap: full service minus
    whatever altruists feed a zero-reputation peer.  A deviator saves up to a
    full period of upload cost (lam*b*c, the same worst case the activity-
    threshold check uses) and spends one period at reputation 0, so the rule
    survives iff lam*b*c <= delta*(1-alpha)*gap with the usual per-period
    error-punishment probability alpha.
    """
    rate = env.lam * b
    alpha_t = 1.0 - (1.0 - env.eps) ** rate
    fed_while_punished = min(1.0, p_c / (1.0 - p_c)) if p_c < 1.0 else 1.0
    gap = rate * (1.0 - env.eps) * env.r * (1.0 - fed_while_punished)
    return env.c * rate <= env.delta * (1.0 - alpha_t) * gap + 1e-12


def _strategic_collapse(config: SimConfig) -> bool:
    """True when the configured protocol cannot sustain compliance, in which
    case strategic reciprocative peers free-ride."""
    counts = config.kind_counts()
    n = config.n_peers
    p_c = counts[PeerKind.ALTRUISTIC] / n
    p_d = counts[PeerKind.MALICIOUS] / n
    if config.protocol_flavor == TFT:
        return not tft_sustainable(config.env, config.params.b, p_c)
    if p_c > 0.0 and p_d > 0.0:
        raise ValueError("strategic mode handles one non-reciprocative kind at a time")
    env = config.env.replace(p_c=p_c, p_d=p_d)
    return not check_equilibrium(config.params, env).is_equilibrium


def _period_rng(seed: int, period: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.random.SeedSequence(
        entropy=(int(seed) & (2 ** 64 - 1), period)).generate_state(2, np.uint64)))


def _fix_self_service(rng, clients, servers):
    """Swap assignments so no peer serves itself; drops the pair when the
    pool offers no alternative."""
    keep = np.ones(len(clients), dtype=bool)
    bad = np.flatnonzero(clients == servers)
    for i in bad:
        done = False
        for j in rng.permutation(len(clients)):
            if j == i or not keep[j]:
                continue
            if servers[j] != clients[i] and servers[i] != clients[j]:
                servers[i], servers[j] = servers[j], servers[i]
                done = True
                break
        if not done:
            keep[i] = False
    return keep


def _spread(rng, n_items: int, members: np.ndarray) -> np.ndarray:
    """Even-load server slots: every member gets floor(n/g) requests and a
    uniformly chosen subset gets one more; slot order is shuffled."""
    g = len(members)
    base, rem = divmod(n_items, g)
    loads = np.full(g, base, dtype=np.int64)
    if rem:
        loads[rng.permutation(g)[:rem]] += 1
    return rng.permutation(np.repeat(members, loads))


def run_sim(config: SimConfig) -> SimTrace:
    """Execute the configured run; identical configs replay bit-for-bit."""
    if config.protocol_flavor != SOCIAL_NORM:
        raise ValueError("run_sim drives the social-norm flavor; use run_tft for TFT")
    return _run(config)


def run_tft(config: SimConfig) -> SimTrace:
    """Binary tit-for-tat baseline on the same engine: two reputations,
    service decided by the client's last-period compliance alone."""
    if config.protocol_flavor != TFT:
        raise ValueError("run_tft requires protocol_flavor=TFT")
    return _run(config)


def _run(config: SimConfig) -> SimTrace:
    proto = _Protocol(config)
    env, params = config.env, config.params
    n = config.n_peers
    k = config.requests_per_peer
    T = config.n_periods
    top = proto.top

    counts = config.kind_counts()
    kinds = np.concatenate([
        np.full(counts[PeerKind.RECIPROCATIVE], _K_RECIP, dtype=np.int8),
        np.full(counts[PeerKind.ALTRUISTIC], _K_ALT, dtype=np.int8),
        np.full(counts[PeerKind.MALICIOUS], _K_MAL, dtype=np.int8),
    ])
    recip_mask = kinds == _K_RECIP
    alt_ids = np.flatnonzero(kinds == _K_ALT)
    mal_ids = np.flatnonzero(kinds == _K_MAL)
    have_alt = len(alt_ids) > 0

    if config.init_reputations is not None:
        rep = np.array(config.init_reputations, dtype=np.int64)
        if rep.shape != (n,) or rep.min() < 0 or rep.max() > top:
            raise ValueError("init_reputations must give every peer a reputation in range")
        rep = rep.copy()
    else:
        rep = np.zeros(n, dtype=np.int64)
    rep[alt_ids] = proto.pinned

    collapsed = _strategic_collapse(config) if config.strategic else False
    deviant = config.deviant_policy
    if deviant is not None and not (0 <= deviant.peer_id < n and recip_mask[deviant.peer_id]):
        raise ValueError("deviant peer must be a reciprocative peer id")

    eta_series = np.zeros((T, top + 1))
    count_names = ("emitted", "served", "errored", "corrupted", "unserved",
                   "refusals", "served_by_recip")
    count_series = {name: np.zeros(T, dtype=np.int64) for name in count_names}
    strategic_label = (PeerKind.TFT_AGENT.value if config.protocol_flavor == TFT
                       else PeerKind.RECIPROCATIVE.value)
    label_of = {PeerKind.RECIPROCATIVE: strategic_label,
                PeerKind.ALTRUISTIC: PeerKind.ALTRUISTIC.value,
                PeerKind.MALICIOUS: PeerKind.MALICIOUS.value}
    util_series = {label_of[kind]: np.zeros(T) for kind in KIND_ORDER if counts[kind] > 0}
    discounted = np.zeros(n)
    disc_weight = 1.0

    for t in range(T):
        rng = _period_rng(config.seed, t)
        eta_series[t] = np.bincount(rep, minlength=top + 1) / n

        benefit = np.zeros(n)
        cost = np.zeros(n)
        x = np.zeros(n, dtype=bool)

        refuse_all = np.zeros(n, dtype=bool)
        if collapsed:
            refuse_all[recip_mask] = True
        if deviant is not None and deviant.active(t):
            refuse_all[deviant.peer_id] = True

        # requests: every reciprocative peer wants k chunks this period
        clients = np.repeat(np.flatnonzero(recip_mask), k)
        count_series["emitted"][t] = len(clients)
        alt_capacity = np.full(len(alt_ids), k, dtype=np.int64)

        # group client classes by pool signature so even loads stay even
        client_rep = rep[clients]
        signatures = {}
        for c_rep in np.unique(client_rep):
            key = proto.willing[:, c_rep].tobytes()
            signatures.setdefault(key, []).append(int(c_rep))

        n_served = n_errored = n_corrupted = n_unserved = n_refusals = n_served_recip = 0

        for key in sorted(signatures):
            class_reps = signatures[key]
            req_mask = np.isin(client_rep, class_reps)
            req_clients = clients[req_mask]
            if len(req_clients) == 0:
                continue
            c_rep0 = class_reps[0]
            apparent = recip_mask & proto.willing[rep, c_rep0]
            serving = np.flatnonzero(apparent & ~refuse_all)
            refusing = np.flatnonzero(apparent & refuse_all)

            pending = req_clients
            for bounce in range(3):  # refusals then altruist overflow can redirect
                groups = []  # (tag, member_ids)
                if bounce == 0 and len(refusing) > 0:
                    groups.append(("refuse", refusing))
                if len(serving) > 0:
                    groups.append(("recip", serving))
                if len(mal_ids) > 0:
                    groups.append(("malicious", mal_ids))
                open_alts = alt_ids[alt_capacity > 0] if have_alt else alt_ids
                if len(open_alts) > 0:
                    groups.append(("altruist", open_alts))
                if not groups:
                    n_unserved += len(pending)
                    pending = pending[:0]
                    break

                sizes = np.array([len(g[1]) for g in groups], dtype=float)
                split = rng.multinomial(len(pending), sizes / sizes.sum())
                order = rng.permutation(len(pending))
                shuffled = pending[order]
                next_pending = []
                pos = 0
                for (tag, members), n_g in zip(groups, split):
                    part = shuffled[pos:pos + n_g]
                    pos += n_g
                    if n_g == 0:
                        continue
                    if tag == "refuse":
                        # bounced contacts: deviation observed, client redirects
                        hit = _spread(rng, n_g, members)
                        x[np.unique(hit)] = True
                        n_refusals += n_g
                        next_pending.append(part)
                        continue
                    if tag == "altruist":
                        slots = rng.permutation(np.repeat(members, alt_capacity[np.searchsorted(alt_ids, members)]))
                        take = min(len(slots), n_g)
                        srv = slots[:take]
                        overflow = part[take:]
                        part = part[:take]
                        if len(overflow) > 0:
                            next_pending.append(overflow)
                        np.add.at(alt_capacity, np.searchsorted(alt_ids, srv), -1)
                    else:
                        srv = _spread(rng, n_g, members)
                    keep = _fix_self_service(rng, part, srv)
                    if not keep.all():
                        n_unserved += int((~keep).sum())
                        part, srv = part[keep], srv[keep]
                    if tag == "malicious":
                        # corrupt delivery: slot wasted, compliance judged by prescription
                        n_corrupted += len(part)
                        prescribed = proto.willing[rep[srv], c_rep0]
                        x[np.unique(srv[prescribed])] = True
                        continue
                    # honest upload attempt: cost now, connectivity lottery
                    np.add.at(cost, srv, env.c)
                    err = rng.random(len(part)) < env.eps
                    ok = ~err
                    benefit_ids = part[ok]
                    np.add.at(benefit, benefit_ids, env.r)
                    n_served += int(ok.sum())
                    n_errored += int(err.sum())
                    if tag == "recip":
                        n_served_recip += int(ok.sum())
                        x[np.unique(srv[err])] = True
                    # altruists are pinned regardless of errors
                pending = np.concatenate(next_pending) if next_pending else shuffled[:0]
                if len(pending) == 0:
                    break
                refusing = refusing[:0]  # refusers are skipped on redirect
            n_unserved += len(pending)

        count_series["served"][t] = n_served
        count_series["errored"][t] = n_errored
        count_series["corrupted"][t] = n_corrupted
        count_series["unserved"][t] = n_unserved
        count_series["refusals"][t] = n_refusals
        count_series["served_by_recip"][t] = n_served_recip

        util = benefit - cost
        for kind in KIND_ORDER:
            if counts[kind] > 0:
                util_series[label_of[kind]][t] = float(util[kinds == _kind_code(kind)].mean())
        discounted += disc_weight * util
        disc_weight *= env.delta

        forgive = rng.random(n)
        rep = proto.update_reputations(rep, x, forgive)
        rep[alt_ids] = proto.pinned

    u_max = k * max(env.r, env.c)
    tail = 0.0 if env.delta == 0.0 else (env.delta ** T) * u_max / (1.0 - env.delta)
    return SimTrace(
        config=config,
        top_rep=top,
        eta=eta_series,
        counts=count_series,
        mean_utility=util_series,
        discounted_utility=discounted,
        final_reputation=rep,
        kinds=kinds,
        truncation_bound=tail,
    )


def _kind_code(kind: PeerKind) -> int:
    return {PeerKind.RECIPROCATIVE: _K_RECIP, PeerKind.ALTRUISTIC: _K_ALT,
            PeerKind.MALICIOUS: _K_MAL}[kind]


def measure_deviation_gain(config: SimConfig, theta: int, n_pairs: int = 30) -> float:
    """Empirical one-shot-deviation payoff: discounted utility of a tagged
    peer that refuses all uploads in period 0 and then complies, minus its
    utility when complying throughout, averaged over paired seeds.

    The population starts from the analytic stationary profile (shared by
    both runs of a pair) with the tagged peer pinned at reputation theta, so
    the measurement mirrors the analytic deviation algebra.  Expected to be
    non-positive, up to noise, exactly when the protocol passes the check.
    """
    if config.protocol_flavor != SOCIAL_NORM:
        raise ValueError("deviation measurement drives the social-norm flavor")
    if not 0 <= theta <= config.params.L:
        raise ValueError(f"theta out of range 0..{config.params.L}")
    counts = config.kind_counts()
    if counts[PeerKind.RECIPROCATIVE] < 1:
        raise ValueError("need at least one reciprocative peer to tag")
    env_eff = config.env.replace(p_c=counts[PeerKind.ALTRUISTIC] / config.n_peers,
                                 p_d=counts[PeerKind.MALICIOUS] / config.n_peers)
    dist = stationary_for_regime(config.params, env_eff)
    gains = []
    for i in range(n_pairs):
        seed_i = config.seed + i
        init_rng = np.random.Generator(np.random.Philox(
            key=np.random.SeedSequence(entropy=(seed_i, 0xD5)).generate_state(2, np.uint64)))
        reps = init_rng.choice(config.params.L + 1, size=config.n_peers, p=dist.eta)
        reps[0] = theta
        base = config.replace(seed=seed_i, init_reputations=tuple(int(v) for v in reps),
                              deviant_policy=None)
        dev = base.replace(deviant_policy=DeviantPolicy(peer_id=0, window=(0, 1)))
        gains.append(run_sim(dev).discounted_utility[0] - run_sim(base).discounted_utility[0])
    return float(np.mean(gains))

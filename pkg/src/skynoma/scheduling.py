"""User-subchannel matching with difference-of-convex pair scoring.

Matching runs per UAV as a proposal game: users propose to their best
untried subchannel; a subchannel holding fewer than two users accepts,
otherwise the three possible pairs (incumbents, or either incumbent with
the proposer) are scored by optimising the intra-pair power split and the
best pair stays.  Displaced users re-queue.  Every user makes at most K
proposals, so the loop always terminates.

Pair scoring maximises the summed energy efficiency of the pair over the
strong-user power fraction beta via a difference-of-convex split: the
negated objective F = F1 - F2 with both parts built from logs of affine
ratios, iterated by linearising F2 at the current point.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .channel import ChannelSet
from .errors import DomainError
from .metrics import PairCoefficients, pair_coefficients
from .scenario import ScenarioConfig


def pair_ee(coeff: PairCoefficients, beta1, p_sc, p_m, b_sc, one_minus_eps):
    """Summed EE of a two-user subchannel at strong share beta1."""
    if coeff.theta2 is None:
        raise DomainError("pair_ee needs a two-user subchannel")
    return kernels.pair_ee(
        beta1, coeff.q1, coeff.d1, coeff.theta2, coeff.w2, coeff.q2,
        p_sc, p_m, b_sc, one_minus_eps,
    )


def single_ee(coeff: PairCoefficients, p_sc, p_m, b_sc, one_minus_eps):
    """EE of a subchannel serving one user at full power."""
    return kernels.single_ee(p_sc, coeff.q1, coeff.d1, p_m, b_sc, one_minus_eps)


def dc_f1(coeff: PairCoefficients, beta1, p_sc, p_m, b_sc):
    return kernels.dc_f1(
        beta1, coeff.q1, coeff.d1, coeff.theta2, coeff.w2, p_sc, p_m, b_sc
    )


def dc_f2(coeff: PairCoefficients, beta1, p_sc, p_m, b_sc):
    return kernels.dc_f2(
        beta1, coeff.theta2, coeff.w2, coeff.q2, p_sc, p_m, b_sc
    )


def dc_grad_f2(coeff: PairCoefficients, beta1, p_sc, p_m, b_sc):
    return kernels.dc_grad_f2(
        beta1, coeff.theta2, coeff.w2, coeff.q2, p_sc, p_m, b_sc
    )


@dataclass(frozen=True)
class DCResult:
    beta: float
    ee: float
    converged: bool
    iters: int


def optimize_power_split(coeff: PairCoefficients, p_sc, p_m, b_sc, one_minus_eps,
                         delta_tol=0.01, max_iters=50) -> DCResult:
    """Best strong-user power fraction for one pair at fixed subchannel power."""
    if coeff.theta2 is None:
        raise DomainError("power split needs a two-user subchannel")
    if p_sc <= 0:
        raise DomainError(f"subchannel power must be > 0, got {p_sc}")
    beta, ee, conv, iters = kernels.dc_optimize_beta(
        coeff.q1, coeff.d1, coeff.theta2, coeff.w2, coeff.q2,
        p_sc, p_m, b_sc, one_minus_eps, delta_tol, max_iters,
    )
    return DCResult(beta=float(beta), ee=float(ee), converged=bool(conv), iters=int(iters))


@dataclass
class Assignment:
    """Matching outcome: pairs[(i, k)] lists users strong-first."""

    pairs: dict[tuple[int, int], tuple[int, ...]] = field(default_factory=dict)
    beta: dict[tuple[int, int], float] = field(default_factory=dict)
    dc_iters: dict[tuple[int, int], int] = field(default_factory=dict)

    def subchannel_of(self, i, n):
        for (ii, k), users in self.pairs.items():
            if ii == i and n in users:
                return k
        return None

    def matched_users(self, i):
        out = set()
        for (ii, _), users in self.pairs.items():
            if ii == i:
                out.update(users)
        return out


def _ordered_pair(gains_k, a, b):
    # strong user first; estimated-gain tie broken by index for determinism
    if gains_k[a] > gains_k[b] or (gains_k[a] == gains_k[b] and a < b):
        return (a, b)
    return (b, a)


def schedule_users(channels: ChannelSet, config: ScenarioConfig,
                   p_sc=None) -> Assignment:
    """Match every UAV's users onto its subchannels (at most two per channel).

    Pair quality during matching is judged at equal subchannel power
    ``p_sc`` (defaults to P_uav / K); the resulting power splits are kept
    on the assignment for the later inter-subchannel allocation stage.
    """
    n_users = config.users_per_cell
    n_sc = config.k_subchannels
    if p_sc is None:
        p_sc = config.p_uav_max_w / n_sc
    b_sc = config.subchannel_bandwidth_hz
    p_m = config.p_hover_w
    one_minus_eps = config.outage_factor

    assignment = Assignment()
    for i in range(config.n_uavs):
        gains = channels.h_hat_mag2[i]  # (N, K)
        score_cache: dict[tuple[int, frozenset], DCResult] = {}

        def pair_score(k, a, b, _i=i, _gains=gains, _cache=score_cache):
            key = (k, frozenset((a, b)))
            res = _cache.get(key)
            if res is None:
                users = _ordered_pair(_gains[:, k], a, b)
                coeff = pair_coefficients(channels, config, _i, k, users)
                res = optimize_power_split(
                    coeff, p_sc, p_m, b_sc, one_minus_eps,
                    delta_tol=config.tol_dc, max_iters=config.max_iters,
                )
                _cache[key] = res
            return res

        # strongest users propose first, then FIFO on re-queues
        order = sorted(range(n_users), key=lambda n: -float(gains[n].max()))
        queue = deque(order)
        tried = [set() for _ in range(n_users)]
        occupants: dict[int, list[int]] = {k: [] for k in range(n_sc)}

        while queue:
            n = queue.popleft()
            untried = [k for k in range(n_sc) if k not in tried[n]]
            if not untried:
                continue  # exhausted every subchannel; stays unmatched
            k = max(untried, key=lambda kk: float(gains[n, kk]))
            tried[n].add(k)
            occ = occupants[k]
            if len(occ) < 2:
                occ.append(n)
                continue
            u, v = occ
            best_pair, best = (u, v), pair_score(k, u, v)
            for cand in ((u, n), (v, n)):
                res = pair_score(k, *cand)
                if res.ee > best.ee:  # ties keep the earlier pair
                    best_pair, best = cand, res
            if best_pair == (u, v):
                queue.append(n)
            else:
                displaced = v if best_pair[0] == u or best_pair[1] == u else u
                if n not in best_pair:  # defensive; cannot happen
                    displaced = n
                occupants[k] = list(best_pair)
                queue.append(displaced)

        for k, occ in occupants.items():
            if not occ:
                continue
            if len(occ) == 1:
                assignment.pairs[(i, k)] = (occ[0],)
                assignment.beta[(i, k)] = 1.0
                assignment.dc_iters[(i, k)] = 0
            else:
                users = _ordered_pair(gains[:, k], occ[0], occ[1])
                res = pair_score(k, *users)
                assignment.pairs[(i, k)] = users
                assignment.beta[(i, k)] = res.beta
                assignment.dc_iters[(i, k)] = res.iters
    return assignment

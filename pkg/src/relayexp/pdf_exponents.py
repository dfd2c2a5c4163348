"""Partial-decode-forward error exponents in primal and dual form.

The three constituent exponents share one shape: a state-conditioned
channel chan(y|s,x) with state law q_s and per-state input law q_xs.

* relay exponent F: state x2, input u, output y2 (relay decodes u)
* decoder exponent G: single state, input (u,x2), output y3
* decoder exponent Gtilde: state (u,x2), input x1, output y3

The primal form minimizes D(V||chan|Q) + |I(Q,V) - R|+ over dummy channels
V; the dual (Gallager) form maximizes -rho*R - log2 S(rho) over rho in
[0,1] and is a lower bound on the primal.
"""

from dataclasses import dataclass, field

import numpy as np

from ._kernels import e0_sum
from .prob_core import (CondDist, Dist, OptimizerConfig, entropy_vec,
                        kl_div_vec)
from .relay_model import PdfInput, RelayChannelSpec, pdf_virtual_channels

KINDS = ("relay_F", "decoder_G", "decoder_Gtilde")

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass
class ExponentEval:
    value: float
    witness: object          # rho (dual) or a dummy-channel array (primal)
    form: str                # "primal" | "dual"
    kind: str
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class BlockMarkovConfig:
    """Block-Markov bookkeeping: R_b = b/(b-1) * r_eff."""

    b: int
    r_eff: float
    split_fraction: float = None   # None means scan over the split grid

    def __post_init__(self):
        if self.b < 2:
            raise ValueError("b must be >= 2")
        if self.r_eff < 0:
            raise ValueError("r_eff must be nonnegative")
        if self.split_fraction is not None and not 0 <= self.split_fraction <= 1:
            raise ValueError("split_fraction must lie in [0, 1]")

    @property
    def r_b(self):
        return self.b / (self.b - 1) * self.r_eff


def golden_max(f, lo, hi, tol=1e-8):
    """Golden-section maximization of a unimodal f on [lo, hi]."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _state_channel(kind, w: RelayChannelSpec, q: PdfInput):
    """(q_s, q_xs, chan) for the requested exponent kind."""
    if kind not in KINDS:
        raise ValueError(f"unknown exponent kind {kind!r}")
    n_x1, n_x2, n_y2, n_y3 = w.sizes
    n_u = q.u_size
    v1, v2, _ = pdf_virtual_channels(w, q)
    q_u = q.q_u_given_x2.rows                       # (x2, u)
    q_ux2 = (q.q_x2.probs[None, :] * q_u.T)         # (u, x2) joint

    if kind == "relay_F":
        chan = v1.rows.reshape(n_u, n_x2, n_y2).transpose(1, 0, 2)
        return q.q_x2.probs.copy(), q_u.copy(), np.ascontiguousarray(chan)
    if kind == "decoder_G":
        chan = v2.rows.reshape(1, n_u * n_x2, n_y3)
        return (np.array([1.0]), q_ux2.reshape(1, -1).copy(),
                np.ascontiguousarray(chan))
    # decoder_Gtilde: states (u, x2), inputs x1
    wy3 = w.y3_marginal()                            # (x1, x2, y3)
    chan = np.broadcast_to(wy3.transpose(1, 0, 2)[None], (n_u, n_x2, n_x1, n_y3))
    chan = np.ascontiguousarray(chan.reshape(n_u * n_x2, n_x1, n_y3))
    q_s = q_ux2.reshape(-1)
    q_xs = q.q_x1_given_ux2.rows.copy()
    return q_s, q_xs, chan


def pdf_dual_exponent(kind, w: RelayChannelSpec, q: PdfInput,
                      rate: float) -> ExponentEval:
    """Gallager-form exponent max_{rho in [0,1]} -rho*R - log2 S_kind(rho)."""
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    q_s, q_xs, chan = _state_channel(kind, w, q)

    def g(rho):
        return -rho * rate - np.log2(e0_sum(q_s, q_xs, chan, rho))

    rho, val = golden_max(g, 0.0, 1.0)
    for cand in (0.0, 1.0):
        cval = g(cand)
        if cval > val:
            rho, val = cand, cval
    value = max(0.0, val)
    if value == 0.0:
        rho = 0.0
    return ExponentEval(value, rho, "dual", kind,
                        {"rho_tolerance": 1e-8})


def _primal_objective(q_s, q_xs, chan, rate):
    ns, nx, ny = chan.shape
    weights = q_s[:, None] * q_xs

    def objective(v):
        div = 0.0
        mi_sum = 0.0
        for s in range(ns):
            if q_s[s] == 0.0:
                continue
            out = q_xs[s] @ v[s]
            h_out = entropy_vec(out)
            h_cond = 0.0
            for x in range(nx):
                wgt = weights[s, x]
                if wgt == 0.0:
                    continue
                d = kl_div_vec(v[s, x], chan[s, x])
                if not np.isfinite(d):
                    return np.inf
                div += wgt * d
                h_cond += wgt * entropy_vec(v[s, x])
            mi_sum += q_s[s] * h_out - h_cond
        return div + max(mi_sum - rate, 0.0)

    return objective


def _cond_descent(v0, objective, init_step, min_step, support):
    """First-improvement pairwise exchange descent over a stack of simplices."""
    v = v0.copy()
    best = objective(v)
    ns, nx, ny = v.shape
    step = init_step
    while step >= min_step:
        improved = True
        while improved:
            improved = False
            for s in range(ns):
                for x in range(nx):
                    sup = support[s, x]
                    for i in range(ny):
                        if not sup[i]:
                            continue
                        for j in range(ny):
                            if i == j or not sup[j] or v[s, x, j] < step:
                                continue
                            v[s, x, i] += step
                            v[s, x, j] -= step
                            val = objective(v)
                            if val < best - 1e-15:
                                best = val
                                improved = True
                            else:
                                v[s, x, i] -= step
                                v[s, x, j] += step
        step /= 2.0
    return v, best


def pdf_primal_exponent(kind, w: RelayChannelSpec, q: PdfInput, rate: float,
                        cfg: OptimizerConfig = None) -> ExponentEval:
    """Primal exponent min_V D(V||chan|Q) + |I(Q,V) - R|+ for the kind."""
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    if cfg is None:
        cfg = OptimizerConfig()
    q_s, q_xs, chan = _state_channel(kind, w, q)
    objective = _primal_objective(q_s, q_xs, chan, rate)
    support = chan > 0.0
    ns, nx, ny = chan.shape

    # blend the true channel toward its support-restricted per-state output
    # marginal; the objective is convex in V so descent from these starts
    # reaches the optimum
    starts = [chan.copy()]
    for t in (0.5, 0.95):
        blend = chan.copy()
        for s in range(ns):
            out = q_xs[s] @ chan[s]
            for x in range(nx):
                sup = support[s, x]
                tgt = np.where(sup, out, 0.0)
                tot = tgt.sum()
                if tot <= 0.0:
                    continue
                blend[s, x] = (1 - t) * chan[s, x] + t * tgt / tot
        starts.append(blend)

    best_v, best_val = None, np.inf
    min_step = max(cfg.value_tolerance * 1e-2, 1e-6)
    for v0 in starts:
        v, val = _cond_descent(v0, objective, 0.25, min_step, support)
        if val < best_val:
            best_v, best_val = v, val
    return ExponentEval(max(0.0, best_val), best_v, "primal", kind,
                        {"starts": len(starts), "min_step": min_step})


def _constituents(bm_rate, split):
    """Rates and the active kinds for one split of R_b = R' + R''."""
    r1 = split * bm_rate
    r2 = (1.0 - split) * bm_rate
    active = []
    if r1 > 0.0:
        active += [("relay_F", r1), ("decoder_G", r1)]
    if r2 > 0.0:
        active.append(("decoder_Gtilde", r2))
    if not active:  # zero per-block rate: keep every constituent
        active = [("relay_F", 0.0), ("decoder_G", 0.0),
                  ("decoder_Gtilde", 0.0)]
    return active


def pdf_overall(w: RelayChannelSpec, q: PdfInput, bm: BlockMarkovConfig,
                form: str = "dual", cfg: OptimizerConfig = None):
    """(1/b) max over the rate split R'+R''=R_b of min{F(R'), G(R'), Gtilde(R'')}.

    A constituent whose rate argument is zero carries no messages and is
    dropped from the min (with U = X1 and split 1 this is exactly
    decode-forward, where only F and G remain).
    """
    if cfg is None:
        cfg = OptimizerConfig()

    def evaluate(kind, rate):
        if form == "dual":
            return pdf_dual_exponent(kind, w, q, rate)
        return pdf_primal_exponent(kind, w, q, rate, cfg)

    r_b = bm.r_b
    if bm.split_fraction is not None:
        splits = [bm.split_fraction]
    else:
        splits = list(np.linspace(0.0, 1.0, 41))

    def split_value(s):
        evals = [(kind, rate, evaluate(kind, rate))
                 for kind, rate in _constituents(r_b, s)]
        return min(e.value for _, _, e in evals), evals

    best_s, (best_val, best_evals) = splits[0], split_value(splits[0])
    for s in splits[1:]:
        val, evals = split_value(s)
        if val > best_val:
            best_s, best_val, best_evals = s, val, evals
    if bm.split_fraction is None and len(splits) > 1:
        lo = max(best_s - 0.025, 0.0)
        hi = min(best_s + 0.025, 1.0)
        for s in np.linspace(lo, hi, 11):
            val, evals = split_value(float(s))
            if val > best_val:
                best_s, best_val, best_evals = float(s), val, evals
    report = {
        "split": best_s,
        "r_b": r_b,
        "constituents": [(k, r, e.value) for k, r, e in best_evals],
        "witnesses": {k: e.witness for k, _, e in best_evals},
    }
    return max(0.0, best_val / bm.b), report


def optimize_blocks(w: RelayChannelSpec, q: PdfInput, r_eff: float,
                    b_range, form: str = "dual",
                    cfg: OptimizerConfig = None, split_fraction=None):
    """Best block count over an inclusive integer interval and the full curve."""
    lo, hi = int(b_range[0]), int(b_range[1])
    if lo > hi:
        raise ValueError("empty block range")
    if lo < 2 or hi > 10**4:
        raise ValueError("block range must lie within [2, 10^4]")
    curve = []
    best_b, best_val = None, -1.0
    for b in range(lo, hi + 1):
        bm = BlockMarkovConfig(b, r_eff, split_fraction)
        val, _ = pdf_overall(w, q, bm, form, cfg)
        curve.append((b, val))
        if val > best_val + 1e-15:
            best_b, best_val = b, val
    return best_b, curve


def df_input(w: RelayChannelSpec, q_joint: Dist) -> PdfInput:
    """Decode-forward input (U = X1) from a joint distribution over X1 x X2."""
    n_x1, n_x2 = w.sizes[0], w.sizes[1]
    joint = q_joint.probs.reshape(n_x1, n_x2)
    q_x2 = joint.sum(axis=0)
    if np.any(q_x2 <= 0.0):
        raise ValueError("q_joint must give positive mass to every x2")
    q_u_given_x2 = (joint / q_x2[None, :]).T        # (x2, u=x1)
    rows = np.zeros((n_x1 * n_x2, n_x1))
    for u in range(n_x1):
        for x2 in range(n_x2):
            rows[u * n_x2 + x2, u] = 1.0
    return PdfInput(Dist(q_x2), CondDist(q_u_given_x2), CondDist(rows), n_x1)

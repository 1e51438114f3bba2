"""Beamforming optimization for a fixed layout.

The subproblem maximized at each inner iteration is a concave quadratic in
the stacked beamformers subject to a power ball and, per energy harvester,
one affine constraint (the harvested power linearized at the anchor point).
For fixed dual variables the Lagrangian maximizer is a linear solve in the
eigenbasis of the quadratic coefficient, so the solver works on the dual:

* the power-ball multiplier is eliminated exactly by a scalar secular
  equation (total power is strictly decreasing in it);
* the energy multipliers (at most Q of them) are driven by backtracked
  projected gradient descent on the reduced dual, then polished to
  complementarity with a tiny active-set Newton iteration.

This yields a KKT residual certificate far below the requested tolerance
on problems of this scale without an external solver.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    InfeasibleScenarioError,
    InfeasibleSubproblemError,
    InternalSolverError,
    MaxIterationsError,
)
from .metrics import (
    LN2,
    _logdet2_hpd,
    all_harvested,
    herm,
    linearized_energy,
    matched_filters_weights,
    sum_rate,
    sum_surrogate,
)

log = logging.getLogger(__name__)

# Relative slack for power / energy feasibility of accepted iterates.
POWER_SLACK = 1e-9
ENERGY_SLACK = 1e-6
# Absolute-ish slack for monotonicity audits of guaranteed-ascent updates.
MONOTONE_SLACK = 1e-9


@dataclass(frozen=True)
class SolveSettings:
    """Tolerances and iteration caps for the inner and outer loops."""

    surrogate_rel_tol: float = 1e-4
    max_inner_iters: int = 100
    qp_kkt_tol: float = 1e-6
    qp_max_iters: int = 2000
    outer_rel_tol: float = 1e-4
    max_outer_iters: int = 50

    def __post_init__(self):
        if min(self.surrogate_rel_tol, self.qp_kkt_tol, self.outer_rel_tol) <= 0:
            raise ConfigError("solver tolerances must be positive")
        if min(self.max_inner_iters, self.qp_max_iters) < 1 or self.max_outer_iters < 0:
            raise ConfigError("iteration caps must be at least 1 (outer cap >= 0)")


@dataclass
class QpSolution:
    """Result of one beamforming subproblem solve."""

    beams: np.ndarray
    kkt_residual: float
    active_constraints: frozenset
    objective_value: float
    iterations: int


@dataclass
class InnerStep:
    """One inner iteration record."""

    t: int
    surrogate: float
    sum_rate: float
    power: float
    energy_margin: float  # min_q harvested - E_min (inf when Q == 0)


def total_power(W: np.ndarray) -> float:
    """Total transmit power sum_k ||W_k||_F^2."""
    return float(np.sum(np.abs(W) ** 2))


def min_energy_margin(G: np.ndarray, W: np.ndarray, config) -> float:
    """min_q harvested power minus the floor; +inf when there are no EHRs."""
    if config.Q == 0:
        return math.inf
    return float(np.min(all_harvested(G, W, config.eta)) - config.E_min)


class _BeamQp:
    """Precomputed data and primal/dual maps for one subproblem."""

    def __init__(self, H, G, U, Lam, W_anchor, config):
        self.config = config
        K = len(H)
        M = H.shape[1]
        self.shape = W_anchor.shape

        B = np.zeros((M, M), dtype=complex)
        D = np.zeros_like(W_anchor)
        for k in range(K):
            C = H[k].conj() @ U[k]           # (M, N_d)
            B += C @ Lam[k] @ herm(C)
            D[k] = C @ Lam[k]
        B = 0.5 * (B + herm(B))
        self.evals, self.evecs = np.linalg.eigh(B / LN2)
        self.evals = np.maximum(self.evals, 0.0)
        self.D = D / LN2

        # Affine energy data: constraint q reads
        #   eta_q * (2 Re sum_k Tr(E_qk^H W_k) - c_q) >= E_min.
        Q = config.Q
        self.E = np.zeros((Q,) + W_anchor.shape, dtype=complex)
        self.c = np.zeros(Q)
        for q in range(Q):
            A_q = G[q].conj() @ G[q].T
            for k in range(K):
                self.E[q, k] = A_q @ W_anchor[k]
                self.c[q] += float(np.real(np.vdot(W_anchor[k], self.E[q, k])))
        eta = np.asarray(config.eta, dtype=float)
        self.eta = eta
        self.e_ref = np.maximum.reduce(
            [np.full(Q, config.E_min), eta * self.c, np.full(Q, 1e-30)]
        ) if Q else np.zeros(0)

        # Constant part of the surrogate objective (independent of W).
        c0 = 0.0
        for k in range(K):
            Nd = Lam[k].shape[0]
            c0 += _logdet2_hpd(Lam[k])
            c0 += (
                Nd
                - float(np.real(np.trace(Lam[k])))
                - config.sigma2 * float(np.real(np.trace(Lam[k] @ herm(U[k]) @ U[k])))
            ) / LN2
        self.obj_const = c0

    # -- primal maps -------------------------------------------------------

    def rhs(self, m: np.ndarray) -> np.ndarray:
        """Stationarity right-hand side for scaled energy duals m (Q,)."""
        R = self.D.copy()
        for q in range(len(m)):
            if m[q] != 0.0:
                R += m[q] * (self.eta[q] / self.e_ref[q]) * self.E[q]
        return R

    def power_dual(self, R: np.ndarray) -> float:
        """Exact ball multiplier: smallest nu >= 0 with power(W(nu)) <= P_max."""
        P_max = self.config.P_max
        # Coefficients of p(nu) = sum_i r_i / (s_i + nu)^2 in the eigenbasis.
        VR = np.einsum("ji,kjs->kis", self.evecs.conj(), R)
        r = np.sum(np.abs(VR) ** 2, axis=(0, 2))
        if r.sum() == 0.0:
            return 0.0
        s = self.evals

        def p_of(nu):
            return float(np.sum(r / (s + nu) ** 2))

        if s.min() > 0 and p_of(0.0) <= P_max:
            return 0.0
        lo, hi = 0.0, math.sqrt(r.sum() / P_max)
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            if p_of(mid) > P_max:
                lo = mid
            else:
                hi = mid
        return hi

    def primal(self, m: np.ndarray):
        """(W, nu) maximizing the Lagrangian at scaled energy duals m."""
        R = self.rhs(m)
        nu = self.power_dual(R)
        denom = self.evals + nu
        inv = np.zeros_like(denom)
        pos = denom > 0
        inv[pos] = 1.0 / denom[pos]  # zero denom only where the rhs is zero too
        VR = np.einsum("ji,kjs->kis", self.evecs.conj(), R)
        W = np.einsum("ij,kjs->kis", self.evecs, inv[None, :, None] * VR)
        return W, nu

    # -- evaluations -------------------------------------------------------

    def objective(self, W: np.ndarray) -> float:
        """Full surrogate objective at W (constants included)."""
        quad = 0.0
        lin = 0.0
        for k in range(len(W)):
            BW = self.evecs @ (self.evals[:, None] * (herm(self.evecs) @ W[k]))
            quad += float(np.real(np.vdot(W[k], BW)))
            lin += float(np.real(np.vdot(self.D[k], W[k])))
        return self.obj_const - quad + 2.0 * lin

    def energy_slacks(self, W: np.ndarray) -> np.ndarray:
        """(Q,) scaled slacks of the linearized energy constraints (>= 0 feasible)."""
        Q = len(self.c)
        s = np.zeros(Q)
        for q in range(Q):
            lin = float(np.real(np.einsum("kms,kms->", self.E[q].conj(), W)))
            e_tilde = self.eta[q] * (2.0 * lin - self.c[q])
            s[q] = (e_tilde - self.config.E_min) / self.e_ref[q]
        return s

    def dual_value(self, m: np.ndarray):
        W, nu = self.primal(m)
        s = self.energy_slacks(W)
        val = self.objective(W) + float(np.dot(m, s))
        val += nu * (self.config.P_max - total_power(W))
        return val, W, nu, s

    def kkt_residual(self, W, m, nu) -> float:
        """Scale-normalized max of stationarity, feasibility, complementarity."""
        R = self.rhs(m)
        stat = 0.0
        for k in range(len(W)):
            BW = self.evecs @ ((self.evals + nu)[:, None] * (herm(self.evecs) @ W[k]))
            stat = max(stat, float(np.linalg.norm(BW - R[k])))
        stat /= max(1.0, float(np.linalg.norm(R)))

        p = total_power(W)
        feas_p = max(0.0, (p - self.config.P_max) / self.config.P_max)
        s = self.energy_slacks(W)
        feas_e = max(0.0, float(-s.min())) if len(s) else 0.0

        scale = max(1.0, abs(self.objective(W)))
        comp = abs(nu * (self.config.P_max - p)) / (self.config.P_max * max(1.0, nu)) \
            if nu > 0 else 0.0
        comp_e = float(np.max(np.abs(m * s))) / scale if len(s) else 0.0
        return max(stat, feas_p, feas_e, comp, comp_e)


def solve_beam_qp(H, G, U, Lam, W_anchor, config, settings: SolveSettings) -> QpSolution:
    """Maximize the beamforming surrogate subject to power and energy bounds.

    The anchor must be feasible (it always is when it came from a previous
    accepted iterate); an infeasible anchor signals a driver bug and raises
    InfeasibleSubproblemError.
    """
    W_anchor = np.asarray(W_anchor, dtype=complex)
    p_anchor = total_power(W_anchor)
    if p_anchor > config.P_max * (1.0 + 1e-6):
        raise InfeasibleSubproblemError(
            f"anchor power {p_anchor:.6g} W exceeds budget {config.P_max:.6g} W"
        )
    if config.Q:
        anchor_e = all_harvested(G, W_anchor, config.eta)
        if np.any(anchor_e < config.E_min * (1.0 - ENERGY_SLACK) - 1e-18):
            raise InfeasibleSubproblemError(
                "anchor misses the energy floor; upstream iterate was infeasible"
            )

    qp = _BeamQp(H, G, U, Lam, W_anchor, config)
    evals = 0

    def evaluate(m):
        nonlocal evals
        evals += 1
        return qp.dual_value(m)

    m = np.zeros(config.Q)
    phi, W, nu, slacks = evaluate(m)
    best = None

    def consider(W, m, nu):
        nonlocal best
        res = qp.kkt_residual(W, m, nu)
        if best is None or res < best[0]:
            best = (res, W.copy(), m.copy(), nu)
        return res

    res = consider(W, m, nu)
    if res > settings.qp_kkt_tol and config.Q:
        # Projected gradient descent on the scaled energy duals.
        step = 1.0
        while evals < settings.qp_max_iters:
            grad = slacks
            accepted = False
            for _ in range(40):
                m_new = np.maximum(0.0, m - step * grad)
                if np.array_equal(m_new, m):
                    break
                phi_new, W_new, nu_new, s_new = evaluate(m_new)
                dm = m_new - m
                if phi_new <= phi + float(np.dot(grad, dm)) + float(np.dot(dm, dm)) / (2 * step):
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break
            m, phi, W, nu, slacks = m_new, phi_new, W_new, nu_new, s_new
            step *= 1.5
            res = consider(W, m, nu)
            if res <= 1e-2 * settings.qp_kkt_tol or float(np.linalg.norm(
                np.maximum(0.0, -slacks) + np.abs(m * slacks)
            )) <= 1e-12:
                break

        # Active-set Newton polish for exact complementarity.
        m, W, nu, res = _polish(qp, m, settings, evaluate)
        res = consider(W, m, nu)

    res, W, m, nu = best
    if res > settings.qp_kkt_tol:
        raise MaxIterationsError(
            f"KKT residual {res:.3e} above tolerance {settings.qp_kkt_tol:.1e} "
            f"after {evals} evaluations",
            best=QpSolution(W, res, _actives(qp, W, m, nu), qp.objective(W), evals),
        )
    return QpSolution(
        beams=W,
        kkt_residual=res,
        active_constraints=_actives(qp, W, m, nu),
        objective_value=qp.objective(W),
        iterations=evals,
    )


def _actives(qp, W, m, nu) -> frozenset:
    names = set()
    if nu > 1e-12 or total_power(W) >= qp.config.P_max * (1 - 1e-9):
        names.add("power")
    s = qp.energy_slacks(W)
    for q in range(len(s)):
        if m[q] > 1e-12 or s[q] < 1e-7:
            names.add(f"energy:{q}")
    return frozenset(names)


def _polish(qp, m, settings, evaluate):
    """Newton iteration on the active energy slacks; returns (m, W, nu, res)."""
    m = m.copy()
    act_tol = 1e-7
    for _ in range(4):  # active-set change rounds
        _, W, nu, slacks = evaluate(m)
        active = [q for q in range(len(m)) if m[q] > act_tol or slacks[q] < act_tol]
        if not active:
            return m, W, nu, qp.kkt_residual(W, m, nu)
        z = m[active].copy()
        for _ in range(30):
            _, W, nu, slacks = evaluate(_fill(m, active, z))
            F = slacks[active]
            if float(np.max(np.abs(F))) <= 1e-12:
                break
            Jac = np.zeros((len(active), len(active)))
            for j in range(len(active)):
                h = 1e-6 * max(1.0, abs(z[j]))
                zj = z.copy()
                zj[j] += h
                _, _, _, sj = evaluate(_fill(m, active, zj))
                Jac[:, j] = (sj[active] - F) / h
            try:
                dz = np.linalg.solve(Jac, -F)
            except np.linalg.LinAlgError:
                break
            # Damped update, clipped at the nonnegativity boundary.
            t = 1.0
            norm0 = float(np.max(np.abs(F)))
            for _ in range(25):
                z_try = np.maximum(0.0, z + t * dz)
                _, _, _, s_try = evaluate(_fill(m, active, z_try))
                if float(np.max(np.abs(s_try[active]))) < norm0 or np.allclose(z_try, z):
                    break
                t *= 0.5
            z = np.maximum(0.0, z + t * dz)
        m = _fill(m, active, z)
        _, W, nu, slacks = evaluate(m)
        # Drop actives pinned at zero with positive slack; add violated ones.
        changed = False
        for q in active:
            if m[q] == 0.0 and slacks[q] > act_tol:
                changed = True
        for q in range(len(m)):
            if q not in active and slacks[q] < -1e-12:
                changed = True
        if not changed:
            break
    return m, W, nu, qp.kkt_residual(W, m, nu)


def _fill(m, active, z):
    out = m.copy()
    out[active] = z
    return out


def feasible_init_beams(H, G, config) -> np.ndarray:
    """Energy-first starting point: matched beams toward the EHRs at full power.

    Column powers are shared across EHR-matched beam groups by a tiny linear
    program maximizing the worst harvested power (column energies add, so the
    harvested power is linear in the group shares). Raises
    InfeasibleScenarioError when even the best split misses the floor.
    Without EHRs the beams are matched to the IDR channels instead.
    """
    K, M = len(H), H.shape[1]
    Nd = config.N_d
    W = np.zeros((K, M, Nd), dtype=complex)
    if config.Q == 0:
        for k in range(K):
            W[k] = H[k].conj()[:, :Nd]
            if np.linalg.norm(W[k]) < 1e-300:
                W[k] = np.eye(M, Nd)
        return W * math.sqrt(config.P_max / total_power(W))

    from scipy.optimize import linprog

    # Unit-power direction per column slot, assigned round-robin to EHRs.
    group = np.zeros((K, Nd), dtype=int)
    dirs = np.zeros((K, M, Nd), dtype=complex)
    for k in range(K):
        for s in range(Nd):
            g = (k * Nd + s) % config.Q
            group[k, s] = g
            u = G[g].conj()[:, s % config.J]
            nrm = np.linalg.norm(u)
            if nrm < 1e-300:
                u = np.zeros(M)
                u[s % M] = 1.0
                nrm = 1.0
            dirs[k, :, s] = u / nrm

    # Harvested power per unit of group power: columns add incoherently.
    n_cols = np.bincount(group.ravel(), minlength=config.Q).astype(float)
    Emat = np.zeros((config.Q, config.Q))
    for q in range(config.Q):
        for k in range(K):
            for s in range(Nd):
                g = group[k, s]
                gain = float(np.sum(np.abs(G[q].T @ dirs[k, :, s]) ** 2))
                Emat[q, g] += config.eta[q] * gain / n_cols[g]

    # max t  s.t.  P_max * (Emat @ alpha)_q >= t,  sum alpha = 1,  alpha >= 0
    Qn = config.Q
    c_lp = np.zeros(Qn + 1)
    c_lp[-1] = -1.0
    A_ub = np.hstack([-config.P_max * Emat, np.ones((Qn, 1))])
    b_ub = np.zeros(Qn)
    A_eq = np.zeros((1, Qn + 1))
    A_eq[0, :Qn] = 1.0
    res = linprog(
        c_lp, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
        bounds=[(0.0, 1.0)] * Qn + [(None, None)], method="highs",
    )
    if not res.success:
        raise InfeasibleScenarioError(f"initializer power split failed: {res.message}")
    alpha = np.maximum(res.x[:Qn], 0.0)
    alpha /= alpha.sum()
    for k in range(K):
        for s in range(Nd):
            g = group[k, s]
            W[k, :, s] = math.sqrt(config.P_max * alpha[g] / n_cols[g]) * dirs[k, :, s]

    energies = all_harvested(G, W, config.eta)
    if np.any(energies < config.E_min * (1.0 - 1e-9)):
        raise InfeasibleScenarioError(
            f"even full-power EHR-matched beams harvest {energies.min():.3e} W "
            f"< floor {config.E_min:.3e} W"
        )
    return W


def wmmse_inner_loop(H, G, W_init, config, settings: SolveSettings):
    """Alternate closed-form filter/weight updates with beamforming solves.

    Returns (W, steps). The surrogate sequence is non-decreasing by
    construction (each block update is exact coordinate ascent); decreases
    beyond slack raise InternalSolverError since they indicate a solver bug.
    """
    W = np.asarray(W_init, dtype=complex)
    steps: list[InnerStep] = []
    f_prev_w = None
    last_block = None
    for t in range(1, settings.max_inner_iters + 1):
        U, Lam = matched_filters_weights(H, W, config.sigma2)
        f_ulam = sum_surrogate(H, W, U, Lam, config.sigma2)
        _audit_ascent(last_block, f_ulam, "filter/weight update")
        qp = solve_beam_qp(H, G, U, Lam, W, config, settings)
        W = qp.beams
        f_w = qp.objective_value
        _audit_ascent(f_ulam, f_w, "beam update")
        last_block = f_w
        steps.append(
            InnerStep(
                t=t,
                surrogate=f_w,
                sum_rate=sum_rate(H, W, config.sigma2),
                power=total_power(W),
                energy_margin=min_energy_margin(G, W, config),
            )
        )
        if f_prev_w is not None and abs(f_w - f_prev_w) <= settings.surrogate_rel_tol * max(
            1.0, abs(f_prev_w)
        ):
            break
        f_prev_w = f_w
    return W, steps


def _audit_ascent(before, after, label):
    if before is None:
        return
    if after < before - MONOTONE_SLACK * max(1.0, abs(before)):
        raise InternalSolverError(
            f"surrogate decreased across {label}: {before!r} -> {after!r}"
        )

"""Independent reference implementations used only by the tests.

These deliberately avoid the library's own computation paths: channels are
summed term by term with scalar arithmetic, rates come from eigenvalues,
and the beamforming subproblem is solved by projected gradient ascent with
Dykstra projections instead of the production dual method.
"""

import cmath
import math

import numpy as np


def brute_force_effective_channel(config, m, positions, antenna_point):
    """Scalar term-by-term sum of the waveguide channel coefficient."""
    total = 0j
    N = len(positions)
    for l in positions:
        dx = l - antenna_point[0]
        dy = m * config.d - antenna_point[1]
        D = math.sqrt(dx * dx + dy * dy + config.a * config.a)
        total += cmath.exp(-1j * config.kappa * (D + config.iota_ref * l)) / (
            math.sqrt(N) * D
        )
    return config.xi * total


def brute_force_channels(config, layout, receivers):
    """Elementwise reconstruction of the channel stacks."""
    def one(anchors):
        out = np.zeros((len(anchors), config.M, config.J), dtype=complex)
        for r, (x0, y0) in enumerate(anchors):
            for m in range(config.M):
                for j in range(config.J):
                    ant = (x0 + j * config.d_s, y0, 0.0)
                    out[r, m, j] = brute_force_effective_channel(
                        config, m, layout[m], ant
                    )
        return out

    return one(receivers.idr_xy), one(receivers.ehr_xy)


def eig_rate(H_k, W, k, sigma2):
    """Rate via eigenvalues of I + S T^{-1} instead of Cholesky log-dets."""
    J = H_k.shape[1]
    A = H_k.T @ W[k]
    S = A @ A.conj().T
    T = sigma2 * np.eye(J, dtype=complex)
    for kp in range(len(W)):
        if kp != k:
            B = H_k.T @ W[kp]
            T += B @ B.conj().T
    vals = np.linalg.eigvals(np.eye(J) + S @ np.linalg.inv(T))
    return float(np.sum(np.log2(np.real(vals))))


def brute_force_energy(G_q, W, eta_q):
    """Entrywise double loop for the harvested power."""
    total = 0.0
    for W_k in W:
        prod = np.zeros((G_q.shape[1], W_k.shape[1]), dtype=complex)
        for j in range(G_q.shape[1]):
            for s in range(W_k.shape[1]):
                acc = 0j
                for m in range(G_q.shape[0]):
                    acc += G_q[m, j] * W_k[m, s]
                prod[j, s] = acc
        total += float(np.sum(np.abs(prod) ** 2))
    return eta_q * total


class QpOracle:
    """Projected-gradient solver for the beamforming subproblem.

    Maximizes the quadratic surrogate over the power ball intersected with
    the linearized-energy halfspaces, using FISTA with Dykstra projections.
    """

    def __init__(self, H, G, U, Lam, W_anchor, config):
        ln2 = math.log(2.0)
        K, M = H.shape[0], H.shape[1]
        B = np.zeros((M, M), dtype=complex)
        D = np.zeros_like(W_anchor)
        for k in range(K):
            C = H[k].conj() @ U[k]
            B += C @ Lam[k] @ C.conj().T
            D[k] = C @ Lam[k]
        self.B = 0.5 * (B + B.conj().T) / ln2
        self.D = D / ln2
        self.P_max = config.P_max
        self.config = config
        # Halfspace normals a_q and offsets b_q: <a_q, W>_Re >= b_q.
        self.normals = []
        self.offsets = []
        for q in range(config.Q):
            A_q = G[q].conj() @ G[q].T
            E = np.stack([A_q @ W_anchor[k] for k in range(K)])
            c_q = sum(
                float(np.real(np.vdot(W_anchor[k], E[k]))) for k in range(K)
            )
            eta = config.eta[q]
            self.normals.append(2.0 * eta * E)
            self.offsets.append(config.E_min + eta * c_q)
        self.lips = 2.0 * float(np.linalg.eigvalsh(self.B)[-1]) + 1e-12

    def objective(self, W):
        val = 0.0
        for k in range(len(W)):
            val -= float(np.real(np.vdot(W[k], self.B @ W[k])))
            val += 2.0 * float(np.real(np.vdot(self.D[k], W[k])))
        return val

    def grad(self, W):
        return np.stack([self.D[k] - self.B @ W[k] for k in range(len(W))])

    def slacks(self, W):
        return np.array(
            [
                float(np.real(np.vdot(a, W))) - b
                for a, b in zip(self.normals, self.offsets)
            ]
        )

    def project(self, W, iters=60):
        """Dykstra projection onto the ball/halfspace intersection."""
        sets = [None] + list(range(len(self.normals)))  # None = ball
        incs = [np.zeros_like(W) for _ in sets]
        X = W.copy()
        for _ in range(iters):
            X_prev = X.copy()
            for i, s in enumerate(sets):
                Y = X + incs[i]
                if s is None:
                    nrm2 = float(np.sum(np.abs(Y) ** 2))
                    Z = Y * math.sqrt(self.P_max / nrm2) if nrm2 > self.P_max else Y
                else:
                    a, b = self.normals[s], self.offsets[s]
                    val = float(np.real(np.vdot(a, Y)))
                    Z = Y if val >= b else Y + (b - val) / float(
                        np.real(np.vdot(a, a))
                    ) * a
                incs[i] = Y - Z
                X = Z
            if float(np.max(np.abs(X - X_prev))) < 1e-14 * max(
                1.0, float(np.max(np.abs(X)))
            ):
                break
        return X

    def solve(self, W0, max_iters=60000, tol=1e-13):
        """FISTA with restarts; returns (W, objective)."""
        step = 1.0 / self.lips
        X = self.project(W0.copy())
        Yv = X.copy()
        t = 1.0
        f_prev = self.objective(X)
        stall = 0
        for _ in range(max_iters):
            X_new = self.project(Yv + step * self.grad(Yv))
            f_new = self.objective(X_new)
            if f_new < f_prev:  # restart momentum on non-ascent
                Yv = X.copy()
                t = 1.0
                X_new = self.project(Yv + step * self.grad(Yv))
                f_new = self.objective(X_new)
            t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            Yv = X_new + ((t - 1.0) / t_new) * (X_new - X)
            X, t = X_new, t_new
            if abs(f_new - f_prev) <= tol * max(1.0, abs(f_prev)):
                stall += 1
                if stall >= 10:
                    break
            else:
                stall = 0
            f_prev = f_new
        return X, self.objective(X)

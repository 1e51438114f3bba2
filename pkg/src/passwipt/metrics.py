"""Rate, harvested power, MSE, and surrogate metrics for one channel state.

Shapes: channel stacks ``H`` are (K, M, J) and ``G`` (Q, M, J); beamformers
``W`` are (K, M, N_d); receive filters ``U`` are (K, J, N_d); MSE weights
``Lam`` are (K, N_d, N_d). All functions are pure.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from .errors import DegenerateChannelError

log = logging.getLogger(__name__)

LN2 = math.log(2.0)

# Jitter added to a near-singular MSE matrix before inversion.
_WEIGHT_JITTER = 1e-12


def herm(A: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return A.conj().T


def _logdet2_hpd(A: np.ndarray) -> float:
    """log2-determinant of a Hermitian positive definite matrix via Cholesky.

    Retries once on the Hermitian part if roundoff made the input
    indefinite, then gives up.
    """
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        try:
            L = np.linalg.cholesky(0.5 * (A + herm(A)))
        except np.linalg.LinAlgError as exc:
            raise DegenerateChannelError(
                "matrix not positive definite even after symmetrization"
            ) from exc
    return 2.0 * float(np.sum(np.log2(np.abs(np.diag(L)))))


def _rx_covariance(H_k: np.ndarray, W: np.ndarray, sigma2: float) -> np.ndarray:
    """Receive covariance at one IDR: sum of all beams' signatures plus noise."""
    J = H_k.shape[1]
    R = sigma2 * np.eye(J, dtype=complex)
    for W_k in W:
        A = H_k.T @ W_k
        R += A @ herm(A)
    return R


def user_rate(H: np.ndarray, W: np.ndarray, k: int, sigma2: float) -> float:
    """Achievable rate of IDR k in bits/s/Hz.

    log2 det(I + H_k^T W_k W_k^H H_k^* T_k^{-1}) with T_k the
    interference-plus-noise covariance; evaluated as
    logdet(T_k + S_k) - logdet(T_k) so both factors stay positive definite.
    """
    R = _rx_covariance(H[k], W, sigma2)
    A = H[k].T @ W[k]
    T = R - A @ herm(A)
    return _logdet2_hpd(R) - _logdet2_hpd(T)


def sum_rate(H: np.ndarray, W: np.ndarray, sigma2: float) -> float:
    """Sum of all IDR rates in bits/s/Hz."""
    return sum(user_rate(H, W, k, sigma2) for k in range(len(H)))


def harvested_energy(G: np.ndarray, W: np.ndarray, q: int, eta_q: float) -> float:
    """Power harvested by EHR q in watts: eta_q * sum_k ||G_q^T W_k||_F^2."""
    total = 0.0
    for W_k in W:
        total += float(np.sum(np.abs(G[q].T @ W_k) ** 2))
    return eta_q * total


def all_harvested(G: np.ndarray, W: np.ndarray, eta) -> np.ndarray:
    """(Q,) vector of harvested powers."""
    return np.array([harvested_energy(G, W, q, eta[q]) for q in range(len(G))])


def _mse_for_filter(H: np.ndarray, W: np.ndarray, U_k: np.ndarray, k: int, sigma2: float) -> np.ndarray:
    Nd = U_k.shape[1]
    E = herm(U_k) @ (H[k].T @ W[k]) - np.eye(Nd, dtype=complex)
    V = E @ herm(E) + sigma2 * herm(U_k) @ U_k
    for kp in range(len(W)):
        if kp == k:
            continue
        B = herm(U_k) @ (H[k].T @ W[kp])
        V += B @ herm(B)
    return 0.5 * (V + herm(V))


def mse_matrix(H: np.ndarray, W: np.ndarray, U: np.ndarray, k: int, sigma2: float) -> np.ndarray:
    """Symbol-estimation error covariance of IDR k for receive filter U_k."""
    return _mse_for_filter(H, W, U[k], k, sigma2)


def mmse_filter(H: np.ndarray, W: np.ndarray, k: int, sigma2: float) -> np.ndarray:
    """MSE-minimizing receive filter for IDR k (J, N_d)."""
    R = _rx_covariance(H[k], W, sigma2)
    return np.linalg.solve(R, H[k].T @ W[k])


def optimal_mse(H: np.ndarray, W: np.ndarray, k: int, sigma2: float) -> np.ndarray:
    """MSE matrix of IDR k at the MMSE filter: I - W_k^H H_k^* R^{-1} H_k^T W_k."""
    A = H[k].T @ W[k]
    R = _rx_covariance(H[k], W, sigma2)
    V = np.eye(A.shape[1], dtype=complex) - herm(A) @ np.linalg.solve(R, A)
    return 0.5 * (V + herm(V))


def mse_weight(V_opt: np.ndarray) -> np.ndarray:
    """Inverse of an MSE matrix, with a jitter guard near singularity.

    Adds 1e-12 * I when the smallest eigenvalue drops below 1e-12 (only
    reachable with pathological near-zero noise) and logs a diagnostic;
    raises DegenerateChannelError when the input is not PSD at all.
    """
    V_opt = 0.5 * (V_opt + herm(V_opt))
    eigmin = float(np.linalg.eigvalsh(V_opt)[0])
    if eigmin <= -1e-8:
        raise DegenerateChannelError(
            f"MSE matrix has negative eigenvalue {eigmin:.3e}; channel degenerate"
        )
    if eigmin < _WEIGHT_JITTER:
        log.warning("near-singular MSE matrix (min eig %.3e); adding jitter", eigmin)
        V_opt = V_opt + _WEIGHT_JITTER * np.eye(V_opt.shape[0])
    Lam = np.linalg.inv(V_opt)
    return 0.5 * (Lam + herm(Lam))


def matched_filters_weights(H: np.ndarray, W: np.ndarray, sigma2: float):
    """(U, Lam) stacks at their rate-achieving closed forms for every IDR."""
    K = len(H)
    U = np.stack([mmse_filter(H, W, k, sigma2) for k in range(K)])
    Lam = np.stack([mse_weight(optimal_mse(H, W, k, sigma2)) for k in range(K)])
    return U, Lam


def rate_surrogate(
    H: np.ndarray,
    W: np.ndarray,
    U_k: np.ndarray,
    Lam_k: np.ndarray,
    k: int,
    sigma2: float,
) -> float:
    """Concave bits-scale minorant of IDR k's rate for fixed (U_k, Lam_k).

    log2|Lam_k| + (N_d - Tr(Lam_k V_k)) / ln 2. The 1/ln2 on the trace terms
    keeps the bound tight against the base-2 rate: the maximum over
    Hermitian-PD Lam_k is attained at Lam_k = V_k^{-1} where the value equals
    the rate, and for every other (U_k, Lam_k) it stays below.
    """
    V = _mse_for_filter(H, W, U_k, k, sigma2)
    Nd = V.shape[0]
    tr = float(np.real(np.trace(Lam_k @ V)))
    return _logdet2_hpd(Lam_k) + (Nd - tr) / LN2


def sum_surrogate(
    H: np.ndarray, W: np.ndarray, U: np.ndarray, Lam: np.ndarray, sigma2: float
) -> float:
    """Sum of the per-IDR rate surrogates."""
    return sum(
        rate_surrogate(H, W, U[k], Lam[k], k, sigma2) for k in range(len(H))
    )


def linearized_energy(
    G: np.ndarray, W: np.ndarray, W_anchor: np.ndarray, q: int, eta_q: float
) -> float:
    """Affine-in-W lower bound on EHR q's harvested power, anchored at W_anchor.

    eta_q * [2 Re Tr(sum_k W_k^{t,H} G_q^* G_q^T W_k) - Tr(sum_k W_k^{t,H} G_q^* G_q^T W_k^t)];
    equals the true quadratic at W = W_anchor and never exceeds it elsewhere.
    """
    lin = 0.0
    anchor_quad = 0.0
    for W_k, Wt_k in zip(W, W_anchor):
        At = G[q].T @ Wt_k
        A = G[q].T @ W_k
        lin += float(np.real(np.vdot(At, A)))
        anchor_quad += float(np.real(np.vdot(At, At)))
    return eta_q * (2.0 * lin - anchor_quad)

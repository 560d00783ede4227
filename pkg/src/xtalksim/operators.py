"""Few-qubit operator algebra and exact time-ordered propagation.

Everything downstream works in angular units (rad/ns) on dense complex
matrices.  Propagation uses a fixed-step exponential midpoint rule: each
step applies exp(-i H(t_mid) dt), computed exactly through the Hermitian
eigendecomposition of the sampled Hamiltonian, so every step is unitary to
machine precision regardless of step size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "IDENTITY",
    "SIGMA_PLUS",
    "SIGMA_MINUS",
    "TimeGrid",
    "kron",
    "embed",
    "hermiticity_defect",
    "unitarity_defect",
    "expm_hamiltonian",
    "ordered_product",
    "propagate",
]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

# Excitation raising/lowering for basis |0>, |1> with sigma_z = diag(1, -1)
# and qubit energy term -(omega/2) sigma_z: |1> is the excited state, so the
# raising operator is |1><0|.
SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)

#: Unitarity defect allowed for any propagator this module returns.
UNITARITY_TOL = 1e-10

#: Relative tolerance for Hermiticity of sampled Hamiltonians.
HERMITICITY_TOL = 1e-12


@dataclass(frozen=True)
class TimeGrid:
    """Uniform step grid over ``[t_start, t_end]`` with an integer step count.

    Parameters
    ----------
    t_start, t_end:
        Window boundaries in ns, ``t_end > t_start``.
    n_steps:
        Number of equal steps, at least 1.
    """

    t_start: float
    t_end: float
    n_steps: int

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValueError(
                f"time grid needs t_end > t_start, got [{self.t_start}, {self.t_end}]"
            )
        if self.n_steps < 1:
            raise ValueError(f"time grid needs n_steps >= 1, got {self.n_steps}")

    @classmethod
    def with_max_step(cls, t_start: float, t_end: float, max_step: float) -> "TimeGrid":
        """Grid whose realized step is the largest value <= ``max_step`` that
        divides the window into an integer number of steps."""
        if max_step <= 0.0:
            raise ValueError(f"step must be positive, got {max_step}")
        span = t_end - t_start
        ratio = span / max_step
        # Tolerate float noise when the window is an exact multiple of the step.
        n = int(math.ceil(ratio - 1e-9))
        return cls(t_start, t_end, max(n, 1))

    @property
    def step(self) -> float:
        return (self.t_end - self.t_start) / self.n_steps

    def midpoints(self) -> np.ndarray:
        """Centers of every step, shape ``(n_steps,)``."""
        return self.t_start + (np.arange(self.n_steps) + 0.5) * self.step

    def boundaries(self) -> np.ndarray:
        """Step boundaries including both ends, shape ``(n_steps + 1,)``."""
        return self.t_start + np.arange(self.n_steps + 1) * self.step

    def halved(self) -> "TimeGrid":
        """Same window with twice the number of steps (for convergence checks)."""
        return TimeGrid(self.t_start, self.t_end, 2 * self.n_steps)


def kron(*factors: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more operators, first factor leftmost."""
    if not factors:
        raise ValueError("kron needs at least one factor")
    out = np.asarray(factors[0], dtype=complex)
    for f in factors[1:]:
        out = np.kron(out, np.asarray(f, dtype=complex))
    return out


def embed(op: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """Single-qubit operator acting on ``qubit`` of an ``n_qubits`` register.

    Qubits are labeled 1..n with qubit 1 the leftmost Kronecker factor.
    """
    if not 1 <= qubit <= n_qubits:
        raise ValueError(f"qubit label {qubit} outside register of {n_qubits}")
    factors = [IDENTITY] * n_qubits
    factors[qubit - 1] = op
    return kron(*factors)


def hermiticity_defect(m: np.ndarray) -> float:
    """Largest entrywise deviation of ``m`` from its conjugate transpose."""
    m = np.asarray(m)
    return float(np.abs(m - m.conj().swapaxes(-1, -2)).max())


def unitarity_defect(u: np.ndarray) -> float:
    """Largest entrywise deviation of ``u^dag u`` from the identity."""
    u = np.asarray(u)
    d = u.shape[-1]
    g = np.matmul(u.conj().swapaxes(-1, -2), u)
    return float(np.abs(g - np.eye(d)).max())


def expm_hamiltonian(h: np.ndarray, dt: float) -> np.ndarray:
    """Exact ``exp(-i h dt)`` of a Hermitian ``h`` via eigendecomposition.

    Accepts a single ``(d, d)`` matrix or a stacked ``(..., d, d)`` batch;
    the exponential is applied matrix by matrix.
    """
    h = np.asarray(h, dtype=complex)
    w, v = np.linalg.eigh(h)
    phase = np.exp(-1j * dt * w)
    return np.matmul(v * phase[..., None, :], v.conj().swapaxes(-1, -2))


def ordered_product(mats: np.ndarray) -> np.ndarray:
    """Time-ordered product ``mats[-1] @ ... @ mats[1] @ mats[0]``.

    ``mats`` is a stack ``(n, d, d)`` with index increasing in time.  The
    product is taken pairwise (a balanced tree), which keeps the Python-level
    loop at O(log n) batched matmuls.
    """
    m = np.asarray(mats)
    if m.ndim != 3:
        raise ValueError(f"expected a stack of matrices, got shape {m.shape}")
    while m.shape[0] > 1:
        k = m.shape[0] // 2
        combined = np.matmul(m[1 : 2 * k : 2], m[0 : 2 * k : 2])
        if m.shape[0] % 2:
            combined = np.concatenate([combined, m[-1:]])
        m = combined
    return m[0]


def _sample_hamiltonian(h_of_t, times: np.ndarray) -> np.ndarray:
    """Evaluate ``h_of_t`` on an array of times, tolerating scalar-only callables."""
    try:
        out = np.asarray(h_of_t(times), dtype=complex)
        if out.ndim == 3 and out.shape[0] == times.size:
            return out
    except Exception:
        pass
    rows = [np.asarray(h_of_t(float(t)), dtype=complex) for t in times]
    return np.stack(rows, axis=0)


def propagate(
    h_of_t,
    grid: TimeGrid,
    *,
    checkpoints: np.ndarray | None = None,
    chunk: int = 2048,
) -> np.ndarray | tuple[np.ndarray, list[np.ndarray]]:
    """Time-ordered propagator of ``h_of_t`` over ``grid``.

    Parameters
    ----------
    h_of_t:
        Callable returning the Hamiltonian (rad/ns) at a time (ns).  May
        accept an array of times and return a stacked ``(n, d, d)`` batch;
        scalar-only callables are looped over.
    grid:
        Step grid.  Each step applies ``exp(-i H(t_mid) dt)`` exactly.
    checkpoints:
        Optional increasing times at which intermediate propagators are
        recorded.  Each must coincide with a step boundary.

    Returns
    -------
    The full-window propagator, or ``(propagator, snapshots)`` when
    checkpoints are given.

    Raises
    ------
    ValueError
        If a sampled Hamiltonian is non-Hermitian (the offending time is
        named), not square, or of inconsistent dimension.
    """
    mids = grid.midpoints()
    dt = grid.step

    checkpoint_steps: list[int] = []
    if checkpoints is not None:
        bounds = grid.boundaries()
        for t in np.atleast_1d(checkpoints):
            idx = int(round((t - grid.t_start) / dt))
            if idx < 0 or idx > grid.n_steps or abs(bounds[idx] - t) > 1e-9 * max(1.0, abs(t)):
                raise ValueError(f"checkpoint t={t} does not lie on a step boundary")
            checkpoint_steps.append(idx)
        if checkpoint_steps != sorted(checkpoint_steps):
            raise ValueError("checkpoints must be increasing")

    # Probe the first sample to learn the dimension before the main sweep.
    probe = _sample_hamiltonian(h_of_t, mids[:1])
    if probe.shape[-1] != probe.shape[-2]:
        raise ValueError(f"Hamiltonian samples are not square: shape {probe.shape}")
    dim = probe.shape[-1]
    u = np.eye(dim, dtype=complex)

    snapshots: list[np.ndarray] = []
    pending = list(checkpoint_steps)
    while pending and pending[0] == 0:
        snapshots.append(u.copy())
        pending.pop(0)

    start = 0
    while start < grid.n_steps:
        stop = min(start + chunk, grid.n_steps)
        if pending and start < pending[0] < stop:
            stop = pending[0]
        h = _sample_hamiltonian(h_of_t, mids[start:stop])
        if h.shape[-1] != h.shape[-2] or h.shape[-1] != dim:
            raise ValueError(
                f"Hamiltonian dimension changed from {dim} to {h.shape[-1]} at t={mids[start]}"
            )
        scale = max(float(np.abs(h).max()), 1.0)
        defects = np.abs(h - h.conj().swapaxes(-1, -2)).reshape(h.shape[0], -1).max(axis=1)
        worst = int(np.argmax(defects))
        if defects[worst] > HERMITICITY_TOL * scale:
            raise ValueError(
                f"non-Hermitian Hamiltonian sample at t={mids[start + worst]:.9g} ns "
                f"(defect {defects[worst]:.3e})"
            )
        u = ordered_product(expm_hamiltonian(h, dt)) @ u
        start = stop
        while pending and pending[0] == start:
            snapshots.append(u.copy())
            pending.pop(0)

    if checkpoints is not None:
        return u, snapshots
    return u

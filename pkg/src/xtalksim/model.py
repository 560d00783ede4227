"""Qubit layouts, control schemes, and Hamiltonian assembly.

The operation frame is the rotating frame of the bare qubit frequencies.
There an always-on exchange coupling J between qubit pairs detuned by Delta
appears as

    H_xy(t) = J (e^{i Delta t} sigma_q^+ sigma_c^- + h.c.)

summed over coupled pairs.  Control schemes modify this picture:

* ``CrosstalkOnly`` leaves the coupling untouched (the reference case).
* ``FrequencyModulation`` adds a sinusoidal Z drive on the shared qubit.  In
  the modulated frame the Z drive disappears and every coupling phase
  becomes ``Delta t + 2 alpha(t)`` with ``alpha`` the accumulated modulation
  phase; both frames are implemented and agree on whole-gate propagators.
* ``DynamicalDecoupling`` adds a train of narrow pi Z pulses on the shared
  qubit, with X drives squeezed into the odd inter-pulse segments.

Time-dependent Hamiltonians are represented as sums of real coefficient
functions times constant Hermitian matrices, which keeps samples exactly
Hermitian and lets the propagator evaluate whole time batches at once.

Qubits are labeled 1..n; qubit 2 is the shared (modulated/pulsed) qubit in
both layouts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from xtalksim.operators import (
    IDENTITY,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    embed,
    expm_hamiltonian,
    kron,
)
from xtalksim.pulses import (
    FmZModulation,
    NascentDeltaTrain,
    SegmentedDrive,
    SineEnvelopeDrive,
)

__all__ = [
    "PairTopology",
    "StarTopology",
    "SystemParams",
    "CrosstalkOnly",
    "FrequencyModulation",
    "DynamicalDecoupling",
    "Idle",
    "XGate",
    "ParallelXX",
    "AssembledHamiltonian",
    "assemble_hamiltonian",
    "assemble_dd_baseline",
    "target_unitary",
    "xy_interaction_operation_frame",
    "xy_interaction_modulated_frame",
    "static_frame_reference",
    "cyclic_mhz_to_angular",
    "angular_to_cyclic_mhz",
]

#: One cyclic MHz expressed in angular rad/ns.
MHZ = 2.0 * math.pi * 1e-3


def cyclic_mhz_to_angular(f_mhz: float) -> float:
    """Convert a cyclic frequency in MHz to angular rad/ns."""
    return f_mhz * MHZ


def angular_to_cyclic_mhz(omega: float) -> float:
    return omega / MHZ


@dataclass(frozen=True)
class PairTopology:
    """Two coupled qubits; qubit 2 carries any modulation or pulse train."""

    @property
    def n_qubits(self) -> int:
        return 2

    @property
    def center(self) -> int:
        return 2

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return ((1, 2),)

    @property
    def dim(self) -> int:
        return 4


@dataclass(frozen=True)
class StarTopology:
    """Central qubit 2 coupled to four neighbors (qubits 1, 3, 4, 5).

    All neighbors sit at the same detuning from the center, so one
    modulation waveform on the center addresses every coupling at once.
    """

    @property
    def n_qubits(self) -> int:
        return 5

    @property
    def center(self) -> int:
        return 2

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return ((1, 2), (3, 2), (4, 2), (5, 2))

    @property
    def dim(self) -> int:
        return 32


Topology = Union[PairTopology, StarTopology]


@dataclass(frozen=True)
class SystemParams:
    """Detuning and coupling in angular units (rad/ns).

    ``delta`` is the neighbor-minus-center frequency difference, identical
    for every coupled pair; ``j`` is the exchange coupling strength.
    """

    delta: float
    j: float

    def __post_init__(self):
        if self.delta == 0.0:
            raise ValueError("detuning must be nonzero")
        if self.j < 0.0:
            raise ValueError(f"coupling must be >= 0, got {self.j}")

    @classmethod
    def from_mhz(cls, delta_mhz: float, j_mhz: float) -> "SystemParams":
        return cls(delta=cyclic_mhz_to_angular(delta_mhz), j=cyclic_mhz_to_angular(j_mhz))

    @property
    def t_delta(self) -> float:
        """Half period of the coupling phase, pi / |Delta|."""
        return math.pi / abs(self.delta)

    def matched_time(self, m: int = 1) -> float:
        """m-th matched gate time, 2 m pi / |Delta|."""
        if m < 1:
            raise ValueError(f"matched-time index must be >= 1, got {m}")
        return 2.0 * m * math.pi / abs(self.delta)

    def is_matched(self, t: float, rel_tol: float = 1e-9) -> bool:
        ratio = t / self.matched_time()
        return abs(ratio - round(ratio)) <= rel_tol * max(1.0, abs(ratio)) and round(ratio) >= 1


@dataclass(frozen=True)
class CrosstalkOnly:
    """No mitigation: bare XY crosstalk (the comparison baseline)."""


@dataclass(frozen=True)
class FrequencyModulation:
    """Sinusoidal Z modulation of the shared qubit.

    Parameters
    ----------
    cycles:
        Number of full modulation periods per gate window.
    gamma:
        Modulation amplitude in rad/ns (>= 0).
    single_site:
        When True, X drives target the modulated qubit itself and are
        specified in the modulated frame; when False they target a neighbor.
    """

    cycles: int
    gamma: float
    single_site: bool = False

    def __post_init__(self):
        if int(self.cycles) != self.cycles or self.cycles < 1:
            raise ValueError(f"cycle count must be a positive integer, got {self.cycles}")
        if self.gamma < 0.0:
            raise ValueError(f"modulation amplitude must be >= 0, got {self.gamma}")

    def modulation(self, gate_time: float) -> FmZModulation:
        return FmZModulation(gamma=self.gamma, cycles=self.cycles, duration=gate_time)


@dataclass(frozen=True)
class DynamicalDecoupling:
    """Z-pulse train on the shared qubit with drives in the odd segments.

    ``segments`` pulses of width ``width`` sit at the ends of equal segments
    of the gate window; the pulse count must be even and at least 4 for the
    leading-order crosstalk cancellation to hold.
    """

    segments: int = 4
    width: float = 1.25

    def __post_init__(self):
        if self.segments < 4 or self.segments % 2:
            raise ValueError(
                f"pulse count must be even and >= 4, got {self.segments}"
            )
        if self.width <= 0.0:
            raise ValueError(f"pulse width must be positive, got {self.width}")

    def interval(self, gate_time: float) -> float:
        return gate_time / self.segments


ControlScheme = Union[CrosstalkOnly, FrequencyModulation, DynamicalDecoupling]


@dataclass(frozen=True)
class Idle:
    """Do-nothing gate of the given duration (ns)."""

    duration: float

    def __post_init__(self):
        if self.duration <= 0.0:
            raise ValueError(f"gate time must be positive, got {self.duration}")


@dataclass(frozen=True)
class XGate:
    """Pi rotation about x on one qubit."""

    duration: float
    target: int = 1

    def __post_init__(self):
        if self.duration <= 0.0:
            raise ValueError(f"gate time must be positive, got {self.duration}")
        if self.target < 1:
            raise ValueError(f"target qubit label must be >= 1, got {self.target}")


@dataclass(frozen=True)
class ParallelXX:
    """Simultaneous X gates on qubits 1 and 2 (pair layout only)."""

    duration: float

    def __post_init__(self):
        if self.duration <= 0.0:
            raise ValueError(f"gate time must be positive, got {self.duration}")


GateSpec = Union[Idle, XGate, ParallelXX]


@dataclass
class AssembledHamiltonian:
    """Hamiltonian of a gate (or run of identical gates) as term sums.

    ``terms`` pairs a vectorized real coefficient function of global time
    with a constant Hermitian matrix.  ``tail`` extends the evaluation
    window past the last gate boundary (the trailing half pulse of a
    decoupling train); ``periodic`` marks that the propagator over
    ``[tail + k T, tail + (k+1) T]`` is the same for every k, which repeated
    runs exploit.
    """

    terms: tuple[tuple[Callable[[np.ndarray], np.ndarray], np.ndarray], ...]
    dim: int
    gate_time: float
    repetitions: int = 1
    tail: float = 0.0
    periodic: bool = False

    @property
    def t_end(self) -> float:
        return self.repetitions * self.gate_time + self.tail

    def checkpoints(self) -> np.ndarray:
        """Evaluation time after each whole gate."""
        return np.arange(1, self.repetitions + 1) * self.gate_time + self.tail

    def __call__(self, t):
        tt = np.asarray(t, dtype=float)
        scalar = tt.ndim == 0
        tt = np.atleast_1d(tt)
        out = np.zeros((tt.size, self.dim, self.dim), dtype=complex)
        for coeff, mat in self.terms:
            c = np.asarray(coeff(tt), dtype=float)
            out += c[:, None, None] * mat
        return out[0] if scalar else out


def _exchange_terms(params: SystemParams, topology: Topology, phase: Callable):
    """XY coupling as two Hermitian terms with cos/sin coefficients.

    ``phase`` maps a time array to the coupling phase phi(t); the coupling
    J(e^{i phi} sigma_q^+ sigma_c^- + h.c.) splits into
    cos(phi) * J(A + A^T) + sin(phi) * iJ(A - A^T) with A real.
    """
    n = topology.n_qubits
    a_sum = np.zeros((topology.dim, topology.dim), dtype=complex)
    for q, c in topology.edges:
        factors = [IDENTITY] * n
        factors[q - 1] = SIGMA_PLUS
        factors[c - 1] = SIGMA_MINUS
        a_sum += kron(*factors)
    sym = params.j * (a_sum + a_sum.conj().T)
    asym = 1j * params.j * (a_sum - a_sum.conj().T)
    return (
        (lambda t: np.cos(phase(t)), sym),
        (lambda t: np.sin(phase(t)), asym),
    )


def xy_interaction_operation_frame(params: SystemParams, topology: Topology, t):
    """Instantaneous XY coupling in the operation frame."""
    terms = _exchange_terms(params, topology, lambda tt: params.delta * tt)
    h = AssembledHamiltonian(terms=terms, dim=topology.dim, gate_time=math.inf)
    return h(t)

def xy_interaction_modulated_frame(
    params: SystemParams, topology: Topology, modulation: FmZModulation, t
):
    """Instantaneous XY coupling in the modulated frame of ``modulation``."""
    terms = _exchange_terms(
        params, topology, lambda tt: params.delta * tt + 2.0 * modulation.phase(tt)
    )
    h = AssembledHamiltonian(terms=terms, dim=topology.dim, gate_time=math.inf)
    return h(t)


def _x_target_labels(gate: GateSpec, topology: Topology) -> tuple[int, ...]:
    if isinstance(gate, Idle):
        return ()
    if isinstance(gate, XGate):
        if gate.target > topology.n_qubits:
            raise ValueError(
                f"X target {gate.target} outside the {topology.n_qubits}-qubit layout"
            )
        return (gate.target,)
    if isinstance(gate, ParallelXX):
        if not isinstance(topology, PairTopology):
            raise ValueError("parallel XX is only defined on the two-qubit layout")
        return (1, 2)
    raise TypeError(f"unsupported gate: {gate!r}")


def _periodic_envelope(env, gate_time: float, repetitions: int):
    """Wrap a single-window envelope so it repeats each gate."""
    if repetitions == 1:
        return env.sample
    return lambda t: env.sample(np.mod(t, gate_time))


def assemble_hamiltonian(
    params: SystemParams,
    topology: Topology,
    scheme: ControlScheme,
    gate: GateSpec,
    *,
    repetitions: int = 1,
    fm_frame: str = "modulated",
) -> AssembledHamiltonian:
    """Full time-dependent Hamiltonian of ``repetitions`` consecutive gates.

    Parameters
    ----------
    fm_frame:
        ``"modulated"`` (default) integrates frequency modulation in the
        modulated frame, where the Z drive is absorbed into the coupling
        phase; ``"operation"`` keeps the explicit Z drive and puts both
        quadratures on any modulated-qubit X drive.  Whole-gate propagators
        agree between the two.

    Raises
    ------
    ValueError
        For gate/scheme/layout combinations outside the supported set, or
        waveform geometry violations (e.g. pulse width >= segment length).
    """
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    t_gate = gate.duration
    targets = _x_target_labels(gate, topology)
    center = topology.center

    terms: list[tuple[Callable, np.ndarray]] = []
    tail = 0.0

    if isinstance(scheme, CrosstalkOnly):
        terms.extend(_exchange_terms(params, topology, lambda tt: params.delta * tt))
        for q in targets:
            env = SineEnvelopeDrive.x_gate(t_gate)
            terms.append(
                (_periodic_envelope(env, t_gate, repetitions), embed(SIGMA_X, q, topology.n_qubits))
            )

    elif isinstance(scheme, FrequencyModulation):
        modulation = scheme.modulation(t_gate)
        # Single-X gates must declare on which side of the modulation they
        # act; parallel gates drive both sides, the modulated qubit's drive
        # taking the modified form automatically.
        if isinstance(gate, XGate) and (gate.target == center) != scheme.single_site:
            kind = "single-site" if scheme.single_site else "neighbor-site"
            raise ValueError(
                f"{kind} modulation cannot drive qubit {gate.target} "
                f"(modulated qubit is {center})"
            )
        if fm_frame == "modulated":
            phase = lambda tt: params.delta * tt + 2.0 * modulation.phase(tt)
            terms.extend(_exchange_terms(params, topology, phase))
            for q in targets:
                env = SineEnvelopeDrive.x_gate(t_gate)
                terms.append(
                    (
                        _periodic_envelope(env, t_gate, repetitions),
                        embed(SIGMA_X, q, topology.n_qubits),
                    )
                )
        elif fm_frame == "operation":
            terms.extend(_exchange_terms(params, topology, lambda tt: params.delta * tt))
            terms.append((modulation.sample, embed(SIGMA_Z, center, topology.n_qubits)))
            for q in targets:
                env = SineEnvelopeDrive.x_gate(t_gate)
                if q == center:
                    wrap = _periodic_envelope(env, t_gate, repetitions)
                    two_alpha = lambda tt: 2.0 * modulation.phase(tt)
                    terms.append(
                        (
                            lambda tt, w=wrap, p=two_alpha: w(tt) * np.cos(p(tt)),
                            embed(SIGMA_X, q, topology.n_qubits),
                        )
                    )
                    terms.append(
                        (
                            lambda tt, w=wrap, p=two_alpha: w(tt) * np.sin(p(tt)),
                            embed(SIGMA_Y, q, topology.n_qubits),
                        )
                    )
                else:
                    terms.append(
                        (
                            _periodic_envelope(env, t_gate, repetitions),
                            embed(SIGMA_X, q, topology.n_qubits),
                        )
                    )
        else:
            raise ValueError(f"unknown fm_frame {fm_frame!r}")

    elif isinstance(scheme, DynamicalDecoupling):
        tau = scheme.interval(t_gate)
        if scheme.width >= tau:
            raise ValueError(
                f"pulse width {scheme.width} ns must be below the segment length {tau} ns"
            )
        train = NascentDeltaTrain(
            segments=repetitions * scheme.segments, interval=tau, width=scheme.width
        )
        terms.extend(_exchange_terms(params, topology, lambda tt: params.delta * tt))
        terms.append(
            (
                lambda tt: (np.pi / 2.0) * train.sample(tt),
                embed(SIGMA_Z, center, topology.n_qubits),
            )
        )
        for q in targets:
            drive = SegmentedDrive.sqrt_x_bursts(
                segments=repetitions * scheme.segments, interval=tau, width=scheme.width
            )
            terms.append((drive.sample, embed(SIGMA_X, q, topology.n_qubits)))
        tail = scheme.width / 2.0

    else:
        raise TypeError(
            f"unsupported control scheme {scheme!r}; combined schemes (e.g. decoupling "
            "with modulation) are not constructible"
        )

    return AssembledHamiltonian(
        terms=tuple(terms),
        dim=topology.dim,
        gate_time=t_gate,
        repetitions=repetitions,
        tail=tail,
        periodic=params.is_matched(t_gate),
    )


def assemble_dd_baseline(
    params: SystemParams,
    topology: Topology,
    scheme: DynamicalDecoupling,
    gate: GateSpec,
    *,
    repetitions: int = 1,
) -> AssembledHamiltonian:
    """Pulse-free reference of a decoupling run: same segmented X drive with
    zero pulse width, no Z train.  For an Idle gate this is identical to the
    bare-crosstalk assembly."""
    t_gate = gate.duration
    targets = _x_target_labels(gate, topology)
    tau = scheme.interval(t_gate)
    terms: list[tuple[Callable, np.ndarray]] = []
    terms.extend(_exchange_terms(params, topology, lambda tt: params.delta * tt))
    for q in targets:
        drive = SegmentedDrive.sqrt_x_bursts(
            segments=repetitions * scheme.segments, interval=tau, width=0.0
        )
        terms.append((drive.sample, embed(SIGMA_X, q, topology.n_qubits)))
    return AssembledHamiltonian(
        terms=tuple(terms),
        dim=topology.dim,
        gate_time=t_gate,
        repetitions=repetitions,
        tail=0.0,
        periodic=params.is_matched(t_gate),
    )


def target_unitary(gate: GateSpec, topology: Topology, repetitions: int = 1) -> np.ndarray:
    """Ideal propagator of ``repetitions`` consecutive gates."""
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    targets = _x_target_labels(gate, topology)
    single = np.eye(topology.dim, dtype=complex)
    for q in targets:
        single = single @ expm_hamiltonian(
            embed(SIGMA_X, q, topology.n_qubits), math.pi / 2.0
        )
    return np.linalg.matrix_power(single, repetitions)


def static_frame_reference(params: SystemParams, topology: Topology, t: float) -> np.ndarray:
    """Bare-crosstalk idle propagator from static diagonalization.

    In the lab frame the idle Hamiltonian is time independent:
    H = -sum_q (omega_q / 2) sigma_q^z + J sum_edges (sigma^+ sigma^- + h.c.)
    with the center at omega = 0 and neighbors at omega = Delta.  Its exact
    exponential, rotated back to the operation frame, is an independent
    reference for the time-ordered integrator.
    """
    n = topology.n_qubits
    h0 = np.zeros((topology.dim, topology.dim), dtype=complex)
    for q in range(1, n + 1):
        omega = 0.0 if q == topology.center else params.delta
        h0 += -(omega / 2.0) * embed(SIGMA_Z, q, n)
    h_xy = np.zeros_like(h0)
    for q, c in topology.edges:
        factors = [IDENTITY] * n
        factors[q - 1] = SIGMA_PLUS
        factors[c - 1] = SIGMA_MINUS
        a = kron(*factors)
        h_xy += params.j * (a + a.conj().T)
    u_lab = expm_hamiltonian(h0 + h_xy, t)
    # Undo the bare rotation: U_frame = exp(+i H0 t) U_lab.
    return expm_hamiltonian(h0, -t) @ u_lab

"""Statevector oracle with mid-circuit measurement and classical feedforward."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import LogicalCircuit
from .rewrite import EGate, ExtendedCircuit, lift

QUBIT_BUDGET = 14
PRUNE_TOL = 1e-12

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_T = np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex)
_BELL = np.array([[1, 0], [0, 1]], dtype=complex) / np.sqrt(2)  # axes (a, b)


class SimulationError(RuntimeError):
    pass


@dataclass
class StateBranch:
    """One measurement branch: a normalized state over the live qubits, the
    bits recorded so far, and the branch probability."""

    qubits: tuple[str, ...]
    state: np.ndarray  # tensor of shape (2,) * len(qubits)
    bits: dict[str, int]
    probability: float

    def state_over(self, order: tuple[str, ...]) -> np.ndarray:
        """Amplitude tensor with axes permuted to the requested qubit order."""
        if set(order) != set(self.qubits):
            raise SimulationError(f"branch holds {self.qubits}, asked for {order}")
        perm = [self.qubits.index(q) for q in order]
        return np.transpose(self.state, perm)

    def vector(self, order: tuple[str, ...] | None = None) -> np.ndarray:
        return self.state_over(order or self.qubits).reshape(-1)


def _apply_single(state: np.ndarray, axis: int, mat: np.ndarray) -> np.ndarray:
    moved = np.moveaxis(state, axis, 0)
    shaped = moved.reshape(2, -1)
    out = (mat @ shaped).reshape(moved.shape)
    return np.moveaxis(out, 0, axis)


def _apply_cx(state: np.ndarray, ctrl_axis: int, tgt_axis: int) -> np.ndarray:
    moved = np.moveaxis(state, (ctrl_axis, tgt_axis), (0, 1))
    out = moved.copy()
    out[1, 0], out[1, 1] = moved[1, 1], moved[1, 0]
    return np.moveaxis(out, (0, 1), (ctrl_axis, tgt_axis))


def run(
    circuit: ExtendedCircuit,
    input_state: np.ndarray | None = None,
) -> list[StateBranch]:
    """Execute an extended circuit, branching on every measurement.

    ``input_state`` is a vector over the circuit's computation qubits in
    declaration order (default |0...0>). Entangling gates bring fresh
    communication qubits in as a Bell pair; measurements project, record
    the bit and drop the qubit. Zero-probability branches are pruned.
    """
    comp = circuit.comp_qubits
    n = len(comp)
    if input_state is None:
        vec = np.zeros(2**n, dtype=complex) if n else np.ones(1, dtype=complex)
        if n:
            vec[0] = 1.0
    else:
        vec = np.asarray(input_state, dtype=complex).reshape(-1)
        if vec.shape != (2**n,):
            raise SimulationError(f"input state must have length {2**n}")
    branches = [
        StateBranch(tuple(comp), vec.reshape((2,) * n), {}, 1.0)
    ]

    for gate in circuit.gates:
        branches = [b for br in branches for b in _apply(br, gate)]
    total = sum(b.probability for b in branches)
    if abs(total - 1.0) > 1e-9:
        raise SimulationError(f"branch probabilities sum to {total}")
    branches.sort(key=_branch_key)
    return branches


def _branch_key(b: StateBranch):
    return tuple(sorted(b.bits.items()))


def _apply(branch: StateBranch, gate: EGate) -> list[StateBranch]:
    live = branch.qubits
    if gate.kind == "e":
        a, b = gate.qubits
        for q in (a, b):
            if q in live:
                raise SimulationError(f"entangling gate on live qubit {q!r}")
        if len(live) + 2 > QUBIT_BUDGET:
            raise SimulationError(f"qubit budget {QUBIT_BUDGET} exceeded")
        state = np.tensordot(branch.state, _BELL, axes=0)
        return [StateBranch(live + (a, b), state, branch.bits, branch.probability)]

    for q in gate.qubits:
        if q not in live:
            raise SimulationError(f"gate {gate} on consumed or unknown qubit {q!r}")

    if gate.kind == "h":
        return [_unary(branch, gate.qubits[0], _H)]
    if gate.kind == "t":
        return [_unary(branch, gate.qubits[0], _T)]
    if gate.kind == "cx":
        ca, ta = live.index(gate.qubits[0]), live.index(gate.qubits[1])
        state = _apply_cx(branch.state, ca, ta)
        return [StateBranch(live, state, branch.bits, branch.probability)]
    if gate.kind in ("px", "pz"):
        exponent = 0
        for bit in gate.expr:
            if bit not in branch.bits:
                raise SimulationError(f"gate {gate} reads unmeasured bit {bit!r}")
            exponent ^= branch.bits[bit]
        if not exponent:
            return [branch]
        axis = live.index(gate.qubits[0])
        if gate.kind == "px":
            state = np.flip(branch.state, axis=axis)
        else:
            state = branch.state.copy()
            moved = np.moveaxis(state, axis, 0)
            moved[1] *= -1.0
        return [StateBranch(live, state, branch.bits, branch.probability)]
    if gate.kind == "m":
        q = gate.qubits[0]
        axis = live.index(q)
        moved = np.moveaxis(branch.state, axis, 0)
        out: list[StateBranch] = []
        remaining = live[:axis] + live[axis + 1 :]
        for outcome in (0, 1):
            piece = moved[outcome]
            p = float(np.vdot(piece, piece).real)
            if p <= PRUNE_TOL:
                continue
            bits = dict(branch.bits)
            bits[gate.bit] = outcome  # type: ignore[index]
            out.append(
                StateBranch(remaining, piece / np.sqrt(p), bits, branch.probability * p)
            )
        return out
    raise SimulationError(f"unknown gate kind {gate.kind!r}")


def _unary(branch: StateBranch, qubit: str, mat: np.ndarray) -> StateBranch:
    axis = branch.qubits.index(qubit)
    state = _apply_single(branch.state, axis, mat)
    return StateBranch(branch.qubits, state, branch.bits, branch.probability)


# --- Equivalence checking ------------------------------------------------


@dataclass
class EquivalenceReport:
    equal: bool
    max_deviation: float
    mode: str  # "process" or "sampled"


def _canonical(vec: np.ndarray) -> np.ndarray:
    """Strip global phase: rotate the largest-magnitude amplitude to the
    positive real axis."""
    idx = int(np.argmax(np.abs(vec)))
    a = vec[idx]
    if abs(a) < 1e-300:
        return vec
    return vec * (a.conjugate() / abs(a))


def _match_branches(
    left: list[StateBranch], right: list[StateBranch], order: tuple[str, ...], tol: float
) -> float:
    """Greatest deviation under the best pairing of output branches.

    Measurement bits need not agree across the two circuits (rewrites
    re-label outcomes), so branches are matched as weighted states.
    """
    lv = sorted(
        ((b.probability, _canonical(b.vector(order))) for b in left),
        key=lambda pv: (round(pv[0], 9), tuple(np.round(pv[1], 6).view(float))),
    )
    rv = sorted(
        ((b.probability, _canonical(b.vector(order))) for b in right),
        key=lambda pv: (round(pv[0], 9), tuple(np.round(pv[1], 6).view(float))),
    )
    if len(lv) != len(rv):
        # Branch counts may legitimately differ (pruning); fall back to
        # checking every branch of each side against the other's mixture.
        return _match_unbalanced(lv, rv, tol)
    worst = 0.0
    used = [False] * len(rv)
    for pl, sl in lv:
        best = None
        best_dev = np.inf
        for j, (pr, sr) in enumerate(rv):
            if used[j]:
                continue
            dev = max(1.0 - abs(np.vdot(sl, sr)), abs(pl - pr))
            if dev < best_dev:
                best, best_dev = j, dev
        used[best] = True  # type: ignore[index]
        worst = max(worst, float(best_dev))
    return worst


def _match_unbalanced(lv, rv, tol: float) -> float:
    worst = 0.0
    for pl, sl in lv:
        dev = min(1.0 - abs(np.vdot(sl, sr)) for _, sr in rv)
        worst = max(worst, float(dev))
    for pr, sr in rv:
        dev = min(1.0 - abs(np.vdot(sl, sr)) for _, sl in lv)
        worst = max(worst, float(dev))
    return worst


def _peak_live(circuit: ExtendedCircuit, base: int) -> int:
    live = base
    peak = base
    for g in circuit.gates:
        if g.kind == "e":
            live += 2
        elif g.kind == "m":
            live -= 1
        peak = max(peak, live)
    return peak


def _entangled_input(n: int, extras: int) -> np.ndarray | None:
    """Maximally entangled state over (reference, data) = 2n qubits laid
    out as r0..r(n-1), d0..d(n-1), followed by ``extras`` wires in |0>."""
    if n + extras == 0:
        return None
    dim = 2**n
    mat = np.eye(dim, dtype=complex) / np.sqrt(dim)
    state = mat.reshape((2,) * (2 * n))
    if extras:
        zero = np.zeros((2,) * extras, dtype=complex)
        zero[(0,) * extras] = 1.0
        state = np.tensordot(state, zero, axes=0)
    return state


def _equivalence(
    left: ExtendedCircuit,
    right: ExtendedCircuit,
    entangled: int,
    tol: float,
    seed: int,
) -> EquivalenceReport:
    comp = left.comp_qubits
    extras = len(comp) - entangled
    out_left = _surviving(left)
    out_right = _surviving(right)
    if out_left != out_right:
        raise SimulationError(
            f"fragments produce different output registers: {out_left} vs {out_right}"
        )
    refs = tuple(f"_r{i}" for i in range(entangled))
    peak = max(_peak_live(left, entangled + len(comp)), _peak_live(right, entangled + len(comp)))
    if peak <= QUBIT_BUDGET:
        state = _entangled_input(entangled, extras)
        lb = _run_with_refs(left, refs, state)
        rb = _run_with_refs(right, refs, state)
        order = refs + out_left
        dev = _match_branches(lb, rb, order, tol)
        return EquivalenceReport(dev <= tol, dev, "process")
    # Sampled fallback: all basis states of the entangled register plus
    # seeded pseudo-random states, extras pinned to |0>.
    rng = np.random.default_rng(seed)
    dim = 2**entangled
    worst = 0.0
    inputs = [np.eye(dim, dtype=complex)[i] for i in range(dim)]
    for _ in range(8):
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        inputs.append(v / np.linalg.norm(v))
    zero = np.zeros(2**extras, dtype=complex)
    zero[0] = 1.0
    for vec in inputs:
        full = np.kron(vec, zero) if extras else vec
        lb = run(left, full)
        rb = run(right, full)
        worst = max(worst, _match_branches(lb, rb, out_left, tol))
    return EquivalenceReport(worst <= tol, worst, "sampled")


def equivalent_fragments(
    left: ExtendedCircuit,
    right: ExtendedCircuit,
    tol: float = 1e-9,
    seed: int = 7,
) -> EquivalenceReport:
    """Channel-level equivalence of two extended circuits over the same
    computation register (which may be empty, as for entangling protocols
    that only produce output pairs)."""
    if set(left.comp_qubits) != set(right.comp_qubits):
        raise SimulationError("fragments act on different computation registers")
    return _equivalence(left, right, len(left.comp_qubits), tol, seed)


def _surviving(circuit: ExtendedCircuit) -> tuple[str, ...]:
    alive = list(circuit.comp_qubits)
    for g in circuit.gates:
        if g.kind == "e":
            alive.extend(g.qubits)
        elif g.kind == "m":
            alive.remove(g.qubits[0])
    return tuple(alive)


def _run_with_refs(
    circuit: ExtendedCircuit, refs: tuple[str, ...], state: np.ndarray | None
) -> list[StateBranch]:
    widened = ExtendedCircuit(refs + circuit.comp_qubits, circuit.gates)
    return run(widened, state.reshape(-1) if state is not None else None)


def equivalent(
    physical: ExtendedCircuit,
    logical: LogicalCircuit,
    tol: float = 1e-9,
    seed: int = 7,
) -> EquivalenceReport:
    """Does the compiled circuit implement the logical one on its
    computation qubits? Process-level when the register fits the budget,
    sampled otherwise.

    Auxiliary wires the expansion borrowed (swap-chain intermediates) are
    simulated in |0> on both sides; only the program qubits carry the
    entangled reference register.
    """
    program = tuple(logical.qubits)
    created = {q for g in physical.gates if g.kind == "e" for q in g.qubits}
    touched = {q for g in physical.gates for q in g.qubits}
    extras = tuple(sorted(touched - created - set(program)))
    wide = program + extras
    reference = ExtendedCircuit(wide, tuple(lift(g) for g in logical.gates()))
    target = ExtendedCircuit(wide, physical.gates)
    return _equivalence(target, reference, len(program), tol, seed)

"""Analytic compiler for tensor products of single-qubit unitaries.

Any product of per-qubit SU(2) factors can be realized exactly with
collective equatorial rotations plus one addressed Z rotation per
eliminated factor.  Three modes trade pulse count against how much of the
target is realized in hardware:

* "exact"              - the full product, no residual.
* "mod-collective-z"   - up to one uniform Z rotation applied afterwards.
* "mod-independent-z"  - up to independent per-qubit Z rotations applied
                         afterwards; pairs of factors then share a single
                         basis-change pulse, roughly halving the collective
                         pulse count.

All solves are closed-form; results reconstruct their targets to ~1e-12.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .gateset import (
    ADDRESSED_Z,
    COLLECTIVE,
    Pulse,
    PulseSequence,
    collective_z_diagonal,
    require_unitary,
    rotation_2x2,
    sequence_unitary,
    z_sign_columns,
    zrot_2x2,
)

MODE_EXACT = "exact"
MODE_COLLECTIVE_Z = "mod-collective-z"
MODE_INDEPENDENT_Z = "mod-independent-z"
MODES = (MODE_EXACT, MODE_COLLECTIVE_Z, MODE_INDEPENDENT_Z)

# pulses with |angle| below this are identities and get pruned
ANGLE_PRUNE_TOL = 1e-10
# grouping tolerance: Frobenius distance after phase alignment
GROUP_TOL = 1e-9
# permutation search refuses above this many distinct factors unless forced
MAX_PERMUTATION_FACTORS = 8


class TwoEquatorialSplitError(ArithmeticError):
    """No pair of equatorial rotations reproduces the requested matrix."""


@dataclass(frozen=True)
class AxisAngle:
    """Rotation angle and axis of an SU(2) element, V = exp(-i*alpha*(n.sigma)/2).

    alpha lies in [0, 2*pi]; theta_axis in [0, pi] is the polar angle of the
    axis and phi_axis in (-pi, pi] its azimuth.  Angles below ~1e-12 report
    the +z axis by convention, as does alpha = 2*pi exactly (V = -I).
    """

    alpha: float
    theta_axis: float
    phi_axis: float

    def axis_vector(self) -> np.ndarray:
        st = math.sin(self.theta_axis)
        return np.array(
            [st * math.cos(self.phi_axis), st * math.sin(self.phi_axis), math.cos(self.theta_axis)]
        )

    def generator(self) -> np.ndarray:
        nx, ny, nz = self.axis_vector()
        return np.array([[nz, nx - 1j * ny], [nx + 1j * ny, -nz]])

    def matrix(self) -> np.ndarray:
        c = math.cos(0.5 * self.alpha)
        s = math.sin(0.5 * self.alpha)
        return c * np.eye(2) - 1j * s * self.generator()


@dataclass(frozen=True)
class Residual:
    """Rotations left over after a sequence, applied on top of it.

    kind "none": identity.  kind "collective-z": one uniform Z angle.
    kind "independent-z": one Z angle per qubit, in register order.
    """

    kind: str = "none"
    angles: tuple[float, ...] = ()

    def unitary(self, n_qubits: int) -> np.ndarray:
        d = 1 << n_qubits
        if self.kind == "none":
            return np.eye(d, dtype=complex)
        cols = z_sign_columns(n_qubits)
        if self.kind == "collective-z":
            return np.diag(collective_z_diagonal(self.angles[0], n_qubits))
        if self.kind == "independent-z":
            exponent = cols @ np.asarray(self.angles)
            return np.diag(np.exp(-0.5j * exponent))
        raise ValueError(f"unknown residual kind {self.kind!r}")


@dataclass(frozen=True)
class LocalCompileResult:
    """Sequence plus the bookkeeping needed to reconstruct the target.

    residual.unitary(n) @ sequence_unitary(sequence) equals the product of
    the SU(2)-normalized factors; multiplying by exp(i*discarded_global_phase)
    restores the original (un-normalized) tensor product.
    """

    sequence: PulseSequence
    discarded_global_phase: float
    residual: Residual

    def reconstruct(self) -> np.ndarray:
        return self.residual.unitary(self.sequence.n_qubits) @ sequence_unitary(self.sequence)


# ---------------------------------------------------------------------------
# SU(2) primitives
# ---------------------------------------------------------------------------


def su2_normalize(u: np.ndarray) -> tuple[np.ndarray, float]:
    """Strip the determinant phase: returns (V, delta) with V = exp(-i*delta)*U
    in SU(2) and delta = arg(det U)/2 on the branch (-pi/2, pi/2]."""
    u = require_unitary(u, 1e-9, "single-qubit factor")
    if u.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    det = u[0, 0] * u[1, 1] - u[0, 1] * u[1, 0]
    delta = 0.5 * cmath.phase(det)
    return u * cmath.exp(-1j * delta), delta


def _sin_axis_vector(v: np.ndarray) -> np.ndarray:
    """sin(alpha/2) * axis of an SU(2) matrix, unnormalized."""
    return np.array(
        [
            -0.5 * (v[0, 1] + v[1, 0]).imag,
            0.5 * (v[1, 0] - v[0, 1]).real,
            -0.5 * (v[0, 0] - v[1, 1]).imag,
        ]
    )


def axis_angle(v: np.ndarray) -> AxisAngle:
    """Decompose an SU(2) matrix into rotation angle and axis."""
    v = np.asarray(v, dtype=complex)
    det = v[0, 0] * v[1, 1] - v[0, 1] * v[1, 0]
    if abs(det - 1.0) > 1e-10:
        raise ValueError("axis_angle needs det = 1; run su2_normalize first")
    c = 0.5 * (v[0, 0] + v[1, 1]).real
    sn = _sin_axis_vector(v)
    s = float(np.linalg.norm(sn))
    alpha = 2.0 * math.atan2(s, c)
    if s < 1e-12:
        return AxisAngle(alpha, 0.0, 0.0)
    n = sn / s
    theta_axis = math.acos(min(1.0, max(-1.0, n[2])))
    phi_axis = math.atan2(n[1], n[0])
    return AxisAngle(alpha, theta_axis, phi_axis)


def equatorial_conjugator(axis: AxisAngle) -> Pulse:
    """Collective pulse C with C^-1 Z C rotating about the given axis.

    Conjugating sigma_z by the returned equatorial rotation yields the axis
    generator: the pulse tilts z by the axis polar angle, about the
    in-plane direction perpendicular to the axis azimuth.
    """
    return Pulse.collective(axis.theta_axis, axis.phi_axis - 0.5 * math.pi)


def two_equatorial_split(v: np.ndarray, tol: float = 1e-10) -> tuple[Pulse, Pulse]:
    """Split an SU(2) matrix into two equatorial rotations.

    Returns chronological pulses (first, second) whose 2x2 product
    second @ first equals v.  Both rotations share one angle; their phases
    straddle the target azimuth.  The branch signs are not pinned by the
    closed form, so all eight combinations are tried and the first that
    reproduces v within tol is returned.
    """
    ax = axis_angle(v)
    if ax.alpha < 1e-12:
        return Pulse.collective(0.0, 0.0), Pulse.collective(0.0, 0.0)
    # shared angle a and phase separation d solve
    #   cos^2(a/2) = (cos(alpha/2) + 1) sin^2(theta) / 2 =: K
    #   cos(d) = (K - cos(alpha/2)) / (1 - K)
    # rewritten via x = 1 - cos(alpha/2) = 2 sin^2(alpha/4) and
    # y = cos^2(theta)(1 + cos(alpha/2)) = 2 cos^2(theta) cos^2(alpha/4)
    # so that cos(d) = (x - y)/(x + y) never needs clamping and neither end
    # cancels: the raw 1 - cos form loses half its digits near the identity
    # and the raw 1 + cos form loses them near a full turn (a z rotation
    # next to minus identity skews d by ~1e-9 and fails every branch)
    x = 2.0 * math.sin(0.25 * ax.alpha) ** 2
    cq = math.cos(0.25 * ax.alpha)
    ct = math.cos(ax.theta_axis)
    y = 2.0 * ct * ct * cq * cq
    if x + y < 1e-28:
        return Pulse.collective(0.0, 0.0), Pulse.collective(0.0, 0.0)
    cos_sep = (x - y) / (x + y)
    if abs(cos_sep) > 1.0 + 1e-9:
        raise TwoEquatorialSplitError(f"separation cosine {cos_sep} out of range")
    # half-angle forms: sin^2(d/2) = y/(x+y), cos^2(d/2) = x/(x+y) and
    # sin^2(a/2) = (x+y)/2, cos^2(a/2) = K, all nonnegative by construction,
    # so atan2 recovers d and a at full precision even when cos_sep ~ -1
    k = (cq * math.sin(ax.theta_axis)) ** 2
    alpha0 = 2.0 * math.atan2(math.sqrt(0.5 * (x + y)), math.sqrt(max(0.0, k)))
    sep0 = 2.0 * math.atan2(math.sqrt(y), math.sqrt(x))
    best: tuple[float, Pulse, Pulse] | None = None
    for alpha in (alpha0, 2.0 * math.pi - alpha0):
        for sep in (sep0, -sep0):
            for bisector in (ax.phi_axis, ax.phi_axis + math.pi):
                first = Pulse.collective(alpha, bisector + 0.5 * sep)
                second = Pulse.collective(alpha, bisector - 0.5 * sep)
                prod = rotation_2x2(second.theta, second.phi) @ rotation_2x2(first.theta, first.phi)
                err = float(np.max(np.abs(prod - v)))
                if best is None or err < best[0]:
                    best = (err, first, second)
    # keep the best branch, not the first within tol: near a full turn the
    # sign branches blur together and a marginal one can pass first
    if best is not None and best[0] < tol:
        return best[1], best[2]
    raise TwoEquatorialSplitError("no branch combination reproduces the target")


def _equatorializing_z_angle(t: np.ndarray) -> float:
    """Angle beta such that Z(beta) @ t has a purely equatorial generator.

    Uses the atan2 form, which stays finite when the rotation angle of t
    approaches pi.
    """
    ax = axis_angle(t)
    uz = math.cos(ax.theta_axis) if ax.alpha >= 1e-12 else 0.0
    return 2.0 * math.atan2(-math.sin(0.5 * ax.alpha) * uz, math.cos(0.5 * ax.alpha))


def commuting_z_pair(u1: np.ndarray, u2: np.ndarray, tol: float = 1e-11) -> tuple[float, float]:
    """Z angles (b1, b2) making Z(b1) @ u1 and Z(b2) @ u2 commute.

    Prepending a Z rotation tilts a factor's rotation axis within a plane
    containing z while advancing its azimuth by half the Z angle.  Both
    dressed axes must coincide, so their common azimuth psi satisfies a
    single sinusoidal equation whose two roots are tried in turn; a factor
    that is itself a Z rotation degenerates gracefully (its dressed form
    becomes the identity).
    """
    a1 = axis_angle(u1)
    a2 = axis_angle(u2)
    s1, c1 = math.sin(0.5 * a1.alpha), math.cos(0.5 * a1.alpha)
    s2, c2 = math.sin(0.5 * a2.alpha), math.cos(0.5 * a2.alpha)
    h1 = s1 * math.sin(a1.theta_axis)
    h2 = s2 * math.sin(a2.theta_axis)
    uz1 = math.cos(a1.theta_axis)
    uz2 = math.cos(a2.theta_axis)
    p1 = s1 * uz1 * math.cos(a1.phi_axis) - c1 * math.sin(a1.phi_axis)
    q1 = s1 * uz1 * math.sin(a1.phi_axis) + c1 * math.cos(a1.phi_axis)
    p2 = s2 * uz2 * math.cos(a2.phi_axis) - c2 * math.sin(a2.phi_axis)
    q2 = s2 * uz2 * math.sin(a2.phi_axis) + c2 * math.cos(a2.phi_axis)
    amp_cos = p1 * h2 - p2 * h1
    amp_sin = q1 * h2 - q2 * h1
    if math.hypot(amp_cos, amp_sin) > 1e-13:
        psi0 = math.atan2(-amp_cos, amp_sin)
        candidates = [psi0, psi0 + math.pi]
    else:
        # constraint vanishes identically; any common azimuth works
        candidates = [a1.phi_axis, a2.phi_axis, 0.0]
    for psi in candidates:
        b1 = 2.0 * (psi - a1.phi_axis)
        b2 = 2.0 * (psi - a2.phi_axis)
        v1 = zrot_2x2(b1) @ u1
        v2 = zrot_2x2(b2) @ u2
        if np.max(np.abs(v1 @ v2 - v2 @ v1)) < tol:
            return b1, b2
    raise ArithmeticError("no Z alignment makes the pair commute")


# ---------------------------------------------------------------------------
# full-register compiles
# ---------------------------------------------------------------------------


def _normalize_factors(factors) -> tuple[list[np.ndarray], list[float]]:
    vs, deltas = [], []
    for u in factors:
        v, d = su2_normalize(np.asarray(u, dtype=complex))
        vs.append(v)
        deltas.append(d)
    return vs, deltas


def _resolve_order(n: int, order) -> tuple[int, ...]:
    if n < 1:
        raise ValueError("need at least one factor")
    if order is None:
        return tuple(range(n))
    order = tuple(int(i) for i in order)
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of the factor indices")
    return order


def _conjugator_block(axis: AxisAngle) -> tuple[list[Pulse], np.ndarray]:
    pulse = equatorial_conjugator(axis)
    if abs(pulse.theta) < ANGLE_PRUNE_TOL:
        return [], np.eye(2, dtype=complex)
    return [pulse], rotation_2x2(pulse.theta, pulse.phi)


def _addressed_chain(vs, order) -> tuple[list[Pulse], np.ndarray, np.ndarray]:
    """Eliminate factors order[0..n-2] against the last one.

    Returns (pulses, accumulated basis change P, remainder T) where the
    eliminated part realizes each relative factor as C^-1 Z C and
    T = V_last @ P^-1 is what the trailing pulses still have to produce.
    """
    last = vs[order[-1]]
    p = np.eye(2, dtype=complex)
    pulses: list[Pulse] = []
    for k in order[:-1]:
        a = p @ (last.conj().T @ vs[k]) @ p.conj().T
        ax = axis_angle(a)
        if ax.alpha < ANGLE_PRUNE_TOL:
            continue
        cpulses, cmat = _conjugator_block(ax)
        pulses.extend(cpulses)
        pulses.append(Pulse.addressed_z(k + 1, ax.alpha))
        p = cmat @ p
    return pulses, p, last @ p.conj().T


def _collective_pulse_from_equatorial(c: np.ndarray, tol: float = 1e-9) -> list[Pulse]:
    # Read the quaternion parts directly: testing the axis angle instead
    # would blow up the z roundoff residue when the rotation is tiny.
    w = 0.5 * (c[0, 0] + c[1, 1]).real
    vx = -0.5 * (c[0, 1] + c[1, 0]).imag
    vy = 0.5 * (c[1, 0] - c[0, 1]).real
    vz = 0.5 * (c[1, 1] - c[0, 0]).imag
    if abs(vz) > tol:
        raise ArithmeticError("expected an equatorial generator")
    h = math.hypot(vx, vy)
    alpha = 2.0 * math.atan2(h, w)
    if alpha < ANGLE_PRUNE_TOL:
        return []
    return [Pulse.collective(alpha, math.atan2(vy, vx))]


def compile_local_exact(factors, order=None) -> LocalCompileResult:
    """Compile a tensor product of single-qubit unitaries exactly.

    At most N+1 collective and N-1 addressed Z pulses; the sequence
    reproduces the SU(2)-normalized tensor product with no residual.
    """
    vs, deltas = _normalize_factors(factors)
    order = _resolve_order(len(vs), order)
    pulses, _, t = _addressed_chain(vs, order)
    if np.max(np.abs(t - np.eye(2))) > 1e-12:
        first, second = two_equatorial_split(t)
        for pulse in (first, second):
            if abs(pulse.theta) >= ANGLE_PRUNE_TOL:
                pulses.append(pulse)
    seq = PulseSequence(len(vs), tuple(pulses))
    return LocalCompileResult(seq, float(sum(deltas)), Residual())


def compile_local_mod_collective_z(factors, order=None) -> LocalCompileResult:
    """Compile up to one uniform Z rotation applied after the sequence.

    Same elimination as the exact mode, but the remainder is flattened to a
    single collective pulse by pushing its z component into the residual:
    at most N collective and N-1 addressed pulses.
    """
    vs, deltas = _normalize_factors(factors)
    order = _resolve_order(len(vs), order)
    pulses, _, t = _addressed_chain(vs, order)
    beta = _equatorializing_z_angle(t)
    pulses.extend(_collective_pulse_from_equatorial(zrot_2x2(beta) @ t))
    seq = PulseSequence(len(vs), tuple(pulses))
    residual = Residual("collective-z", (-beta,))
    return LocalCompileResult(seq, float(sum(deltas)), residual)


def compile_local_mod_independent_z(factors, order=None) -> LocalCompileResult:
    """Compile up to independent per-qubit Z rotations applied afterwards.

    The extra freedom lets consecutive eliminations share one basis-change
    pulse: each pair of relative factors is first dressed with Z rotations
    that make them commute, after which both reduce in the same conjugated
    frame.  Roughly ceil(N/2)+1 collective and N-1 addressed pulses.
    """
    vs, deltas = _normalize_factors(factors)
    n = len(vs)
    order = _resolve_order(n, order)
    phase = float(sum(deltas))
    if n == 1:
        beta = _equatorializing_z_angle(vs[0])
        pulses = _collective_pulse_from_equatorial(zrot_2x2(beta) @ vs[0])
        seq = PulseSequence(1, tuple(pulses))
        return LocalCompileResult(seq, phase, Residual("independent-z", (-beta,)))

    last = vs[order[-1]]
    last_inv = last.conj().T
    p = np.eye(2, dtype=complex)
    pulses: list[Pulse] = []
    dress = [0.0] * n  # Z angle folded into each eliminated factor, by position
    pos = 0
    while pos < n - 1:
        if pos + 1 < n - 1:
            i, j = order[pos], order[pos + 1]
            b1, b2 = commuting_z_pair(vs[i] @ last_inv, vs[j] @ last_inv)
            dress[pos], dress[pos + 1] = b1, b2
            mi = p @ (last_inv @ zrot_2x2(b1) @ vs[i]) @ p.conj().T
            mj = p @ (last_inv @ zrot_2x2(b2) @ vs[j]) @ p.conj().T
            sni, snj = _sin_axis_vector(mi), _sin_axis_vector(mj)
            ci = 0.5 * (mi[0, 0] + mi[1, 1]).real
            cj = 0.5 * (mj[0, 0] + mj[1, 1]).real
            ref_sn, ref_len = (sni, np.linalg.norm(sni)), float(np.linalg.norm(sni))
            if np.linalg.norm(snj) > ref_len:
                ref_sn = (snj, np.linalg.norm(snj))
                ref_len = float(np.linalg.norm(snj))
            if ref_len < 1e-12:
                axis_vec = np.array([0.0, 0.0, 1.0])
            else:
                axis_vec = ref_sn[0] / ref_sn[1]
            gamma_i = 2.0 * math.atan2(float(sni @ axis_vec), ci)
            gamma_j = 2.0 * math.atan2(float(snj @ axis_vec), cj)
            theta_ax = math.acos(min(1.0, max(-1.0, axis_vec[2])))
            phi_ax = math.atan2(axis_vec[1], axis_vec[0])
            cpulses, cmat = _conjugator_block(AxisAngle(0.0, theta_ax, phi_ax))
            check_i = cmat.conj().T @ zrot_2x2(gamma_i) @ cmat
            check_j = cmat.conj().T @ zrot_2x2(gamma_j) @ cmat
            if max(np.max(np.abs(check_i - mi)), np.max(np.abs(check_j - mj))) > 1e-8:
                raise ArithmeticError("paired elimination failed to close")
            pulses.extend(cpulses)
            if abs(gamma_i) >= ANGLE_PRUNE_TOL:
                pulses.append(Pulse.addressed_z(i + 1, gamma_i))
            if abs(gamma_j) >= ANGLE_PRUNE_TOL:
                pulses.append(Pulse.addressed_z(j + 1, gamma_j))
            p = cmat @ p
            pos += 2
        else:
            # odd equation count: the last relative factor gets its own frame
            k = order[pos]
            a = p @ (last_inv @ vs[k]) @ p.conj().T
            ax = axis_angle(a)
            if ax.alpha >= ANGLE_PRUNE_TOL:
                cpulses, cmat = _conjugator_block(ax)
                pulses.extend(cpulses)
                pulses.append(Pulse.addressed_z(k + 1, ax.alpha))
                p = cmat @ p
            pos += 1

    t = last @ p.conj().T
    beta_last = _equatorializing_z_angle(t)
    pulses.extend(_collective_pulse_from_equatorial(zrot_2x2(beta_last) @ t))
    residual = [0.0] * n
    residual[order[-1]] = -beta_last
    for position, k in enumerate(order[:-1]):
        residual[k] = -(beta_last + dress[position])
    seq = PulseSequence(n, tuple(pulses))
    return LocalCompileResult(seq, phase, Residual("independent-z", tuple(residual)))


_MODE_FUNCS = {
    MODE_EXACT: compile_local_exact,
    MODE_COLLECTIVE_Z: compile_local_mod_collective_z,
    MODE_INDEPENDENT_Z: compile_local_mod_independent_z,
}


def _group_factors(vs: list[np.ndarray]) -> list[list[int]]:
    groups: list[list[int]] = []
    for i, u in enumerate(vs):
        for members in groups:
            rep = vs[members[0]]
            overlap = 0.5 * np.trace(rep.conj().T @ u)
            scale = abs(overlap)
            if scale > 1e-12 and np.linalg.norm(u - (overlap / scale) * rep) < GROUP_TOL:
                members.append(i)
                break
        else:
            groups.append([i])
    return groups


def group_and_compile(
    factors,
    mode: str = MODE_EXACT,
    try_permutations: bool = True,
    force: bool = False,
) -> LocalCompileResult:
    """Group equal factors, search orderings, and compile with fewest pulses.

    Factors equal up to a global phase share one addressed channel: the
    compile runs on the distinct representatives and the addressed pulses
    fan back out to every member of the group.  All orderings of the
    distinct factors are tried (refused above 8 distinct unless force=True);
    ties in pulse count go to the lexicographically smallest permutation.
    """
    if mode not in _MODE_FUNCS:
        raise ValueError(f"unknown mode {mode!r}")
    raw = [np.asarray(u, dtype=complex) for u in factors]
    n = len(raw)
    groups = _group_factors([su2_normalize(u)[0] for u in raw])
    reps = [su2_normalize(raw[members[0]])[0] for members in groups]
    # phase-align every member against its group representative
    total_phase = 0.0
    for rep, members in zip(reps, groups):
        for i in members:
            overlap = 0.5 * np.trace(rep.conj().T @ raw[i])
            total_phase += cmath.phase(overlap)
    g = len(groups)
    if try_permutations and g > MAX_PERMUTATION_FACTORS and not force:
        raise ValueError(
            f"{g} distinct factors: permutation search would need {g}! compiles; pass force=True"
        )
    orders = itertools.permutations(range(g)) if try_permutations else [tuple(range(g))]

    best: tuple[int, tuple[int, ...], LocalCompileResult] | None = None
    for order in orders:
        grouped = _MODE_FUNCS[mode](reps, order)
        expanded = _fan_out(grouped, groups, n)
        key = (len(expanded.sequence), order)
        if best is None or key < (best[0], best[1]):
            best = (len(expanded.sequence), order, expanded)
    assert best is not None
    result = best[2]
    return LocalCompileResult(result.sequence, total_phase, result.residual)


def _fan_out(result: LocalCompileResult, groups: list[list[int]], n: int) -> LocalCompileResult:
    """Expand a compile over group representatives to the full register."""
    pulses: list[Pulse] = []
    for pulse in result.sequence:
        if pulse.kind == ADDRESSED_Z:
            for member in sorted(groups[pulse.qubit - 1]):
                pulses.append(Pulse.addressed_z(member + 1, pulse.theta))
        else:
            pulses.append(pulse)
    residual = result.residual
    if residual.kind == "independent-z":
        angles = [0.0] * n
        for gi, members in enumerate(groups):
            for member in members:
                angles[member] = residual.angles[gi]
        residual = Residual("independent-z", tuple(angles))
    return LocalCompileResult(PulseSequence(n, tuple(pulses)), 0.0, residual)


# ---------------------------------------------------------------------------
# named measurement-basis factors
# ---------------------------------------------------------------------------

_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
_BASIS_CHANGE = {
    "Z": np.eye(2, dtype=complex),
    "X": _HADAMARD.astype(complex),
    "Y": _HADAMARD @ np.diag([1.0, -1.0j]),
}


def measurement_basis_factors(bases: str) -> list[np.ndarray]:
    """Per-qubit rotations mapping X/Y/Z measurement onto the Z basis."""
    try:
        return [_BASIS_CHANGE[ch].copy() for ch in bases.upper()]
    except KeyError as exc:
        raise ValueError(f"unknown measurement basis {exc.args[0]!r}") from None

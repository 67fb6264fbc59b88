"""Local cyclic operations and the state shift they induce.

A unitary acting on subsystem B that commutes with the reduced state
rho_B leaves both marginals fixed while possibly moving the joint state.
This module builds such unitaries from the eigenspace structure of
rho_B, evaluates the induced shift

    d = sqrt( Tr(rho^2) - Tr(rho rho_f) ),   rho_f = (I (x) U) rho (I (x) U)^dag

through two independent routes (the direct trace form above and an
equivalent contraction of the correlation matrix), and maximizes d over
the commutant.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .bloch import BipartiteState, bloch_vector, decompose
from .errors import (
    ConsistencyError,
    DimensionError,
    NotCyclicError,
    OperatorError,
)
from .operators import (
    SIGMA_1,
    SIGMA_2,
    SIGMA_3,
    expi_hermitian,
    gell_mann_basis,
    is_unitary,
    tensor,
)

EPS_DEGENERATE = 1e-9
TOL_CYCLIC = 1e-9
# Radicands this far below zero are treated as rounding noise and clamped.
RADICAND_FLOOR = -1e-12
CROSS_CHECK_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CommutantStructure:
    """Eigenspace structure of a reduced state.

    ``blocks`` holds one entry per (merged) eigenspace as a pair of the
    representative eigenvalue and the tuple of eigenvector column
    indices into ``basis``.  Eigenvalues are ascending.
    """

    eigenvalues: np.ndarray
    basis: np.ndarray
    blocks: tuple

    @property
    def block_sizes(self):
        return tuple(len(idx) for _, idx in self.blocks)


@dataclass(frozen=True, eq=False)
class CyclicUnitary:
    """A unitary on subsystem B commuting with a reference reduced state."""

    matrix: np.ndarray
    structure: CommutantStructure
    block_unitaries: tuple
    reference_state_id: str

    @property
    def dim(self):
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class ShiftResult:
    """Outcome of a shift maximization.

    ``formula`` names the route that produced ``d`` ("direct" or
    "correlation"); ``cross_check_residual`` is the disagreement between
    the two routes evaluated at the returned unitary.  ``certified`` is
    False when the generic optimizer hit its budget without meeting the
    convergence criterion.
    """

    d: float
    formula: str
    method: str
    unitary: CyclicUnitary
    cross_check_residual: float
    restarts: int
    certified: bool
    params: dict


def commutant_basis(state, eps_deg=EPS_DEGENERATE):
    """Eigenspace structure of the state's B-side reduced matrix.

    Consecutive eigenvalues closer than ``eps_deg * max(1, lambda_max)``
    are merged into one degenerate block.  The commutant of rho_B is
    exactly the set of block unitaries in this eigenbasis.
    """
    w, v = np.linalg.eigh(state.rho_b)
    threshold = eps_deg * max(1.0, float(np.abs(w).max()))
    blocks = []
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] >= threshold:
            idx = tuple(range(start, i))
            blocks.append((float(w[start:i].mean()), idx))
            start = i
    w.setflags(write=False)
    v.setflags(write=False)
    return CommutantStructure(eigenvalues=w, basis=v, blocks=tuple(blocks))


def _assemble(structure, block_unitaries):
    nb = structure.basis.shape[0]
    b = np.zeros((nb, nb), dtype=complex)
    for (_, idx), wk in zip(structure.blocks, block_unitaries):
        b[np.ix_(idx, idx)] = wk
    v = structure.basis
    return v @ b @ v.conj().T


def make_cyclic(state, block_unitaries, *, structure=None, tol_unitary=1e-10,
                eps_deg=EPS_DEGENERATE):
    """Assemble a cyclic unitary from per-eigenspace blocks.

    Parameters
    ----------
    state : BipartiteState
        The state whose rho_B the result must commute with.
    block_unitaries : sequence of array_like
        One unitary per block of ``commutant_basis(state)``, in
        ascending-eigenvalue order, each of the block's size.

    Returns
    -------
    CyclicUnitary
    """
    if structure is None:
        structure = commutant_basis(state, eps_deg)
    blocks = structure.blocks
    if len(block_unitaries) != len(blocks):
        raise DimensionError(
            f"expected {len(blocks)} block unitaries, got {len(block_unitaries)}"
        )
    mats = []
    for (_, idx), wk in zip(blocks, block_unitaries):
        wk = np.asarray(wk, dtype=complex)
        s = len(idx)
        if wk.shape != (s, s):
            raise DimensionError(
                f"block of size {s} got unitary of shape {wk.shape}"
            )
        if not is_unitary(wk, tol_unitary):
            raise OperatorError("block matrix is not unitary within tolerance")
        mats.append(wk)
    u = _assemble(structure, mats)
    return CyclicUnitary(
        matrix=u,
        structure=structure,
        block_unitaries=tuple(mats),
        reference_state_id=state.state_id,
    )


def cyclic_from_matrix(state, u, *, tol_unitary=1e-10, tol_cyclic=TOL_CYCLIC,
                       eps_deg=EPS_DEGENERATE):
    """Wrap an explicit B-side unitary after verifying it is cyclic.

    The matrix must be unitary, commute with rho_B entrywise within
    ``tol_cyclic``, and be block diagonal in the eigenbasis of rho_B.
    A matrix that passes the commutator test but leaks between nearly
    degenerate unmerged eigenspaces is rejected.
    """
    u = np.asarray(u, dtype=complex)
    nb = state.dim_b
    if u.shape != (nb, nb):
        raise DimensionError(f"unitary shape {u.shape} does not match dim {nb}")
    if not is_unitary(u, tol_unitary):
        raise OperatorError("matrix is not unitary within tolerance")
    comm = np.abs(state.rho_b @ u - u @ state.rho_b).max()
    if comm > tol_cyclic:
        raise NotCyclicError(
            f"commutator with rho_B is {comm:.3e}, above tolerance {tol_cyclic:.1e}"
        )
    structure = commutant_basis(state, eps_deg)
    v = structure.basis
    in_eigenbasis = v.conj().T @ u @ v
    mats = [in_eigenbasis[np.ix_(idx, idx)] for _, idx in structure.blocks]
    recon = _assemble(structure, mats)
    leak = np.abs(recon - u).max()
    if leak > 1e-10:
        raise NotCyclicError(
            "matrix couples nearly degenerate eigenspaces of rho_B "
            f"(off-block leakage {leak:.3e})"
        )
    return CyclicUnitary(
        matrix=u,
        structure=structure,
        block_unitaries=tuple(mats),
        reference_state_id=state.state_id,
    )


def phase_cyclic(state, phi, axis=None, **kwargs):
    """Relative-phase cyclic unitary exp(i phi/2 u.sigma) for a qubit B.

    ``axis`` may be one of 'x', 'y', 'z', a 3-vector, or None to use the
    Bloch axis of rho_B (falling back to z when rho_B is maximally
    mixed).  Raises NotCyclicError when the axis is incompatible with a
    nondegenerate rho_B.
    """
    if state.dim_b != 2:
        raise DimensionError("phase_cyclic needs a qubit B subsystem")
    named = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}
    if axis is None:
        r_b = bloch_vector(state.rho_b, gell_mann_basis(2))
        nrm = np.linalg.norm(r_b)
        u_vec = r_b / nrm if nrm > 1e-9 else np.array(named["z"])
    elif isinstance(axis, str):
        if axis not in named:
            raise ValueError(f"axis must be one of 'x', 'y', 'z', got {axis!r}")
        u_vec = np.array(named[axis])
    else:
        u_vec = np.asarray(axis, dtype=float)
        if u_vec.shape != (3,) or np.linalg.norm(u_vec) == 0.0:
            raise ValueError("axis must be a nonzero 3-vector")
        u_vec = u_vec / np.linalg.norm(u_vec)
    h = u_vec[0] * SIGMA_1 + u_vec[1] * SIGMA_2 + u_vec[2] * SIGMA_3
    u = math.cos(phi / 2.0) * np.eye(2, dtype=complex) + 1j * math.sin(phi / 2.0) * h
    return cyclic_from_matrix(state, u, **kwargs)


def _unitary_of(u):
    if isinstance(u, CyclicUnitary):
        return u.matrix
    m = np.asarray(u, dtype=complex)
    if not is_unitary(m):
        raise OperatorError("matrix is not unitary within tolerance")
    return m


def apply_cyclic(state, u):
    """Final state (I (x) U) rho (I (x) U)^dag as a BipartiteState."""
    m = _unitary_of(u)
    full = tensor(np.eye(state.dim_a, dtype=complex), m)
    rho_f = full @ state.rho @ full.conj().T
    return BipartiteState(rho_f, state.dims)


def _shift_from_radicand(radicand):
    if radicand < RADICAND_FLOOR:
        raise ConsistencyError(
            f"shift radicand {radicand:.3e} is negative beyond rounding tolerance"
        )
    return min(math.sqrt(max(radicand, 0.0)), 1.0)


def shift_direct(state, u, *, tol_cyclic=TOL_CYCLIC):
    """Shift of the state under a cyclic unitary, from the trace form.

    d = sqrt(Tr(rho^2) - Tr(rho rho_f)), evaluated as the equivalent
    half squared Frobenius norm of rho - rho_f.  The difference form is
    a sum of squares, so it keeps absolute precision as d approaches
    zero, where the trace form loses everything to cancellation.

    Raises NotCyclicError when the unitary does not commute with this
    state's rho_B within ``tol_cyclic`` (the check is against the state
    passed here, not the unitary's reference state).
    """
    m = _unitary_of(u)
    if m.shape != (state.dim_b, state.dim_b):
        raise DimensionError(
            f"unitary dim {m.shape[0]} does not match B dim {state.dim_b}"
        )
    comm = np.abs(state.rho_b @ m - m @ state.rho_b).max()
    if comm > tol_cyclic:
        raise NotCyclicError(
            f"commutator with rho_B is {comm:.3e}, above tolerance {tol_cyclic:.1e}"
        )
    full = tensor(np.eye(state.dim_a, dtype=complex), m)
    rho_f = full @ state.rho @ full.conj().T
    diff = state.rho - rho_f
    return _shift_from_radicand(0.5 * np.vdot(diff, diff).real)


def conjugation_matrix(u, basis):
    """Expansion coefficients of conjugated generators.

    Returns the real matrix R with R[k, j] = Tr(g_k U g_j U^dag) / 2, so
    that U g_j U^dag = sum_k R[k, j] g_k.  R is orthogonal for any
    unitary U.
    """
    m = _unitary_of(u)
    n = basis.dim
    if m.shape != (n, n):
        raise DimensionError(f"unitary dim {m.shape[0]} does not match basis dim {n}")
    gs = np.stack(tuple(basis))
    conj = np.einsum("ab,jbc,dc->jad", m, gs, m.conj())
    return 0.5 * np.einsum("kab,jba->kj", gs, conj).real


def beta_final(form, u):
    """Correlation matrix after the cyclic map, from the rotation form.

    beta_f = beta R^T with R the conjugation matrix of U in the B-side
    generator basis.  The Frobenius norm of beta is preserved; a
    violation beyond 1e-10 raises ConsistencyError.
    """
    basis_b = gell_mann_basis(form.dim_b)
    r = conjugation_matrix(u, basis_b)
    beta_f = form.beta @ r.T
    drift = abs(np.linalg.norm(beta_f) - np.linalg.norm(form.beta))
    if drift > 1e-10:
        raise ConsistencyError(
            f"correlation norm drifted by {drift:.3e} under a unitary conjugation"
        )
    return beta_f


def _reduced_b_from_form(form):
    nb = form.dim_b
    cb = np.sqrt(nb * (nb - 1) / 2.0)
    rho_b = np.eye(nb, dtype=complex)
    for j, g in enumerate(gell_mann_basis(nb)):
        rho_b += cb * form.r_b[j] * g
    return rho_b / nb


def shift_correlation(form, u, *, tol_cyclic=TOL_CYCLIC):
    """Shift from the correlation-matrix contraction.

    d = sqrt( (NA-1)(NB-1)/(NA NB) * (|beta|^2 - sum_ij beta_ij beta_f_ij) ),
    evaluated as the equivalent half squared norm of beta - beta_f so
    the radicand stays exact as d approaches zero.  Agrees with
    shift_direct for every cyclic unitary.
    """
    m = _unitary_of(u)
    rho_b = _reduced_b_from_form(form)
    comm = np.abs(rho_b @ m - m @ rho_b).max()
    if comm > tol_cyclic:
        raise NotCyclicError(
            f"commutator with rho_B is {comm:.3e}, above tolerance {tol_cyclic:.1e}"
        )
    beta_f = beta_final(form, u)
    na, nb = form.dim_a, form.dim_b
    pref = (na - 1) * (nb - 1) / (na * nb)
    diff = form.beta - beta_f
    radicand = pref * 0.5 * float(np.sum(diff * diff))
    return _shift_from_radicand(radicand)


def _cross_matrix(u_vec):
    return np.array([
        [0.0, -u_vec[2], u_vec[1]],
        [u_vec[2], 0.0, -u_vec[0]],
        [-u_vec[1], u_vec[0], 0.0],
    ])


def _finalize(state, form, unit, d_value, formula, method, restarts, certified, params):
    # Residuals compare squared shifts: the square root amplifies float
    # noise without bound as d approaches zero, while the radicands
    # agree to absolute precision everywhere.
    d_dir = shift_direct(state, unit)
    d_cor = shift_correlation(form, unit)
    residual = abs(d_dir * d_dir - d_cor * d_cor)
    if residual >= CROSS_CHECK_TOL:
        raise ConsistencyError(
            f"direct and correlation shifts disagree by {residual:.3e} "
            "(squared) at the optimum"
        )
    anchor = d_dir if formula == "direct" else d_cor
    if abs(d_value * d_value - anchor * anchor) > 1e-10:
        raise ConsistencyError(
            f"optimized shift {d_value:.12g} does not match its own formula "
            f"re-evaluation {anchor:.12g}"
        )
    return ShiftResult(
        d=float(d_value),
        formula=formula,
        method=method,
        unitary=unit,
        cross_check_residual=float(residual),
        restarts=restarts,
        certified=certified,
        params=params,
    )


def _dmax_phase(state, form, structure):
    # Qubit B with nondegenerate rho_B: the commutant is the relative
    # phase family exp(i phi/2 u.sigma) about the Bloch axis u of rho_B,
    # and the correlation contraction is A + B cos(phi) + C sin(phi).
    mmat = form.beta.T @ form.beta
    nrm = np.linalg.norm(form.r_b)
    u_vec = form.r_b / nrm
    trace_m = float(np.trace(mmat))
    a_term = float(u_vec @ mmat @ u_vec)
    b_term = trace_m - a_term
    c_term = float(np.trace(mmat @ _cross_matrix(u_vec)))
    hyp = math.hypot(b_term, c_term)
    pref = (form.dim_a - 1) * (form.dim_b - 1) / (form.dim_a * form.dim_b)
    # When the whole phase family moves the state by no more than float
    # noise (product states, for one), the stationary angle is garbage;
    # report the identity as the honest argmax instead.
    if b_term + hyp <= 64.0 * np.finfo(float).eps * max(1.0, trace_m):
        unit = make_cyclic(state, [[[1.0]], [[1.0]]], structure=structure)
        return _finalize(
            state, form, unit, 0.0, "correlation", "phase-closed-form",
            restarts=0, certified=True,
            params={"phi": 0.0, "axis": [float(x) for x in u_vec]},
        )
    phi_star = math.atan2(c_term, b_term) + math.pi
    d_val = _shift_from_radicand(pref * (b_term + hyp))
    half = phi_star / 2.0
    candidates = []
    for sign in (1.0, -1.0):
        p0 = np.exp(-1j * sign * half)
        p1 = np.exp(1j * sign * half)
        unit = make_cyclic(state, [[[p0]], [[p1]]], structure=structure)
        candidates.append((shift_direct(state, unit), sign, unit))
    d_best, sign, unit = max(candidates, key=lambda t: t[0])
    return _finalize(
        state, form, unit, d_val, "correlation", "phase-closed-form",
        restarts=0, certified=True,
        params={"phi": sign * phi_star, "axis": [float(x) for x in u_vec]},
    )


def _dmax_rotation(state, form, structure):
    # Qubit B with rho_B = I/2: the commutant conjugations sweep all of
    # SO(3) on the correlation matrix, and the optimum is a rotation by
    # pi about the eigenvector of beta^T beta with smallest eigenvalue.
    mmat = form.beta.T @ form.beta
    evals, evecs = np.linalg.eigh(mmat)
    w_vec = evecs[:, 0]
    pref = (form.dim_a - 1) * (form.dim_b - 1) / (form.dim_a * form.dim_b)
    d_val = _shift_from_radicand(pref * 2.0 * float(evals[1] + evals[2]))
    h = w_vec[0] * SIGMA_1 + w_vec[1] * SIGMA_2 + w_vec[2] * SIGMA_3
    u = 1j * h  # exp(i pi/2 w.sigma)
    unit = cyclic_from_matrix(state, u)
    return _finalize(
        state, form, unit, d_val, "correlation", "rotation-closed-form",
        restarts=0, certified=True,
        params={"phi": math.pi, "axis": [float(x) for x in w_vec]},
    )


def _param_count(sizes):
    if all(s == 1 for s in sizes):
        return len(sizes) - 1
    return sum(s * s for s in sizes)


def _blocks_from_params(params, sizes):
    if all(s == 1 for s in sizes):
        phases = np.concatenate(([0.0], params))
        return [np.array([[np.exp(1j * t)]]) for t in phases]
    blocks = []
    pos = 0
    for s in sizes:
        h = np.zeros((s, s), dtype=complex)
        for i in range(s):
            h[i, i] = params[pos]
            pos += 1
        for i in range(s):
            for j in range(i + 1, s):
                re, im = params[pos], params[pos + 1]
                pos += 2
                h[i, j] = re + 1j * im
                h[j, i] = re - 1j * im
        blocks.append(expi_hermitian(h))
    return blocks


def _dmax_generic(state, form, structure, restarts, rng, max_iters, tol_conv=1e-10):
    sizes = structure.block_sizes
    nparams = _param_count(sizes)
    v = structure.basis
    eye_a = np.eye(state.dim_a, dtype=complex)
    rho = state.rho

    def radicand(params):
        b = np.zeros((state.dim_b, state.dim_b), dtype=complex)
        for (_, idx), wk in zip(structure.blocks, _blocks_from_params(params, sizes)):
            b[np.ix_(idx, idx)] = wk
        u = v @ b @ v.conj().T
        full = tensor(eye_a, u)
        rho_f = full @ rho @ full.conj().T
        diff = rho - rho_f
        return 0.5 * np.vdot(diff, diff).real

    def objective(params):
        return -radicand(params)

    options = {
        "xatol": 1e-11,
        "fatol": 1e-15,
        "maxiter": max_iters if max_iters is not None else 800 * max(nparams, 1),
        "maxfev": max_iters if max_iters is not None else 800 * max(nparams, 1),
    }
    best = None
    for _ in range(restarts):
        x0 = rng.uniform(-math.pi, math.pi, size=nparams)
        res = minimize(objective, x0, method="Nelder-Mead", options=options)
        if best is None or res.fun < best.fun:
            best = res
    # Polish until the shift stops improving.
    certified = bool(best.success)
    d_prev = math.sqrt(max(-best.fun, 0.0))
    for _ in range(8):
        res = minimize(objective, best.x, method="Nelder-Mead", options=options)
        if res.fun < best.fun:
            best = res
        d_now = math.sqrt(max(-best.fun, 0.0))
        if d_now - d_prev < tol_conv:
            certified = True
            break
        d_prev = d_now
    else:
        certified = False
    blocks = _blocks_from_params(best.x, sizes)
    unit = make_cyclic(state, blocks, structure=structure)
    d_val = _shift_from_radicand(float(-best.fun))
    return _finalize(
        state, form, unit, d_val, "direct", "multistart",
        restarts=restarts, certified=certified,
        params={"block_params": [float(x) for x in best.x]},
    )


def d_max(state, *, restarts=16, method="auto", rng=None, eps_deg=EPS_DEGENERATE,
          max_iters=None):
    """Maximize the shift over all cyclic unitaries on subsystem B.

    Parameters
    ----------
    state : BipartiteState
    restarts : int
        Random restarts for the generic optimizer (ignored by the
        closed forms).
    method : {'auto', 'generic'}
        'auto' dispatches a qubit B subsystem to a closed form (phase
        family for nondegenerate rho_B, rotation form for rho_B = I/2)
        and anything else to the multi-start optimizer.  'generic'
        forces the optimizer.
    rng : int, numpy Generator or None
        Seed material for the optimizer restarts.

    Returns
    -------
    ShiftResult
    """
    if method not in ("auto", "generic"):
        raise ValueError(f"method must be 'auto' or 'generic', got {method!r}")
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    form = decompose(state)
    structure = commutant_basis(state, eps_deg)
    if method == "auto" and state.dim_b == 2:
        if len(structure.blocks) == 2:
            return _dmax_phase(state, form, structure)
        return _dmax_rotation(state, form, structure)
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    return _dmax_generic(state, form, structure, restarts, gen, max_iters)

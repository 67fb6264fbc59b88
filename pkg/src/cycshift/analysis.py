"""State classification built on the maximized shift.

The maximized shift separates the classical from the entangled regime
for two qubits: any convex mixture of product states has d_max at most
1/sqrt(2), so exceeding that bound certifies entanglement.  The partial
transpose test complements the bound (exact for 2x2 and 2x3, sufficient
elsewhere), and a correlation matrix of the outer-product form
alpha * rA rB^T pins d_max to zero regardless of alpha.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from .cyclic import d_max
from .bloch import decompose
from .errors import DimensionError, NotAStateError

SEPARABLE_BOUND = 1.0 / math.sqrt(2.0)
TOL_BOUND = 1e-9
PPT_EIG_FLOOR = -1e-10
OUTER_FIT_TOL = 1e-8


def partial_transpose(rho, dims):
    """Partial transpose on subsystem B."""
    da, db = int(dims[0]), int(dims[1])
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (da * db, da * db):
        raise DimensionError(
            f"operator shape {rho.shape} does not match dims ({da}, {db})"
        )
    return rho.reshape(da, db, da, db).transpose(0, 3, 2, 1).reshape(rho.shape)


def ppt_test(state):
    """Minimum eigenvalue of the partial transpose and the verdict.

    Returns (min_eigenvalue, entangled).  ``entangled`` is True when the
    minimum eigenvalue falls below -1e-10.  A negative partial transpose
    certifies entanglement in any dimensions; positivity is conclusive
    for separability only on 2x2 and 2x3 systems.
    """
    pt = partial_transpose(state.rho, state.dims)
    w = np.linalg.eigvalsh((pt + pt.conj().T) / 2.0)
    min_eig = float(w.min())
    return min_eig, min_eig < PPT_EIG_FLOOR


def _outer_product_fit(form, tol=OUTER_FIT_TOL):
    """Best fit of beta to alpha * rA rB^T, clamped to alpha in [0, 1].

    Returns (alpha, fits) where ``fits`` is True when the residual is
    within ``tol`` entrywise.  When either Bloch vector vanishes the
    outer product is zero, so only beta = 0 fits.
    """
    r_a, r_b, beta = form.r_a, form.r_b, form.beta
    na2 = float(r_a @ r_a)
    nb2 = float(r_b @ r_b)
    if na2 * nb2 < 1e-24:
        return 0.0, bool(np.abs(beta).max() <= tol)
    alpha = float(r_a @ beta @ r_b) / (na2 * nb2)
    alpha = min(max(alpha, 0.0), 1.0)
    residual = np.abs(beta - alpha * np.outer(r_a, r_b)).max()
    return alpha, bool(residual <= tol)


@dataclass(frozen=True)
class DetectionReport:
    """Classification summary for one state.

    ``classification`` is one of 'entangled-certified', 'product-like'
    and 'classically-correlated-compatible', checked in that order of
    precedence.  ``gisin_bmax`` is populated for pure two-qubit states
    only.  ``bound_violated`` refers to the two-qubit separability bound
    d_max <= 1/sqrt(2) and is always False on other dimensions.
    """

    d_max: float
    bound_violated: bool
    ppt_negative: bool
    min_pt_eigenvalue: float
    gisin_bmax: float | None
    theorem_class: bool
    classification: str

    def to_json_dict(self):
        return asdict(self)


def detect(state, *, restarts=16, rng=None, tol_bound=TOL_BOUND):
    """Run the full detection battery on a state.

    Computes the maximized shift, the separability-bound comparison, the
    partial transpose test and the outer-product classification, and
    combines them into a DetectionReport.
    """
    result = d_max(state, restarts=restarts, rng=rng)
    min_eig, ppt_negative = ppt_test(state)
    form = decompose(state)
    _, theorem_class = _outer_product_fit(form)
    two_qubit = state.dims == (2, 2)
    bound_violated = bool(two_qubit and result.d > SEPARABLE_BOUND + tol_bound)
    if bound_violated or ppt_negative:
        classification = "entangled-certified"
    elif theorem_class:
        classification = "product-like"
    else:
        classification = "classically-correlated-compatible"
    gisin = None
    if two_qubit and abs(state.purity() - 1.0) <= 1e-9:
        gisin = 2.0 * math.sqrt(1.0 + result.d ** 2)
    return DetectionReport(
        d_max=float(result.d),
        bound_violated=bound_violated,
        ppt_negative=ppt_negative,
        min_pt_eigenvalue=min_eig,
        gisin_bmax=gisin,
        theorem_class=theorem_class,
        classification=classification,
    )


def gisin_bmax(state, *, restarts=16, rng=None):
    """Largest CHSH value reachable with local filters on a pure state.

    For a pure two-qubit state this equals 2 sqrt(1 + d_max^2), tying
    the maximal Bell violation to the maximized shift.  Mixed or
    non-qubit input is outside the relation's domain and raises
    NotAStateError / DimensionError.
    """
    if state.dims != (2, 2):
        raise DimensionError(f"gisin_bmax needs a two-qubit state, got dims {state.dims}")
    purity = state.purity()
    if abs(purity - 1.0) > 1e-9:
        raise NotAStateError(
            f"gisin_bmax needs a pure state, got purity {purity:.12g}"
        )
    result = d_max(state, restarts=restarts, rng=rng)
    return 2.0 * math.sqrt(1.0 + result.d ** 2)

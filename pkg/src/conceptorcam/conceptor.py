"""Conceptor learning and Boolean algebra over weighted channel evidence.

A conceptor is a symmetric matrix with spectrum in [0, 1] that softly
projects state vectors onto the dominant correlation directions of the
evidence it was learned from. The aperture steers how permissive that
projection is: large apertures admit weak directions, aperture zero keeps
only the exact range of the correlation via the pseudo-inverse.

Learning is closed-form. For evidence Z with column correlation
R = correlation(Z) and aperture a > 0 the conceptor is

    C = R @ inv(R + a**-2 * I)

which is the unique minimizer of the synchronization loss

    (1/K) * ||Z - C @ Z||_F**2 + a**-2 * ||C||_F**2.

The intra-channel reconstruction variants score a candidate matrix on how
well each row of the evidence is rebuilt from all other rows; their closed
form only rescales the target by lam = M / (M - 1), so the loss landscape
keeps the same unique minimizer lam * C.
"""

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    SYMMETRY_TOL,
    as_matrix,
    correlation,
    frobenius_sq,
    pseudo_inverse,
    require_symmetric,
    ridge_inverse_apply,
    sym_eigenvalues,
)

# Tolerated spectral overshoot outside [0, 1] before construction fails.
SPECTRUM_TOL = 1e-8


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class EvidenceMatrix:
    """M-by-K matrix of weighted channel columns plus the spatial grid shape.

    Column k is channel k flattened row-major from an h-by-w grid, so
    h * w must equal M. The spatial shape is carried so saliency maps can
    be folded back onto the grid after synchronization.
    """

    matrix: np.ndarray
    spatial: tuple

    def __post_init__(self):
        m = as_matrix(self.matrix, "evidence matrix")
        h, w = self.spatial
        if h < 1 or w < 1 or h * w != m.shape[0]:
            raise ValueError(
                f"spatial shape {self.spatial} does not fold {m.shape[0]} rows"
            )
        object.__setattr__(self, "matrix", _freeze(m))
        object.__setattr__(self, "spatial", (int(h), int(w)))

    @property
    def num_channels(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True, eq=False)
class Conceptor:
    """Symmetric matrix with spectrum in [0, 1] plus the aperture it encodes.

    Instances are immutable; the wrapped array is marked read-only. The
    optional complement backlink is set by negate() so that negating twice
    hands back the original matrix bit-for-bit, keeping Boolean NOT an exact
    involution under floating point.
    """

    matrix: np.ndarray
    aperture: float
    complement_of: "Conceptor | None" = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self):
        m = as_matrix(self.matrix, "conceptor matrix")
        require_symmetric(m, name="conceptor matrix")
        a = float(self.aperture)
        if not np.isfinite(a) or a < 0:
            raise ValueError(f"aperture must be a nonnegative real, got {self.aperture!r}")
        spectrum = sym_eigenvalues(m)
        if spectrum[0] < -SPECTRUM_TOL or spectrum[-1] > 1.0 + SPECTRUM_TOL:
            raise ValueError(
                "conceptor spectrum escapes [0, 1]: "
                f"min {spectrum[0]:.3e}, max {spectrum[-1]:.3e}"
            )
        object.__setattr__(self, "matrix", _freeze(m))
        object.__setattr__(self, "aperture", a)

    @property
    def order(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return sym_eigenvalues(self.matrix)


def _evidence_array(evidence) -> np.ndarray:
    if isinstance(evidence, EvidenceMatrix):
        return evidence.matrix
    return as_matrix(evidence, "evidence")


def learn_conceptor(evidence, aperture: float) -> Conceptor:
    """Closed-form conceptor for the given evidence at the given aperture.

    Positive aperture applies the ridge route; aperture zero follows the
    zero-ridge convention and returns R @ pinv(R), the orthogonal projector
    onto the range of the evidence correlation.
    """
    z = _evidence_array(evidence)
    a = float(aperture)
    if not np.isfinite(a) or a < 0:
        raise ValueError(f"aperture must be a nonnegative real, got {aperture!r}")
    corr = correlation(z)
    if a == 0.0:
        c = corr @ pseudo_inverse(corr)
        c = (c + c.T) / 2.0
    else:
        c = ridge_inverse_apply(corr, a)
    return Conceptor(matrix=c, aperture=a)


def synchronization_loss(matrix, evidence, aperture: float) -> float:
    """Ridge-regularized reconstruction loss of any square matrix on evidence.

    (1/K) * ||Z - C @ Z||_F**2 + aperture**-2 * ||C||_F**2. Defined for any
    candidate matrix, which is what lets optimality be probed by perturbing
    a learned conceptor in arbitrary directions.
    """
    c = as_matrix(matrix, "candidate matrix")
    z = _evidence_array(evidence)
    if c.shape[0] != c.shape[1] or c.shape[0] != z.shape[0]:
        raise ValueError(
            f"candidate shape {c.shape} does not act on evidence with {z.shape[0]} rows"
        )
    a = float(aperture)
    if not np.isfinite(a) or a <= 0:
        raise ValueError(f"loss requires a positive aperture, got {aperture!r}")
    k = z.shape[1]
    return frobenius_sq(z - c @ z) / k + a ** -2.0 * frobenius_sq(c)


def conceptor_loss(conceptor: Conceptor, evidence) -> float:
    """Synchronization loss of a conceptor on evidence at its own aperture."""
    return synchronization_loss(conceptor.matrix, evidence, conceptor.aperture)


def negate(conceptor: Conceptor) -> Conceptor:
    """Boolean NOT: admit exactly the directions the input suppresses.

    Returns I - C at the same aperture. Negating a negation returns the
    original conceptor object, so the involution holds exactly rather than
    up to the rounding of a second elementwise subtraction.
    """
    if conceptor.complement_of is not None:
        return conceptor.complement_of
    flipped = np.eye(conceptor.order) - conceptor.matrix
    return Conceptor(matrix=flipped, aperture=conceptor.aperture,
                     complement_of=conceptor)


def _lam(rows: int) -> float:
    if rows < 2:
        raise ValueError("intra-channel reconstruction needs at least 2 rows")
    return rows / (rows - 1.0)


def intra_reconstruction_loss(matrix, evidence, aperture: float) -> float:
    """Expanded intra-channel reconstruction loss of a candidate matrix.

    Each evidence row must be rebuilt from all the other rows; summing the
    masked-row objectives collapses to the single closed form

        (1/K) * ||lam * Z - C @ Z||_F**2 + aperture**-2 * ||C||_F**2

    with lam = M / (M - 1), which this evaluates directly.
    """
    c = as_matrix(matrix, "candidate matrix")
    z = _evidence_array(evidence)
    if c.shape[0] != c.shape[1] or c.shape[0] != z.shape[0]:
        raise ValueError(
            f"candidate shape {c.shape} does not act on evidence with {z.shape[0]} rows"
        )
    a = float(aperture)
    if not np.isfinite(a) or a <= 0:
        raise ValueError(f"loss requires a positive aperture, got {aperture!r}")
    lam = _lam(z.shape[0])
    k = z.shape[1]
    return frobenius_sq(lam * z - c @ z) / k + a ** -2.0 * frobenius_sq(c)


def intra_reconstruction_gradient(matrix, evidence, aperture: float) -> np.ndarray:
    """Gradient of intra_reconstruction_loss in the candidate matrix.

    Closed form: -2 * lam * R + 2 * C @ (R + aperture**-2 * I) with
    R = correlation(Z). Zero exactly at lam times the learned conceptor.
    """
    c = as_matrix(matrix, "candidate matrix")
    z = _evidence_array(evidence)
    if c.shape[0] != c.shape[1] or c.shape[0] != z.shape[0]:
        raise ValueError(
            f"candidate shape {c.shape} does not act on evidence with {z.shape[0]} rows"
        )
    a = float(aperture)
    if not np.isfinite(a) or a <= 0:
        raise ValueError(f"gradient requires a positive aperture, got {aperture!r}")
    lam = _lam(z.shape[0])
    r = correlation(z)
    ridge = r + a ** -2.0 * np.eye(r.shape[0])
    return -2.0 * lam * r + 2.0 * c @ ridge


def intra_reconstruction_minimizer(evidence, aperture: float) -> np.ndarray:
    """Closed-form minimizer of the intra-channel loss: lam * learn_conceptor."""
    z = _evidence_array(evidence)
    lam = _lam(z.shape[0])
    return lam * learn_conceptor(z, aperture).matrix

"""Analytic self-checks for the conceptor math.

Each check probes a closed-form claim with randomized instances and reports
a pass/fail plus the worst observed slack. The gradient-descent check uses
a plain fixed-step loop (step 1e-2, at most 10000 iterations, stopping once
the gradient norm falls below 1e-8); instances are drawn with apertures in
[0.5, 2] and unit-scale evidence so that step size provably contracts.
"""

from dataclasses import dataclass

import numpy as np

from .conceptor import (
    intra_reconstruction_gradient,
    intra_reconstruction_loss,
    learn_conceptor,
    negate,
    synchronization_loss,
)
from .linalg import correlation

GD_STEP = 1e-2
GD_MAX_ITERATIONS = 10_000
GD_TOLERANCE = 1e-8


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def minimize_intra_loss(evidence, aperture: float, rng,
                        step: float = GD_STEP,
                        max_iterations: int = GD_MAX_ITERATIONS,
                        tolerance: float = GD_TOLERANCE) -> np.ndarray:
    """Fixed-step gradient descent on the intra-channel reconstruction loss.

    Starts from a small random matrix and walks the analytic gradient until
    its Frobenius norm drops below ``tolerance`` or the iteration budget is
    spent. The loss is a strictly convex quadratic, so with a sane step this
    converges to its unique minimizer.
    """
    z = np.asarray(evidence, dtype=np.float64)
    candidate = 0.1 * rng.standard_normal((z.shape[0], z.shape[0]))
    for _ in range(max_iterations):
        grad = intra_reconstruction_gradient(candidate, z, aperture)
        if np.linalg.norm(grad) < tolerance:
            break
        candidate = candidate - step * grad
    return candidate


def _random_evidence(rng, rows: int, cols: int) -> np.ndarray:
    return rng.uniform(-1.0, 1.0, size=(rows, cols))


def check_conceptor_optimality(rng, instances: int = 100,
                               perturbations: int = 50,
                               radius: float = 1e-3,
                               slack: float = 1e-12) -> CheckResult:
    """Learned conceptors sit at a loss minimum under random perturbation."""
    worst = np.inf
    for _ in range(instances):
        m = int(rng.integers(2, 13))
        k = int(rng.integers(1, 13))
        z = _random_evidence(rng, m, k)
        # uniform over (0, 2]: flip the half-open [0, 2) draw
        aperture = 2.0 - float(rng.uniform(0.0, 2.0))
        c = learn_conceptor(z, aperture).matrix
        base = synchronization_loss(c, z, aperture)
        for _ in range(perturbations):
            delta = rng.standard_normal((m, m))
            delta *= radius / np.linalg.norm(delta)
            margin = synchronization_loss(c + delta, z, aperture) - base
            worst = min(worst, margin)
            if margin < -slack:
                return CheckResult(
                    name="conceptor-optimality",
                    passed=False,
                    detail=f"perturbation lowered the loss by {-margin:.3e}",
                )
    return CheckResult(
        name="conceptor-optimality",
        passed=True,
        detail=f"{instances} instances x {perturbations} perturbations, "
               f"smallest margin {worst:.3e}",
    )


def check_intra_minimizer(rng, sizes=range(2, 9), tolerance: float = 1e-5) -> CheckResult:
    """Gradient descent on the intra-channel loss lands on lam * conceptor."""
    worst = 0.0
    for m in sizes:
        k = int(rng.integers(1, 11))
        z = _random_evidence(rng, m, k)
        aperture = float(rng.uniform(0.5, 2.0))
        lam = m / (m - 1.0)
        descended = minimize_intra_loss(z, aperture, rng)
        closed_form = lam * learn_conceptor(z, aperture).matrix
        gap = float(np.max(np.abs(descended - closed_form)))
        worst = max(worst, gap)
        if gap > tolerance:
            return CheckResult(
                name="intra-reconstruction-minimizer",
                passed=False,
                detail=f"M={m}: descent disagrees with the closed form by {gap:.3e}",
            )
    return CheckResult(
        name="intra-reconstruction-minimizer",
        passed=True,
        detail=f"M in {{{min(sizes)}..{max(sizes)}}}, "
               f"largest elementwise gap {worst:.3e}",
    )


def check_intra_gradient(rng, instances: int = 50, step: float = 1e-5,
                         tolerance: float = 1e-5) -> CheckResult:
    """The analytic intra-loss gradient matches central finite differences."""
    worst = 0.0
    for _ in range(instances):
        m = int(rng.integers(2, 7))
        k = int(rng.integers(1, 9))
        z = _random_evidence(rng, m, k)
        aperture = float(rng.uniform(0.5, 2.0))
        candidate = rng.standard_normal((m, m))
        analytic = intra_reconstruction_gradient(candidate, z, aperture)
        numeric = np.zeros_like(analytic)
        for i in range(m):
            for j in range(m):
                bump = np.zeros((m, m))
                bump[i, j] = step
                plus = intra_reconstruction_loss(candidate + bump, z, aperture)
                minus = intra_reconstruction_loss(candidate - bump, z, aperture)
                numeric[i, j] = (plus - minus) / (2.0 * step)
        relative = (np.linalg.norm(numeric - analytic)
                    / max(np.linalg.norm(analytic), 1e-12))
        worst = max(worst, relative)
        if relative > tolerance:
            return CheckResult(
                name="intra-gradient-finite-difference",
                passed=False,
                detail=f"relative disagreement {relative:.3e}",
            )
    return CheckResult(
        name="intra-gradient-finite-difference",
        passed=True,
        detail=f"{instances} instances, worst relative gap {worst:.3e}",
    )


def check_not_identity(rng, instances: int = 100,
                       tolerance: float = 1e-8) -> CheckResult:
    """Boolean NOT matches its inverse-correlation closed form and involutes.

    For invertible correlation R the complement of the learned conceptor
    must equal inv(R) @ inv(inv(R) + aperture**2 * I), and negating twice
    must hand back the original matrix bit-for-bit.
    """
    worst = 0.0
    for _ in range(instances):
        m = int(rng.integers(2, 9))
        # Full-rank correlation via a random orthogonal basis and a spectrum
        # bounded away from zero: with K = m columns, correlation(z) is
        # q @ diag(spectrum) @ q.T.
        q, _ = np.linalg.qr(rng.standard_normal((m, m)))
        spectrum = rng.uniform(0.1, 3.0, size=m)
        z = (q * np.sqrt(m * spectrum)) @ q.T
        aperture = float(rng.uniform(0.5, 2.0))
        conceptor = learn_conceptor(z, aperture)
        direct = np.eye(m) - conceptor.matrix
        r_inv = np.linalg.inv(correlation(z))
        closed = r_inv @ np.linalg.inv(r_inv + aperture ** 2.0 * np.eye(m))
        gap = float(np.max(np.abs(direct - closed)))
        worst = max(worst, gap)
        if gap > tolerance:
            return CheckResult(
                name="boolean-not-identity",
                passed=False,
                detail=f"closed form disagrees by {gap:.3e}",
            )
        twice = negate(negate(conceptor))
        if not np.array_equal(twice.matrix, conceptor.matrix):
            return CheckResult(
                name="boolean-not-identity",
                passed=False,
                detail="double negation is not bit-exact",
            )
    return CheckResult(
        name="boolean-not-identity",
        passed=True,
        detail=f"{instances} instances, worst closed-form gap {worst:.3e}, "
               f"involution exact",
    )


def check_zero_aperture_projector(rng, instances: int = 50,
                                  tolerance: float = 1e-8) -> CheckResult:
    """Aperture-zero conceptors are idempotent projectors onto the evidence range."""
    worst = 0.0
    for _ in range(instances):
        m = int(rng.integers(2, 9))
        k = int(rng.integers(1, m + 1))
        z = _random_evidence(rng, m, k)
        c = learn_conceptor(z, 0.0).matrix
        gap = float(np.max(np.abs(c @ c - c)))
        worst = max(worst, gap)
        if gap > tolerance:
            return CheckResult(
                name="zero-aperture-projector",
                passed=False,
                detail=f"projector fails idempotence by {gap:.3e}",
            )
    return CheckResult(
        name="zero-aperture-projector",
        passed=True,
        detail=f"{instances} instances, worst idempotence gap {worst:.3e}",
    )


def run_all_checks(seed: int = 0):
    """Run the whole suite on one seeded generator; returns the results."""
    rng = np.random.default_rng(seed)
    return [
        check_conceptor_optimality(rng),
        check_intra_minimizer(rng),
        check_intra_gradient(rng),
        check_not_identity(rng),
        check_zero_aperture_projector(rng),
    ]

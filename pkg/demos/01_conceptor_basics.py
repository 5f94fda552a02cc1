"""Conceptors from the ground up.

A conceptor is a symmetric matrix with eigenvalues in [0, 1] that softly
projects vectors onto the dominant correlation directions of the data it
was learned from. This walk-through learns one from random evidence,
inspects its spectrum, shows that the closed form really is the loss
minimizer, and finishes with the boolean NOT.

Run: python3 demos/01_conceptor_basics.py
"""

import numpy as np

import conceptorcam as cc

rng = np.random.default_rng(42)

# -- 1. learn a conceptor from evidence --------------------------------------
# Evidence is an M x K matrix: M state dimensions observed K times. The
# learned matrix is R (R + aperture^-2 I)^-1 with R the correlation of the
# rows over observations.

evidence = rng.standard_normal((6, 40)) * np.linspace(2.0, 0.1, 6)[:, None]
conceptor = cc.learn_conceptor(evidence, aperture=1.0)

print("conceptor order:", conceptor.order)
print("spectrum (all inside [0, 1]):")
print(np.round(cc.sym_eigenvalues(conceptor.matrix), 4))

# Strong directions (large correlation) get eigenvalues near 1, weak ones
# fall toward 0. The aperture controls where the cut happens.

for aperture in (0.25, 1.0, 4.0):
    spectrum = cc.sym_eigenvalues(cc.learn_conceptor(evidence, aperture).matrix)
    print(f"aperture {aperture:>4}: top {spectrum[-1]:.3f}, bottom {spectrum[0]:.3f}")

# -- 2. the closed form minimizes the synchronization loss -------------------
# Any other matrix of the same shape pays a higher loss on the evidence.

base = cc.conceptor_loss(conceptor, evidence)
rivals = []
for _ in range(200):
    delta = rng.standard_normal(conceptor.matrix.shape)
    delta *= 1e-2 / np.linalg.norm(delta)
    rivals.append(cc.synchronization_loss(conceptor.matrix + delta,
                                          evidence, conceptor.aperture))
print(f"\nloss at the learned matrix: {base:.6f}")
print(f"best of 200 perturbed rivals: {min(rivals):.6f} (higher)")

# -- 3. the same minimizer, reached by gradient descent ----------------------
# The row-masked reconstruction loss (rebuild every evidence row from the
# others) has its minimum at lam * C with lam = M / (M - 1). Fixed-step
# descent on the analytic gradient finds it.

small = rng.uniform(-1.0, 1.0, size=(4, 9))
descended = cc.minimize_intra_loss(small, 1.0, rng)
closed = cc.intra_reconstruction_minimizer(small, 1.0)
print("\ngradient descent vs closed form, largest gap:",
      f"{np.max(np.abs(descended - closed)):.2e}")

# -- 4. boolean NOT -----------------------------------------------------------
# negate() admits exactly the directions the original suppresses, and
# negating twice hands back the original object, bit for bit.

flipped = cc.negate(conceptor)
print("\nNOT spectrum:", np.round(cc.sym_eigenvalues(flipped.matrix), 4))
restored = cc.negate(flipped)
print("double negation exact:",
      np.array_equal(restored.matrix, conceptor.matrix))

# -- 5. aperture zero: a hard projector ---------------------------------------
# Without the ridge term the closed form falls back to the pseudo-inverse
# and the result is idempotent: it projects instead of shrinking.

flat = rng.standard_normal((5, 3))  # rank-deficient correlation on purpose
projector = cc.learn_conceptor(flat, 0.0).matrix
print("\nprojector idempotency gap:",
      f"{np.max(np.abs(projector @ projector - projector)):.2e}")
print("projector spectrum:", np.round(cc.sym_eigenvalues(projector), 6))

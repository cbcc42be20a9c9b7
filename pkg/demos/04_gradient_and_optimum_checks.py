"""Numerical witnesses for the training math.

First: the hand-derived backpropagation agrees with central finite
differences on both adversarial losses. Second: the discriminator's
pointwise optimum has a closed form, confirmed by ternary search on the
objective, including the weighted variant.
"""

import numpy as np

from matchgan import nn

rng = np.random.default_rng(0)

# --- gradients vs finite differences ---------------------------------------
gen = nn.init_mlp((4, 3, 1), rng)
disc = nn.init_mlp((5, 3, 1), rng)
for m in (gen, disc):  # move off the zeroed output layer for a generic point
    m.weights[-1] = rng.uniform(-0.5, 0.5, size=m.weights[-1].shape)
    m.biases[-1] = rng.uniform(-0.5, 0.5, size=m.biases[-1].shape)
X = rng.random((6, 4))

loss, grads = nn.generator_backward(gen, disc, X)
h = 1e-5
w = gen.weights[0]
analytic = grads[0][0][0, 0]
w[0, 0] += h
up = nn.generator_loss(nn.forward_batch(disc, np.hstack([X, nn.forward_batch(gen, X)[:, None]])))
w[0, 0] -= 2 * h
down = nn.generator_loss(nn.forward_batch(disc, np.hstack([X, nn.forward_batch(gen, X)[:, None]])))
w[0, 0] += h
numeric = (up - down) / (2 * h)
print("generator loss gradient, one weight:")
print(f"  analytic {analytic:+.10f}")
print(f"  numeric  {numeric:+.10f}")
print(f"  |difference| {abs(analytic - numeric):.2e}")

# --- closed-form pointwise optimum vs search --------------------------------
print("\npointwise discriminator optimum (closed form vs ternary search):")
dist = nn.DiscreteJointDistribution(
    points=["low/low", "high/high", "mixed"],
    p_real=[0.6, 0.3, 0.1],
    p_generated=[0.2, 0.3, 0.5],
)
for weight in (0.5, 1.0, 2.0):
    pairs = nn.optimal_discriminator_check(dist, weight)
    print(f"  weight {weight}:")
    for point, (closed, numeric) in zip(dist.points, pairs):
        print(f"    {point:>9}: closed {closed:.8f}  search {numeric:.8f}  gap {abs(closed-numeric):.1e}")

print("\nwhere real and generated mass agree, the optimum is exactly 1/2:")
dist_eq = nn.DiscreteJointDistribution(points=[0], p_real=[1.0], p_generated=[1.0])
closed, numeric = nn.optimal_discriminator_check(dist_eq, 1.0)[0]
print(f"  closed {closed}, search {numeric:.8f}")

# Tour of the scalar generalized hamming distance g(a,b) = a + b - 2ab.
# Run after `pip install -e .` from the repository root.

import numpy as np

from ghne import analytic_bias, fuzziness, ghd, ghd_fold

# on {0,1} it is plain XOR
print("ghd(0,0) =", ghd(0.0, 0.0))
print("ghd(0,1) =", ghd(0.0, 1.0))
print("ghd(1,1) =", ghd(1.0, 1.0))

# the three special elements: 0 identity, 1 negation, 0.5 absorbing
x = 0.37
print("ghd(x,0)  =", ghd(x, 0.0), " (x back)")
print("ghd(1,x)  =", ghd(1.0, x), " (1-x)")
print("ghd(0.5,x)=", ghd(0.5, x), " (always 0.5)")

# the identities are exact in float64, not just close; the implementation
# computes a + b*(1 - 2a) so the special slots short-circuit bitwise
xs = np.random.default_rng(0).uniform(-10, 10, 5)
print("ghd(xs,0) == xs:", np.array_equal(ghd(xs, np.zeros(5)), xs))
print("ghd(0.5,xs) == 0.5:", np.all(ghd(np.full(5, 0.5), xs) == 0.5))

# conjugate to multiplication: t(x) = 1 - 2x turns ghd into a product,
# which is where commutativity and associativity come from
a, b = 0.2, 0.7
print("t(ghd(a,b)) =", 1 - 2 * ghd(a, b))
print("t(a)*t(b)   =", (1 - 2 * a) * (1 - 2 * b))

# iterated ghd over a tuple; 0.5 anywhere absorbs the whole fold
print("fold(0.1,0.9,0.4) =", ghd_fold([0.1, 0.9, 0.4]))
print("fold(0.1,0.5,0.4) =", ghd_fold([0.1, 0.5, 0.4]))

# a neuron computing sum_i ghd(w_i, x_i) equals w.x scaled and shifted;
# the shift is the analytic bias, no bias training needed
rng = np.random.default_rng(1)
w = rng.uniform(-1, 1, 8)
v = rng.uniform(-1, 1, 8)
lhs = ghd(w, v).sum()
bias = analytic_bias(w, v)
print("sum ghd(w,v)   =", lhs)
print("-2(b + w.v)    =", -2 * (bias + w @ v))

# fuzziness is the self-distance 2x(1-x): 0 for crisp 0/1, peak 0.5
for x in (0.0, 0.25, 0.5, 1.0):
    print(f"fuzziness({x}) = {fuzziness(x)}")

# Copyright 2026 The denn Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Reference values frozen in the unit tests.

Computed with mpmath at 50 digits straight from the formulas, without any
code shared with the C++ library. Rerun to audit:  python3 tools/oracles.py
"""

import mpmath as mp

mp.mp.dps = 50


def delay(ds, sigma):
    return mp.exp(-((ds / sigma) ** 2))


def kappa_exp(x):
    return mp.exp(-x)


def kappa_inv(x, shift=3, floor=mp.mpf("0.001")):
    return 1 / max(x + shift, floor)


def sgn(x):
    return (x > 0) - (x < 0)


def activity(z, ds, sigma, kappa):
    d = delay(ds, sigma)
    return sgn(ds) * (kappa(z + d) - kappa(z + 1))


def partials(z, ds, sigma, kappa):
    f = lambda a, b, c: activity(a, b, c, kappa)
    return (
        mp.diff(lambda v: f(z, v, sigma), ds),
        mp.diff(lambda v: f(z, ds, v), sigma),
        mp.diff(lambda v: f(v, ds, sigma), z),
    )


def standardize(t):
    n = len(t)
    m = mp.fsum(t) / n
    s = mp.sqrt(mp.fsum((x - m) ** 2 for x in t) / n)
    return [(x - m) / s for x in t]


def show(name, value):
    print(f"{name} = {mp.nstr(value, 17)}")


def main():
    z, ds, sigma = mp.mpf(0), mp.mpf(3), mp.mpf(1)
    show("activity exp (0, 3, 1)", activity(z, ds, sigma, kappa_exp))

    p = partials(mp.mpf(0), mp.mpf(1), mp.mpf(1), kappa_exp)
    show("partial d_signed exp (0, 1, 1)", p[0])
    show("partial sigma exp (0, 1, 1)", p[1])
    show("partial z exp (0, 1, 1)", p[2])

    args = (mp.mpf("0.5"), mp.mpf("0.7"), mp.mpf("1.3"))
    show("activity inverse (0.5, 0.7, 1.3)", activity(*args, kappa_inv))
    p = partials(*args, kappa_inv)
    show("partial d_signed inverse (0.5, 0.7, 1.3)", p[0])
    show("partial sigma inverse (0.5, 0.7, 1.3)", p[1])
    show("partial z inverse (0.5, 0.7, 1.3)", p[2])

    args = (mp.mpf("-0.4"), mp.mpf("-1.1"), mp.mpf("0.8"))
    show("activity exp (-0.4, -1.1, 0.8)", activity(*args, kappa_exp))

    show("standardize [1,2,3] entry 0", standardize([1, 2, 3])[0])

    # Dense 2x2 layer: z_in = [-1, 1], d^s = [[1, -1], [-1, 1]], sigma = 1.
    zin = [mp.mpf(-1), mp.mpf(1)]
    dsm = [[1, -1], [-1, 1]]
    t = [mp.fsum(activity(zin[i], mp.mpf(dsm[i][j]), 1, kappa_exp) for i in range(2))
         for j in range(2)]
    show("dense 2x2 raw t0", t[0])
    show("dense 2x2 raw t1", t[1])

    # Temporal softmin: frames [0, 1] and [1, 0].
    a = mp.exp(0) + mp.exp(-1)
    show("softmin symmetric", a / (2 * a))
    # Three classes over two frames, target 2.
    zz = [[mp.mpf("0.3"), mp.mpf("-0.2"), mp.mpf("1.1")],
          [mp.mpf("-0.7"), mp.mpf("0.4"), mp.mpf("0.05")]]
    col = [mp.fsum(mp.exp(-zz[s][c]) for s in range(2)) for c in range(3)]
    total = mp.fsum(col)
    show("cross entropy 3x2 target 2", -mp.log(col[2] / total))

    # SpiNNaker joules per cycle from the chip budget.
    jpc = (1 - mp.mpf("0.53") - 6 * mp.mpf("0.063")) / 18 * mp.mpf("5e-9")
    show("spinnaker joules per cycle", jpc)

    # MNIST 784-100-10 energy with the active count split over both layers
    # by synapse share, one frame. Per layer: EXP 2A, ADD 3A + 5n,
    # MUL 2n + 2; cycles ADD 1, MUL 2, EXP 95; 2.56e-11 J per cycle.
    for active in (14804, 8135):
        syn = [784 * 100, 100 * 10]
        share = [mp.mpf(active) * s / sum(syn) for s in syn]
        neurons = [100, 10]
        cycles = mp.fsum(2 * a * 95 + (3 * a + 5 * n) + 2 * (2 * n + 2)
                         for a, n in zip(share, neurons))
        show(f"mnist energy uJ for {active}", cycles * mp.mpf("2.56e-11") * 10**6)


if __name__ == "__main__":
    main()

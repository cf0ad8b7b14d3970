"""Independent reference values for the C++ tests.

Run with python3 (mpmath, numpy, scipy) to regenerate frozen.hpp. Every
value is computed here from its defining integral or sum, without the C++
code paths under test.
"""
import math

import mpmath as mp
import numpy as np

mp.mp.dps = 30


def bump(r):
    r = mp.mpf(r)
    if r >= 1:
        return mp.mpf(0)
    return mp.e ** (1 - 1 / (1 - r * r))


def bump_hat(d, u):
    u = mp.mpf(u)
    if d == 1:
        return 2 * mp.quad(lambda x: bump(x) * mp.cos(2 * mp.pi * u * x), mp.linspace(0, 1, 9))
    if d == 2:
        return 2 * mp.pi * mp.quad(lambda r: bump(r) * mp.besselj(0, 2 * mp.pi * u * r) * r,
                                   mp.linspace(0, 1, 9))
    k = 2 * mp.pi * u
    if u == 0:
        return 4 * mp.pi * mp.quad(lambda r: bump(r) * r * r, mp.linspace(0, 1, 9))
    return 4 * mp.pi * mp.quad(lambda r: bump(r) * mp.sin(k * r) / k * r, mp.linspace(0, 1, 9))


def theta_sum():
    return mp.nsum(lambda n: mp.e ** (-mp.pi * n * n), [-mp.inf, mp.inf])


def coset_gaussian_sum(basis, shift, sigma):
    """sum over k in Z^2 of exp(-pi |A k + a|^2 / sigma^2), A given by columns."""
    total = mp.mpf(0)
    for i in range(-40, 41):
        for j in range(-40, 41):
            x = basis[0][0] * i + basis[0][1] * j + shift[0]
            y = basis[1][0] * i + basis[1][1] * j + shift[1]
            total += mp.e ** (-mp.pi * (x * x + y * y) / sigma ** 2)
    return total


def smooth_step(u):
    if u <= 0:
        return 0.0
    if u >= 1:
        return 1.0
    a = math.exp(-1.0 / u)
    b = math.exp(-1.0 / (1.0 - u))
    return a / (a + b)


def eps_inverse_coeffs(a, eps, ks, n=1 << 16):
    """Fourier coefficients of h(x) = cut(|f|)/f for f = 1 + a e(x)."""
    x = np.arange(n) / n
    f = 1 + a * np.exp(2j * np.pi * x)
    r = np.abs(f)
    cut = np.array([smooth_step((v - eps / 2) / (eps / 2)) for v in r])
    h = np.where(r > eps / 2, cut / np.where(r > 0, f, 1), 0)
    c = np.fft.fft(h) / n
    return [c[k % n] for k in ks]


def main():
    out = []
    out.append("// Generated by make_frozen.py; do not edit.")
    out.append("#pragma once")
    out.append("")
    out.append("namespace frozen {")
    out.append("")
    out.append("// sum_n exp(-pi n^2)")
    out.append("inline constexpr double kThetaSum = %s;" % mp.nstr(theta_sum(), 20))
    out.append("")
    out.append("// Unit bump transform: {dimension, u, value}")
    out.append("inline constexpr double kBumpHat[][3] = {")
    for d in (1, 2, 3):
        for u in (0, 0.5, 1, 2.5, 7):
            out.append("    {%d, %s, %s}," % (d, repr(float(u)), mp.nstr(bump_hat(d, u), 20)))
    out.append("};")
    out.append("")
    basis = [[1, mp.mpf("0.5")], [0, 1]]
    shift = [mp.mpf("0.2"), mp.mpf("0.1")]
    out.append("// sum over (A Z^2 + a) of exp(-pi |x|^2 / 0.8^2), A = [[1, 0.5], [0, 1]], a = (0.2, 0.1)")
    out.append("inline constexpr double kCosetGaussianSum = %s;" %
               mp.nstr(coset_gaussian_sum(basis, shift, mp.mpf("0.8")), 20))
    out.append("")
    out.append("// Coefficients of the eps-inverse of 1 + a e(x): {a, eps, k, re, im}")
    out.append("inline constexpr double kEpsInverse[][5] = {")
    for a, eps in ((0.9, 0.5), (1.0, 0.5), (0.5, 0.5)):
        ks = (-2, -1, 0, 1, 2)
        for k, c in zip(ks, eps_inverse_coeffs(a, eps, ks)):
            out.append("    {%r, %r, %d, %.17g, %.17g}," % (a, eps, k, c.real, c.imag))
    out.append("};")
    out.append("")
    out.append("}  // namespace frozen")
    with open(__file__.replace("make_frozen.py", "frozen.hpp"), "w") as fh:
        fh.write("\n".join(out) + "\n")


if __name__ == "__main__":
    main()

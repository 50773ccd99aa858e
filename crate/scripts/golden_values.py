#!/usr/bin/env python3
"""High-precision reference values for the theory engine.

Run with `python3 scripts/golden_values.py`. The printed values are frozen
into crates/core/tests/golden.rs; rerun this script whenever a formula in
crates/core/src/theory changes.
"""
import mpmath as mp

mp.mp.dps = 50


def hyp(a, b, c, z):
    return mp.hyp2f1(a, b, c, z)


def H(x):
    return hyp(mp.mpf(-1) / 2, mp.mpf(-1) / 3, mp.mpf(7) / 6, mp.e ** (-2 * mp.pi * x))


def mobius(u1, s, u2):
    k = (2 * u1 + s - 2 * u2) / s
    m = u1 + (u1 - u2) / k
    return k, m


def strip(u1, s, u2, w):
    k, m = mobius(u1, s, u2)
    wt = k * (w - m) / (w - u2)
    a = mp.asin(wt)
    return mp.im(a) / mp.pi, mp.mpf(1) / 2 - mp.re(a) / mp.pi, wt, k, m


def psi(u1, s, u2, w):
    x, _, _, _, _ = strip(u1, s, u2, w)
    return mp.e ** (mp.pi * x / 3) * H(x) / H(0)


def cardy(x1, x2, x3, x4):
    lam = (x2 - x1) * (x4 - x3) / ((x3 - x1) * (x4 - x2))
    c = mp.gamma(mp.mpf(2) / 3) / (mp.gamma(mp.mpf(1) / 3) * mp.gamma(mp.mpf(4) / 3))
    return c * lam ** (mp.mpf(1) / 3) * hyp(mp.mpf(1) / 3, mp.mpf(2) / 3, mp.mpf(4) / 3, lam)


def k1():
    return 18 * mp.pi ** (mp.mpf(5) / 48) / (5 * mp.pi * 2 ** (mp.mpf(5) / 48)) / H(0)


def k2():
    return mp.mpf(18) / (5 * mp.pi)


def bi_prediction(u1, s, u2, w, s3):
    x, y, wt, k, m = strip(u1, s, u2, w)
    dpi = abs(k * (m - u2) / (w - u2) ** 2)
    dpsi = dpi / (mp.pi * mp.sqrt(abs(1 - wt ** 2)))
    sh, sn = mp.sinh(mp.pi * x), mp.sin(mp.pi * y)
    g = (mp.e ** (mp.pi * x / 3) * H(x) * sh ** (mp.mpf(-1) / 3)
         * (sh ** 2 * sn ** 2 / (sh ** 2 + sn ** 2)) ** (mp.mpf(11) / 96))
    return s3 ** (mp.mpf(5) / 48) * k1() * dpsi ** (mp.mpf(5) / 48) * g


def lemma22_prediction(u1, s, w, s3):
    omega = (mp.arg(w - u1 - s) - mp.arg(w - u1)) / mp.pi
    dphi = 1 / (2 * mp.im(w))
    return s3 ** (mp.mpf(5) / 48) * k2() * dphi ** (mp.mpf(5) / 48) * mp.sin(mp.pi * omega / 2) ** (mp.mpf(1) / 3)


def show(name, v):
    print(f"{name:28s} {mp.nstr(v, 20)}")


if __name__ == "__main__":
    third = mp.mpf(1) / 3
    show("gamma(1/3)", mp.gamma(third))
    show("gamma(7/6)", mp.gamma(mp.mpf(7) / 6))
    show("gamma(2.5)", mp.gamma(mp.mpf(5) / 2))
    show("K_F", 2 ** 7 * mp.pi ** 5 / (mp.mpf(3) ** (mp.mpf(3) / 2) * mp.gamma(third) ** 9))
    show("K1", k1())
    show("K2", k2())
    show("H(0)", H(0))
    show("H(1)", H(1))
    show("H(0.25)", H(mp.mpf(1) / 4))
    show("2F1(1/3,2/3;4/3;0.3)", hyp(third, 2 * third, 4 * third, mp.mpf("0.3")))
    show("2F1(1/3,2/3;4/3;0.9)", hyp(third, 2 * third, 4 * third, mp.mpf("0.9")))
    show("2F1(0.5,0.25;1.5;0.75)", hyp(mp.mpf("0.5"), mp.mpf("0.25"), mp.mpf("1.5"), mp.mpf("0.75")))
    show("cardy(0,1,2,3)", cardy(0, 1, 2, 3))
    show("cardy(0,1,1.5,2.5)", cardy(0, 1, mp.mpf("1.5"), mp.mpf("2.5")))
    w = mp.mpc(1, 1)
    show("psi(0,1,3,1+1i)", psi(0, 1, 3, w))
    x, y, _, _, _ = strip(0, 1, 3, w)
    show("strip x (0,1,3,1+1i)", x)
    show("strip y (0,1,3,1+1i)", y)
    show("bi(0,1,3,1+1i,0.1)", bi_prediction(0, 1, 3, w, mp.mpf("0.1")))
    show("lemma22(0,1,1+1i,0.1)", lemma22_prediction(0, 1, w, mp.mpf("0.1")))

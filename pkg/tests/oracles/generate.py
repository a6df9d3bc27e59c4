"""Independent high-precision oracle values frozen into the test-suite.

Run ``python tests/oracles/generate.py`` to regenerate. Everything here is
written from scratch with mpmath: conditional on W_T = w, the path value W_s
is N(s w / T, s (T - s) / T), so path expectations reduce to adaptive
quadrature over w (and over time variables), with no use of the package.
"""

from __future__ import annotations

import mpmath as mp

mp.mp.dps = 30


def setup(s0, sigma0, rate=0.03, strike=100, maturity=0.5):
    s0, sigma0, r, k, t = map(mp.mpf, (s0, sigma0, rate, strike, maturity))
    mu = r - sigma0**2 / 2
    x0 = mp.log(s0)
    theta = (mp.log(k) - x0 - mu * t) / sigma0
    return dict(s0=s0, sig=sigma0, r=r, k=k, t=t, mu=mu, x0=x0, theta=theta)


def density(w, t):
    return mp.exp(-w * w / (2 * t)) / mp.sqrt(2 * mp.pi * t)


def expect_d(c, fn):
    """E[1{W_T > theta} e^{X0_T} fn(w)], integrated over w."""

    def integrand(w):
        return mp.exp(c["x0"] + c["mu"] * c["t"] + c["sig"] * w) * fn(w) * density(w, c["t"])

    th = c["theta"]
    return mp.quad(integrand, [th, th + 2, th + 6, mp.inf])


def bs(c):
    sqt = mp.sqrt(c["t"])
    d1 = (mp.log(c["s0"] / c["k"]) + (c["r"] + c["sig"] ** 2 / 2) * c["t"]) / (c["sig"] * sqt)
    return c["s0"] * mp.ncdf(d1) - c["k"] * mp.exp(-c["r"] * c["t"]) * mp.ncdf(d1 - c["sig"] * sqt)


def cond_exp_e(c, alpha, s, w):
    """E[exp(alpha X0_s) | W_T = w]."""
    t, sig = c["t"], c["sig"]
    return mp.exp(alpha * (c["x0"] + c["mu"] * s) + alpha * sig * s * w / t + (alpha * sig) ** 2 * s * (t - s) / (2 * t))


def exp_constants(c, sigma1, alpha):
    sig, mu = c["sig"], c["mu"]
    e0 = mp.exp(alpha * c["x0"])
    k = -sigma1 * (sig + mu / sig + alpha * sig / 2)
    q = sigma1 / (alpha * sig)
    cs = (
        sigma1**2 * (mp.mpf(1) / 2 + mu / sig**2) + k * sigma1 / sig,
        k * sigma1 / sig,
        -k * sigma1 * e0 / sig,
        alpha * k**2,
        sigma1**2 / (2 * alpha * sig**2),
        -(sigma1**2) * e0 / (alpha * sig**2),
        sigma1**2 * e0**2 / (2 * alpha * sig**2),
    )
    return k, q, e0, cs


def exp_first(c, sigma1, alpha):
    """E[Phi'(X0_T) X1_T], X1 = K A + q (E_T - E0)."""
    k, q, e0, _ = exp_constants(c, sigma1, alpha)
    t = c["t"]

    def a_cond(w):
        return mp.quad(lambda s: cond_exp_e(c, alpha, s, w), [0, t])

    def fn(w):
        et = cond_exp_e(c, alpha, t, w)
        return k * a_cond(w) + q * (et - e0)

    return expect_d(c, fn)


def exp_second(c, sigma1, alpha):
    """E[Phi'(X0_T) (X2_T + X1_T^2 / 2)] with A^2 = 2 H."""
    k, q, e0, (c1, c2, c3, c4, c5, c6, c7) = exp_constants(c, sigma1, alpha)
    t, sig = c["t"], c["sig"]

    def pieces(w):
        a = mp.quad(lambda s: cond_exp_e(c, alpha, s, w), [0, t])
        g = mp.quad(lambda s: cond_exp_e(c, 2 * alpha, s, w), [0, t])

        def pair(u, s):
            # E[exp(alpha (X0_u + X0_s)) | w] for u < s
            var = (u * (t - u) + s * (t - s) + 2 * u * (t - s)) / t
            return mp.exp(
                alpha * (2 * c["x0"] + c["mu"] * (u + s))
                + alpha * sig * (u + s) * w / t
                + (alpha * sig) ** 2 * var / 2
            )

        def inner(s):
            # int_0^s pair(u, s) du; the exponent is -qa u^2 + qb u + const
            qa = (alpha * sig) ** 2 / (2 * t)
            qb = alpha * c["mu"] + alpha * sig * w / t + (alpha * sig) ** 2 * (3 * t - 2 * s) / (2 * t)
            const = mp.log(pair(0, s))
            half = qb / (2 * qa)
            ra = mp.sqrt(qa)
            scale = mp.sqrt(mp.pi / qa) / 2 * mp.exp(const + qb * qb / (4 * qa))
            return scale * (mp.erf(ra * (s - half)) - mp.erf(-ra * half))

        h = mp.quad(inner, [0, t])
        return a, g, h

    def fn(w):
        a, g, h = pieces(w)
        et = cond_exp_e(c, alpha, t, w)
        return (
            c1 * g
            + (c2 + k * q) * et * a
            + (c3 - k * q * e0) * a
            + (c4 + k * k) * h
            + (c5 + q * q / 2) * et * et
            + (c6 - q * q * e0) * et
            + c7
            + q * q * e0 * e0 / 2
        )

    return expect_d(c, fn)


def linear_first(c, sigma1, a0, a1):
    """E[Phi'(X0_T) X1_T] for f = a0 + a1 x; E[int W ds | w] = T w / 2."""
    sig, mu, t, x0 = c["sig"], c["mu"], c["t"], c["x0"]
    s01 = sig * sigma1
    b1 = -s01 * a0 - s01 * a1 * x0 - s01 * a1 / 2
    b2 = -s01 * a1 * mu / 2
    b3 = sigma1 * (a0 + a1 * x0)
    b4 = s01 * a1 / 2
    b5 = sigma1 * a1 * mu
    b6 = sigma1 * a1 * mu + sig**2 * sigma1 * a1

    def fn(w):
        # E[W_T^2 | w] = w^2
        return b1 * t + b2 * t * t + b3 * w + b4 * w * w + b5 * t * w - b6 * t * w / 2

    return expect_d(c, fn)


def p_one(c):
    return expect_d(c, lambda w: 1)


def main():
    out = {}
    for s0, sig in ((100, 0.25), (90, 0.15)):
        out[f"bs_{s0}_{sig}"] = bs(setup(s0, sig))
    for s0, sig in ((100, 0.25), (90, 0.15), (110, 0.35)):
        out[f"exp_first_{s0}_{sig}"] = exp_first(setup(s0, sig), mp.mpf("0.15"), mp.mpf("0.1"))
    out["exp_second_100_0.25"] = exp_second(setup(100, 0.25), mp.mpf("0.15"), mp.mpf("0.1"))
    for s0, sig in ((90, 0.15), (100, 0.25)):
        out[f"linear_first_{s0}_{sig}"] = linear_first(setup(s0, sig), mp.mpf("0.1"), mp.mpf("0.3"), mp.mpf("0.5"))
    out["p_one_100_0.25"] = p_one(setup(100, 0.25))
    for key, val in out.items():
        print(f"{key} = {mp.nstr(val, 20)}", flush=True)


if __name__ == "__main__":
    main()

"""High-precision reference values for the QAE outcome distribution.

Computes the phase-estimation outcome probabilities directly from the
amplitude sum |(1/N) sum_k e^{i k (2 tau - 2 pi l / N)}|^2 (not the closed
csc^2 form), then derives moments and success probabilities. Used to freeze
expected values in the C++ tests.
"""
import mpmath as mp

mp.mp.dps = 40


def pmf(h, T):
    N = 2 ** T
    tau = mp.asin(mp.sqrt(h))
    out = []
    for l in range(N):
        p = mp.mpf(0)
        for sgn in (1, -1):
            s = mp.fsum(mp.expj(k * (sgn * 2 * tau - 2 * mp.pi * l / N)) for k in range(N))
            p += abs(s / N) ** 2 / 2
        out.append(p)
    return out


def moments(h, T):
    N = 2 ** T
    P = pmf(h, T)
    est = [mp.sin(mp.pi * l / N) ** 2 for l in range(N)]
    bias = mp.fsum(p * (e - h) for p, e in zip(P, est))
    mse = mp.fsum(p * (e - h) ** 2 for p, e in zip(P, est))
    return bias, mse


def success(h, T):
    N = 2 ** T
    P = pmf(h, T)
    eps = mp.pi / N
    return mp.fsum(p for l, p in enumerate(P) if abs(mp.sin(mp.pi * l / N) ** 2 - h) <= eps)


def median_failure(h, T, M):
    N = 2 ** T
    P = pmf(h, T)
    eps = mp.pi / N
    below = mp.fsum(p for l, p in enumerate(P) if mp.sin(mp.pi * l / N) ** 2 < h - eps)
    above = mp.fsum(p for l, p in enumerate(P) if mp.sin(mp.pi * l / N) ** 2 > h + eps)
    k = (M + 1) // 2
    tail = lambda q: mp.fsum(mp.binomial(M, j) * q ** j * (1 - q) ** (M - j) for j in range(k, M + 1))
    return tail(below) + tail(above)


if __name__ == "__main__":
    h = mp.mpf(106) / 256
    for T in (4, 6, 8):
        b, m = moments(h, T)
        print(f"T={T} bias={mp.nstr(b, 17)} mse={mp.nstr(m, 17)}")
    print("pmf h=0.4140625 T=4:", [mp.nstr(p, 17) for p in pmf(h, 4)])
    print("success h=0.4140625 T=6:", mp.nstr(success(h, 6), 17))
    for M in (1, 3, 5):
        print(f"median_failure h=0.4140625 T=6 M={M}:", mp.nstr(median_failure(h, 6, M), 17))

"""Plain-loop reference implementations, independent of the vectorized code."""

import math


def gradient_loop(img):
    """Central differences inside, one-sided at the border; returns (gx, gy) lists."""
    h, w = len(img), len(img[0])
    gx = [[0.0] * w for _ in range(h)]
    gy = [[0.0] * w for _ in range(h)]
    for i in range(h):
        for j in range(w):
            if j == 0:
                gx[i][j] = img[i][1] - img[i][0]
            elif j == w - 1:
                gx[i][j] = img[i][w - 1] - img[i][w - 2]
            else:
                gx[i][j] = (img[i][j + 1] - img[i][j - 1]) / 2.0
            if i == 0:
                gy[i][j] = img[1][j] - img[0][j]
            elif i == h - 1:
                gy[i][j] = img[h - 1][j] - img[h - 2][j]
            else:
                gy[i][j] = (img[i + 1][j] - img[i - 1][j]) / 2.0
    return gx, gy


def energy_loop(i1, i2, u, v, lambda1, lambda2, lambda_tv, reduction="mean"):
    h, w = len(i1), len(i1[0])
    gx, gy = gradient_loop(i2)
    l1 = 0.0
    l2 = 0.0
    for i in range(h):
        for j in range(w):
            r = gx[i][j] * u[i][j] + gy[i][j] * v[i][j] + i2[i][j] - i1[i][j]
            l1 += abs(r)
            l2 += r * r
    tv = 0.0
    for field in (u, v):
        for i in range(h):
            for j in range(w):
                if j + 1 < w:
                    tv += abs(field[i][j + 1] - field[i][j])
                if i + 1 < h:
                    tv += abs(field[i + 1][j] - field[i][j])
    if reduction == "mean":
        n = h * w
        l1, l2, tv = l1 / n, l2 / n, tv / n
    return {
        "data_l1": l1,
        "data_l2": l2,
        "tv": tv,
        "total_loss": lambda1 * l1 + lambda2 * l2 + lambda_tv * tv,
    }


def metrics_loop(up, vp, ug, vg):
    """(aee, sdee, aae_deg, sdae_deg) with population standard deviations."""
    ee = []
    ae = []
    for i in range(len(up)):
        for j in range(len(up[0])):
            ee.append(math.sqrt((up[i][j] - ug[i][j]) ** 2 + (vp[i][j] - vg[i][j]) ** 2))
            num = up[i][j] * ug[i][j] + vp[i][j] * vg[i][j] + 1.0
            den = math.sqrt((up[i][j] ** 2 + vp[i][j] ** 2 + 1.0) * (ug[i][j] ** 2 + vg[i][j] ** 2 + 1.0))
            c = max(-1.0, min(1.0, num / den))
            ae.append(math.degrees(math.acos(c)))

    def mean_std(xs):
        m = sum(xs) / len(xs)
        return m, math.sqrt(sum((x - m) ** 2 for x in xs) / len(xs))

    aee, sdee = mean_std(ee)
    aae, sdae = mean_std(ae)
    return aee, sdee, aae, sdae

#!/usr/bin/env python3
"""Regenerate regutools_reference.json.

Independent NumPy transcription of the published Regutools formulas
(phillips, gravity example 1, shaw). Used once to pin reference values;
the C++ generators are tested against this file, never the other way
around. Requires numpy only:  python3 gen_reference.py
"""
import json
import numpy as np


def phillips(n):
    assert n % 4 == 0
    h = 12.0 / n
    n4 = n // 4
    c = np.pi / 3.0
    ch = c * h
    r1 = np.zeros(n)
    d = np.arange(0, n4)
    r1[:n4] = h + (2.0 / (h * c * c)) * (1.0 - np.cos(ch)) * np.cos(ch * d)
    r1[n4] = h / 2.0 + (np.cos(ch) - 1.0) / (h * c * c)
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    A = r1[np.abs(i - j)]
    x = np.zeros(n)
    t = -6.0 + h * np.arange(0, n + 1)
    for k in range(n4, 3 * n4):
        x[k] = (h + (np.sin(c * t[k + 1]) - np.sin(c * t[k])) / c) / np.sqrt(h)
    return A, x


def gravity(n, d=0.25):
    grid = (np.arange(1, n + 1) - 0.5) / n
    S, T = np.meshgrid(grid, grid, indexing="ij")
    A = (1.0 / n) * d / (d * d + (S - T) ** 2) ** 1.5
    x = np.sin(np.pi * grid) + 0.5 * np.sin(2.0 * np.pi * grid)
    return A, x


def shaw(n):
    assert n % 2 == 0
    h = np.pi / n
    th = -np.pi / 2 + (np.arange(1, n + 1) - 0.5) * h
    co = np.cos(th)
    ps = np.pi * np.sin(th)
    U = ps[:, None] + ps[None, :]
    sinc = np.where(U == 0.0, 1.0, np.sin(np.where(U == 0.0, 1.0, U)) / np.where(U == 0.0, 1.0, U))
    A = h * ((co[:, None] + co[None, :]) * sinc) ** 2
    x = 2.0 * np.exp(-6.0 * (th - 0.8) ** 2) + np.exp(-2.0 * (th + 0.5) ** 2)
    return A, x


def entry_probe(A):
    n = A.shape[0]
    pick = [(0, 0), (0, n - 1), (n // 2, n // 2), (n // 8, n // 3), (n - 1, n // 2)]
    return [{"i": i, "j": j, "v": A[i, j]} for i, j in pick]


def summarize(name, A, x, sigma_idx):
    S = np.linalg.svd(A, compute_uv=False)
    row_norms = np.linalg.norm(A, axis=1)
    return {
        "name": name,
        "size": A.shape[0],
        "fro_norm": float(np.linalg.norm(A)),
        "op_norm": float(S[0]),
        "max_row_norm": float(row_norms.max()),
        "sigma": {str(k): float(S[k]) for k in sigma_idx},
        "entries": entry_probe(A),
        "x_inf_norm": float(np.max(np.abs(x))),
        "x_l2_norm": float(np.linalg.norm(x)),
        "x_probe": [{"i": int(i), "v": float(x[i])} for i in
                    [0, A.shape[0] // 4, A.shape[0] // 2, 3 * A.shape[0] // 4, A.shape[0] - 1]],
    }


def main():
    out = {"large": [], "small": []}
    gens = {"phillips": phillips, "gravity": gravity, "shaw": shaw}
    for name, gen in gens.items():
        A, x = gen(1000)
        idx = [0, 1, 9, 99] + ([999] if name == "phillips" else [])
        out["large"].append(summarize(name, A, x, idx))
    for name, gen in gens.items():
        A, x = gen(8)
        out["small"].append({"name": name, "size": 8,
                             "matrix": [[float(v) for v in row] for row in A],
                             "x": [float(v) for v in x]})
    with open("regutools_reference.json", "w") as f:
        json.dump(out, f, indent=1)
    print("wrote regutools_reference.json")


if __name__ == "__main__":
    main()

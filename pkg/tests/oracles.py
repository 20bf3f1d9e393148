"""Brute-force reference computations that share no code with the package."""

import itertools

import numpy as np


def signed_permutations(n):
    out = []
    for perm in itertools.permutations(range(n)):
        for signs in itertools.product((1, -1), repeat=n):
            m = np.zeros((n, n))
            for i, j in enumerate(perm):
                m[i, j] = signs[i]
            out.append(m)
    return out


def random_hyperbolic(rng, kind):
    """Rational screw, glide or translation data ``(A, b)`` with a nonzero axial part."""
    while True:
        if kind == "translation":
            n = int(rng.integers(2, 4))
            a = np.eye(n)
        elif kind == "glide":
            n = int(rng.integers(2, 4))
            cands = [m for m in signed_permutations(n) if np.isclose(np.linalg.det(m), -1)
                     and np.linalg.matrix_rank(m - np.eye(n)) < n]
            a = cands[rng.integers(len(cands))]
        else:
            n = 3
            cands = [m for m in signed_permutations(3) if np.isclose(np.linalg.det(m), 1)
                     and not np.allclose(m, np.eye(3))]
            a = cands[rng.integers(len(cands))]
        b = rng.integers(-8, 9, size=n) / 4.0
        w, v = np.linalg.eig(a)
        ker = np.real(v[:, np.isclose(w, 1)])
        if ker.size and np.linalg.norm(np.linalg.lstsq(ker, b, rcond=None)[0]) > 0.2:
            return a, b


def grid_min_displacement(a, b, half=6.0, points=21, rounds=45):
    """Coarse-to-fine grid search for min |Ax + b - x|."""
    n = a.shape[0]
    m = a - np.eye(n)
    center = np.zeros(n)
    ticks = np.linspace(-1.0, 1.0, points)
    best = None
    for _ in range(rounds):
        grid = np.stack(np.meshgrid(*([ticks * half] * n), indexing="ij"), axis=-1).reshape(-1, n) + center
        vals = np.linalg.norm(grid @ m.T + b, axis=1)
        i = int(np.argmin(vals))
        if best is None or vals[i] <= best:
            best = float(vals[i])
            center = grid[i]
        half *= 0.5
    return best


def lattice_group_elements(gens, reach=3):
    """All ``(A, b)`` of a crystallographic group on the integer lattice with |lattice part| <= reach.

    ``gens`` are ``(A, b)`` pairs. Linear parts and translations mod Z^n are closed
    naively, then every integer shift in the cube is added.
    """
    n = gens[0][0].shape[0]

    def key(a, b):
        return tuple(np.round(a, 6).ravel()) + tuple(np.round(np.mod(b, 1.0), 6) % 1.0)

    reps = {key(np.eye(n), np.zeros(n)): (np.eye(n), np.zeros(n))}
    frontier = list(reps.values())
    while frontier:
        nxt = []
        for a, b in frontier:
            for ga, gb in gens:
                na, nb = ga @ a, ga @ b + gb
                nb = np.mod(nb, 1.0)
                k = key(na, nb)
                if k not in reps:
                    reps[k] = (na, nb)
                    nxt.append((na, nb))
        frontier = nxt
    out = []
    for a, b in reps.values():
        for shift in itertools.product(range(-reach, reach + 1), repeat=n):
            out.append((a, b + np.array(shift, dtype=float)))
    return out


def singular_point_classes(gens):
    """Orbit classes of isolated fixed points in [0,1)^n: sorted list of isotropy orders."""
    n = gens[0][0].shape[0]
    elems = lattice_group_elements(gens)
    points = []
    for a, b in elems:
        m = a - np.eye(n)
        if np.linalg.matrix_rank(m) < n:
            continue
        p = np.linalg.solve(m, -b)
        if np.all(p >= -1e-9) and np.all(p < 1 - 1e-9):
            p = np.where(np.abs(p) < 1e-9, 0.0, p)
            if not any(np.allclose(p, q) for q in points):
                points.append(p)

    def order(p):
        return sum(1 for a, b in elems if np.allclose(a @ p + b, p, atol=1e-9))

    classes = []
    for p in points:
        placed = False
        for cls in classes:
            q = cls[0]
            if any(np.allclose(a @ p + b, q, atol=1e-9) for a, b in elems):
                cls.append(p)
                placed = True
                break
        if not placed:
            classes.append([p])
    return sorted(order(cls[0]) for cls in classes)


def brute_force_subgroups(mats):
    """All subgroups of a finite matrix group, found by testing every subset for closure."""
    m = len(mats)
    table = np.empty((m, m), dtype=int)
    for i, a in enumerate(mats):
        for j, b in enumerate(mats):
            prod = a @ b
            table[i, j] = next(k for k, c in enumerate(mats) if np.allclose(prod, c, atol=1e-9))
    ident = next(k for k, c in enumerate(mats) if np.allclose(c, np.eye(c.shape[0])))
    found = []
    others = [k for k in range(m) if k != ident]
    for r in range(len(others) + 1):
        for subset in itertools.combinations(others, r):
            s = frozenset(subset) | {ident}
            idx = np.array(sorted(s))
            if set(table[np.ix_(idx, idx)].ravel()) <= s:
                found.append(s)
    return found, table

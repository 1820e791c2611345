import numpy as np


def random_unit(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_tangent(field, rng):
    d = rng.normal(size=field.v.shape)
    d -= np.sum(d * field.v, axis=1, keepdims=True) * field.v
    if field.bc.kind == "periodic":
        d[-1] = d[0]
    elif field.bc.kind == "pinned":
        d[0] = d[-1] = 0.0
    return d


def fd_directional(energy_fn, field, d, step=1e-5):
    from curvemag.reduced_energy import retract
    return (energy_fn(retract(field, d, step)) - energy_fn(retract(field, d, -step))) / (2 * step)


def unique_dot(g, d, periodic):
    if periodic:
        return float(np.sum(g[:-1] * d[:-1]))
    return float(np.sum(g * d))


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []

"""Pure-numpy reference kernels. Same contracts as the compiled ``_kernels``."""

import numpy as np


def congruence_batch(phi, parts):
    """Return ``phi @ parts[k] @ phi.T`` for every k, exactly symmetric."""
    out = np.matmul(np.matmul(phi, parts), phi.T)
    return 0.5 * (out + np.swapaxes(out, -1, -2))


def transition_batch(phi, states, inplace=False):
    """Return ``states @ phi.T``: rows of `states` are state vectors."""
    if inplace:
        states[...] = states @ phi.T
        return states
    return states @ phi.T

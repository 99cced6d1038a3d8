"""Shared helpers for the test suite."""

import numpy as np


def gauge_fix(m):
    """Strip column and row phase freedom: first row, then first column real-positive."""
    m = np.array(m, dtype=complex)
    col_phase = np.where(np.abs(m[0, :]) > 1e-12, m[0, :] / np.abs(np.where(np.abs(m[0, :]) > 0, m[0, :], 1)), 1.0)
    m = m / col_phase[None, :]
    row_phase = np.where(np.abs(m[:, 0]) > 1e-12, m[:, 0] / np.abs(np.where(np.abs(m[:, 0]) > 0, m[:, 0], 1)), 1.0)
    return m / row_phase[:, None]


def align_global_phase(ref, other):
    """Rotate ``other``'s amplitude map so its largest-|ref| entry matches ``ref``."""
    key = max(ref.amplitudes, key=lambda t: abs(ref.amplitudes[t]))
    a, b = ref.amplitudes[key], other.amplitude(key)
    if abs(b) < 1e-15:
        return dict(other.amplitudes)
    phase = (a / abs(a)) / (b / abs(b))
    return {t: v * phase for t, v in other.amplitudes.items()}


def max_amplitude_diff(a, b):
    """Largest amplitude difference after global-phase alignment of b to a."""
    rot = align_global_phase(a, b)
    keys = set(a.amplitudes) | set(rot)
    return max(abs(a.amplitude(t) - rot.get(t, 0.0)) for t in keys)


def haar_unitary(rng, n):
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    u, _, vh = np.linalg.svd(g)
    return u @ vh

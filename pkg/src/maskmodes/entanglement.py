"""Modal entanglement of pure multimode Fock states.

Bipartite entanglement is read off the singular values of the amplitude
matrix ``Psi[a, b]`` indexed by occupation tuples of the two subsystems:
the squared singular values are the reduced-state eigenvalues, and the von
Neumann entropy (base 2, bits) decides separability against a tolerance.
"""

from dataclasses import dataclass

import numpy as np

from .errors import EmptyPartition, TooManyModes

#: Entropy threshold (bits) for verdicts on truncated coherent/squeezed
#: inputs; exact Fock inputs support the tighter 1e-9.
DEFAULT_TOL_TRUNCATED = 1e-6
DEFAULT_TOL_EXACT = 1e-9

_EIG_FLOOR = 1e-18
_MAX_SCAN_MODES = 12
_MAX_DENSITY_DIM = 4096


@dataclass(frozen=True)
class Bipartition:
    """Subset of mode indices versus the rest."""

    subset: tuple
    mode_count: int

    def __post_init__(self):
        s = tuple(sorted(set(int(i) for i in self.subset)))
        object.__setattr__(self, "subset", s)
        if not s:
            raise EmptyPartition("bipartition subset is empty")
        if any(i < 0 or i >= self.mode_count for i in s):
            raise EmptyPartition("subset indices outside the mode range")
        if len(s) >= self.mode_count:
            raise EmptyPartition("subset must be a proper subset of the modes")

    @property
    def complement(self):
        return tuple(i for i in range(self.mode_count) if i not in self.subset)

    def mask(self):
        """0/1 membership list, subset marked 1."""
        return [1 if i in self.subset else 0 for i in range(self.mode_count)]


@dataclass
class EntanglementReport:
    schmidt_coefficients: np.ndarray
    entropy_bits: float
    separable: bool
    tolerance: float
    bipartition: Bipartition

    def to_json(self, top_k=8):
        return {
            "bipartition": list(self.bipartition.subset),
            "complement": list(self.bipartition.complement),
            "mask": self.bipartition.mask(),
            "entropy_bits": self.entropy_bits,
            "schmidt_top": [float(s) for s in self.schmidt_coefficients[:top_k]],
            "separable": bool(self.separable),
            "tolerance": self.tolerance,
        }


def _index_arrays(state, part):
    items = state.items_sorted()
    keys = np.array([t for t, _ in items], dtype=np.int64)
    vals = np.array([a for _, a in items], dtype=complex)
    a_idx = list(part.subset)
    b_idx = list(part.complement)
    a_keys = keys[:, a_idx]
    b_keys = keys[:, b_idx]
    a_uniq, a_inv = np.unique(a_keys, axis=0, return_inverse=True)
    b_uniq, b_inv = np.unique(b_keys, axis=0, return_inverse=True)
    return a_uniq, a_inv, b_uniq, b_inv, vals


def bipartition_matrix(state, part):
    """Dense amplitude matrix over (subset basis) x (complement basis).

    Returns ``(matrix, row_basis, col_basis)`` where the bases list the
    occupation tuples actually present in the state's support.
    """
    a_uniq, a_inv, b_uniq, b_inv, vals = _index_arrays(state, part)
    m = np.zeros((len(a_uniq), len(b_uniq)), dtype=complex)
    m[a_inv, b_inv] = vals
    rows = [tuple(int(x) for x in t) for t in a_uniq]
    cols = [tuple(int(x) for x in t) for t in b_uniq]
    return m, rows, cols


def reduced_density(state, part):
    """Reduced density matrix of the subset, with its occupation-tuple basis.

    Positive semidefinite with unit trace (up to float error); the basis is
    restricted to tuples present in the state's support.
    """
    a_uniq, a_inv, b_uniq, b_inv, vals = _index_arrays(state, part)
    if len(a_uniq) > _MAX_DENSITY_DIM:
        raise TooManyModes(
            f"subset basis has {len(a_uniq)} tuples; reduced density capped at "
            f"{_MAX_DENSITY_DIM} (use entanglement_report instead)"
        )
    m = np.zeros((len(a_uniq), len(b_uniq)), dtype=complex)
    m[a_inv, b_inv] = vals
    rho = m @ m.conj().T
    basis = [tuple(int(x) for x in t) for t in a_uniq]
    return rho, basis


def _schmidt_probabilities(state, part):
    a_uniq, a_inv, b_uniq, b_inv, vals = _index_arrays(state, part)
    # work on the smaller side; entropy is symmetric under A <-> B
    if len(a_uniq) <= len(b_uniq):
        m = np.zeros((len(a_uniq), len(b_uniq)), dtype=complex)
        m[a_inv, b_inv] = vals
    else:
        m = np.zeros((len(b_uniq), len(a_uniq)), dtype=complex)
        m[b_inv, a_inv] = vals
    rho = m @ m.conj().T
    p = np.clip(np.linalg.eigvalsh(rho), 0.0, None)
    return np.sort(p)[::-1]


def entanglement_report(state, part, tol=DEFAULT_TOL_TRUNCATED):
    """Schmidt spectrum, entropy in bits and a separability verdict."""
    p = _schmidt_probabilities(state, part)
    live = p[p > _EIG_FLOOR]
    entropy = float(-(live * np.log2(live)).sum()) if live.size else 0.0
    entropy = max(entropy, 0.0)
    return EntanglementReport(
        schmidt_coefficients=np.sqrt(p),
        entropy_bits=entropy,
        separable=entropy < tol,
        tolerance=tol,
        bipartition=part,
    )


def all_bipartitions(mode_count):
    """Every distinct bipartition, canonicalized to subsets containing mode 0."""
    if mode_count > _MAX_SCAN_MODES:
        raise TooManyModes(f"bipartition scan supports at most {_MAX_SCAN_MODES} modes")
    parts = []
    others = list(range(1, mode_count))
    for bits in range(2 ** (mode_count - 1)):
        subset = (0,) + tuple(others[i] for i in range(mode_count - 1) if bits >> i & 1)
        if len(subset) < mode_count:
            parts.append(Bipartition(subset, mode_count))
    return parts


def full_separability_scan(state, tol=DEFAULT_TOL_TRUNCATED):
    """One report per distinct bipartition (2^(N-1) - 1 of them).

    The state is fully separable iff every report's verdict is separable.
    """
    return [
        (part, entanglement_report(state, part, tol=tol))
        for part in all_bipartitions(state.mode_count)
    ]


def fully_separable(scan):
    return all(report.separable for _, report in scan)


def scan_to_json(scan):
    return {
        "fully_separable": fully_separable(scan),
        "bipartitions": [report.to_json() for _, report in scan],
    }

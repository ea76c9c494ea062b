"""Qubit detector self-characterization (QDSC) and detector tomography (QDT)."""

from ._core import (
    PovmscopeError,
    affine_residual,
    align_frame,
    born_matrix,
    build_standard,
    element_fidelity,
    fidelity_q,
    fidelity_t,
    icosahedron_states,
    l_value,
    probe_grid,
    qdsc,
    qdt,
    qt_from_povm,
    random_pure_states,
    sample_counts,
    state_tomography,
)

__all__ = [
    "PovmscopeError",
    "affine_residual",
    "align_frame",
    "born_matrix",
    "build_standard",
    "element_fidelity",
    "fidelity_q",
    "fidelity_t",
    "icosahedron_states",
    "l_value",
    "probe_grid",
    "qdsc",
    "qdt",
    "qt_from_povm",
    "random_pure_states",
    "sample_counts",
    "state_tomography",
]

"""magspec: desk-scale numerical laboratory for the spectral asymptotics of a
4D Schrodinger operator with a strong degenerating magnetic field.

Subpackages:
  geometry  - model magnetic 2-form, eigen-intensities, frames, zones
  weyl      - standard/magnetic Weyl densities, correction term, integrals
  dynamics  - Hamiltonian flow, adiabatic invariants, drift, confinement
  spectra   - separable model operators: fiber eigenproblems, state counts
  harness   - parameter sweeps, scaling fits, correction-profile extraction
  cli       - command-line front door
"""

from . import dynamics, errors, geometry, harness, profiles, spectra, weyl

__version__ = "0.1.0"

__all__ = [
    "dynamics",
    "errors",
    "geometry",
    "harness",
    "profiles",
    "spectra",
    "weyl",
    "__version__",
]

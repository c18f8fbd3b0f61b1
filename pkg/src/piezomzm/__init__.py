"""Piezo-optomechanical modulator models and gate set tomography for trapped-ion qubits.

Submodules
----------
qchan        single-qubit unitaries, PTMs and error metrics
photonics    dual-MZI transfer matrices, extinction search, rings, loss budgets
dynamics     pulses, Rabi rotations and switch noise
tomography   GST designs, simulated data, standard and physical fits
config, cli  scenario files and the command-line front end
"""
__version__ = "0.1.0"

from . import dynamics, photonics, qchan  # noqa: E402

__all__ = ["qchan", "photonics", "dynamics", "__version__"]

"""Quantum transient stability assessment on a classical simulator.

Subpackages cover the quantum register engine (`qsim`), the layered
variational classifier circuits (`circuits`), hybrid training (`training`),
swing-equation data generation (`power`), noisy execution (`noise`), and the
evaluation/experiment surface (`analysis`, `cli`).
"""

__version__ = "0.1.0"

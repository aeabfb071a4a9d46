"""Gradient-free training of variational quantum circuit policies.

Subpackages by responsibility:

- :mod:`metaqrl.qsim` dense statevector simulation (<= 12 qubits)
- :mod:`metaqrl.encoders` classical-to-quantum data encodings
- :mod:`metaqrl.policy` circuit policies mapping observations to actions
- :mod:`metaqrl.envs` self-contained control environments
- :mod:`metaqrl.metaheuristics` population / trajectory optimizers
- :mod:`metaqrl.harness` fitness evaluation, experiment runs, metrics
"""

__version__ = "0.1.0"

"""Bent XX-chain state transfer under selective dynamical decoupling."""

__version__ = "0.1.0"

from .pauli import PauliString, apply_to_state, conjugate, multiply, parse, render  # noqa: E402
from .chain import (ChainSpec, Hamiltonian, bent_chain, build_hamiltonian,  # noqa: E402
                    default_gamma, expected_phase, pst_couplings)
from .schemes import (DecouplingScheme, PulseSequence, complete_scheme,  # noqa: E402
                      partial_scheme, practical_scheme, repeat_pdd, symmetrize,
                      to_pulses, verify_selective)
from .errors import ErrorModel, imperfect_pulse, jittered_gaps  # noqa: E402
from .engine import (FidelityTrace, Propagator, evolve, run_protocol,  # noqa: E402
                     spectral_decompose, transfer_phase)

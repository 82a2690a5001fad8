"""GHZ-type nonlocality with mixed graph states.

Submodules: ``pauli`` (Pauli algebra, graph stabilizers, paradox search),
``states`` (dense density matrices), ``factory`` (named states and the noisy
generation pipeline), ``measurement`` (outcome statistics and count files),
``tomography`` (likelihood reconstruction, witnesses, bootstrap) and
``nonlocality`` (local-realist bounds and the Mermin analysis).
"""

__version__ = "0.1.0"

"""chorc: a choreography compiler toolkit.

Parse a global choreography, interpret its small-step semantics, synthesize
a controller-free distributed component system, check the two for
equivalence on small instances, simulate the system deterministically, and
emit Promela models with LTL property templates for external model checking.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]

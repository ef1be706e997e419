"""Benchmark model builders: Ziegler pendulums and Beck's column."""

from .dae import FirstOrderDAE
from .equilibrium import static_equilibrium
from .ziegler import ZieglerModel, build_ziegler2, build_ziegler3, recast_to_dae
from .cubic2 import PolynomialSecondOrderModel

__all__ = [
    "FirstOrderDAE",
    "ZieglerModel",
    "PolynomialSecondOrderModel",
    "build_ziegler2",
    "build_ziegler3",
    "recast_to_dae",
    "static_equilibrium",
]


def __getattr__(name):
    # beck pulls in the FE stack; import it lazily
    if name in ("BeckModel", "FEMesh", "assemble_beck", "calibrate_damping"):
        from . import beck

        return getattr(beck, name)
    raise AttributeError(name)

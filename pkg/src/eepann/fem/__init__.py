from .mesh import Mesh, box_mesh, read_mesh, write_mesh
from .solver import (
    BoundaryConditions,
    DofMap,
    FemSolver,
    load_stepping,
    write_solution,
)

__all__ = [
    "Mesh",
    "box_mesh",
    "read_mesh",
    "write_mesh",
    "BoundaryConditions",
    "DofMap",
    "FemSolver",
    "load_stepping",
    "write_solution",
]

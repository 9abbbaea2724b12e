"""Legacy ASCII VTK export of meshes and velocity/pressure snapshots.

Writers emit UNSTRUCTURED_GRID datasets with the triangle connectivity and
point data sampled at the vertices (the vertex block of the P2 velocity
coefficients and the P1 pressure).  The VTK title line carries the seed
and configuration hash of the producing run so every artifact is
self-describing.
"""

from __future__ import annotations

import numpy as np


def _write_mesh_block(f, mesh):
    f.write("DATASET UNSTRUCTURED_GRID\n")
    f.write(f"POINTS {mesh.n_vertices} double\n")
    for x, y in mesh.nodes:
        f.write(f"{x:.17g} {y:.17g} 0\n")
    nt = mesh.n_triangles
    f.write(f"CELLS {nt} {4 * nt}\n")
    for a, b, c in mesh.triangles:
        f.write(f"3 {a} {b} {c}\n")
    f.write(f"CELL_TYPES {nt}\n")
    f.write("5\n" * nt)


def write_mesh_vtk(mesh, path, title="mesh"):
    """Write the bare triangulation."""
    with open(path, "w") as f:
        f.write("# vtk DataFile Version 3.0\n")
        f.write(f"{title}\n")
        f.write("ASCII\n")
        _write_mesh_block(f, mesh)
    return path


def write_fields_vtk(space, path, velocity=None, pressure=None, title="fields"):
    """Write velocity and/or pressure point data on the mesh vertices.

    The velocity vertex values are the first ``n_vertices`` entries of each
    component block of the P2 coefficients, which are exactly the nodal
    values at the vertices.
    """
    mesh = space.mesh
    with open(path, "w") as f:
        f.write("# vtk DataFile Version 3.0\n")
        f.write(f"{title}\n")
        f.write("ASCII\n")
        _write_mesh_block(f, mesh)
        f.write(f"POINT_DATA {mesh.n_vertices}\n")
        if velocity is not None:
            comps = space.velocity_components(np.asarray(velocity))
            vx = comps[0][: mesh.n_vertices]
            vy = comps[1][: mesh.n_vertices]
            f.write("VECTORS velocity double\n")
            for a, b in zip(vx, vy):
                f.write(f"{a:.17g} {b:.17g} 0\n")
        if pressure is not None:
            f.write("SCALARS pressure double 1\n")
            f.write("LOOKUP_TABLE default\n")
            for v in np.asarray(pressure):
                f.write(f"{v:.17g}\n")
    return path

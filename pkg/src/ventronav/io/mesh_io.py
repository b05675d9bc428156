"""Mesh file formats: binary and ASCII STL, and triangulated ASCII OBJ.

Coordinates default to millimetres; pass `scale` to convert other units on
load (e.g. 1000.0 for meshes authored in metres). STL is a triangle soup, so
loading welds exactly-equal vertices back together in first-use order; meshes
produced by this package are written in that canonical order (and with
float32-exact coordinates for binary STL), which makes save/load round trips
exact.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import EmptyMesh, ParseError
from ..geometry import TriangleMesh

_BINARY_STL_HEADER = 80
_BINARY_STL_RECORD = 50


def load_mesh(path, scale: float = 1.0) -> TriangleMesh:
    """Load an STL (binary or ASCII) or OBJ mesh; `scale` multiplies coordinates."""
    path = Path(path)
    if not path.exists():
        raise ParseError(f"mesh file not found: {path}")
    suffix = path.suffix.lower()
    if suffix == ".obj":
        mesh = _load_obj(path)
    elif suffix == ".stl":
        data = path.read_bytes()
        mesh = _load_stl_binary(data, path) if _looks_binary_stl(data) else _load_stl_ascii(data, path)
    else:
        raise ParseError(f"unsupported mesh format {suffix!r} (expected .stl or .obj)")
    if scale != 1.0:
        mesh = TriangleMesh(mesh.vertices * float(scale), mesh.triangles.copy())
    if len(mesh) == 0:
        raise EmptyMesh(str(path))
    return mesh


def save_mesh(mesh: TriangleMesh, path, ascii_stl: bool = False) -> None:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".obj":
        _save_obj(mesh, path)
    elif suffix == ".stl":
        if ascii_stl:
            _save_stl_ascii(mesh, path)
        else:
            _save_stl_binary(mesh, path)
    else:
        raise ParseError(f"unsupported mesh format {suffix!r} (expected .stl or .obj)")


def _looks_binary_stl(data: bytes) -> bool:
    if len(data) < _BINARY_STL_HEADER + 4:
        return False
    (count,) = struct.unpack_from("<I", data, _BINARY_STL_HEADER)
    if len(data) == _BINARY_STL_HEADER + 4 + count * _BINARY_STL_RECORD:
        return True
    # ascii files begin with "solid"; anything else that fails the size check
    # is treated as (broken) binary
    return not data.lstrip()[:5].lower().startswith(b"solid")


def _weld(triangle_vertices: np.ndarray) -> TriangleMesh:
    """Rebuild an indexed mesh from a (M, 3, 3) soup; exact-equal vertices weld,
    ordered by first use."""
    seen: dict[tuple, int] = {}
    verts: list[tuple] = []
    tris = np.empty((len(triangle_vertices), 3), dtype=np.int64)
    for m, tri in enumerate(triangle_vertices):
        for k in range(3):
            key = (float(tri[k, 0]), float(tri[k, 1]), float(tri[k, 2]))
            idx = seen.get(key)
            if idx is None:
                idx = len(verts)
                seen[key] = idx
                verts.append(key)
            tris[m, k] = idx
    return TriangleMesh(np.array(verts, dtype=float), tris)


def _load_stl_binary(data: bytes, path: Path) -> TriangleMesh:
    (count,) = struct.unpack_from("<I", data, _BINARY_STL_HEADER)
    expected = _BINARY_STL_HEADER + 4 + count * _BINARY_STL_RECORD
    if len(data) < expected:
        raise ParseError(f"truncated binary STL {path} ({count} facets declared)",
                         offset=len(data))
    body = np.frombuffer(data, dtype=np.uint8,
                         count=count * _BINARY_STL_RECORD,
                         offset=_BINARY_STL_HEADER + 4)
    records = body.reshape(count, _BINARY_STL_RECORD)
    floats = records[:, :48].copy().view("<f4").reshape(count, 12)
    tri_verts = floats[:, 3:12].astype(np.float64).reshape(count, 3, 3)
    return _weld(tri_verts)


def _load_stl_ascii(data: bytes, path: Path) -> TriangleMesh:
    text = data.decode("ascii", errors="replace")
    tri_verts: list[list[float]] = []
    current: list[list[float]] = []
    offset = 0
    for line in text.splitlines(keepends=True):
        stripped = line.strip()
        if stripped.startswith("vertex"):
            parts = stripped.split()
            if len(parts) != 4:
                raise ParseError(f"malformed vertex line in {path}", offset=offset)
            try:
                current.append([float(x) for x in parts[1:]])
            except ValueError as exc:
                raise ParseError(f"bad float in {path}: {exc}", offset=offset) from exc
        elif stripped.startswith("endfacet"):
            if len(current) != 3:
                raise ParseError(f"facet with {len(current)} vertices in {path}", offset=offset)
            tri_verts.append(current)
            current = []
        offset += len(line)
    if current:
        raise ParseError(f"unterminated facet in {path}", offset=offset)
    if not tri_verts:
        raise EmptyMesh(str(path))
    return _weld(np.array(tri_verts, dtype=float))


def _load_obj(path: Path) -> TriangleMesh:
    verts: list[list[float]] = []
    tris: list[list[int]] = []
    offset = 0
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for line in fh:
            stripped = line.strip()
            if stripped.startswith("v "):
                parts = stripped.split()
                if len(parts) < 4:
                    raise ParseError(f"malformed vertex in {path}", offset=offset)
                try:
                    verts.append([float(x) for x in parts[1:4]])
                except ValueError as exc:
                    raise ParseError(f"bad float in {path}: {exc}", offset=offset) from exc
            elif stripped.startswith("f "):
                refs = stripped.split()[1:]
                if len(refs) != 3:
                    raise ParseError(
                        f"non-triangular face ({len(refs)} vertices) in {path}; "
                        "triangulate before loading", offset=offset)
                idx = []
                for ref in refs:
                    head = ref.split("/")[0]
                    try:
                        i = int(head)
                    except ValueError as exc:
                        raise ParseError(f"bad face index in {path}: {ref!r}",
                                         offset=offset) from exc
                    idx.append(i - 1 if i > 0 else len(verts) + i)
                tris.append(idx)
            offset += len(line)
    if not tris:
        raise EmptyMesh(str(path))
    try:
        return TriangleMesh(np.array(verts, dtype=float), np.array(tris, dtype=np.int64))
    except ValueError as exc:
        raise ParseError(f"inconsistent OBJ data in {path}: {exc}", offset=offset) from exc


def _facet_normals(mesh: TriangleMesh) -> np.ndarray:
    v0, e1, e2 = mesh.triangle_corners()
    n = np.cross(e1, e2)
    lengths = np.linalg.norm(n, axis=1, keepdims=True)
    return n / np.where(lengths > 0, lengths, 1.0)


def _save_stl_binary(mesh: TriangleMesh, path: Path) -> None:
    count = len(mesh)
    normals = _facet_normals(mesh).astype("<f4")
    corners = mesh.vertices[mesh.triangles].astype("<f4")  # (M, 3, 3)
    records = np.zeros(count, dtype=np.dtype([
        ("normal", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")]))
    records["normal"] = normals
    records["v"] = corners
    with open(path, "wb") as fh:
        fh.write(b"ventronav binary STL".ljust(_BINARY_STL_HEADER, b" "))
        fh.write(struct.pack("<I", count))
        fh.write(records.tobytes())


def _save_stl_ascii(mesh: TriangleMesh, path: Path) -> None:
    normals = _facet_normals(mesh)
    corners = mesh.vertices[mesh.triangles]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("solid ventronav\n")
        for n, tri in zip(normals, corners):
            fh.write(f"  facet normal {n[0]:.17g} {n[1]:.17g} {n[2]:.17g}\n")
            fh.write("    outer loop\n")
            for v in tri:
                fh.write(f"      vertex {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
            fh.write("    endloop\n")
            fh.write("  endfacet\n")
        fh.write("endsolid ventronav\n")


def _save_obj(mesh: TriangleMesh, path: Path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("# ventronav mesh, units mm\n")
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for t in mesh.triangles:
            fh.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")

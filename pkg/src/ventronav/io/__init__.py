"""File formats, the synthetic phantom generator, and study reports."""

from .mesh_io import load_mesh, save_mesh
from .phantom import PhantomParams, generate_phantom, load_params
from .report import render_figures, summarize_csv, write_report
from .scenario import Scenario, canonical_json, load_landmarks, save_landmarks

__all__ = [
    "PhantomParams",
    "Scenario",
    "canonical_json",
    "generate_phantom",
    "load_landmarks",
    "load_mesh",
    "load_params",
    "render_figures",
    "save_landmarks",
    "save_mesh",
    "summarize_csv",
    "write_report",
]

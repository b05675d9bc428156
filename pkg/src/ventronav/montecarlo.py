"""Monte Carlo harness: repeated end-to-end sessions over a scenario.

Each trial acquires all seven landmarks with the scenario's noise model,
registers, and evaluates the target registration error at the planned entry
point. Per-trial RNG streams are derived from (master seed, noise stream,
trial index), so results are reproducible and independent of how trials are
distributed across workers.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .acquisition import NoiseModel, VirtualScene, simulate_session
from .guidance import compute_tre
from .landmarks import LandmarkId
from .registration import estimate_similarity


@dataclass(frozen=True)
class TrialResult:
    trial: int
    seed: str  # "master:stream:trial", reproduces the trial's RNG
    rmse: float
    tre: float
    scale: float
    residuals: dict[LandmarkId, float]


def trial_rng(master_seed: int, stream: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((master_seed, stream, trial)))


def run_trial(scene: VirtualScene, scenario, noise: NoiseModel, master_seed: int,
              trial: int, picks_per_landmark: int = 1) -> TrialResult:
    rng = trial_rng(master_seed, noise.stream, trial)
    world, _spreads = simulate_session(scene, scenario.camera, noise, rng,
                                       picks_per_landmark=picks_per_landmark,
                                       standoff_mm=scenario.standoff_mm)
    reg = estimate_similarity(scenario.model_landmarks, world,
                              scenario.scale_mode, scenario.scale_bounds)
    true_entry = scenario.model_to_world_truth.apply(scenario.planned_entry_model)
    tre = compute_tre(reg, scenario.planned_entry_model, true_entry)
    return TrialResult(
        trial=trial,
        seed=f"{master_seed}:{noise.stream}:{trial}",
        rmse=reg.rmse,
        tre=tre,
        scale=reg.transform.scale,
        residuals=reg.residuals,
    )


def _run_chunk(scenario, head_mesh, ventricle_mesh, noise: NoiseModel,
               master_seed: int, trials: list[int], picks_per_landmark: int) -> list[TrialResult]:
    scene = VirtualScene(
        head_mesh=head_mesh.transformed(scenario.model_to_world_truth),
        ventricle_mesh=ventricle_mesh,
        model_to_world_truth=scenario.model_to_world_truth,
        model_landmarks=scenario.model_landmarks,
    )
    return [run_trial(scene, scenario, noise, master_seed, t, picks_per_landmark)
            for t in trials]


def run_study(scenario, trials: int, master_seed: int,
              noise: NoiseModel | None = None, picks_per_landmark: int = 1,
              workers: int = 1) -> list[TrialResult]:
    """Run `trials` independent sessions; output order and values are
    independent of the worker count."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    noise = noise if noise is not None else scenario.noise
    head = scenario.load_head_mesh()
    ventricles = scenario.load_ventricle_mesh()

    if workers <= 1:
        return _run_chunk(scenario, head, ventricles, noise, master_seed,
                          list(range(trials)), picks_per_landmark)

    chunks = np.array_split(np.arange(trials), min(workers, trials))
    results: list[TrialResult] = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_chunk, scenario, head, ventricles, noise,
                               master_seed, chunk.tolist(), picks_per_landmark)
                   for chunk in chunks if len(chunk)]
        for fut in futures:  # futures are in trial order already
            results.extend(fut.result())
    return results

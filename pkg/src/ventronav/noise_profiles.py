"""Named sensor-noise profiles.

The calibrated profile reproduces the expert-study accuracy figure: its
magnitudes were fixed once by the Monte Carlo sweep in
scripts/calibrate_noise.py, which scales a unit profile until the mean
end-to-end registration RMSE over the default phantom equals 2.54 mm.
Re-run that script if the acquisition pipeline or the default phantom
changes, and paste the values it prints here.
"""

from __future__ import annotations

import json
from pathlib import Path

from .acquisition import NoiseModel
from .errors import ParseError

# relative composition of the error budget before global scaling: aim jitter,
# depth noise, and pose drift all contribute at plausible handheld magnitudes
UNIT_PROFILE = NoiseModel(
    aim_sigma_px=2.0,
    depth_sigma_mm=1.0,
    depth_bias_mm=0.0,
    pose_rot_sigma_deg=0.10,
    pose_trans_sigma_mm=1.0,
)

# calibration output (see module docstring): with this scale the default
# phantom yields mean RMSE 2.5400 mm over 20k trials (2.5399 mm on an
# independent verification seed)
CALIBRATION_SCALE = 1.4304

CALIBRATED_NOISE = UNIT_PROFILE.scaled(CALIBRATION_SCALE)

PROFILES: dict[str, NoiseModel] = {
    "calibrated": CALIBRATED_NOISE,
    "zero": NoiseModel.zero(),
}


def resolve_noise_profile(name_or_path: str) -> NoiseModel:
    """Named profile ('calibrated', 'zero') or path to a NoiseModel JSON file."""
    if name_or_path in PROFILES:
        return PROFILES[name_or_path]
    path = Path(name_or_path)
    if path.exists():
        try:
            return NoiseModel.from_dict(json.loads(path.read_text(encoding="utf-8")))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"invalid noise profile {path}: {exc}") from exc
    raise ParseError(f"unknown noise profile {name_or_path!r} "
                     f"(expected one of {sorted(PROFILES)} or a JSON file)")

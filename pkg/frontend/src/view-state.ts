/** Camera orbit, overlay toggles, and the phase banner shown to the user. */

import { Vec3 } from './api.js';

export interface OrbitState {
  azimuthDeg: number;
  elevationDeg: number;
  distance: number;
  target: Vec3;
}

export interface OverlayToggles {
  landmarkSpheres: boolean;
  ventricleOverlay: boolean;
  catheterSegment: boolean;
  numericReadouts: boolean;
  guideMarkers: boolean;
}

export interface ViewState {
  orbit: OrbitState;
  cursorLocked: boolean;
  banner: string;
  toggles: OverlayToggles;
}

const MIN_ELEVATION = -85;
const MAX_ELEVATION = 85;
const MIN_DISTANCE = 80;
const MAX_DISTANCE = 2500;

export function createViewState(target: Vec3 = [0, 0, 0]): ViewState {
  return {
    orbit: { azimuthDeg: 30, elevationDeg: 20, distance: 700, target },
    cursorLocked: false,
    banner: '',
    toggles: {
      landmarkSpheres: true,
      ventricleOverlay: true,
      catheterSegment: true,
      numericReadouts: true,
      guideMarkers: true,
    },
  };
}

export function applyOrbitDrag(state: ViewState, dxPx: number, dyPx: number): void {
  if (state.cursorLocked) return;
  state.orbit.azimuthDeg = (state.orbit.azimuthDeg - dxPx * 0.4) % 360;
  state.orbit.elevationDeg = Math.min(
    MAX_ELEVATION,
    Math.max(MIN_ELEVATION, state.orbit.elevationDeg + dyPx * 0.4),
  );
}

export function applyZoom(state: ViewState, wheelDelta: number): void {
  const factor = Math.exp(wheelDelta * 0.001);
  state.orbit.distance = Math.min(MAX_DISTANCE, Math.max(MIN_DISTANCE, state.orbit.distance * factor));
}

export function orbitEye(orbit: OrbitState): Vec3 {
  const az = (orbit.azimuthDeg * Math.PI) / 180;
  const el = (orbit.elevationDeg * Math.PI) / 180;
  return [
    orbit.target[0] + orbit.distance * Math.cos(el) * Math.cos(az),
    orbit.target[1] + orbit.distance * Math.cos(el) * Math.sin(az),
    orbit.target[2] + orbit.distance * Math.sin(el),
  ];
}

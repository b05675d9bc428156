/** DOM entry point: wires the service client, the 3D viewer, and the controls. */

import { ApiClient, PosePayload, Vec3 } from './api.js';
import { ToastQueue } from './toasts.js';
import { applyOrbitDrag, applyZoom, createViewState } from './view-state.js';
import { createViewer, meshCentroid } from './viewer.js';
import { WorkbenchSession } from './workflow.js';

const SERVICE_URL = new URLSearchParams(location.search).get('service') ?? 'http://127.0.0.1:8765';
const SCENARIO_ID = new URLSearchParams(location.search).get('scenario') ?? 'default';
const MARKER_POST_INTERVAL_MS = 50; // stay under the 30/s service cap

const IDENTITY_ROTATION = [
  [1, 0, 0],
  [0, 1, 0],
  [0, 0, 1],
];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

async function boot(): Promise<void> {
  const root = document.getElementById('app');
  if (!root) throw new Error('missing #app container');

  const banner = el('div', 'banner', 'Connecting…');
  const stage = el('div', 'stage');
  const sidebar = el('div', 'sidebar');
  const toastBox = el('div', 'toasts');
  root.append(banner, stage, sidebar, toastBox);

  const toasts = new ToastQueue((items) => {
    toastBox.replaceChildren(...items.map((t) => el('div', 'toast', t.message)));
  });

  const api = new ApiClient(SERVICE_URL);
  const session = new WorkbenchSession(api, (msg) => toasts.push(msg));
  const viewer = createViewer(stage);
  const view = createViewState();

  // controls

  const buttons = el('div', 'buttons');
  const readouts = el('div', 'readouts');
  const catheterBox = el('div', 'catheter');
  sidebar.append(buttons, readouts, catheterBox);

  function button(label: string, onClick: () => void): HTMLButtonElement {
    const b = el('button', 'ctl', label);
    b.addEventListener('click', onClick);
    buttons.append(b);
    return b;
  }

  const send = (event: Parameters<WorkbenchSession['send']>[0]) => {
    void session.send(event);
  };

  button('Acquire (center cursor)', () => {
    const rect = stage.getBoundingClientRect();
    const ray = viewer.pickRay(rect.left + rect.width / 2, rect.top + rect.height / 2);
    send({ type: 'acquire_aim', ray });
  });
  button('Delete picks', () => send({ type: 'delete' }));
  button('Back', () => send({ type: 'back' }));
  button('Next', () => send({ type: 'next' }));
  button('Register', () => send({ type: 'register' }));
  button('Confirm', () => send({ type: 'confirm' }));
  button('Delete entry', () => send({ type: 'delete_entry' }));
  button('Reset', () => send({ type: 'reset' }));

  // catheter drive: depth along the planned axis plus free offsets
  const depthSlider = el('input') as HTMLInputElement;
  depthSlider.type = 'range';
  depthSlider.min = '-20';
  depthSlider.max = '120';
  depthSlider.value = '0';
  const lateralX = depthSlider.cloneNode() as HTMLInputElement;
  lateralX.min = '-30';
  lateralX.max = '30';
  lateralX.value = '0';
  const lateralY = lateralX.cloneNode() as HTMLInputElement;
  lateralY.value = '0';
  catheterBox.append(
    el('div', 'label', 'Catheter depth along plan [mm]'), depthSlider,
    el('div', 'label', 'Free offset [mm]'), lateralX, lateralY,
  );

  let lastMarkerPost = 0;
  let lastPose: PosePayload | null = null;

  function postMarker(): void {
    const snap = session.snapshot;
    const scenario = session.scenario;
    if (!snap || !scenario || snap.phase !== 'catheter_tracking') return;
    if (!snap.entry || !snap.planned_target_world) return;
    const now = performance.now();
    if (now - lastMarkerPost < MARKER_POST_INTERVAL_MS) return;
    lastMarkerPost = now;

    const entry = snap.entry.position;
    const target = snap.planned_target_world;
    const axis = norm3(sub3(target, entry));
    const side = norm3(cross3(axis, [0, 0, 1]));
    const up = cross3(side, axis);
    const depth = Number(depthSlider.value);
    const tip = add3(
      add3(entry, scale3(axis, depth)),
      add3(scale3(side, Number(lateralX.value)), scale3(up, Number(lateralY.value))),
    );
    // input pose for the virtual tool: identity orientation, marker placed so
    // the tool tip lands where the handles point
    const pose: PosePayload = {
      rotation: IDENTITY_ROTATION,
      translation: sub3(tip, scenario.catheter_offset) as Vec3,
    };
    lastPose = pose;
    send({ type: 'marker_update', pose });
  }

  for (const slider of [depthSlider, lateralX, lateralY]) {
    slider.addEventListener('input', postMarker);
  }

  // pointer interaction: orbit on drag, pick on click

  let dragging = false;
  let moved = false;
  let last: [number, number] = [0, 0];
  stage.addEventListener('pointerdown', (e) => {
    dragging = true;
    moved = false;
    last = [e.clientX, e.clientY];
  });
  stage.addEventListener('pointermove', (e) => {
    if (!dragging) return;
    const dx = e.clientX - last[0];
    const dy = e.clientY - last[1];
    if (Math.abs(dx) + Math.abs(dy) > 2) moved = true;
    last = [e.clientX, e.clientY];
    applyOrbitDrag(view, dx, dy);
    viewer.applyOrbit(view.orbit);
  });
  stage.addEventListener('pointerup', (e) => {
    dragging = false;
    if (moved) return;
    const snap = session.snapshot;
    if (!snap) return;
    const ray = viewer.pickRay(e.clientX, e.clientY);
    if (snap.phase === 'landmarking') send({ type: 'acquire_aim', ray });
    else if (snap.phase === 'entry_point') send({ type: 'place_entry', ray });
  });
  stage.addEventListener('wheel', (e) => {
    e.preventDefault();
    applyZoom(view, e.deltaY);
    viewer.applyOrbit(view.orbit);
  });
  window.addEventListener('resize', () => viewer.resize());

  // snapshot -> display

  session.onSnapshot((snap) => {
    banner.textContent = session.banner();
    view.banner = banner.textContent ?? '';
    readouts.replaceChildren(
      ...session.readouts().map((r) =>
        el('div', 'readout', `${r.label}: ${r.value}${r.unit ? ` ${r.unit}` : ''}`),
      ),
    );
    viewer.setPicks(snap.picks);
    viewer.setRegistration(snap.registration);
    viewer.setEntry(snap.entry ? snap.entry.position : null);
    if (session.scenario) {
      viewer.setGuides(session.scenario.true_world_landmarks, snap.current_landmark);
    }
    if (snap.phase === 'catheter_tracking' && lastPose && session.scenario) {
      const origin = lastPose.translation;
      const tip = add3(origin, session.scenario.catheter_offset);
      viewer.setCatheter(origin, tip);
    } else {
      viewer.setCatheter(null, null);
    }
  });

  await session.start(SCENARIO_ID);
  const head = await api.getMesh(SCENARIO_ID, 'head');
  const ventricles = await api.getMesh(SCENARIO_ID, 'ventricles');
  viewer.setHead(head);
  viewer.setVentricles(ventricles);
  view.orbit.target = meshCentroid(head);
  view.orbit.distance = 650;
  viewer.applyOrbit(view.orbit);
}

function sub3(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

function add3(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

function scale3(a: Vec3, k: number): Vec3 {
  return [a[0] * k, a[1] * k, a[2] * k];
}

function cross3(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

function norm3(a: Vec3): Vec3 {
  const n = Math.hypot(a[0], a[1], a[2]) || 1;
  return [a[0] / n, a[1] / n, a[2] / n];
}

void boot().catch((err) => {
  const root = document.getElementById('app');
  if (root) root.textContent = `workbench failed to start: ${err}`;
  console.error(err);
});

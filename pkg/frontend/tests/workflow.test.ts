import { describe, expect, it } from 'vitest';

import { ApiClient, EventResponse, ScenarioInfo, Snapshot } from '../src/api.js';
import {
  EMPTY_VALUE,
  WorkbenchSession,
  buildReadouts,
  displayValue,
  formatBanner,
} from '../src/workflow.js';
import { ToastQueue } from '../src/toasts.js';

function snapshot(overrides: Partial<Snapshot>): Snapshot {
  return {
    id: 's0',
    scenario: 'default',
    created_at: 'now',
    event_counter: 0,
    phase: 'landmarking',
    current_landmark: 'right_tragus',
    current_landmark_display: 'Right Tragus',
    pick_counts: {},
    picks: {},
    rmse_mm: null,
    scale: null,
    residuals_mm: null,
    condition: null,
    registration: null,
    tre_mm: null,
    planned_target_world: null,
    entry: null,
    tip_feedback: null,
    ...overrides,
  };
}

const SCENARIO: ScenarioInfo = {
  id: 'default',
  name: 'phantom',
  landmarks: ['right_tragus'],
  landmark_display_names: ['Right Tragus'],
  true_world_landmarks: { right_tragus: [0, 0, 0] },
  catheter_offset: [0, 0, 150],
  has_planned_entry: true,
  metadata: {},
};

/** Minimal scripted service: returns queued responses in order. */
function scriptedApi(script: Array<{ status: number; body: unknown }>): ApiClient {
  let call = 0;
  return new ApiClient('http://svc', async () => {
    const step = script[Math.min(call++, script.length - 1)]!;
    return new Response(JSON.stringify(step.body), {
      status: step.status,
      headers: { 'content-type': 'application/json' },
    });
  });
}

describe('display contract', () => {
  it('renders snapshot numerics verbatim, never reformatted', () => {
    const rmse = 2.5360122233445566;
    const snap = snapshot({
      phase: 'registered',
      current_landmark: null,
      current_landmark_display: null,
      rmse_mm: rmse,
      scale: 1.0188490631160272,
    });
    const readouts = buildReadouts(snap);
    expect(readouts.find((r) => r.label === 'RMSE')?.value).toBe(String(rmse));
    expect(readouts.find((r) => r.label === 'Scale')?.value).toBe('1.0188490631160272');
    expect(readouts.find((r) => r.label === 'TRE')?.value).toBe(EMPTY_VALUE);
  });

  it('shows tip feedback fields straight from the snapshot', () => {
    const snap = snapshot({
      phase: 'catheter_tracking',
      current_landmark: null,
      current_landmark_display: null,
      tip_feedback: {
        distance_to_ventricle_mm: 3.25,
        inside: false,
        deviation_from_plan_mm: 1.125,
        depth_along_plan_mm: 30.5,
      },
    });
    const byLabel = Object.fromEntries(buildReadouts(snap).map((r) => [r.label, r.value]));
    expect(byLabel['Tip to ventricle']).toBe('3.25');
    expect(byLabel['Inside ventricle']).toBe('false');
    expect(byLabel['Deviation from plan']).toBe('1.125');
    expect(byLabel['Depth along plan']).toBe('30.5');
  });

  it('banner names the landmark the server expects next', () => {
    expect(formatBanner(snapshot({}))).toBe('Target: Right Tragus');
    expect(formatBanner(snapshot({ current_landmark_display: 'Left Tragus' })))
      .toBe('Target: Left Tragus');
    const registered = snapshot({
      phase: 'registered',
      rmse_mm: 2.54,
      current_landmark: null,
      current_landmark_display: null,
    });
    expect(formatBanner(registered)).toContain('2.54');
  });

  it('displayValue keeps null as a placeholder and numbers exact', () => {
    expect(displayValue(null)).toBe(EMPTY_VALUE);
    expect(displayValue(0)).toBe('0');
    expect(displayValue(2.5399999999)).toBe('2.5399999999');
    expect(displayValue(true)).toBe('true');
  });
});

describe('WorkbenchSession', () => {
  it('starts a session and publishes snapshots', async () => {
    const api = scriptedApi([
      { status: 200, body: [SCENARIO] },
      { status: 201, body: snapshot({}) },
    ]);
    const session = new WorkbenchSession(api);
    const seen: string[] = [];
    session.onSnapshot((snap) => seen.push(snap.phase));
    await session.start('default');
    expect(session.banner()).toBe('Target: Right Tragus');
    expect(seen).toEqual(['landmarking']);
  });

  it('turns 409 reasons into toasts and keeps the snapshot', async () => {
    const reason = 'all seven landmarks need picks';
    const api = scriptedApi([
      { status: 200, body: [SCENARIO] },
      { status: 201, body: snapshot({}) },
      { status: 409, body: { detail: reason } },
    ]);
    const toasts: string[] = [];
    const session = new WorkbenchSession(api, (msg) => toasts.push(msg));
    await session.start('default');
    const before = session.snapshot;
    const report = await session.send({ type: 'register' });
    expect(report).toBeNull();
    expect(toasts).toEqual([reason]);
    expect(session.snapshot).toBe(before);
  });

  it('applies accepted events to the snapshot', async () => {
    const after = snapshot({ pick_counts: { right_tragus: 1 } });
    const response: EventResponse = {
      snapshot: after,
      report: {
        event: 'acquire', phase: 'landmarking', current_landmark: 'right_tragus',
        rmse_mm: null, scale: null, tre_mm: null, tip_feedback: null, message: '',
      },
    };
    const api = scriptedApi([
      { status: 200, body: [SCENARIO] },
      { status: 201, body: snapshot({}) },
      { status: 200, body: response },
    ]);
    const session = new WorkbenchSession(api);
    await session.start('default');
    const report = await session.send({ type: 'acquire', point: [0, 0, 0] });
    expect(report?.event).toBe('acquire');
    expect(session.snapshot?.pick_counts['right_tragus']).toBe(1);
  });

  it('rethrows non-rejection failures', async () => {
    const api = scriptedApi([
      { status: 200, body: [SCENARIO] },
      { status: 201, body: snapshot({}) },
      { status: 500, body: { detail: 'defect' } },
    ]);
    const session = new WorkbenchSession(api);
    await session.start('default');
    await expect(session.send({ type: 'next' })).rejects.toMatchObject({ status: 500 });
  });
});

describe('ToastQueue', () => {
  it('pushes and expires toasts', () => {
    const timers: Array<() => void> = [];
    const states: number[] = [];
    const queue = new ToastQueue((items) => states.push(items.length), 1000,
      (fn) => timers.push(fn));
    queue.push('one');
    queue.push('two');
    expect(states).toEqual([1, 2]);
    timers[0]!();
    expect(states).toEqual([1, 2, 1]);
    timers[1]!();
    expect(queue.toasts).toHaveLength(0);
  });
});

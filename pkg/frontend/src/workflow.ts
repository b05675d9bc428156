/**
 * Session controller: owns the latest snapshot, forwards events, and turns
 * snapshot fields into display strings without altering the numbers.
 *
 * Rejected events (409) surface through the toast callback with the server's
 * reason and leave the snapshot untouched.
 */

import {
  ApiClient,
  EffectReport,
  ScenarioInfo,
  ServiceError,
  SessionEvent,
  Snapshot,
} from './api.js';

export interface Readout {
  label: string;
  value: string; // verbatim String(snapshot field), or the placeholder
  unit: string;
}

export const EMPTY_VALUE = '–';

/** Verbatim display form of a snapshot numeric; no rounding, no recompute. */
export function displayValue(value: number | boolean | null | undefined): string {
  if (value === null || value === undefined) return EMPTY_VALUE;
  return String(value);
}

export function formatBanner(snapshot: Snapshot): string {
  switch (snapshot.phase) {
    case 'landmarking':
      // always names the landmark the server expects next
      return `Target: ${snapshot.current_landmark_display ?? EMPTY_VALUE}`;
    case 'registered':
      return `Registered – RMSE ${displayValue(snapshot.rmse_mm)} mm – confirm or go back`;
    case 'entry_point':
      return 'Place the catheter entry point on the head surface';
    case 'catheter_tracking':
      return 'Catheter tracking';
  }
}

export function buildReadouts(snapshot: Snapshot): Readout[] {
  const fb = snapshot.tip_feedback;
  return [
    { label: 'RMSE', value: displayValue(snapshot.rmse_mm), unit: 'mm' },
    { label: 'Scale', value: displayValue(snapshot.scale), unit: '' },
    { label: 'TRE', value: displayValue(snapshot.tre_mm), unit: 'mm' },
    { label: 'Tip to ventricle', value: displayValue(fb?.distance_to_ventricle_mm), unit: 'mm' },
    { label: 'Inside ventricle', value: displayValue(fb?.inside), unit: '' },
    { label: 'Deviation from plan', value: displayValue(fb?.deviation_from_plan_mm), unit: 'mm' },
    { label: 'Depth along plan', value: displayValue(fb?.depth_along_plan_mm), unit: 'mm' },
  ];
}

export type ToastFn = (message: string) => void;
export type SnapshotListener = (snapshot: Snapshot, report: EffectReport | null) => void;

export class WorkbenchSession {
  snapshot: Snapshot | null = null;
  scenario: ScenarioInfo | null = null;
  private listeners: SnapshotListener[] = [];

  constructor(
    private readonly api: ApiClient,
    private readonly toast: ToastFn = () => {},
  ) {}

  onSnapshot(listener: SnapshotListener): void {
    this.listeners.push(listener);
  }

  private publish(report: EffectReport | null): void {
    if (!this.snapshot) return;
    for (const listener of this.listeners) listener(this.snapshot, report);
  }

  async start(scenarioId: string): Promise<Snapshot> {
    const scenarios = await this.api.listScenarios();
    this.scenario = scenarios.find((s) => s.id === scenarioId) ?? null;
    if (!this.scenario) throw new Error(`unknown scenario ${scenarioId}`);
    this.snapshot = await this.api.createSession(scenarioId);
    this.publish(null);
    return this.snapshot;
  }

  /** Post one event; on 409 the server reason becomes a toast and the
   * snapshot is left as it was. Returns the report for accepted events. */
  async send(event: SessionEvent): Promise<EffectReport | null> {
    if (!this.snapshot) throw new Error('session not started');
    try {
      const { snapshot, report } = await this.api.postEvent(this.snapshot.id, event);
      this.snapshot = snapshot;
      this.publish(report);
      return report;
    } catch (err) {
      if (err instanceof ServiceError && (err.status === 409 || err.status === 429)) {
        this.toast(err.detail);
        return null;
      }
      throw err;
    }
  }

  async refresh(): Promise<Snapshot> {
    if (!this.snapshot) throw new Error('session not started');
    this.snapshot = await this.api.getSession(this.snapshot.id);
    this.publish(null);
    return this.snapshot;
  }

  banner(): string {
    return this.snapshot ? formatBanner(this.snapshot) : 'Connecting…';
  }

  readouts(): Readout[] {
    return this.snapshot ? buildReadouts(this.snapshot) : [];
  }
}

/**
 * Typed client for the ventronav session service.
 *
 * Every value the workbench displays comes out of these response payloads;
 * the client never recomputes registration numbers locally.
 */

export type Vec3 = [number, number, number];

export interface RayPayload {
  origin: Vec3;
  direction: Vec3;
}

export interface PosePayload {
  rotation: number[][];
  translation: Vec3;
}

export interface ConditionInfo {
  classification: string;
  condition_ratio: number;
}

export interface RegistrationInfo {
  scale: number;
  rotation: number[][];
  quat: number[];
  translation: Vec3;
}

export interface TipFeedbackInfo {
  distance_to_ventricle_mm: number;
  inside: boolean | null;
  deviation_from_plan_mm: number | null;
  depth_along_plan_mm: number | null;
}

export interface EntryInfo {
  position: Vec3;
  planned_model: Vec3 | null;
}

export interface Snapshot {
  id: string;
  scenario: string;
  created_at: string;
  event_counter: number;
  phase: 'landmarking' | 'registered' | 'entry_point' | 'catheter_tracking';
  current_landmark: string | null;
  current_landmark_display: string | null;
  pick_counts: Record<string, number>;
  picks: Record<string, Vec3[]>;
  rmse_mm: number | null;
  scale: number | null;
  residuals_mm: Record<string, number> | null;
  condition: ConditionInfo | null;
  registration: RegistrationInfo | null;
  tre_mm: number | null;
  planned_target_world: Vec3 | null;
  entry: EntryInfo | null;
  tip_feedback: TipFeedbackInfo | null;
}

export interface EffectReport {
  event: string;
  phase: string;
  current_landmark: string | null;
  rmse_mm: number | null;
  scale: number | null;
  tre_mm: number | null;
  tip_feedback: TipFeedbackInfo | null;
  message: string;
}

export interface EventResponse {
  snapshot: Snapshot;
  report: EffectReport;
}

export interface ScenarioInfo {
  id: string;
  name: string;
  landmarks: string[];
  landmark_display_names: string[];
  true_world_landmarks: Record<string, Vec3>;
  catheter_offset: Vec3;
  has_planned_entry: boolean;
  metadata: Record<string, unknown>;
}

export interface MeshPayload {
  space: 'world' | 'model';
  positions: number[];
  indices: number[];
}

export type SessionEvent =
  | { type: 'acquire'; point: Vec3 }
  | { type: 'acquire_aim'; ray: RayPayload }
  | { type: 'delete' }
  | { type: 'next' }
  | { type: 'back' }
  | { type: 'register' }
  | { type: 'confirm' }
  | { type: 'place_entry'; ray: RayPayload }
  | { type: 'delete_entry' }
  | { type: 'marker_update'; pose: PosePayload }
  | { type: 'reset' };

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`service ${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ServiceError(response.status, detail);
    }
    if (response.status === 204) return undefined as T;
    return (await response.json()) as T;
  }

  listScenarios(): Promise<ScenarioInfo[]> {
    return this.request('/scenarios');
  }

  getMesh(scenarioId: string, which: 'head' | 'ventricles'): Promise<MeshPayload> {
    return this.request(`/scenarios/${scenarioId}/meshes/${which}`);
  }

  createSession(scenarioId: string): Promise<Snapshot> {
    return this.request('/sessions', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ scenario: scenarioId }),
    });
  }

  getSession(sessionId: string): Promise<Snapshot> {
    return this.request(`/sessions/${sessionId}`);
  }

  postEvent(sessionId: string, event: SessionEvent): Promise<EventResponse> {
    return this.request(`/sessions/${sessionId}/events`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(event),
    });
  }

  async getLog(sessionId: string): Promise<string> {
    const response = await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/log`);
    if (!response.ok) throw new ServiceError(response.status, response.statusText);
    return response.text();
  }

  deleteSession(sessionId: string): Promise<void> {
    return this.request(`/sessions/${sessionId}`, { method: 'DELETE' });
  }
}

// Typed client for the guidance service JSON API. The UI never computes
// trajectories; everything kinematic comes from these calls.

export type Pose = [number, number, number]; // x, y, theta (m, m, rad)

export interface Arena {
  half_extent: number;
  markers: [number, number][];
  obstacles: [number, number, number][]; // x, y, radius (display only)
}

export interface SessionState {
  id: string;
  seed: number;
  arena: Arena;
  robot_pose: Pose;
  target_marker: number;
  status: "active" | "reached" | "abandoned";
  step_count: number;
  started_at: number;
  transcript?: TranscriptEntry[];
}

export interface TranscriptEntry {
  command: string;
  trajectory: Pose[];
  pose: Pose;
  timestamp: number;
  wall_clamped: boolean;
}

export interface CommandResult {
  trajectory: Pose[];
  pose: Pose;
  status: SessionState["status"];
  step_count: number;
  wall_clamped: boolean;
}

export interface SessionReport {
  final_error_m: number;
  num_steps: number;
  elapsed_s: number;
  status: SessionState["status"];
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const res = await fetch(url, init);
  const body = await res.json().catch(() => ({}));
  if (!res.ok) {
    throw new ApiError(res.status, (body as { error?: string }).error ?? res.statusText);
  }
  return body as T;
}

export class GuidanceApi {
  constructor(public baseUrl: string) {}

  health(): Promise<{ status: string; version: string; checkpoint_hash: string }> {
    return request(`${this.baseUrl}/health`);
  }

  createSession(targetMarker: number, seed?: number): Promise<SessionState> {
    return request(`${this.baseUrl}/session`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(
        seed === undefined
          ? { target_marker: targetMarker }
          : { target_marker: targetMarker, seed },
      ),
    });
  }

  sendCommand(sessionId: string, text: string): Promise<CommandResult> {
    return request(`${this.baseUrl}/session/${sessionId}/command`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    });
  }

  getSession(sessionId: string): Promise<SessionState> {
    return request(`${this.baseUrl}/session/${sessionId}`);
  }

  getReport(sessionId: string): Promise<SessionReport> {
    return request(`${this.baseUrl}/session/${sessionId}/report`);
  }
}

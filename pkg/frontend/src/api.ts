// Typed client for the session service. All field names mirror the
// server's snake_case JSON exactly.

export interface ServiceConfig {
  delta_yaw: number;
  delta_pitch: number;
  num_classes: number;
  yaw_degrees: number[];
  pitch_degrees: number[];
  action_interval_ms: number;
}

export interface PoseBody {
  x: number;
  y: number;
  z: number;
  yaw: number;
  pitch: number;
}

export interface SessionCreated {
  session_id: string;
  mode: string;
  step: number;
  scenario_id: string;
  delta_yaw: number;
  delta_pitch: number;
}

export interface FramePayload {
  session_id: string;
  step: number;
  png_base64: string;
  pose: PoseBody;
  scenario_id: string;
  mode: string;
  finished: boolean;
}

export interface ExportSummary {
  count: number;
  yaw_histogram: number[];
  pitch_histogram: number[];
  path: string;
}

export interface SessionStats {
  session_id: string;
  mode: string;
  step: number;
  label_count: number;
  yaw_histogram: number[];
  pitch_histogram: number[];
  finished: boolean;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export function pngDataUrl(pngBase64: string): string {
  return `data:image/png;base64,${pngBase64}`;
}

async function parseError(response: Response): Promise<ApiError> {
  let code = "http_error";
  let message = `HTTP ${response.status}`;
  try {
    const body = await response.json();
    if (body && typeof body.code === "string") {
      code = body.code;
      message = body.message ?? message;
    }
  } catch {
    // non-JSON error body: keep the generic message
  }
  return new ApiError(response.status, code, message);
}

export class SessionClient {
  constructor(private readonly base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.base + path, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  getConfig(): Promise<ServiceConfig> {
    return this.request<ServiceConfig>("/config");
  }

  createSession(body: {
    scenario: string;
    seed: number;
    mode: string;
    record?: boolean;
  }): Promise<SessionCreated> {
    return this.request<SessionCreated>("/sessions", {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  getFrame(sessionId: string): Promise<FramePayload> {
    return this.request<FramePayload>(`/sessions/${sessionId}/frame`);
  }

  postLabel(
    sessionId: string,
    cYaw: number,
    cPitch: number,
    step: number,
  ): Promise<FramePayload> {
    return this.request<FramePayload>(`/sessions/${sessionId}/label`, {
      method: "POST",
      body: JSON.stringify({ c_yaw: cYaw, c_pitch: cPitch, step }),
    });
  }

  postAction(
    sessionId: string,
    cYaw: number,
    cPitch: number,
    step: number,
  ): Promise<FramePayload> {
    return this.request<FramePayload>(`/sessions/${sessionId}/action`, {
      method: "POST",
      body: JSON.stringify({ c_yaw: cYaw, c_pitch: cPitch, step }),
    });
  }

  exportDataset(sessionId: string, path: string): Promise<ExportSummary> {
    return this.request<ExportSummary>(`/sessions/${sessionId}/export`, {
      method: "POST",
      body: JSON.stringify({ path }),
    });
  }

  getStats(sessionId: string): Promise<SessionStats> {
    return this.request<SessionStats>(`/sessions/${sessionId}/stats`);
  }
}

/** Backend connection: SSE subscription with backoff, control POSTs. */

export interface SessionInfo {
  grid: { origin: number; horizon_s: number; bucket_s: number };
  households: number;
  demo_kettle: string;
  policy: string;
  heat_duration_s: number;
  kettle_w: number;
  cap_w: number | null;
  tick_s: number;
}

export async function fetchInfo(): Promise<SessionInfo> {
  const res = await fetch('/api/info');
  if (!res.ok) throw new Error(`info endpoint returned ${res.status}`);
  return (await res.json()) as SessionInfo;
}

export async function postControl(lines: string): Promise<void> {
  const res = await fetch('/api/control', { method: 'POST', body: lines });
  if (!res.ok) throw new Error(`control endpoint returned ${res.status}`);
}

export interface StreamCallbacks {
  onLine: (line: string) => void;
  onState: (state: 'connecting' | 'live' | 'offline') => void;
}

/** EventSource wrapper that reconnects with exponential backoff. */
export class Stream {
  private source: EventSource | null = null;
  private backoffMs = 500;
  private closed = false;

  constructor(private readonly callbacks: StreamCallbacks) {}

  connect(): void {
    if (this.closed) return;
    this.callbacks.onState('connecting');
    this.source = new EventSource('/api/stream');
    this.source.onopen = () => {
      this.backoffMs = 500;
      this.callbacks.onState('live');
    };
    this.source.onmessage = (ev) => this.callbacks.onLine(ev.data);
    this.source.onerror = () => {
      this.callbacks.onState('offline');
      this.source?.close();
      this.source = null;
      if (!this.closed) {
        setTimeout(() => this.connect(), this.backoffMs);
        this.backoffMs = Math.min(this.backoffMs * 2, 10_000);
      }
    };
  }

  close(): void {
    this.closed = true;
    this.source?.close();
  }
}

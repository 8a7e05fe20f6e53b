/**
 * Wire codec for the newline-delimited JSON protocol (see ../protocol.md).
 *
 * The dashboard decodes everything the backend streams and encodes only
 * control messages (Rotate/Press/Abort). Encoding is canonical: fixed key
 * order per kind, compact separators, so the backend and tests can compare
 * lines structurally.
 */

export interface Message {
  kind: string;
  sender: string;
  seq: number;
  sent_at: number;
  payload: Record<string, unknown>;
}

export class ProtocolError extends Error {}
export class ParseError extends ProtocolError {}
export class VersionError extends ProtocolError {
  constructor(readonly kind: string) {
    super(`unknown message kind ${kind}`);
  }
}
export class ValidationError extends ProtocolError {}

export const FIELD_ORDER: Record<string, string[]> = {
  RegisterHousehold: ['household_id', 'protocol_version', 'grid'],
  RegisterAppliance: ['appliance_id', 'appliance_kind', 'rated_w', 'protocol_version'],
  ProfileReport: ['household_id', 'grid', 'watts'],
  PoolProfileUpdate: ['broadcast_seq', 'grid', 'raw', 'biased_milli', 'cap_w'],
  BookingRequest: ['appliance_id', 'start_offset_s', 'duration_s', 'power_w'],
  BookingAck: ['op', 'booking_id', 'appliance_id', 'start_offset_s',
    'start_abs_s', 'duration_s', 'power_w', 'over_cap'],
  BookingReject: ['op', 'appliance_id', 'booking_id', 'reason'],
  CancelBooking: ['booking_id'],
  PowerOn: ['booking_id', 'appliance_id', 'start_abs_s', 'duration_s', 'power_w'],
  TickSync: [],
  MetricsSnapshot: ['member_count', 'grid', 'raw', 'biased_milli',
    'peak_w', 'peak_bucket', 'load_factor', 'cap_w'],
  Rotate: ['angle_deg'],
  Press: [],
  Abort: [],
  Demand: [],
  FrictionEcho: ['angle_deg', 'offset_s', 'friction', 'over_cap'],
  KettleStatus: ['appliance_id', 'angle_deg', 'booking', 'heating', 'led', 'origin'],
  LoadMeasurement: ['appliance_id', 'draw_w'],
};

const ENVELOPE_KEYS = ['kind', 'sender', 'seq', 'sent_at', 'payload'];
const GRID_KEYS = ['origin', 'horizon_s', 'bucket_s'];

function isPlainObject(v: unknown): v is Record<string, unknown> {
  return typeof v === 'object' && v !== null && !Array.isArray(v);
}

export function decodeLine(raw: string): Message {
  const text = raw.endsWith('\n') ? raw.slice(0, -1) : raw;
  let body: unknown;
  try {
    body = JSON.parse(text);
  } catch (err) {
    throw new ParseError(`bad JSON: ${(err as Error).message}`);
  }
  if (!isPlainObject(body)) {
    throw new ValidationError('top level must be an object');
  }
  const keys = Object.keys(body).sort().join(',');
  if (keys !== [...ENVELOPE_KEYS].sort().join(',')) {
    throw new ValidationError(`envelope keys must be ${ENVELOPE_KEYS.join('/')}`);
  }
  const kind = body.kind;
  if (typeof kind !== 'string') throw new ValidationError('kind must be a string');
  if (!(kind in FIELD_ORDER)) throw new VersionError(kind);
  if (typeof body.sender !== 'string' || body.sender.trim() === '') {
    throw new ValidationError('sender must be a non-blank string');
  }
  if (!Number.isInteger(body.seq) || (body.seq as number) < 1) {
    throw new ValidationError('seq must be an integer >= 1');
  }
  if (!Number.isInteger(body.sent_at) || (body.sent_at as number) < 0) {
    throw new ValidationError('sent_at must be an integer >= 0');
  }
  const payload = body.payload;
  if (!isPlainObject(payload)) throw new ValidationError('payload must be an object');
  const expected = FIELD_ORDER[kind];
  for (const field of expected) {
    if (!(field in payload)) throw new ValidationError(`${kind}: missing ${field}`);
  }
  for (const field of Object.keys(payload)) {
    if (!expected.includes(field)) {
      throw new ValidationError(`${kind}: unexpected field ${field}`);
    }
  }
  return {
    kind,
    sender: body.sender as string,
    seq: body.seq as number,
    sent_at: body.sent_at as number,
    payload: payload as Record<string, unknown>,
  };
}

function canonicalValue(value: unknown): unknown {
  if (isPlainObject(value)) {
    const keys = Object.keys(value);
    const order =
      keys.length === GRID_KEYS.length && GRID_KEYS.every((k) => k in value)
        ? GRID_KEYS
        : keys.sort();
    const out: Record<string, unknown> = {};
    for (const k of order) out[k] = value[k];
    return out;
  }
  return value;
}

export function encodeLine(m: Message): string {
  if (!(m.kind in FIELD_ORDER)) throw new VersionError(m.kind);
  const payload: Record<string, unknown> = {};
  for (const field of FIELD_ORDER[m.kind]) {
    if (!(field in m.payload)) {
      throw new ValidationError(`${m.kind}: missing ${field}`);
    }
    payload[field] = canonicalValue(m.payload[field]);
  }
  const body = {
    kind: m.kind,
    sender: m.sender,
    seq: m.seq,
    sent_at: m.sent_at,
    payload,
  };
  return JSON.stringify(body) + '\n';
}

/** Detects dropped or stale messages from per-sender seq counters. */
export class SequenceTracker {
  private last = new Map<string, number>();

  observe(sender: string, seq: number): { missed: number; stale: boolean } {
    const prev = this.last.get(sender);
    if (prev === undefined) {
      this.last.set(sender, seq);
      return { missed: 0, stale: false };
    }
    if (seq <= prev) return { missed: 0, stale: true };
    this.last.set(sender, seq);
    return { missed: seq - prev - 1, stale: false };
  }
}

let controlSeq = 0;

/** Mint one control-channel line; the dashboard is sender "ui". */
export function controlLine(
  kind: 'Rotate' | 'Press' | 'Abort',
  payload: Record<string, unknown> = {},
): string {
  controlSeq += 1;
  return encodeLine({
    kind,
    sender: 'ui',
    seq: controlSeq,
    sent_at: Math.floor(Date.now() / 1000),
    payload,
  });
}

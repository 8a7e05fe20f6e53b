import { CommunityPane } from './chart.js';
import { DialPane, abortButton, pressButton } from './dial.js';
import { Stream, fetchInfo } from './net.js';
import { applyLine, initialState, resetSequences, SessionState } from './state.js';

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

async function boot(): Promise<void> {
  let state: SessionState;
  try {
    const info = await fetchInfo();
    state = initialState(info.demo_kettle);
    el('session').textContent =
      `${info.households} households · kettle ${info.kettle_w} W / ` +
      `${info.heat_duration_s}s · you are ${info.demo_kettle}`;
  } catch {
    state = initialState('kettle000');
    el('badge').textContent = 'offline';
    el('badge').className = 'badge offline';
  }

  const dial = new DialPane(el<HTMLCanvasElement>('dial'), () => state.dial);
  const community = new CommunityPane(el<HTMLCanvasElement>('community'));
  const pressBtn = el<HTMLButtonElement>('press');
  const abortBtn = el<HTMLButtonElement>('abort');

  pressBtn.addEventListener('click', () => {
    state.dial.pending = true;
    render();
    pressButton();
  });
  abortBtn.addEventListener('click', () => abortButton());

  function render(): void {
    dial.render();
    community.render(state.community);
    const booked = state.dial.booking !== null;
    pressBtn.disabled = state.dial.pending || booked || state.dial.heating;
    abortBtn.disabled = !booked || state.dial.heating;
    el('gaps').textContent =
      state.missedUpdates > 0 ? `missed ${state.missedUpdates} updates` : '';
    el('error').textContent = state.dial.lastError ?? '';
  }

  const stream = new Stream({
    onLine: (line) => {
      try {
        applyLine(state, line);
      } catch {
        return; // foreign or future message kinds are not ours to break on
      }
      render();
    },
    onState: (conn) => {
      state.connection = conn;
      if (conn === 'offline') resetSequences(state); // backend may restart seqs
      const badge = el('badge');
      badge.textContent = conn;
      badge.className = `badge ${conn}`;
    },
  });
  stream.connect();
  render();
}

void boot();

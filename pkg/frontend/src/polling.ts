/**
 * Fixed-interval session polling. Each tick fetches a fresh snapshot and
 * hands it to the listener; the latest snapshot wins, overlapping ticks
 * are skipped, and errors are reported without stopping the loop.
 */

export interface Poller {
  start(): void;
  stop(): void;
  readonly running: boolean;
}

export const DEFAULT_POLL_INTERVAL_MS = 3000;

export function createPoller<T>(
  fetchSnapshot: () => Promise<T>,
  onSnapshot: (snapshot: T) => void,
  onError: (error: unknown) => void = () => undefined,
  intervalMs: number = DEFAULT_POLL_INTERVAL_MS,
): Poller {
  let timer: ReturnType<typeof setInterval> | null = null;
  let inFlight = false;

  async function tick(): Promise<void> {
    if (inFlight) {
      return;
    }
    inFlight = true;
    try {
      onSnapshot(await fetchSnapshot());
    } catch (error) {
      onError(error);
    } finally {
      inFlight = false;
    }
  }

  return {
    start() {
      if (timer !== null) {
        return;
      }
      void tick();
      timer = setInterval(() => void tick(), intervalMs);
    },
    stop() {
      if (timer !== null) {
        clearInterval(timer);
        timer = null;
      }
    },
    get running() {
      return timer !== null;
    },
  };
}

/** Job polling loop: 1 s interval with backoff, stops on Done/Failed. */

import { ApiClient, JobSnapshot } from "./api.js";

export const TERMINAL_STATUSES = new Set(["Done", "Failed"]);

export const INITIAL_POLL_MS = 1000;
export const BACKOFF_FACTOR = 1.5;
export const MAX_POLL_MS = 5000;

export type SleepFn = (ms: number) => Promise<void>;

const realSleep: SleepFn = (ms) => new Promise((resolve) => setTimeout(resolve, ms));

export function nextDelay(current: number): number {
    return Math.min(Math.round(current * BACKOFF_FACTOR), MAX_POLL_MS);
}

/** Poll until the job reaches a terminal status; every snapshot is passed
 *  to `onUpdate`. Resolves with the final snapshot. */
export async function pollJob(
    api: ApiClient,
    jobId: string,
    onUpdate: (snapshot: JobSnapshot) => void,
    sleep: SleepFn = realSleep,
): Promise<JobSnapshot> {
    let delay = INITIAL_POLL_MS;
    for (;;) {
        const snapshot = await api.jobStatus(jobId);
        onUpdate(snapshot);
        if (TERMINAL_STATUSES.has(snapshot.status)) {
            return snapshot;
        }
        await sleep(delay);
        delay = nextDelay(delay);
    }
}

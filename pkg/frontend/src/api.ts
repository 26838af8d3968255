/** Typed client for the analysis service API. */

export interface SectionInfo {
    id: string;
    display_name: string;
    item: string;
}

export interface SectionsResponse {
    schema_version: number;
    sections: SectionInfo[];
}

export interface AnalysisSubmission {
    ticker: string;
    excluded_sections: string[];
    run_relative: boolean;
    peer_tickers: string[];
}

export interface JobAccepted {
    schema_version: number;
    job_id: string;
    fingerprint: string;
}

export interface JobSnapshot {
    schema_version: number;
    id: string;
    status: string;
    progress: number;
    detail: string;
    result: string | null;
    error: string | null;
    created_at: string;
}

export interface RatingSeriesData {
    dimension: string;
    points: Record<string, number>;
}

export interface RangeStats {
    count: number;
    min: number;
    q1: number;
    median: number;
    q3: number;
    max: number;
}

export interface DimensionRanges {
    overall: RangeStats | null;
    by_mode: Record<string, RangeStats | null>;
}

export interface RatingsResponse {
    schema_version: number;
    ticker: string;
    series: RatingSeriesData[];
    ranges: Record<string, DimensionRanges>;
}

export interface ProportionSnapshot {
    fiscal_year: number;
    proportions: Record<string, number>;
    degenerate: boolean;
}

export interface ProportionsResponse {
    schema_version: number;
    ticker: string;
    snapshots: ProportionSnapshot[];
}

export interface CorrelationsResponse {
    schema_version: number;
    scope: string;
    dimensions: string[];
    matrix: (number | null)[][];
    observation_count: number;
}

export interface WinCell {
    company: string;
    section: string;
    wins: number;
}

export interface ComparisonsResponse {
    schema_version: number;
    tickers: string[];
    wins: WinCell[];
    totals: Record<string, number>;
    inconclusive: number;
    comparisons: number;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
    constructor(readonly status: number, message: string) {
        super(message);
    }
}

/** The identical request is already running; follow `jobId` instead. */
export class DuplicateJobError extends ApiError {
    constructor(readonly jobId: string, message: string) {
        super(409, message);
    }
}

async function errorMessage(response: Response): Promise<string> {
    try {
        const body = (await response.json()) as { error?: string; detail?: string };
        return body.error ?? body.detail ?? `HTTP ${response.status}`;
    } catch {
        return `HTTP ${response.status}`;
    }
}

export class ApiClient {
    constructor(
        private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
        private readonly base: string = "",
    ) {}

    private async getJson<T>(path: string): Promise<T> {
        const response = await this.fetchFn(this.base + path);
        if (!response.ok) {
            throw new ApiError(response.status, await errorMessage(response));
        }
        return (await response.json()) as T;
    }

    sections(): Promise<SectionsResponse> {
        return this.getJson("/api/sections");
    }

    async submitAnalysis(submission: AnalysisSubmission): Promise<JobAccepted> {
        const response = await this.fetchFn(this.base + "/api/analyses", {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(submission),
        });
        if (response.status === 409) {
            const body = (await response.json()) as { error: string; job_id: string };
            throw new DuplicateJobError(body.job_id, body.error);
        }
        if (!response.ok) {
            throw new ApiError(response.status, await errorMessage(response));
        }
        return (await response.json()) as JobAccepted;
    }

    jobStatus(jobId: string): Promise<JobSnapshot> {
        return this.getJson(`/api/analyses/${jobId}`);
    }

    ratings(ticker: string): Promise<RatingsResponse> {
        return this.getJson(`/api/companies/${ticker}/ratings`);
    }

    proportions(ticker: string): Promise<ProportionsResponse> {
        return this.getJson(`/api/companies/${ticker}/proportions`);
    }

    correlations(ticker: string): Promise<CorrelationsResponse> {
        return this.getJson(`/api/companies/${ticker}/correlations`);
    }

    comparisons(tickers: string[]): Promise<ComparisonsResponse> {
        return this.getJson(`/api/comparisons?tickers=${tickers.join(",")}`);
    }
}

const TICKER_PATTERN = /^[A-Za-z.\-]{1,10}$/;

export interface ValidationResult {
    ok: boolean;
    error?: string;
}

/** Mirrors the server-side preconditions so bad submissions never leave
 *  the browser: a well-formed ticker, at least one section included, and
 *  either zero or exactly two peers. */
export function validateSubmission(
    ticker: string,
    excluded: Set<string>,
    allSectionIds: string[],
    peers: string[],
): ValidationResult {
    if (!TICKER_PATTERN.test(ticker.trim())) {
        return { ok: false, error: "Enter a ticker symbol (letters, 1-10 chars)." };
    }
    const remaining = allSectionIds.filter((id) => !excluded.has(id));
    if (remaining.length === 0) {
        return { ok: false, error: "At least one section must stay included." };
    }
    if (peers.length !== 0 && peers.length !== 2) {
        return { ok: false, error: "Relative analysis needs exactly two peer tickers." };
    }
    for (const peer of peers) {
        if (!TICKER_PATTERN.test(peer)) {
            return { ok: false, error: `Invalid peer ticker: ${peer}` };
        }
    }
    return { ok: true };
}

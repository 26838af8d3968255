/** A fixture-backed stand-in for the analysis service.
 *
 * Implements the documented wire contract behind the FetchLike interface
 * so component tests can intercept every request and compare plotted
 * values against exactly what "the API" returned.
 */

import {
    ComparisonsResponse,
    CorrelationsResponse,
    FetchLike,
    ProportionsResponse,
    RatingsResponse,
    SectionsResponse,
} from "../src/api.js";

export const SECTIONS_FIXTURE: SectionsResponse = {
    schema_version: 1,
    sections: [
        { id: "ITEM_1_BUSINESS", display_name: "BUSINESS", item: "Item 1" },
        { id: "ITEM_1A_RISK_FACTORS", display_name: "RISK FACTORS", item: "Item 1A" },
        { id: "ITEM_7_MDA", display_name: "MANAGEMENT'S DISCUSSION AND ANALYSIS", item: "Item 7" },
    ],
};

export const RATINGS_FIXTURE: RatingsResponse = {
    schema_version: 1,
    ticker: "RGLD",
    series: [
        { dimension: "confidence", points: { "2021": 1.25, "2022": 1.5, "2023": 1.75 } },
        { dimension: "environment", points: { "2021": 0.5, "2022": 0.75, "2023": 1.0 } },
        { dimension: "innovation", points: { "2021": 1.0, "2022": 1.0, "2023": 1.25 } },
        { dimension: "people", points: { "2021": 0.75, "2022": 1.25, "2023": 1.5 } },
    ],
    ranges: {
        confidence: {
            overall: { count: 6, min: 1.0, q1: 1.125, median: 1.5, q3: 1.625, max: 2.0 },
            by_mode: {
                normal: { count: 3, min: 1.5, q1: 1.5, median: 1.5, q3: 1.75, max: 2.0 },
                strict: { count: 3, min: 1.0, q1: 1.0, median: 1.25, q3: 1.25, max: 1.5 },
            },
        },
        environment: {
            overall: { count: 6, min: 0.0, q1: 0.5, median: 0.75, q3: 1.0, max: 1.25 },
            by_mode: { normal: null, strict: null },
        },
        innovation: {
            overall: { count: 6, min: 0.75, q1: 1.0, median: 1.0, q3: 1.25, max: 1.5 },
            by_mode: { normal: null, strict: null },
        },
        people: { overall: null, by_mode: { normal: null, strict: null } },
    },
};

export const PROPORTIONS_FIXTURE: ProportionsResponse = {
    schema_version: 1,
    ticker: "RGLD",
    snapshots: [
        {
            fiscal_year: 2021,
            proportions: { confidence: 0.4, environment: 0.1, innovation: 0.3, people: 0.2 },
            degenerate: false,
        },
        // 2022 intentionally missing: the chart must show a gap.
        {
            fiscal_year: 2023,
            proportions: { confidence: 0.25, environment: 0.25, innovation: 0.25, people: 0.25 },
            degenerate: false,
        },
    ],
};

export const CORRELATIONS_FIXTURE: CorrelationsResponse = {
    schema_version: 1,
    scope: "all_companies",
    dimensions: ["confidence", "environment", "innovation", "people"],
    matrix: [
        [1.0, 0.12, -0.4, null],
        [0.12, 1.0, 0.05, null],
        [-0.4, 0.05, 1.0, null],
        [null, null, null, null],
    ],
    observation_count: 9,
};

export const COMPARISONS_FIXTURE: ComparisonsResponse = {
    schema_version: 1,
    tickers: ["RGLD", "IBM", "AAPL"],
    wins: [
        { company: "RGLD", section: "ITEM_1_BUSINESS", wins: 2 },
        { company: "IBM", section: "ITEM_1_BUSINESS", wins: 1 },
        { company: "IBM", section: "ITEM_7_MDA", wins: 3 },
        { company: "AAPL", section: "ITEM_1A_RISK_FACTORS", wins: 1 },
    ],
    totals: { RGLD: 2, IBM: 4, AAPL: 1 },
    inconclusive: 2,
    comparisons: 9,
};

const JOB_SEQUENCE = ["Queued", "Fetching", "Parsing", "Grading", "Comparing", "Done"];
const JOB_PROGRESS = [0.0, 0.1, 0.3, 0.6, 0.9, 1.0];

function json(body: unknown, status = 200): Response {
    return new Response(JSON.stringify(body), {
        status,
        headers: { "Content-Type": "application/json" },
    });
}

export class FixtureServer {
    requests: { url: string; method: string; body?: unknown }[] = [];
    private polls = 0;
    private jobActive = false;

    readonly fetch: FetchLike = async (url, init) => {
        const method = init?.method ?? "GET";
        const entry: { url: string; method: string; body?: unknown } = { url, method };
        if (init?.body) {
            entry.body = JSON.parse(init.body as string);
        }
        this.requests.push(entry);
        return this.route(url, method, entry.body);
    };

    private route(url: string, method: string, body: unknown): Response {
        if (url.endsWith("/api/sections")) {
            return json(SECTIONS_FIXTURE);
        }
        if (url.endsWith("/api/analyses") && method === "POST") {
            const submission = body as { ticker: string };
            if (!/^[A-Z.\-]{1,10}$/.test(submission.ticker)) {
                return json({ schema_version: 1, error: `invalid ticker ${submission.ticker}` }, 400);
            }
            if (this.jobActive) {
                return json(
                    { schema_version: 1, error: "job job-1 already running", job_id: "job-1" },
                    409,
                );
            }
            this.jobActive = true;
            this.polls = 0;
            return json({ schema_version: 1, job_id: "job-1", fingerprint: "fp" }, 202);
        }
        if (url.includes("/api/analyses/")) {
            const jobId = url.split("/api/analyses/")[1];
            if (jobId !== "job-1") {
                return json({ schema_version: 1, detail: "unknown job" }, 404);
            }
            const step = Math.min(this.polls, JOB_SEQUENCE.length - 1);
            this.polls += 1;
            const status = JOB_SEQUENCE[step];
            if (status === "Done") {
                this.jobActive = false;
            }
            return json({
                schema_version: 1,
                id: jobId,
                status,
                progress: JOB_PROGRESS[step],
                detail: status.toLowerCase(),
                result: status === "Done" ? "/api/companies/RGLD/ratings" : null,
                error: null,
                created_at: "2026-08-10T00:00:00+00:00",
            });
        }
        if (url.includes("/ratings")) {
            return json(RATINGS_FIXTURE);
        }
        if (url.includes("/proportions")) {
            return json(PROPORTIONS_FIXTURE);
        }
        if (url.includes("/correlations")) {
            return json(CORRELATIONS_FIXTURE);
        }
        if (url.includes("/api/comparisons")) {
            return json(COMPARISONS_FIXTURE);
        }
        return json({ schema_version: 1, detail: "not found" }, 404);
    }
}

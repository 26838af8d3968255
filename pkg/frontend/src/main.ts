/** DOM wiring: control rail, job card, and the four chart panels. */

import {
    ApiClient,
    ApiError,
    DuplicateJobError,
    JobSnapshot,
    SectionInfo,
    validateSubmission,
} from "./api.js";
import {
    correlationModel,
    correlationSvg,
    emptyState,
    legendHtml,
    ratingRangeModel,
    ratingRangeSvg,
    stackedProportionModel,
    stackedProportionSvg,
    winModel,
    winSvg,
} from "./charts.js";
import { pollJob } from "./poll.js";

const api = new ApiClient();

interface ViewState {
    ticker: string;
    peers: string[];
    excluded: Set<string>;
    sections: SectionInfo[];
    activeJobId: string | null;
}

const state: ViewState = {
    ticker: "",
    peers: [],
    excluded: new Set(),
    sections: [],
    activeJobId: null,
};

function el<T extends HTMLElement>(id: string): T {
    const node = document.getElementById(id);
    if (!node) {
        throw new Error(`missing element #${id}`);
    }
    return node as T;
}

function setFormError(message: string): void {
    const box = el<HTMLElement>("form-error");
    box.textContent = message;
    box.classList.toggle("hidden", message === "");
}

function renderSectionChecklist(sections: SectionInfo[]): void {
    const list = el<HTMLElement>("section-list");
    list.innerHTML = "";
    for (const section of sections) {
        const label = document.createElement("label");
        label.className = "section-row";
        const checkbox = document.createElement("input");
        checkbox.type = "checkbox";
        checkbox.value = section.id;
        checkbox.addEventListener("change", () => {
            if (checkbox.checked) {
                state.excluded.add(section.id);
            } else {
                state.excluded.delete(section.id);
            }
        });
        label.appendChild(checkbox);
        label.appendChild(
            document.createTextNode(` ${section.item}. ${section.display_name}`),
        );
        list.appendChild(label);
    }
}

function renderJobCard(snapshot: JobSnapshot | null, note = ""): void {
    const card = el<HTMLElement>("job-card");
    if (!snapshot && !note) {
        card.classList.add("hidden");
        return;
    }
    card.classList.remove("hidden");
    if (!snapshot) {
        card.innerHTML = `<p>${note}</p>`;
        return;
    }
    const pct = Math.round(snapshot.progress * 100);
    const statusClass = snapshot.status.toLowerCase();
    card.innerHTML = `
        <div class="job-head">
            <span class="job-status ${statusClass}">${snapshot.status}</span>
            <span class="job-id">job ${snapshot.id}</span>
        </div>
        <div class="progress"><div class="progress-fill" style="width:${pct}%"></div></div>
        <p class="job-detail">${snapshot.detail ?? ""}</p>
        ${snapshot.error ? `<p class="job-error">${snapshot.error}</p>` : ""}
        ${note ? `<p class="job-note">${note}</p>` : ""}
    `;
}

function renderPanel(id: string, svg: string, legend = ""): void {
    el<HTMLElement>(id).innerHTML = legend + svg;
}

async function loadAndRenderDatasets(): Promise<void> {
    const ticker = state.ticker;

    const ratings = await api.ratings(ticker);
    if (ratings.series.length === 0) {
        renderPanel("panel-ranges", emptyState("No ratings yet for this company."));
    } else {
        const model = ratingRangeModel(ratings);
        renderPanel("panel-ranges", ratingRangeSvg(model));
    }

    const proportions = await api.proportions(ticker);
    const columns = stackedProportionModel(proportions);
    if (columns.length === 0) {
        renderPanel("panel-proportions", emptyState("No priority data yet."));
    } else {
        renderPanel(
            "panel-proportions",
            stackedProportionSvg(columns),
            legendHtml(Object.keys(proportions.snapshots[0].proportions)),
        );
    }

    const correlations = await api.correlations(ticker);
    const defined = correlations.matrix.some((row) => row.some((value) => value !== null));
    if (!defined) {
        renderPanel(
            "panel-correlations",
            emptyState("Not enough observations for correlations (needs 3+ years)."),
        );
    } else {
        renderPanel(
            "panel-correlations",
            correlationSvg(correlationModel(correlations), correlations.dimensions),
        );
    }

    if (state.peers.length === 2) {
        const comparisons = await api.comparisons([ticker, ...state.peers]);
        const groups = winModel(comparisons);
        if (groups.length === 0) {
            renderPanel(
                "panel-wins",
                emptyState(
                    comparisons.comparisons > 0
                        ? `All ${comparisons.comparisons} comparisons were inconclusive.`
                        : "No comparisons recorded.",
                ),
            );
        } else {
            renderPanel("panel-wins", winSvg(groups), legendHtml(comparisons.tickers));
        }
    } else {
        renderPanel(
            "panel-wins",
            emptyState("Add two peer tickers to run the relative analysis."),
        );
    }
}

async function followJob(jobId: string, note = ""): Promise<void> {
    state.activeJobId = jobId;
    const final = await pollJob(api, jobId, (snapshot) => renderJobCard(snapshot, note));
    state.activeJobId = null;
    if (final.status === "Done") {
        await loadAndRenderDatasets();
    }
}

async function onSubmit(event: Event): Promise<void> {
    event.preventDefault();
    setFormError("");

    state.ticker = el<HTMLInputElement>("ticker-input").value.trim().toUpperCase();
    state.peers = el<HTMLInputElement>("peers-input")
        .value.split(",")
        .map((part) => part.trim().toUpperCase())
        .filter((part) => part !== "");

    const check = validateSubmission(
        state.ticker,
        state.excluded,
        state.sections.map((section) => section.id),
        state.peers,
    );
    if (!check.ok) {
        setFormError(check.error ?? "Invalid request.");
        return;
    }
    if (state.activeJobId !== null) {
        setFormError("An analysis is already running.");
        return;
    }

    try {
        const accepted = await api.submitAnalysis({
            ticker: state.ticker,
            excluded_sections: [...state.excluded].sort(),
            run_relative: state.peers.length === 2,
            peer_tickers: state.peers,
        });
        await followJob(accepted.job_id);
    } catch (error) {
        if (error instanceof DuplicateJobError) {
            await followJob(error.jobId, "identical request already running; following it");
            return;
        }
        if (error instanceof ApiError) {
            setFormError(error.message);
            return;
        }
        setFormError(String(error));
    }
}

async function init(): Promise<void> {
    const sections = await api.sections();
    state.sections = sections.sections;
    renderSectionChecklist(state.sections);
    el<HTMLFormElement>("analysis-form").addEventListener("submit", (event) => {
        void onSubmit(event);
    });
}

if (typeof document !== "undefined") {
    document.addEventListener("DOMContentLoaded", () => {
        void init();
    });
}

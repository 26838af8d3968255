/** Chart models and SVG rendering for the four analysis panels.
 *
 * Model builders are pure and keep every plotted number exactly as the
 * API returned it (the `value`/`fraction`/`wins` fields); layout fields
 * only translate those numbers into geometry. No analytics are
 * recomputed here.
 */

import {
    ComparisonsResponse,
    CorrelationsResponse,
    ProportionsResponse,
    RangeStats,
    RatingsResponse,
} from "./api.js";

const SCORE_MAX = 2;

export const DIMENSION_COLORS: Record<string, string> = {
    confidence: "#2f6fb2",
    environment: "#3d9970",
    innovation: "#b26f2f",
    people: "#8e44ad",
};

const FALLBACK_COLORS = ["#2f6fb2", "#3d9970", "#b26f2f", "#8e44ad", "#666666"];

function colorFor(dimension: string, index: number): string {
    return DIMENSION_COLORS[dimension] ?? FALLBACK_COLORS[index % FALLBACK_COLORS.length];
}

function esc(text: string): string {
    return text
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;");
}

export function emptyState(message: string): string {
    return `<div class="empty-state">${esc(message)}</div>`;
}

// -- rating ranges ---------------------------------------------------------

export interface RangeRow {
    dimension: string;
    /** Verbatim API stats, or null when the dimension has no scores. */
    stats: RangeStats | null;
    byMode: Record<string, RangeStats | null>;
}

export function ratingRangeModel(ratings: RatingsResponse): RangeRow[] {
    return Object.entries(ratings.ranges).map(([dimension, ranges]) => ({
        dimension,
        stats: ranges.overall,
        byMode: ranges.by_mode,
    }));
}

export function ratingRangeSvg(rows: RangeRow[], width = 460): string {
    const rowHeight = 44;
    const left = 110;
    const plotWidth = width - left - 20;
    const height = rows.length * rowHeight + 24;
    const x = (score: number): number => left + (score / SCORE_MAX) * plotWidth;

    const parts: string[] = [];
    rows.forEach((row, index) => {
        const cy = 18 + index * rowHeight + rowHeight / 2;
        parts.push(
            `<text x="4" y="${cy + 4}" class="axis-label">${esc(row.dimension)}</text>`,
        );
        const stats = row.stats;
        if (stats === null) {
            parts.push(`<text x="${left}" y="${cy + 4}" class="na-label">no data</text>`);
            return;
        }
        const color = colorFor(row.dimension, index);
        parts.push(
            `<line x1="${x(stats.min)}" y1="${cy}" x2="${x(stats.max)}" y2="${cy}" `
            + `stroke="${color}" stroke-width="1.5"/>`,
            `<rect x="${x(stats.q1)}" y="${cy - 9}" width="${Math.max(1, x(stats.q3) - x(stats.q1))}" `
            + `height="18" fill="${color}" fill-opacity="0.35" stroke="${color}" `
            + `data-dimension="${esc(row.dimension)}" data-q1="${stats.q1}" data-q3="${stats.q3}"/>`,
            `<line x1="${x(stats.median)}" y1="${cy - 9}" x2="${x(stats.median)}" y2="${cy + 9}" `
            + `stroke="${color}" stroke-width="2" data-median="${stats.median}"/>`,
        );
    });
    for (const tick of [0, 0.5, 1, 1.5, 2]) {
        parts.push(
            `<text x="${x(tick)}" y="${height - 4}" class="tick" text-anchor="middle">${tick}</text>`,
        );
    }
    return `<svg viewBox="0 0 ${width} ${height}" role="img">${parts.join("")}</svg>`;
}

// -- stacked priority proportions -------------------------------------------

export interface StackSegment {
    dimension: string;
    /** Verbatim API fraction in [0, 1]. */
    fraction: number;
    /** Cumulative layout offsets as percentages of the column height. */
    y0Pct: number;
    y1Pct: number;
}

export interface StackColumn {
    year: number;
    present: boolean;
    degenerate: boolean;
    segments: StackSegment[];
}

/** One column per year from the first to the last reported year, so a
 *  missing year shows as a gap on a continuous axis. */
export function stackedProportionModel(proportions: ProportionsResponse): StackColumn[] {
    const snapshots = proportions.snapshots;
    if (snapshots.length === 0) {
        return [];
    }
    const byYear = new Map(snapshots.map((snapshot) => [snapshot.fiscal_year, snapshot]));
    const years = snapshots.map((snapshot) => snapshot.fiscal_year);
    const first = Math.min(...years);
    const last = Math.max(...years);

    const columns: StackColumn[] = [];
    for (let year = first; year <= last; year += 1) {
        const snapshot = byYear.get(year);
        if (!snapshot) {
            columns.push({ year, present: false, degenerate: false, segments: [] });
            continue;
        }
        let cumulative = 0;
        const segments: StackSegment[] = Object.entries(snapshot.proportions).map(
            ([dimension, fraction]) => {
                const y0Pct = cumulative * 100;
                cumulative += fraction;
                return { dimension, fraction, y0Pct, y1Pct: cumulative * 100 };
            },
        );
        columns.push({
            year,
            present: true,
            degenerate: snapshot.degenerate,
            segments,
        });
    }
    return columns;
}

export function stackTotalPct(column: StackColumn): number {
    return column.segments.reduce((sum, segment) => sum + segment.fraction, 0) * 100;
}

export function stackedProportionSvg(columns: StackColumn[], width = 460): string {
    const plotHeight = 180;
    const bottom = 22;
    const height = plotHeight + bottom + 8;
    const slot = width / Math.max(1, columns.length);
    const barWidth = Math.min(56, slot * 0.7);

    const parts: string[] = [];
    columns.forEach((column, index) => {
        const cx = slot * index + slot / 2;
        parts.push(
            `<text x="${cx}" y="${height - 6}" class="tick" text-anchor="middle">${column.year}</text>`,
        );
        if (!column.present) {
            return; // gap: axis stays continuous, no bar drawn
        }
        column.segments.forEach((segment, segmentIndex) => {
            const y = 4 + plotHeight - (segment.y1Pct / 100) * plotHeight;
            const h = ((segment.y1Pct - segment.y0Pct) / 100) * plotHeight;
            parts.push(
                `<rect x="${cx - barWidth / 2}" y="${y}" width="${barWidth}" height="${h}" `
                + `fill="${colorFor(segment.dimension, segmentIndex)}" `
                + `data-year="${column.year}" data-dimension="${esc(segment.dimension)}" `
                + `data-fraction="${segment.fraction}"><title>`
                + `${esc(segment.dimension)} ${(segment.fraction * 100).toFixed(1)}%</title></rect>`,
            );
        });
        if (column.degenerate) {
            parts.push(
                `<text x="${cx}" y="14" class="na-label" text-anchor="middle">*</text>`,
            );
        }
    });
    return `<svg viewBox="0 0 ${width} ${height}" role="img">${parts.join("")}</svg>`;
}

// -- correlation heatmap -------------------------------------------------------

export interface HeatCell {
    rowDimension: string;
    colDimension: string;
    /** Verbatim API coefficient, or null when undefined. */
    value: number | null;
}

export function correlationModel(correlations: CorrelationsResponse): HeatCell[] {
    const cells: HeatCell[] = [];
    correlations.dimensions.forEach((rowDimension, rowIndex) => {
        correlations.dimensions.forEach((colDimension, colIndex) => {
            cells.push({
                rowDimension,
                colDimension,
                value: correlations.matrix[rowIndex][colIndex],
            });
        });
    });
    return cells;
}

export function heatColor(value: number): string {
    // -1 -> blue, 0 -> white, +1 -> red
    const clamped = Math.max(-1, Math.min(1, value));
    const intensity = Math.round(Math.abs(clamped) * 160);
    return clamped >= 0
        ? `rgb(255,${255 - intensity},${255 - intensity})`
        : `rgb(${255 - intensity},${255 - intensity},255)`;
}

export function correlationSvg(cells: HeatCell[], dimensions: string[], width = 460): string {
    const size = dimensions.length;
    const left = 110;
    const top = 24;
    const cell = Math.min(70, (width - left - 8) / size);
    const height = top + size * cell + 8;

    const parts: string[] = [];
    dimensions.forEach((dimension, index) => {
        parts.push(
            `<text x="${left + index * cell + cell / 2}" y="${top - 8}" class="tick" `
            + `text-anchor="middle">${esc(dimension.slice(0, 6))}</text>`,
            `<text x="${left - 6}" y="${top + index * cell + cell / 2 + 4}" class="axis-label" `
            + `text-anchor="end">${esc(dimension)}</text>`,
        );
    });
    for (const item of cells) {
        const rowIndex = dimensions.indexOf(item.rowDimension);
        const colIndex = dimensions.indexOf(item.colDimension);
        const x = left + colIndex * cell;
        const y = top + rowIndex * cell;
        const fill = item.value === null ? "#e8e8e8" : heatColor(item.value);
        const label = item.value === null ? "n/a" : item.value.toFixed(2);
        parts.push(
            `<rect x="${x}" y="${y}" width="${cell - 2}" height="${cell - 2}" fill="${fill}" `
            + `data-row="${esc(item.rowDimension)}" data-col="${esc(item.colDimension)}" `
            + `data-value="${item.value === null ? "" : item.value}"/>`,
            `<text x="${x + (cell - 2) / 2}" y="${y + cell / 2 + 3}" class="cell-label" `
            + `text-anchor="middle">${label}</text>`,
        );
    }
    return `<svg viewBox="0 0 ${width} ${height}" role="img">${parts.join("")}</svg>`;
}

// -- win counts ------------------------------------------------------------------

export interface WinBar {
    company: string;
    section: string;
    /** Verbatim API win count. */
    wins: number;
}

export interface WinGroup {
    section: string;
    bars: WinBar[];
}

export function winModel(comparisons: ComparisonsResponse): WinGroup[] {
    const sections = [...new Set(comparisons.wins.map((cell) => cell.section))];
    const companies = comparisons.tickers;
    return sections.map((section) => ({
        section,
        bars: companies.map((company) => ({
            company,
            section,
            wins:
                comparisons.wins.find(
                    (cell) => cell.section === section && cell.company === company,
                )?.wins ?? 0,
        })),
    }));
}

export function winSvg(groups: WinGroup[], width = 460): string {
    const plotHeight = 160;
    const bottom = 56;
    const height = plotHeight + bottom;
    const maxWins = Math.max(1, ...groups.flatMap((group) => group.bars.map((bar) => bar.wins)));
    const slot = width / Math.max(1, groups.length);
    const barWidth = Math.min(22, (slot * 0.8) / Math.max(1, groups[0]?.bars.length ?? 1));

    const parts: string[] = [];
    groups.forEach((group, groupIndex) => {
        const cx = slot * groupIndex + slot / 2;
        group.bars.forEach((bar, barIndex) => {
            const h = (bar.wins / maxWins) * plotHeight;
            const x = cx + (barIndex - group.bars.length / 2) * barWidth;
            parts.push(
                `<rect x="${x}" y="${4 + plotHeight - h}" width="${barWidth - 2}" height="${h}" `
                + `fill="${FALLBACK_COLORS[barIndex % FALLBACK_COLORS.length]}" `
                + `data-company="${esc(bar.company)}" data-section="${esc(bar.section)}" `
                + `data-wins="${bar.wins}"><title>${esc(bar.company)}: ${bar.wins}</title></rect>`,
            );
        });
        const label = group.section.replace(/^ITEM_/, "").replace(/_/g, " ").toLowerCase();
        parts.push(
            `<text x="${cx}" y="${plotHeight + 20}" class="tick" text-anchor="middle" `
            + `transform="rotate(18 ${cx} ${plotHeight + 20})">${esc(label.slice(0, 18))}</text>`,
        );
    });
    return `<svg viewBox="0 0 ${width} ${height}" role="img">${parts.join("")}</svg>`;
}

// -- legend ------------------------------------------------------------------------

export function legendHtml(labels: string[]): string {
    const items = labels
        .map(
            (label, index) =>
                `<span class="legend-item"><span class="swatch" `
                + `style="background:${colorFor(label, index)}"></span>${esc(label)}</span>`,
        )
        .join("");
    return `<div class="legend">${items}</div>`;
}

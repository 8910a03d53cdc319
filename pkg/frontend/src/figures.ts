/**
 * The five figure kinds, each a pure function from parsed CSV tables to an
 * SVG string: learning curves with std bands, landing scatter with fitted
 * Gaussian ellipses, speed histograms, dataset variability panels, and
 * per-step episode traces with prepare/hit phase shading.
 */

import { Table, column } from "./csv.js";
import { Ellipse, gaussianEllipse, histogram, mean } from "./stats.js";
import * as svg from "./svg.js";

const BLUE = "#1f77b4";
const ORANGE = "#d95319";
const GREEN = "#77ac30";
const PURPLE = "#7e2f8e";

export function learningCurveFigure(table: Table): string {
    const updates = column(table, "update");
    const means = column(table, "mean_rtt");
    const stds = column(table, "std_rtt");
    const lower = means.map((m, i) => m - stds[i]);
    const upper = means.map((m, i) => m + stds[i]);
    const f = svg.frame(640, 400, updates, lower.concat(upper));
    let body = svg.band(f, updates, lower, upper, BLUE);
    body += svg.polyline(f, updates, means, BLUE);
    body += svg.axes(f, "update", "episode reward", "Learning curve (mean and std per update)");
    return svg.document(640, 400, body);
}

function ellipseSvg(f: svg.Frame, e: Ellipse, stroke: string): string {
    // Data-space ellipse mapped into an anisotropic pixel frame: draw as a
    // sampled closed path so the axes scale correctly.
    const pts: string[] = [];
    const rad = (e.angleDeg * Math.PI) / 180;
    for (let i = 0; i <= 96; i++) {
        const t = (2 * Math.PI * i) / 96;
        const ex = e.rx * Math.cos(t);
        const ey = e.ry * Math.sin(t);
        const x = e.cx + ex * Math.cos(rad) - ey * Math.sin(rad);
        const y = e.cy + ex * Math.sin(rad) + ey * Math.cos(rad);
        pts.push(`${svg.fmt(svg.sx(f, x))},${svg.fmt(svg.sy(f, y))}`);
    }
    return `<polygon fill="none" stroke="${stroke}" stroke-width="1.5" points="${pts.join(" ")}"/>`;
}

export function landingFigure(table: Table): { svg: string; ellipses: Ellipse[] } {
    const xs = column(table, "x");
    const ys = column(table, "y");
    const one = gaussianEllipse(xs, ys, 1);
    const two = gaussianEllipse(xs, ys, 2);
    const padX = xs.concat([one.cx - two.rx, one.cx + two.rx]);
    const padY = ys.concat([one.cy - two.rx, one.cy + two.rx]);
    const f = svg.frame(520, 560, padX, padY);
    let body = svg.circles(f, xs, ys, 3, BLUE);
    body += ellipseSvg(f, one, ORANGE);
    body += ellipseSvg(f, two, PURPLE);
    body += `<circle cx="${svg.fmt(svg.sx(f, one.cx))}" cy="${svg.fmt(svg.sy(f, one.cy))}" r="4" fill="${ORANGE}"/>`;
    body += svg.axes(f, "x [m]", "y [m]", "Landing points with fitted Gaussian (1 and 2 sigma)");
    return { svg: svg.document(520, 560, body), ellipses: [one, two] };
}

export function speedFigure(tables: { label: string; table: Table }[], binWidth = 1.0): string {
    const colors = [BLUE, ORANGE, GREEN, PURPLE];
    const hists = tables.map(({ label, table }) => ({
        label,
        hist: histogram(column(table, "speed"), binWidth),
    }));
    const maxEdge = Math.max(...hists.map((h) => h.hist.edges[h.hist.edges.length - 1]));
    const maxProb = Math.max(...hists.map((h) => Math.max(...h.hist.probabilities)));
    const f = svg.frame(640, 400, [0, maxEdge], [0, maxProb]);
    let body = "";
    hists.forEach(({ label, hist }, k) => {
        const color = colors[k % colors.length];
        for (let i = 0; i < hist.probabilities.length; i++) {
            const x0 = svg.sx(f, hist.edges[i]);
            const x1 = svg.sx(f, hist.edges[i + 1]);
            const y0 = svg.sy(f, 0);
            const y1 = svg.sy(f, hist.probabilities[i]);
            body += `<rect x="${svg.fmt(x0)}" y="${svg.fmt(y1)}" width="${svg.fmt(x1 - x0)}" height="${svg.fmt(y0 - y1)}" fill="${color}" fill-opacity="0.45" stroke="${color}"/>`;
        }
        body += `<text x="${f.width - f.margin - 6}" y="${f.margin + 16 + 14 * k}" font-family="sans-serif" font-size="11" text-anchor="end" fill="${color}">${label}</text>`;
    });
    body += svg.axes(f, "max ball speed after impact [m/s]", "probability", "Returned ball speeds");
    return svg.document(640, 400, body);
}

export function variabilityFigure(table: Table): string {
    const centers = column(table, "bin_center");
    const panels: { axis: string; color: string }[] = [
        { axis: "x", color: BLUE },
        { axis: "y", color: ORANGE },
        { axis: "z", color: GREEN },
    ];
    const width = 900;
    const height = 320;
    const panelW = width / 3;
    let body = "";
    panels.forEach(({ axis, color }, k) => {
        const means = column(table, `mean_${axis}`);
        const stds = column(table, `std_${axis}`);
        const lower = means.map((m, i) => m - stds[i]);
        const upper = means.map((m, i) => m + stds[i]);
        const f = svg.frame(panelW, height, centers, lower.concat(upper), 42);
        let panel = svg.band(f, centers, lower, upper, color);
        panel += svg.polyline(f, centers, means, color);
        panel += svg.axes(f, "time [s]", `${axis} [m]`, `ball ${axis} (mean and std)`);
        body += `<g transform="translate(${k * panelW} 0)">${panel}</g>`;
    });
    return svg.document(width, height, body);
}

export function traceFigure(table: Table): string {
    const t = column(table, "t");
    const hit = column(table, "hit");
    const width = 760;
    const rows: { title: string; series: { name: string; color: string }[] }[] = [
        {
            title: "measured pressures, first antagonistic pair",
            series: [
                { name: "p_1a", color: BLUE },
                { name: "p_1b", color: ORANGE },
            ],
        },
        {
            title: "pressure change actions, first pair",
            series: [
                { name: "a_1a", color: BLUE },
                { name: "a_1b", color: ORANGE },
            ],
        },
        { title: "first joint angle", series: [{ name: "q1", color: GREEN }] },
    ];
    const panelH = 230;
    let body = "";
    rows.forEach((row, k) => {
        const all = row.series.flatMap((s) => column(table, s.name));
        const f = svg.frame(width, panelH, t, all, 42);
        let panel = "";
        // prepare phase (before the hit) shaded green, strike phase red
        const hitIdx = hit.findIndex((h) => h > 0);
        const splitX = hitIdx >= 0 ? svg.sx(f, t[hitIdx]) : svg.sx(f, t[t.length - 1]);
        const y0 = panelH - f.margin;
        const y1 = f.margin;
        panel += `<rect x="${svg.fmt(svg.sx(f, t[0]))}" y="${y1}" width="${svg.fmt(splitX - svg.sx(f, t[0]))}" height="${y0 - y1}" fill="${GREEN}" fill-opacity="0.12"/>`;
        if (hitIdx >= 0) {
            panel += `<rect x="${svg.fmt(splitX)}" y="${y1}" width="${svg.fmt(svg.sx(f, t[t.length - 1]) - splitX)}" height="${y0 - y1}" fill="#d00000" fill-opacity="0.12"/>`;
        }
        row.series.forEach((s) => {
            panel += svg.polyline(f, t, column(table, s.name), s.color);
        });
        panel += svg.axes(f, "time [s]", "", row.title);
        body += `<g transform="translate(0 ${k * panelH})">${panel}</g>`;
    });
    return svg.document(width, panelH * rows.length, body);
}

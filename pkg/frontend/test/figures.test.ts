import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

import { afterEach, describe, expect, it } from "vitest";

import { column, parseCsv, SchemaError } from "../src/csv.js";
import {
    landingFigure,
    learningCurveFigure,
    makeFigures,
    speedFigure,
    traceFigure,
} from "../src/index.js";
import { covariance2d, gaussianEllipse, histogram } from "../src/stats.js";

const here = path.dirname(fileURLToPath(import.meta.url));
const FIXTURES = path.join(here, "fixtures");

const tmpDirs: string[] = [];

function tmpDir(): string {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), "figs-"));
    tmpDirs.push(dir);
    return dir;
}

afterEach(() => {
    while (tmpDirs.length) {
        fs.rmSync(tmpDirs.pop()!, { recursive: true, force: true });
    }
});

describe("csv parsing", () => {
    it("parses numeric tables", () => {
        const table = parseCsv("a,b\n1,2\n3,4\n");
        expect(table.rows).toBe(2);
        expect(column(table, "b")).toEqual([2, 4]);
    });

    it("names a missing column", () => {
        const table = parseCsv("a,b\n1,2\n");
        expect(() => column(table, "speed")).toThrowError(/missing column 'speed'/);
    });

    it("rejects ragged rows", () => {
        expect(() => parseCsv("a,b\n1\n")).toThrowError(SchemaError);
    });
});

describe("gaussian ellipse", () => {
    it("axes are k * sqrt of covariance eigenvalues", () => {
        const table = parseCsv(fs.readFileSync(path.join(FIXTURES, "landing_points.csv"), "utf-8"));
        const xs = column(table, "x");
        const ys = column(table, "y");
        const [sxx, sxy, syy] = covariance2d(xs, ys);

        // independent eigenvalue computation: 2x2 Jacobi rotation
        const theta = 0.5 * Math.atan2(2 * sxy, sxx - syy);
        const c = Math.cos(theta);
        const s = Math.sin(theta);
        const l1 = c * c * sxx + 2 * c * s * sxy + s * s * syy;
        const l2 = s * s * sxx - 2 * c * s * sxy + c * c * syy;
        const [hi, lo] = l1 >= l2 ? [l1, l2] : [l2, l1];

        for (const k of [1, 2]) {
            const e = gaussianEllipse(xs, ys, k);
            expect(Math.abs(e.rx - k * Math.sqrt(hi))).toBeLessThan(1e-9);
            expect(Math.abs(e.ry - k * Math.sqrt(lo))).toBeLessThan(1e-9);
        }
    });

    it("aligns with the dominant axis for stretched data", () => {
        const xs = [-2, -1, 0, 1, 2, -2, -1, 0, 1, 2];
        const ys = [-0.1, 0, 0.1, 0, -0.1, 0.1, 0, -0.1, 0, 0.1];
        const e = gaussianEllipse(xs, ys, 1);
        expect(Math.abs(e.angleDeg) < 5 || Math.abs(Math.abs(e.angleDeg) - 180) < 5).toBe(true);
        expect(e.rx).toBeGreaterThan(e.ry);
    });
});

describe("histogram", () => {
    it("probabilities sum to one", () => {
        const h = histogram([0.5, 1.5, 2.5, 2.6], 1.0);
        const total = h.probabilities.reduce((a, b) => a + b, 0);
        expect(Math.abs(total - 1)).toBeLessThan(1e-12);
        expect(h.edges[h.edges.length - 1]).toBeGreaterThanOrEqual(2.6);
    });
});

describe("makeFigures", () => {
    it("renders all five figure kinds from the fixtures", () => {
        const out = tmpDir();
        const warnings: string[] = [];
        const written = makeFigures(FIXTURES, out, (m) => warnings.push(m));
        const names = written.map((f) => path.basename(f)).sort();
        expect(names).toEqual([
            "episode_trace.svg",
            "landing_precision.svg",
            "learning_curve.svg",
            "speed_histograms.svg",
            "variability.svg",
        ]);
        expect(warnings).toEqual([]);
        for (const file of written) {
            const body = fs.readFileSync(file, "utf-8");
            expect(body.startsWith("<svg ")).toBe(true);
            expect(body.trimEnd().endsWith("</svg>")).toBe(true);
        }
    });

    it("renders byte-identically on repeat", () => {
        const out1 = tmpDir();
        const out2 = tmpDir();
        const first = makeFigures(FIXTURES, out1, () => {});
        const second = makeFigures(FIXTURES, out2, () => {});
        expect(first.length).toBe(second.length);
        for (let i = 0; i < first.length; i++) {
            expect(fs.readFileSync(first[i])).toEqual(fs.readFileSync(second[i]));
        }
    });

    it("empty input directory writes nothing and does not throw", () => {
        const empty = tmpDir();
        const out = tmpDir();
        const warnings: string[] = [];
        const written = makeFigures(empty, out, (m) => warnings.push(m));
        expect(written).toEqual([]);
        expect(warnings.length).toBe(5);
    });

    it("schema violations name the offending column", () => {
        const dir = tmpDir();
        fs.writeFileSync(path.join(dir, "learning_curve.csv"), "update,foo\n0,1\n");
        const out = tmpDir();
        expect(() => makeFigures(dir, out, () => {})).toThrowError(/mean_rtt/);
    });
});

describe("individual figures", () => {
    it("learning curve embeds the mean polyline", () => {
        const table = parseCsv(fs.readFileSync(path.join(FIXTURES, "learning_curve.csv"), "utf-8"));
        const body = learningCurveFigure(table);
        expect(body).toContain("<polyline");
        expect(body).toContain("<polygon"); // std band
    });

    it("landing figure draws two ellipse contours", () => {
        const table = parseCsv(fs.readFileSync(path.join(FIXTURES, "landing_points.csv"), "utf-8"));
        const { svg, ellipses } = landingFigure(table);
        expect(ellipses[1].rx / ellipses[0].rx).toBeCloseTo(2, 9);
        const contours = svg.match(/<polygon fill="none"/g) ?? [];
        expect(contours.length).toBe(2);
    });

    it("speed figure overlays one histogram per table", () => {
        const t1 = parseCsv(fs.readFileSync(path.join(FIXTURES, "speeds.csv"), "utf-8"));
        const t2 = parseCsv(fs.readFileSync(path.join(FIXTURES, "speeds_smash.csv"), "utf-8"));
        const body = speedFigure([
            { label: "return", table: t1 },
            { label: "smash", table: t2 },
        ]);
        expect(body).toContain(">return</text>");
        expect(body).toContain(">smash</text>");
    });

    it("episode trace shades the prepare and hit phases", () => {
        const table = parseCsv(fs.readFileSync(path.join(FIXTURES, "replay.csv"), "utf-8"));
        const hits = column(table, "hit");
        expect(hits.some((h) => h > 0)).toBe(true); // fixture contains a hit
        const body = traceFigure(table);
        expect(body).toContain('fill-opacity="0.12"');
    });
});
